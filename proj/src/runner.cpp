#include "cimtrain/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "cimtrain/catalog.hpp"
#include "cimtrain/costmodel.hpp"
#include "cimtrain/dataset.hpp"
#include "cimtrain/errors.hpp"
#include "cimtrain/net.hpp"
#include "cimtrain/rng.hpp"
#include "cimtrain/train.hpp"

namespace cimtrain {

namespace {

constexpr std::uint64_t kTrainData = 0x7472696e;  // training-set stream
constexpr std::uint64_t kTestData = 0x74657374;   // held-out-set stream

NetworkTopology resolve_topology(const RunConfig& cfg) {
    NetworkTopology topo = topology_by_name(cfg.topology);
    if (cfg.weight_bits) topo.weight_bits = cfg.weight_bits;
    if (cfg.activation_bits) topo.activation_bits = cfg.activation_bits;
    if (cfg.error_bits) topo.error_bits = cfg.error_bits;
    if (cfg.gradient_bits) topo.gradient_bits = cfg.gradient_bits;
    topo.validate_and_shapes();
    return topo;
}

// Gradient-unit geometry: large enough for the widest unrolled error matrix
// of any weight layer.
void size_gradient_unit(const NetworkTopology& topo, int& rows, int& cols) {
    const auto shapes = topo.validate_and_shapes();
    rows = 1;
    cols = 1;
    for (std::size_t i = 0; i < topo.layers.size(); ++i) {
        const LayerDesc& l = topo.layers[i];
        if (!l.has_weights()) continue;
        if (l.kind == LayerKind::conv) {
            rows = std::max(rows, shapes[i][1] * shapes[i][2]);
            cols = std::max(cols, l.out_channels);
        } else {
            cols = std::max(cols, l.out);
        }
    }
}

std::string progress_line(int epoch, int epochs, double acc, double latency, double energy) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "epoch %d/%d  accuracy %.4f  latency %.6g s  energy %.6g J", epoch,
                  epochs, acc, latency, energy);
    return buf;
}

}  // namespace

RunResult run_benchmark(const RunConfig& cfg_in, std::ostream& progress) {
    RunConfig cfg = cfg_in;
    cfg.validate();

    const NetworkTopology topo = resolve_topology(cfg);
    const DeviceSpec& device = cfg.device;
    const Floorplan fp = build_floorplan(topo, cfg.hw, device.kind);
    const CostTable costs = cfg.cost_table_path.empty()
                                ? default_cost_table()
                                : load_cost_table(cfg.cost_table_path);

    const int depth = topo.input_shape[0];
    const int h = topo.input_shape[1];
    const int w = topo.input_shape[2];
    const Dataset train = synthetic_dataset(cfg.train_samples, depth, h, w,
                                            topo.num_classes,
                                            rng::Key(cfg.seed).fork(kTrainData).state);
    const Dataset test = synthetic_dataset(cfg.test_samples, depth, h, w,
                                           topo.num_classes,
                                           rng::Key(cfg.seed).fork(kTestData).state);

    NetState net = build_network(topo, device, cfg.seed);
    net.mode = cfg.compute_enum();
    net.phys_rows = cfg.hw.array_rows;
    net.adc.mode = cfg.adc_mode_enum();
    net.adc.bits = cfg.adc_bits;

    {
        const int n_cal = std::min<int>(cfg.batch_size, cfg.train_samples);
        std::vector<Tensor> cal_imgs(train.images.begin(), train.images.begin() + n_cal);
        std::vector<int> cal_labels(train.labels.begin(), train.labels.begin() + n_cal);
        calibrate_scales(net, cal_imgs, cal_labels);
    }

    int sram_rows = 1, sram_cols = 1;
    size_gradient_unit(topo, sram_rows, sram_cols);

    const int full_batches = cfg.train_samples / cfg.batch_size;
    const int batches = cfg.batches_per_epoch > 0
                            ? std::min(cfg.batches_per_epoch, full_batches)
                            : full_batches;
    std::vector<Tensor> train_imgs(train.images.begin(),
                                   train.images.begin() +
                                       static_cast<std::size_t>(batches) * cfg.batch_size);
    std::vector<int> train_labels(train.labels.begin(),
                                  train.labels.begin() +
                                      static_cast<std::size_t>(batches) * cfg.batch_size);

    BatchSchedule sched;
    sched.batch_size = cfg.batch_size;
    sched.epochs = cfg.epochs;
    sched.batches_per_epoch = batches;

    const long long buffer_bits = buffer_requirement(
        topo, cfg.hw.array_rows, cfg.hw.array_cols, cfg.batch_size,
        cfg.buffer_overhead_constraint);
    const AreaBreakdown area =
        area_rollup(fp, costs, device, buffer_bits, sram_rows, sram_cols);

    const TrainParams params = cfg.train_params();
    std::vector<EpochReport> reports;
    for (int e = 1; e <= cfg.epochs; ++e) {
        EpochTrace trace =
            train_epoch(net, train_imgs, train_labels, params, e, ExecPolicy::parallel);
        trace.accuracy =
            evaluate_accuracy(net, test.images, test.labels, ExecPolicy::parallel);

        CostContext ctx;
        ctx.topo = &topo;
        ctx.fp = &fp;
        ctx.trace = &trace;
        ctx.device = &device;
        ctx.costs = &costs;
        ctx.sched = sched;
        ctx.readout = cfg.readout_enum();
        ctx.constraint_ratio = cfg.buffer_overhead_constraint;
        ctx.sram_unit_rows = sram_rows;
        ctx.sram_unit_cols = sram_cols;

        const StepCost ff = step_cost(TrainStep::feed_forward, ctx);
        const StepCost err = step_cost(TrainStep::error, ctx);
        const StepCost grad = step_cost(TrainStep::weight_gradient, ctx);
        const StepCost upd = step_cost(TrainStep::weight_update, ctx);

        EpochReport rep;
        rep.epoch = e;
        rep.accuracy = trace.accuracy;
        rep.mean_loss = trace.mean_loss;
        for (const LayerPlacement& pl : fp.layers) {
            FloorplanRow fr;
            fr.layer = pl.layer_index;
            fr.arrays_used = pl.arrays_used;
            fr.duplication = pl.duplication;
            rep.floorplan_rows.push_back(fr);
        }
        rep.memory_utilization = fp.memory_utilization;
        rep.area = area;
        rep.totals = epoch_rollup(ff, err, grad, upd, sched);
        rep.peak = peak_metrics(rep.totals);
        rep.distributions = distribution_summary(trace);
        for (const LayerTrace& lt : trace.layers)
            rep.input_activity.push_back(lt.act_ones_fraction);
        rep.normalized_delta_mean = normalized_delta_mean(trace);
        progress << progress_line(e, cfg.epochs, rep.accuracy, rep.totals.latency,
                                  rep.totals.dynamic_energy + rep.totals.leakage_energy)
                 << "\n";
        reports.push_back(std::move(rep));
    }

    emit_reports(reports, cfg.output_dir);

    RunResult result;
    result.reports = std::move(reports);
    result.floorplan = fp;
    result.buffer_bits = buffer_bits;
    result.output_dir = cfg.output_dir;
    return result;
}

SweepSpec parse_sweep(const std::string& arg) {
    const std::size_t eq = arg.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= arg.size())
        throw ConfigError("sweep", "expected <param>=<v1,v2,...>, got '" + arg + "'");
    SweepSpec spec;
    spec.param = arg.substr(0, eq);
    if (spec.param != "c2c_sigma" && spec.param != "d2d_sigma" && spec.param != "nl")
        throw ConfigError("sweep",
                          "unknown parameter '" + spec.param +
                              "' (supported: c2c_sigma, d2d_sigma, nl)");
    std::stringstream vs(arg.substr(eq + 1));
    std::string tok;
    while (std::getline(vs, tok, ',')) {
        if (tok.empty()) continue;
        try {
            spec.values.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError("sweep", "bad grid value '" + tok + "'");
        }
    }
    if (spec.values.empty()) throw ConfigError("sweep", "empty value grid");
    return spec;
}

std::vector<RunResult> run_sweep(const RunConfig& base_in, const SweepSpec& sweep,
                                 std::ostream& progress) {
    RunConfig base = base_in;
    base.validate();  // resolves the device so points can mutate it

    std::vector<RunResult> results;
    for (double v : sweep.values) {
        RunConfig point = base;
        point.inline_device = true;
        if (sweep.param == "c2c_sigma") {
            point.device.c2c_sigma = v;
        } else if (sweep.param == "d2d_sigma") {
            point.device.d2d_sigma = v;
        } else {  // nl: symmetric +v / -v label pair
            point.device.nl_ltp = v;
            point.device.nl_ltd = v;
            point.device.nl_ltd_negative = true;
        }
        char val[32];
        std::snprintf(val, sizeof val, "%g", v);
        point.output_dir = base.output_dir + "/" + sweep.param + "_" + val;
        progress << "sweep " << sweep.param << " = " << val << " -> " << point.output_dir
                 << "\n";
        results.push_back(run_benchmark(point, progress));
    }
    return results;
}

}  // namespace cimtrain
