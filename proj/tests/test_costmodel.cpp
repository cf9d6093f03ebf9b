#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cimtrain/costmodel.hpp"
#include "cimtrain/errors.hpp"
#include "cimtrain/rng.hpp"

using namespace cimtrain;

namespace {

// Small integer unit costs make every read cost a hand computation.
CostTable hand_costs() {
    CostTable c;
    c.adc_energy = 2;
    c.adc_base_latency = 3;
    c.adc_current_coefficient = 4;
    c.adc_latency_ceiling = 100;
    c.adc_columns_per_unit = 8;
    c.read_voltage = 1;
    c.switch_energy_per_row = 5;
    c.switch_latency = 7;
    c.decoder_energy = 11;
    c.decoder_latency = 13;
    c.shift_add_energy = 17;
    c.shift_add_latency = 19;
    c.cell_read_energy = 23;
    return c;
}

NetworkTopology tiny_topology() {
    NetworkTopology t;
    t.name = "tiny";
    t.input_shape = {1, 4, 4};
    t.num_classes = 4;
    t.layers = {LayerDesc::conv(3, 1, 4), LayerDesc::relu(), LayerDesc::pool(),
                LayerDesc::fc(16, 4)};
    return t;
}

DeviceSpec envm_device() {
    DeviceSpec d;
    d.name = "lin";
    d.r_on = 1e5;
    d.on_off_ratio = 10.0;
    d.num_states = 101;
    d.nl_ltp = 0.01;
    d.nl_ltd = 0.01;
    d.write_voltage_ltp = 2.0;
    d.write_voltage_ltd = 2.0;
    d.write_pulse_width = 1e-7;
    return d;
}

// A self-consistent synthetic context over the tiny topology. The trace
// carries mid-scale activity fractions and caller-chosen weight deltas.
struct Fixture {
    NetworkTopology topo = tiny_topology();
    Floorplan fp;
    EpochTrace trace;
    DeviceSpec dev = envm_device();
    CostTable costs;
    CostContext ctx;

    explicit Fixture(double delta_value = 0.0) {
        fp = build_floorplan(topo, HierarchyParams{}, dev.kind);
        const auto shapes = topo.validate_and_shapes();
        trace.epoch = 1;
        for (const LayerPlacement& pl : fp.layers) {
            LayerTrace lt;
            lt.layer_index = pl.layer_index;
            const LayerDesc& l = topo.layers[static_cast<std::size_t>(pl.layer_index)];
            long long out_elems = 1;
            for (int d : shapes[static_cast<std::size_t>(pl.layer_index)]) out_elems *= d;
            lt.error_elems = out_elems;
            lt.activation_elems = 16;  // both weight layers see 16 input elements
            lt.forward_macs = l.weight_count() * (l.kind == LayerKind::conv ? 16 : 1);
            lt.act_ones_fraction = 0.5;
            lt.act_nonzero_fraction = 0.75;
            lt.err_ones_fraction = 0.25;
            lt.err_nonzero_fraction = 0.5;
            lt.mean_conductance = 5e-6;
            if (l.kind == LayerKind::conv)
                lt.delta_weights = Tensor({l.k, l.k, l.in_channels, l.out_channels});
            else
                lt.delta_weights = Tensor({l.in, l.out});
            lt.delta_weights.fill(delta_value);
            lt.old_weights = lt.delta_weights;
            lt.new_weights = lt.delta_weights;
            trace.layers.push_back(lt);
        }
        ctx.topo = &topo;
        ctx.fp = &fp;
        ctx.trace = &trace;
        ctx.device = &dev;
        ctx.costs = &costs;
        ctx.sched = {4, 1, 1};
        ctx.sram_unit_rows = 128;
        ctx.sram_unit_cols = 16;
    }
};

}  // namespace

TEST_CASE("cost table validation") {
    CHECK_NOTHROW(default_cost_table().validate());
    CostTable bad = default_cost_table();
    bad.adc_energy = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CostTable bad2 = default_cost_table();
    bad2.adc_columns_per_unit = 0;
    CHECK_THROWS_AS(bad2.validate(), ConfigError);
}

TEST_CASE("hand-checked parallel array read") {
    const ReadCost rc = array_read_cost(2, 2, 0.5, 0.25, hand_costs(), ReadoutMode::parallel);
    // column current 1 * 0.25 * 2 = 0.5 -> conversion time 3 + 4/0.5 = 11,
    // two shared-converter slots
    CHECK(rc.latency_parts.adc == doctest::Approx(22.0).epsilon(1e-12));
    CHECK(rc.latency_parts.other == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(rc.latency_parts.accumulation == doctest::Approx(19.0).epsilon(1e-12));
    CHECK(rc.latency == doctest::Approx(61.0).epsilon(1e-12));
    // energy: converters 2*2, drivers 5*1 + 11, shift-add 17*2, cells 23*1*2
    CHECK(rc.energy_parts.adc == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(rc.energy_parts.other == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(rc.energy_parts.accumulation == doctest::Approx(34.0).epsilon(1e-12));
    CHECK(rc.energy_parts.array == doctest::Approx(46.0).epsilon(1e-12));
    CHECK(rc.energy == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(rc.ops == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("hand-checked sequential array read") {
    const ReadCost rc =
        array_read_cost(2, 2, 0.5, 0.25, hand_costs(), ReadoutMode::sequential);
    // per-row current 0.25 -> conversion 19; two rows, two slots each
    CHECK(rc.latency_parts.adc == doctest::Approx(76.0).epsilon(1e-12));
    CHECK(rc.latency_parts.other == doctest::Approx(40.0).epsilon(1e-12));
    CHECK(rc.latency_parts.accumulation == doctest::Approx(38.0).epsilon(1e-12));
    CHECK(rc.latency == doctest::Approx(154.0).epsilon(1e-12));
    CHECK(rc.energy_parts.adc == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(rc.energy_parts.other == doctest::Approx(27.0).epsilon(1e-12));
    CHECK(rc.energy_parts.accumulation == doctest::Approx(34.0).epsilon(1e-12));
    CHECK(rc.energy_parts.array == doctest::Approx(46.0).epsilon(1e-12));
    CHECK(rc.energy == doctest::Approx(111.0).epsilon(1e-12));
    CHECK(rc.ops == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("zero activity means the read never issues") {
    for (ReadoutMode m : {ReadoutMode::parallel, ReadoutMode::sequential}) {
        const ReadCost rc = array_read_cost(128, 128, 0.0, 1e-6, hand_costs(), m);
        CHECK(rc.latency == 0.0);
        CHECK(rc.energy == 0.0);
        CHECK(rc.ops == 0.0);
    }
    CHECK_THROWS_AS(array_read_cost(2, 2, 1.5, 1e-6, hand_costs(), ReadoutMode::parallel),
                    std::invalid_argument);
}

TEST_CASE("conversion latency follows the inverse column current up to a ceiling") {
    const CostTable c = hand_costs();
    const ReadCost lo = array_read_cost(4, 1, 1.0, 0.25, c, ReadoutMode::parallel);
    const ReadCost hi = array_read_cost(4, 1, 1.0, 0.5, c, ReadoutMode::parallel);
    // subtracting the base leaves the k/I term, which halves with 2x conductance
    CHECK(lo.latency_parts.adc - c.adc_base_latency ==
          doctest::Approx(2.0 * (hi.latency_parts.adc - c.adc_base_latency)).epsilon(1e-12));

    const ReadCost dead = array_read_cost(2, 2, 0.5, 0.0, c, ReadoutMode::parallel);
    CHECK(dead.latency_parts.adc == doctest::Approx(2.0 * c.adc_latency_ceiling).epsilon(1e-12));
}

TEST_CASE("operation counts are table independent") {
    CostTable a = hand_costs();
    CostTable b = hand_costs();
    b.adc_energy *= 10;
    b.cell_read_energy *= 10;
    b.switch_latency *= 10;
    const ReadCost ra = array_read_cost(8, 4, 0.5, 1e-6, a, ReadoutMode::parallel);
    const ReadCost rb = array_read_cost(8, 4, 0.5, 1e-6, b, ReadoutMode::parallel);
    CHECK(ra.ops == doctest::Approx(2.0 * 4.0 * 4.0).epsilon(1e-12));
    CHECK(rb.ops == ra.ops);
}

TEST_CASE("raising any unit cost never lowers a read cost") {
    using Setter = std::function<void(CostTable&)>;
    const std::vector<Setter> bumps = {
        [](CostTable& c) { c.adc_energy *= 3; },
        [](CostTable& c) { c.adc_base_latency *= 3; },
        [](CostTable& c) { c.adc_current_coefficient *= 3; },
        [](CostTable& c) { c.switch_energy_per_row *= 3; },
        [](CostTable& c) { c.switch_latency *= 3; },
        [](CostTable& c) { c.decoder_energy *= 3; },
        [](CostTable& c) { c.decoder_latency *= 3; },
        [](CostTable& c) { c.shift_add_energy *= 3; },
        [](CostTable& c) { c.shift_add_latency *= 3; },
        [](CostTable& c) { c.cell_read_energy *= 3; },
    };
    for (ReadoutMode m : {ReadoutMode::parallel, ReadoutMode::sequential}) {
        const ReadCost base = array_read_cost(16, 8, 0.5, 1e-6, hand_costs(), m);
        for (const Setter& bump : bumps) {
            CostTable c = hand_costs();
            bump(c);
            const ReadCost up = array_read_cost(16, 8, 0.5, 1e-6, c, m);
            CHECK(up.latency >= base.latency - 1e-15);
            CHECK(up.energy >= base.energy - 1e-15);
        }
    }
}

TEST_CASE("buffer sizing takes the largest tensor and the accumulation bound") {
    NetworkTopology t;
    t.name = "buf";
    t.input_shape = {128, 2, 2};
    t.num_classes = 0;
    t.layers = {LayerDesc::conv(3, 128, 1), LayerDesc::conv(3, 1, 512)};
    // weight-gradient tensors: 1152 and 4608 elements, the network maximum
    CHECK(t.layers[0].weight_count() == 1152);
    CHECK(t.layers[1].weight_count() == 4608);
    // degenerate accumulation geometry isolates the max-tensor term
    CHECK(buffer_requirement(t, 1, 1, 1, 1.0) == 4608LL * 8 + 2 * 8);

    const long long r1 = buffer_requirement(t, 128, 128, 200, 1.0);
    const long long r2 = buffer_requirement(t, 128, 128, 200, 2.0);
    // batch 200 accumulates at 8 + ceil(log2 200) = 16 bits per cell
    const long long accum1 = 2LL * 128 * 128 * 16;
    CHECK(r1 == 4608LL * 8 + accum1);
    CHECK(r2 - r1 == accum1);  // the ratio scales only the accumulation part
}

TEST_CASE("batch accumulation schedule hand values") {
    CostTable c;
    c.buffer_latency = 2;
    c.adder_latency = 1;
    c.buffer_energy_read = 3;
    c.adder_energy = 5;
    c.buffer_energy_write = 7;

    const AccumulationCost one = accumulation_schedule(200, 1, 1.0, c);
    CHECK(one.rounds == 1);
    CHECK(one.latency == doctest::Approx(1000.0).epsilon(1e-12));  // 200 * (2+1+2)

    const AccumulationCost all = accumulation_schedule(200, 7, 7.0, c);
    CHECK(all.rounds == 1);  // every array concurrently
    CHECK(all.latency == doctest::Approx(1000.0).epsilon(1e-12));

    const AccumulationCost serial = accumulation_schedule(200, 8, 1.0, c);
    const AccumulationCost paired = accumulation_schedule(200, 8, 2.0, c);
    CHECK(serial.rounds == 8);
    CHECK(paired.rounds == 4);
    CHECK(serial.latency == doctest::Approx(2.0 * paired.latency).epsilon(1e-12));
    CHECK(serial.energy == doctest::Approx(paired.energy).epsilon(1e-12));  // same work
    CHECK(serial.energy == doctest::Approx(200.0 * 8 * (3 + 5 + 7)).epsilon(1e-12));

    CHECK_THROWS_AS(accumulation_schedule(0, 1, 1.0, c), std::invalid_argument);
    CHECK_THROWS_AS(accumulation_schedule(1, 1, 0.5, c), std::invalid_argument);
}

TEST_CASE("epoch roll-up scales per-sample steps by the batch and the update once") {
    auto mk = [](double lat, double en, double leak, double ops) {
        StepCost s;
        s.latency = lat;
        s.latency_parts.array = lat;
        s.dynamic_energy = en;
        s.energy_parts.array = en;
        s.leakage_energy = leak;
        s.ops = ops;
        return s;
    };
    const StepCost ff = mk(1, 10, 0.1, 5);
    const StepCost er = mk(2, 20, 0.2, 0);
    const StepCost gr = mk(3, 30, 0.3, 7);
    const StepCost up = mk(4, 40, 0.4, 0);

    const EpochTotals t = epoch_rollup(ff, er, gr, up, {200, 1, 3});
    CHECK(t.latency == doctest::Approx(3.0 * (200.0 * 6 + 4)).epsilon(1e-12));  // 3612
    CHECK(t.dynamic_energy == doctest::Approx(3.0 * (200.0 * 60 + 40)).epsilon(1e-12));
    CHECK(t.leakage_energy == doctest::Approx(3.0 * (200.0 * 0.6 + 0.4)).epsilon(1e-12));
    CHECK(t.step_latency[0] == doctest::Approx(600.0).epsilon(1e-12));
    CHECK(t.step_latency[3] == doctest::Approx(12.0).epsilon(1e-12));
    CHECK(t.ops == doctest::Approx(600.0 * 12).epsilon(1e-12));
    CHECK(t.latency_parts.total() == doctest::Approx(t.latency).epsilon(1e-9));
    CHECK(t.energy_parts.total() == doctest::Approx(t.dynamic_energy).epsilon(1e-9));

    const EpochTotals unit = epoch_rollup(ff, er, gr, up, {1, 1, 1});
    CHECK(unit.latency == doctest::Approx(10.0).epsilon(1e-12));

    // the update's share of dynamic energy falls as 1/B
    double prev_share = 1.0;
    for (int B : {10, 50, 200}) {
        const EpochTotals tb = epoch_rollup(mk(1, 1, 0, 0), mk(1, 1, 0, 0), mk(1, 1, 0, 0),
                                            mk(1, 1, 0, 0), {B, 1, 1});
        const double share = tb.step_energy[3] / tb.dynamic_energy;
        CHECK(share == doctest::Approx(1.0 / (3.0 * B + 1.0)).epsilon(1e-12));
        CHECK(share < prev_share);
        prev_share = share;
    }
}

TEST_CASE("peak metrics drop off-array components") {
    EpochTotals t;
    t.latency = 1e-3;
    t.dynamic_energy = 1e-3;
    t.ops = 1e9;
    t.latency_parts.array = 1e-3;
    t.energy_parts.array = 1e-3;
    const PeakMetrics clean = peak_metrics(t);
    CHECK(clean.total_tops == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(clean.total_tops_per_watt == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(clean.peak_latency == doctest::Approx(t.latency).epsilon(1e-12));
    CHECK(clean.peak_energy == doctest::Approx(t.dynamic_energy).epsilon(1e-12));
    CHECK(clean.peak_tops == doctest::Approx(clean.total_tops).epsilon(1e-12));

    t.latency_parts.buffer = 2e-4;
    t.latency_parts.array = 8e-4;
    t.energy_parts.dram = 5e-4;
    t.energy_parts.array = 5e-4;
    const PeakMetrics m = peak_metrics(t);
    CHECK(m.peak_latency == doctest::Approx(8e-4).epsilon(1e-12));
    CHECK(m.peak_energy == doctest::Approx(5e-4).epsilon(1e-12));
    CHECK(m.peak_latency <= t.latency);
    CHECK(m.peak_energy <= t.dynamic_energy);
    CHECK(m.peak_tops == doctest::Approx(1e9 / 8e-4 / 1e12).epsilon(1e-12));
}

TEST_CASE("area roll-up hand values and monotonicity") {
    CostTable c = default_cost_table();
    DeviceSpec dev = envm_device();
    dev.r_on = 1e4;  // ron factor 2 with the default reference
    Floorplan fp;
    fp.hw = HierarchyParams{};
    fp.tiles = 2;
    const long long n_arrays = 2LL * 9 * 4;
    const AreaBreakdown a = area_rollup(fp, c, dev, 1000, 128, 16);
    CHECK(a.array ==
          doctest::Approx(n_arrays * 16384.0 * c.cell_area * 2.0).epsilon(1e-12));
    CHECK(a.adc == doctest::Approx(n_arrays * 16.0 * c.adc_area).epsilon(1e-12));
    CHECK(a.accumulation ==
          doctest::Approx(n_arrays * 128.0 * (c.adder_area + c.shift_add_area))
              .epsilon(1e-12));
    CHECK(a.buffer == doctest::Approx(1000.0 * c.buffer_area_per_bit).epsilon(1e-12));
    CHECK(a.interconnect == doctest::Approx(2.0 * c.htree_area_per_tile).epsilon(1e-12));
    CHECK(a.total() == doctest::Approx(a.array + a.adc + a.accumulation + a.buffer +
                                       a.interconnect + a.other)
                           .epsilon(1e-12));

    Floorplan fp2 = fp;
    fp2.tiles = 4;
    const AreaBreakdown b = area_rollup(fp2, c, dev, 1000, 128, 16);
    CHECK(b.array == doctest::Approx(2.0 * a.array).epsilon(1e-12));
    CHECK(b.interconnect == doctest::Approx(2.0 * a.interconnect).epsilon(1e-12));

    DeviceSpec slower = dev;
    slower.r_on = 1e6;  // weaker cells need smaller access transistors
    const AreaBreakdown s = area_rollup(fp, c, slower, 1000, 128, 16);
    CHECK(s.array < a.array);
    CHECK(s.total() < a.total());
}

TEST_CASE("every training step closes its component breakdown") {
    Fixture fx(0.013);
    for (TrainStep step : {TrainStep::feed_forward, TrainStep::error,
                           TrainStep::weight_gradient, TrainStep::weight_update}) {
        const StepCost sc = step_cost(step, fx.ctx);
        CHECK(sc.latency ==
              doctest::Approx(sc.latency_parts.total()).epsilon(1e-9));
        CHECK(sc.dynamic_energy ==
              doctest::Approx(sc.energy_parts.total()).epsilon(1e-9));
        CHECK(sc.latency > 0.0);
        CHECK(sc.leakage_energy > 0.0);
    }
}

TEST_CASE("a zero weight delta programs nothing") {
    Fixture fx(0.0);
    const StepCost sc = step_cost(TrainStep::weight_update, fx.ctx);
    CHECK(sc.dynamic_energy == 0.0);
    CHECK(sc.latency == 0.0);
    CHECK(sc.ops == 0.0);
}

TEST_CASE("a single small delta programs one pulse worth of energy") {
    Fixture fx(0.0);
    // one cell of the first conv layer asks for +0.05 on the [-1, 1] window
    fx.trace.layers[0].delta_weights[0] = 0.05;
    const StepCost sc = step_cost(TrainStep::weight_update, fx.ctx);
    const DeviceSpec& d = fx.dev;
    // +0.05 over a 2/100 quantum -> 3 potentiation pulses
    const double pulse_e = d.write_voltage_ltp * d.write_voltage_ltp *
                           fx.trace.layers[0].mean_conductance * d.write_pulse_width;
    CHECK(sc.energy_parts.array == doctest::Approx(3.0 * pulse_e).epsilon(1e-9));
    CHECK(sc.latency_parts.array ==
          doctest::Approx(3.0 * d.write_pulse_width).epsilon(1e-9));
    // batch accumulation is per-sample work, billed to the gradient step
    CHECK(sc.energy_parts.accumulation == 0.0);
    const StepCost g = step_cost(TrainStep::weight_gradient, fx.ctx);
    CHECK(g.energy_parts.accumulation > 0.0);
}

TEST_CASE("incomplete contexts are rejected") {
    Fixture fx(0.01);
    CostContext broken = fx.ctx;
    broken.trace = nullptr;
    CHECK_THROWS_AS(step_cost(TrainStep::feed_forward, broken), TraceError);

    EpochTrace short_trace = fx.trace;
    short_trace.layers.pop_back();
    CostContext mismatched = fx.ctx;
    mismatched.trace = &short_trace;
    CHECK_THROWS_AS(step_cost(TrainStep::feed_forward, mismatched), TraceError);

    CostContext no_sram = fx.ctx;
    no_sram.sram_unit_rows = 0;
    CHECK_THROWS_AS(step_cost(TrainStep::weight_gradient, no_sram), TraceError);
}

TEST_CASE("cost tables round-trip through JSON") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "cimtrain_costtab";
    fs::create_directories(dir);
    const std::string path = (dir / "table.json").string();

    CostTable t = default_cost_table();
    t.adc_energy = 3.25e-12;
    t.adc_columns_per_unit = 4;
    t.dram_bandwidth = 2e10;
    save_cost_table(t, path);
    const CostTable back = load_cost_table(path);
    CHECK(back.adc_energy == t.adc_energy);
    CHECK(back.adc_columns_per_unit == 4);
    CHECK(back.dram_bandwidth == t.dram_bandwidth);
    CHECK(back.cell_read_energy == t.cell_read_energy);

    const std::string partial = (dir / "partial.json").string();
    {
        std::FILE* f = std::fopen(partial.c_str(), "w");
        REQUIRE(f != nullptr);
        std::fputs("{\"adc_energy\": 5e-12}\n", f);
        std::fclose(f);
    }
    const CostTable p = load_cost_table(partial);
    CHECK(p.adc_energy == 5e-12);
    CHECK(p.buffer_latency == default_cost_table().buffer_latency);

    const std::string unknown = (dir / "unknown.json").string();
    {
        std::FILE* f = std::fopen(unknown.c_str(), "w");
        REQUIRE(f != nullptr);
        std::fputs("{\"adc_speed\": 1}\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_cost_table(unknown), ConfigError);
    CHECK_THROWS_AS(load_cost_table((dir / "missing.json").string()), IoError);
    fs::remove_all(dir);
}
