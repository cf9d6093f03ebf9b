#include "cimtrain/costmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cimtrain/errors.hpp"

namespace cimtrain {

namespace {

using json = nlohmann::json;

const std::vector<std::pair<const char*, double CostTable::*>>& double_fields() {
    static const std::vector<std::pair<const char*, double CostTable::*>> f = {
        {"adc_energy", &CostTable::adc_energy},
        {"adc_base_latency", &CostTable::adc_base_latency},
        {"adc_current_coefficient", &CostTable::adc_current_coefficient},
        {"adc_latency_ceiling", &CostTable::adc_latency_ceiling},
        {"adc_area", &CostTable::adc_area},
        {"read_voltage", &CostTable::read_voltage},
        {"switch_energy_per_row", &CostTable::switch_energy_per_row},
        {"switch_latency", &CostTable::switch_latency},
        {"switch_area", &CostTable::switch_area},
        {"decoder_energy", &CostTable::decoder_energy},
        {"decoder_latency", &CostTable::decoder_latency},
        {"decoder_area", &CostTable::decoder_area},
        {"adder_energy", &CostTable::adder_energy},
        {"adder_latency", &CostTable::adder_latency},
        {"adder_area", &CostTable::adder_area},
        {"shift_add_energy", &CostTable::shift_add_energy},
        {"shift_add_latency", &CostTable::shift_add_latency},
        {"shift_add_area", &CostTable::shift_add_area},
        {"cell_read_energy", &CostTable::cell_read_energy},
        {"buffer_energy_read", &CostTable::buffer_energy_read},
        {"buffer_energy_write", &CostTable::buffer_energy_write},
        {"buffer_latency", &CostTable::buffer_latency},
        {"buffer_access_bits", &CostTable::buffer_access_bits},
        {"buffer_area_per_bit", &CostTable::buffer_area_per_bit},
        {"htree_energy_per_bit", &CostTable::htree_energy_per_bit},
        {"htree_latency_per_hop", &CostTable::htree_latency_per_hop},
        {"htree_bus_bits", &CostTable::htree_bus_bits},
        {"htree_area_per_tile", &CostTable::htree_area_per_tile},
        {"dram_energy_per_bit", &CostTable::dram_energy_per_bit},
        {"dram_bandwidth", &CostTable::dram_bandwidth},
        {"sram_write_energy", &CostTable::sram_write_energy},
        {"sram_write_latency", &CostTable::sram_write_latency},
        {"sram_gmean", &CostTable::sram_gmean},
        {"cell_area", &CostTable::cell_area},
        {"mux_ron_reference", &CostTable::mux_ron_reference},
        {"leakage_per_array", &CostTable::leakage_per_array},
        {"leakage_buffer", &CostTable::leakage_buffer},
        {"leakage_other", &CostTable::leakage_other},
    };
    return f;
}

}  // namespace

void CostTable::validate() const {
    for (const auto& [name, mem] : double_fields()) {
        if (!(this->*mem >= 0.0)) throw ConfigError(name, "cost must be >= 0");
    }
    if (adc_columns_per_unit < 1)
        throw ConfigError("adc_columns_per_unit", "must be >= 1");
    if (!(dram_bandwidth > 0)) throw ConfigError("dram_bandwidth", "must be > 0");
    if (!(buffer_access_bits >= 1)) throw ConfigError("buffer_access_bits", "must be >= 1");
    if (!(htree_bus_bits >= 1)) throw ConfigError("htree_bus_bits", "must be >= 1");
}

CostTable default_cost_table() { return CostTable{}; }

CostTable load_cost_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open cost table: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("cost_table", "parse failure in " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("cost_table", "top level must be an object");
    CostTable t = default_cost_table();
    for (const auto& [key, val] : j.items()) {
        if (key == "adc_columns_per_unit") {
            t.adc_columns_per_unit = val.get<int>();
            continue;
        }
        bool found = false;
        for (const auto& [name, mem] : double_fields()) {
            if (key == name) {
                t.*mem = val.get<double>();
                found = true;
                break;
            }
        }
        if (!found) throw ConfigError("cost_table", "unknown field '" + key + "'");
    }
    t.validate();
    return t;
}

void save_cost_table(const CostTable& t, const std::string& path) {
    json j;
    for (const auto& [name, mem] : double_fields()) j[name] = t.*mem;
    j["adc_columns_per_unit"] = t.adc_columns_per_unit;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write cost table: " + path);
    out << j.dump(2) << "\n";
}

CostBreakdown& CostBreakdown::operator+=(const CostBreakdown& o) {
    adc += o.adc;
    accumulation += o.accumulation;
    buffer += o.buffer;
    interconnect += o.interconnect;
    dram += o.dram;
    array += o.array;
    other += o.other;
    return *this;
}

CostBreakdown CostBreakdown::scaled(double f) const {
    CostBreakdown b = *this;
    b.adc *= f;
    b.accumulation *= f;
    b.buffer *= f;
    b.interconnect *= f;
    b.dram *= f;
    b.array *= f;
    b.other *= f;
    return b;
}

ReadCost array_read_cost(int rows_used, int cols_used, double activity,
                         double mean_conductance, const CostTable& costs, ReadoutMode mode) {
    if (!(activity >= 0.0 && activity <= 1.0))
        throw std::invalid_argument("read activity must lie in [0, 1]");
    ReadCost rc;
    if (activity == 0.0 || rows_used < 1 || cols_used < 1) return rc;  // read never issues

    const double rows_active = rows_used * activity;
    // Each converter serves adc_columns_per_unit sense lines sequentially, so
    // the serialization depth per cycle is the sharing factor (all units work
    // their own line groups concurrently).
    const int slots = std::min(cols_used, costs.adc_columns_per_unit);

    // Conversion time follows the nominal column current (all used lines
    // driven at the mean conductance): input activity shifts energy, not the
    // read-out latency.
    auto adc_time = [&](double column_current) {
        if (!(column_current > 0)) return costs.adc_latency_ceiling;
        return std::min(costs.adc_base_latency +
                            costs.adc_current_coefficient / column_current,
                        costs.adc_latency_ceiling);
    };

    if (mode == ReadoutMode::parallel) {
        const double i_col = costs.read_voltage * mean_conductance * rows_used;
        rc.latency_parts.adc = adc_time(i_col) * slots;
        rc.latency_parts.other = costs.switch_latency + costs.decoder_latency;
        rc.latency_parts.accumulation = costs.shift_add_latency;
        rc.energy_parts.adc = costs.adc_energy * cols_used;
        rc.energy_parts.other =
            costs.switch_energy_per_row * rows_active + costs.decoder_energy;
        rc.energy_parts.accumulation = costs.shift_add_energy * cols_used;
        rc.energy_parts.array = costs.cell_read_energy * rows_active * cols_used;
    } else {
        // one used row per cycle; only active rows trigger conversions
        const double i_col = costs.read_voltage * mean_conductance;
        rc.latency_parts.adc = adc_time(i_col) * slots * rows_used;
        rc.latency_parts.other =
            (costs.switch_latency + costs.decoder_latency) * rows_used;
        rc.latency_parts.accumulation = costs.shift_add_latency * rows_used;
        rc.energy_parts.adc = costs.adc_energy * cols_used * rows_active;
        rc.energy_parts.other = costs.decoder_energy * rows_used +
                                costs.switch_energy_per_row * rows_active;
        rc.energy_parts.accumulation = costs.shift_add_energy * cols_used * rows_active;
        rc.energy_parts.array = costs.cell_read_energy * rows_active * cols_used;
    }
    rc.latency = rc.latency_parts.total();
    rc.energy = rc.energy_parts.total();
    rc.ops = 2.0 * rows_active * cols_used;
    return rc;
}

namespace {

struct LayerView {
    const LayerPlacement* pl = nullptr;
    const LayerTrace* lt = nullptr;
    const LayerDesc* desc = nullptr;
    int out_channels = 0;
    long long positions = 0;  // spatial output positions (1 for FC)
    int rows_used = 0;        // average used rows per physical array
    int cols_used = 0;        // average used cols per physical array
};

std::vector<LayerView> layer_views(const CostContext& ctx) {
    if (!ctx.fp || !ctx.topo || !ctx.costs || !ctx.device)
        throw TraceError("cost context incomplete");
    if (!ctx.trace || !ctx.trace->complete()) throw TraceError("epoch trace missing");
    if (ctx.trace->layers.size() != ctx.fp->layers.size())
        throw TraceError("trace and floorplan disagree on weight-layer count");

    std::vector<LayerView> views;
    for (std::size_t j = 0; j < ctx.fp->layers.size(); ++j) {
        LayerView v;
        v.pl = &ctx.fp->layers[j];
        v.lt = &ctx.trace->layers[j];
        if (v.pl->layer_index != v.lt->layer_index)
            throw TraceError("trace and floorplan disagree on layer order");
        v.desc = &ctx.topo->layers[static_cast<std::size_t>(v.pl->layer_index)];
        v.out_channels =
            v.desc->kind == LayerKind::conv ? v.desc->out_channels : v.desc->out;
        if (v.lt->error_elems <= 0 || v.lt->error_elems % v.out_channels != 0)
            throw TraceError("trace error size inconsistent with the layer");
        v.positions = v.lt->error_elems / v.out_channels;
        // uniform-load approximation over the layer's arrays
        const long long cells_per_array = v.pl->used_cells / v.pl->arrays_used;
        v.cols_used = std::min(v.pl->submap.cols, ctx.fp->hw.array_cols);
        v.rows_used = static_cast<int>(
            std::max<long long>(1, cells_per_array / std::max(1, v.cols_used)));
        views.push_back(v);
    }
    return views;
}

double total_leak_power(const CostContext& ctx) {
    const auto& hw = ctx.fp->hw;
    const long long arrays =
        static_cast<long long>(ctx.fp->tiles) * hw.arrays_per_pe * hw.pes_per_tile;
    return ctx.costs->leakage_per_array * static_cast<double>(arrays) +
           ctx.costs->leakage_buffer + ctx.costs->leakage_other;
}

// binary H-tree over the tile grid plus chip ingress/egress
int htree_hops(const Floorplan& fp) {
    int hops = 2;
    int t = fp.tiles;
    while (t > 1) {
        ++hops;
        t = (t + 1) / 2;
    }
    return hops;
}

void add_buffer(StepCost& sc, const CostTable& c, double read_bits, double write_bits) {
    const double accesses = std::ceil(read_bits / c.buffer_access_bits) +
                            std::ceil(write_bits / c.buffer_access_bits);
    sc.latency_parts.buffer += accesses * c.buffer_latency;
    sc.energy_parts.buffer +=
        read_bits * c.buffer_energy_read + write_bits * c.buffer_energy_write;
}

void add_htree(StepCost& sc, const CostTable& c, int hops, double bits) {
    sc.latency_parts.interconnect +=
        std::ceil(bits / c.htree_bus_bits) * c.htree_latency_per_hop * hops;
    sc.energy_parts.interconnect += bits * c.htree_energy_per_bit * hops;
}

void add_dram(StepCost& sc, const CostTable& c, double bits) {
    sc.latency_parts.dram += bits / c.dram_bandwidth;
    sc.energy_parts.dram += bits * c.dram_energy_per_bit;
}

int log2_ceil(long long n) {
    int s = 0;
    long long v = 1;
    while (v < n) {
        v <<= 1;
        ++s;
    }
    return s;
}

void finish(StepCost& sc, const CostContext& ctx) {
    sc.latency = sc.latency_parts.total();
    sc.dynamic_energy = sc.energy_parts.total();
    sc.leakage_energy = total_leak_power(ctx) * sc.latency;
}

// Step #1, per sample: bit-serial array reads layer by layer, activations
// spilled to DRAM for the later gradient step.
StepCost ff_cost(const CostContext& ctx) {
    const CostTable& c = *ctx.costs;
    StepCost sc;
    const auto views = layer_views(ctx);
    const int hops = htree_hops(*ctx.fp);
    const int act_bits = ctx.topo->activation_bits;

    for (std::size_t j = 0; j < views.size(); ++j) {
        const LayerView& v = views[j];
        const double cycles =
            std::ceil(static_cast<double>(v.positions) / v.pl->duplication) * act_bits;
        const ReadCost rc =
            array_read_cost(v.rows_used, v.cols_used, v.lt->act_ones_fraction,
                            v.lt->mean_conductance, c, ctx.readout);
        sc.latency_parts += rc.latency_parts.scaled(cycles);
        sc.energy_parts += rc.energy_parts.scaled(cycles * v.pl->arrays_used);

        // partial sums joined across row-partitions and kernel submatrices
        const int contrib = v.pl->partition.row_tiles * v.pl->submap.count();
        if (contrib > 1) {
            sc.latency_parts.accumulation += cycles * log2_ceil(contrib) * c.adder_latency;
            sc.energy_parts.accumulation +=
                cycles * static_cast<double>(contrib - 1) * v.out_channels * c.adder_energy;
        }

        const double in_bits = static_cast<double>(v.lt->activation_elems) * act_bits;
        const double out_bits = static_cast<double>(v.lt->error_elems) * act_bits;
        add_buffer(sc, c, in_bits, out_bits);
        add_htree(sc, c, hops, in_bits + out_bits);
        // layer 0 fetches the image from DRAM; deeper layers spill their input
        // activations to DRAM for step #3
        add_dram(sc, c, in_bits);
        sc.ops += 2.0 * static_cast<double>(v.lt->forward_macs) * v.lt->act_nonzero_fraction;
    }
    finish(sc, ctx);
    return sc;
}

// Step #2, per sample: transposed reads back through every layer except the
// first (the input image needs no error); every layer's output error is
// spilled to DRAM for step #3.
StepCost err_cost(const CostContext& ctx) {
    const CostTable& c = *ctx.costs;
    StepCost sc;
    const auto views = layer_views(ctx);
    const int hops = htree_hops(*ctx.fp);
    const int err_bits = ctx.topo->error_bits;
    // signed errors stream as two magnitude passes
    const int bit_cycles = 2 * std::max(1, err_bits - 1);

    for (std::size_t j = 0; j < views.size(); ++j) {
        const LayerView& v = views[j];
        if (j > 0) {
            const double cycles =
                std::ceil(static_cast<double>(v.positions) / v.pl->duplication) * bit_cycles;
            // transposed: columns are driven, rows are sensed
            const ReadCost rc =
                array_read_cost(v.cols_used, v.rows_used, v.lt->err_ones_fraction,
                                v.lt->mean_conductance, c, ctx.readout);
            sc.latency_parts += rc.latency_parts.scaled(cycles);
            sc.energy_parts += rc.energy_parts.scaled(cycles * v.pl->arrays_used);

            const int contrib = v.pl->partition.col_tiles * v.pl->submap.count();
            if (contrib > 1) {
                sc.latency_parts.accumulation +=
                    cycles * log2_ceil(contrib) * c.adder_latency;
                sc.energy_parts.accumulation += cycles * static_cast<double>(contrib - 1) *
                                                v.pl->submap.rows * c.adder_energy;
            }
            sc.ops +=
                2.0 * static_cast<double>(v.lt->forward_macs) * v.lt->err_nonzero_fraction;
        }
        const double err_out_bits = static_cast<double>(v.lt->error_elems) * err_bits;
        const double err_in_bits =
            j > 0 ? static_cast<double>(v.lt->activation_elems) * err_bits : 0.0;
        add_buffer(sc, c, err_out_bits, err_in_bits + err_out_bits);
        add_htree(sc, c, hops, err_out_bits + err_in_bits);
        add_dram(sc, c, err_out_bits);  // spill for step #3
    }
    finish(sc, ctx);
    return sc;
}

// Step #3, per sample: rewrite the unrolled error matrix into the
// SRAM-based gradient unit, stream shifted activation windows against it,
// spill gradients, and fold each sample's gradient into the buffer-held
// batch accumulator. Typically the costliest of the four steps.
StepCost grad_cost(const CostContext& ctx) {
    const CostTable& c = *ctx.costs;
    StepCost sc;
    const auto views = layer_views(ctx);
    const int hops = htree_hops(*ctx.fp);
    const int act_bits = ctx.topo->activation_bits;
    const int err_bits = ctx.topo->error_bits;
    const int grad_bits = ctx.topo->gradient_bits;
    if (ctx.sram_unit_rows < 1 || ctx.sram_unit_cols < 1)
        throw TraceError("gradient-unit geometry not configured");

    for (const LayerView& v : views) {
        const int err_rows = static_cast<int>(v.positions);
        const int err_channels = v.out_channels;
        const int dup = compute_duplication(err_rows, ctx.sram_unit_rows);
        const long long schedule =
            v.desc->kind == LayerKind::conv
                ? static_cast<long long>(v.desc->k) * v.desc->k * v.desc->in_channels
                : v.desc->in;

        // per-image rewrite of the error matrix; duplicated copies occupy
        // extra rows and are written serially row by row
        const double matrix_bits =
            static_cast<double>(err_rows) * err_channels * err_bits;
        sc.energy_parts.array += matrix_bits * dup * c.sram_write_energy;
        sc.latency_parts.array +=
            static_cast<double>(err_rows) * dup * c.sram_write_latency;

        // activation streaming: duplication shortens the schedule, not the
        // per-vector energy
        const double lat_cycles =
            std::ceil(static_cast<double>(schedule) / dup) * act_bits;
        const double en_cycles = static_cast<double>(schedule) * act_bits;
        const ReadCost rc = array_read_cost(err_rows, err_channels,
                                            v.lt->act_ones_fraction, c.sram_gmean, c,
                                            ReadoutMode::parallel);
        sc.latency_parts += rc.latency_parts.scaled(lat_cycles);
        sc.energy_parts += rc.energy_parts.scaled(en_cycles);

        // DRAM: fetch spilled activations and errors, store gradients
        const double act_bits_moved = static_cast<double>(v.lt->activation_elems) * act_bits;
        const double err_bits_moved = static_cast<double>(v.lt->error_elems) * err_bits;
        const double grad_bits_moved =
            static_cast<double>(v.lt->delta_weights.size()) * grad_bits;
        add_dram(sc, c, act_bits_moved + err_bits_moved + grad_bits_moved);
        add_buffer(sc, c, act_bits_moved + err_bits_moved, grad_bits_moved);
        add_htree(sc, c, hops, act_bits_moved + err_bits_moved + grad_bits_moved);

        // fold this sample's gradient into the buffer-held batch accumulator
        const AccumulationCost acc =
            accumulation_schedule(1, v.pl->arrays_used, ctx.constraint_ratio, c);
        sc.latency_parts.accumulation += acc.latency;
        sc.energy_parts.accumulation += acc.energy;

        sc.ops += 2.0 * static_cast<double>(v.lt->forward_macs) * v.lt->act_nonzero_fraction;
    }
    finish(sc, ctx);
    return sc;
}

// Step #4, per batch: program the accumulated weight deltas into the arrays.
// Gradient accumulation itself is per-sample work and is costed with step #3,
// so this step amortizes over the batch. Rows of an array are written as
// sequential groups; all arrays program concurrently, so step latency is the
// slowest array's.
StepCost update_cost(const CostContext& ctx) {
    const CostTable& c = *ctx.costs;
    const DeviceSpec& dev = *ctx.device;
    StepCost sc;
    const auto views = layer_views(ctx);

    double write_latency_max = 0.0;
    for (const LayerView& v : views) {
        const Tensor& delta = v.lt->delta_weights;
        bool any_delta = false;
        for (std::size_t e = 0; e < delta.size() && !any_delta; ++e)
            any_delta = delta[e] != 0.0;
        if (!any_delta) continue;  // nothing accumulated, nothing programmed

        const int rows = v.pl->submap.rows;
        const int cols = v.pl->submap.cols;
        const int subs = v.pl->submap.count();
        const double quantum = 1.0;  // pulses derive from the weight delta
        (void)quantum;

        if (dev.kind == DeviceKind::sram) {
            double changed = 0.0;
            for (std::size_t e = 0; e < delta.size(); ++e)
                if (delta[e] != 0.0) changed += 1.0;
            sc.energy_parts.array +=
                changed * ctx.topo->weight_bits * c.sram_write_energy;
            write_latency_max =
                std::max(write_latency_max,
                         static_cast<double>(std::min(rows, ctx.fp->hw.array_rows)) *
                             c.sram_write_latency);
            continue;
        }

        const double e_ltp = dev.write_voltage_ltp * dev.write_voltage_ltp *
                             v.lt->mean_conductance * dev.write_pulse_width;
        const double e_ltd = dev.write_voltage_ltd * dev.write_voltage_ltd *
                             v.lt->mean_conductance * dev.write_pulse_width;
        WeightRange wr;  // default weight window, matching the training loop
        const int p_max = dev.p_max();

        for (int s = 0; s < subs; ++s) {
            // physical array tiling of this submatrix
            for (int rt = 0; rt < v.pl->partition.row_tiles; ++rt) {
                for (int ct = 0; ct < v.pl->partition.col_tiles; ++ct) {
                    const int r0 = rt * ctx.fp->hw.array_rows;
                    const int r1 = std::min(rows, r0 + ctx.fp->hw.array_rows);
                    const int c0 = ct * ctx.fp->hw.array_cols;
                    const int c1 = std::min(cols, c0 + ctx.fp->hw.array_cols);
                    double arr_latency = 0.0;
                    for (int r = r0; r < r1; ++r) {
                        int max_abs_pulses = 0;
                        for (int col = c0; col < c1; ++col) {
                            const std::size_t e =
                                (static_cast<std::size_t>(s) * rows + r) * cols + col;
                            const int n = pulses_for_delta(delta[e], wr, p_max);
                            if (n != 0) {
                                sc.energy_parts.array +=
                                    std::abs(n) * (n > 0 ? e_ltp : e_ltd);
                                max_abs_pulses = std::max(max_abs_pulses, std::abs(n));
                            }
                        }
                        arr_latency += dev.write_pulse_width * max_abs_pulses;
                    }
                    write_latency_max = std::max(write_latency_max, arr_latency);
                }
            }
        }
    }
    sc.latency_parts.array += write_latency_max;
    finish(sc, ctx);
    return sc;
}

}  // namespace

StepCost step_cost(TrainStep step, const CostContext& ctx) {
    switch (step) {
        case TrainStep::feed_forward: return ff_cost(ctx);
        case TrainStep::error: return err_cost(ctx);
        case TrainStep::weight_gradient: return grad_cost(ctx);
        case TrainStep::weight_update: return update_cost(ctx);
    }
    throw std::invalid_argument("unknown step");
}

long long buffer_requirement(const NetworkTopology& topo, int array_rows, int array_cols,
                             int batch_size, double constraint_ratio) {
    const auto shapes = topo.validate_and_shapes();
    long long max_elems = 0;
    std::vector<int> cur_elems;
    long long in_elems = 1;
    for (int d : topo.input_shape) in_elems *= d;
    for (std::size_t i = 0; i < topo.layers.size(); ++i) {
        const LayerDesc& l = topo.layers[i];
        if (l.has_weights()) {
            long long out_elems = 1;
            for (int d : shapes[i]) out_elems *= d;
            max_elems = std::max({max_elems, in_elems, out_elems, l.weight_count()});
        }
        long long e = 1;
        for (int d : shapes[i]) e *= d;
        in_elems = e;
    }
    const int widest =
        std::max({topo.activation_bits, topo.error_bits, topo.gradient_bits});
    const int accum_precision =
        topo.gradient_bits + log2_ceil(std::max(1, batch_size));
    const double accum_bits = 2.0 * array_rows * array_cols * accum_precision *
                              constraint_ratio;
    return max_elems * widest + static_cast<long long>(std::llround(accum_bits));
}

AccumulationCost accumulation_schedule(int batch_size, int n_arrays, double constraint_ratio,
                                       const CostTable& costs) {
    if (batch_size < 1 || n_arrays < 1)
        throw std::invalid_argument("accumulation: batch and array counts must be >= 1");
    if (!(constraint_ratio >= 1.0))
        throw std::invalid_argument("accumulation: constraint ratio must be >= 1");
    AccumulationCost ac;
    ac.rounds = static_cast<int>(
        std::ceil(static_cast<double>(n_arrays) / constraint_ratio));
    const double t_read = costs.buffer_latency;
    const double t_write = costs.buffer_latency;
    const double t_acc = costs.adder_latency;
    ac.latency = static_cast<double>(batch_size) * (t_read + t_acc + t_write) * ac.rounds;
    const double per_array_bits = 1.0;  // costs are per accumulation word
    (void)per_array_bits;
    ac.energy = static_cast<double>(batch_size) * n_arrays *
                (costs.buffer_energy_read + costs.adder_energy + costs.buffer_energy_write);
    return ac;
}

EpochTotals epoch_rollup(const StepCost& ff, const StepCost& err, const StepCost& grad,
                         const StepCost& update, const BatchSchedule& sched) {
    if (sched.batch_size < 1 || sched.batches_per_epoch < 1)
        throw std::invalid_argument("rollup: schedule counts must be >= 1");
    EpochTotals t;
    t.ff = ff;
    t.err = err;
    t.grad = grad;
    t.update = update;

    const double b = sched.batch_size;
    const double per_epoch = sched.batches_per_epoch;
    const StepCost* steps[4] = {&ff, &err, &grad, &update};
    const double counts[4] = {b * per_epoch, b * per_epoch, b * per_epoch, per_epoch};
    for (int i = 0; i < 4; ++i) {
        const StepCost& s = *steps[i];
        t.step_latency[i] = s.latency * counts[i];
        t.step_energy[i] = s.dynamic_energy * counts[i];
        t.latency += t.step_latency[i];
        t.dynamic_energy += t.step_energy[i];
        t.leakage_energy += s.leakage_energy * counts[i];
        t.latency_parts += s.latency_parts.scaled(counts[i]);
        t.energy_parts += s.energy_parts.scaled(counts[i]);
        t.ops += s.ops * counts[i];
    }
    return t;
}

PeakMetrics peak_metrics(const EpochTotals& totals) {
    PeakMetrics m;
    m.peak_latency = totals.latency - totals.latency_parts.buffer -
                     totals.latency_parts.interconnect - totals.latency_parts.dram;
    m.peak_energy = totals.dynamic_energy - totals.energy_parts.buffer -
                    totals.energy_parts.interconnect - totals.energy_parts.dram;
    const double tera = 1e12;
    if (totals.latency > 0) m.total_tops = totals.ops / totals.latency / tera;
    const double total_e = totals.dynamic_energy + totals.leakage_energy;
    if (total_e > 0) m.total_tops_per_watt = totals.ops / total_e / tera;
    if (m.peak_latency > 0) m.peak_tops = totals.ops / m.peak_latency / tera;
    if (m.peak_energy > 0) m.peak_tops_per_watt = totals.ops / m.peak_energy / tera;
    return m;
}

AreaBreakdown area_rollup(const Floorplan& fp, const CostTable& costs, const DeviceSpec& dev,
                          long long buffer_bits, int sram_unit_rows, int sram_unit_cols) {
    AreaBreakdown a;
    const long long n_arrays =
        static_cast<long long>(fp.tiles) * fp.hw.arrays_per_pe * fp.hw.pes_per_tile;
    const double cells_per_array =
        static_cast<double>(fp.hw.array_rows) * fp.hw.array_cols;
    // transistors sized up as the on-resistance shrinks
    const double ron_factor = 1.0 + costs.mux_ron_reference / dev.r_on;

    a.array = n_arrays * cells_per_array * costs.cell_area * ron_factor;
    const int adcs_per_array =
        (fp.hw.array_cols + costs.adc_columns_per_unit - 1) / costs.adc_columns_per_unit;
    a.adc = static_cast<double>(n_arrays) * adcs_per_array * costs.adc_area;
    a.accumulation = static_cast<double>(n_arrays) * fp.hw.array_cols *
                     (costs.adder_area + costs.shift_add_area);
    a.buffer = static_cast<double>(buffer_bits) * costs.buffer_area_per_bit;
    a.interconnect = static_cast<double>(fp.tiles) * costs.htree_area_per_tile;
    a.other = static_cast<double>(n_arrays) *
                  (costs.switch_area * ron_factor + costs.decoder_area) +
              static_cast<double>(sram_unit_rows) * sram_unit_cols * costs.cell_area +
              costs.switch_area;
    return a;
}

}  // namespace cimtrain
