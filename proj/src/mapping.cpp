#include "cimtrain/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cimtrain/errors.hpp"

namespace cimtrain {

SubmatrixMap map_kernels(const LayerDesc& layer) {
    SubmatrixMap m;
    if (layer.kind == LayerKind::conv) {
        m.k = layer.k;
        m.rows = layer.in_channels;
        m.cols = layer.out_channels;
    } else if (layer.kind == LayerKind::fc) {
        m.k = 1;
        m.rows = layer.in;
        m.cols = layer.out;
    } else {
        throw MappingError("only conv and fc layers map onto arrays");
    }
    return m;
}

PartitionGrid partition_matrix(int rows, int cols, int array_rows, int array_cols) {
    if (rows < 1 || cols < 1 || array_rows < 1 || array_cols < 1)
        throw std::invalid_argument("partition_matrix: dimensions must be positive");
    PartitionGrid g;
    g.row_tiles = (rows + array_rows - 1) / array_rows;
    g.col_tiles = (cols + array_cols - 1) / array_cols;
    return g;
}

int compute_duplication(int submatrix_rows, int array_rows) {
    if (submatrix_rows < 1) throw std::invalid_argument("submatrix rows must be positive");
    if (submatrix_rows > array_rows) return 1;
    return array_rows / submatrix_rows;
}

// ---------------------------------------------------------------------------
// Reads.
// ---------------------------------------------------------------------------

std::vector<double> forward_read(const SynapticArrayState& arr, const std::vector<double>& x,
                                 const WeightRange& wr) {
    if (static_cast<int>(x.size()) != arr.rows)
        throw MappingError("forward_read: input length != array rows");
    std::vector<double> out(static_cast<std::size_t>(arr.cols), 0.0);
    for (int c = 0; c < arr.cols; ++c) {
        double acc = 0.0;
        for (int r = 0; r < arr.rows; ++r)
            acc += conductance_to_weight(arr.cell(r, c).conductance, wr, arr.bounds) * x[r];
        out[static_cast<std::size_t>(c)] = acc;
    }
    return out;
}

std::vector<double> transposed_read(const SynapticArrayState& arr, const std::vector<double>& v,
                                    const WeightRange& wr) {
    if (!arr.transposable)
        throw CapabilityError("transposed read on a non-transposable array");
    if (static_cast<int>(v.size()) != arr.cols)
        throw MappingError("transposed_read: input length != array cols");
    std::vector<double> out(static_cast<std::size_t>(arr.rows), 0.0);
    for (int r = 0; r < arr.rows; ++r) {
        double acc = 0.0;
        for (int c = 0; c < arr.cols; ++c)
            acc += conductance_to_weight(arr.cell(r, c).conductance, wr, arr.bounds) * v[c];
        out[static_cast<std::size_t>(r)] = acc;
    }
    return out;
}

namespace {

// Bit-serial analog read along one direction of the array. The streamed
// digital input is split into per-bit 0/1 vectors; each bit-cycle produces,
// per physical-row chunk, an analog column sum of conductances that goes
// through the ADC and is then decoded back to a weight-domain partial sum
// (the decoder knows the active-input count of the chunk, which the digital
// input register provides for free). Shift-add recombines bit planes.
std::vector<double> bit_serial_pass(const SynapticArrayState& arr,
                                    const std::vector<long long>& levels, int bits,
                                    const CimReadParams& p, bool transposed) {
    const int n_in = transposed ? arr.cols : arr.rows;
    const int n_out = transposed ? arr.rows : arr.cols;
    const double g_min = arr.bounds.g_min;
    const double slope = (arr.bounds.g_max - g_min) / p.wr.span();
    const bool use_adc = p.adc != nullptr && p.adc->active();

    auto g_at = [&](int i, int o) {
        return transposed ? arr.cell(o, i).conductance : arr.cell(i, o).conductance;
    };

    std::vector<double> acc(static_cast<std::size_t>(n_out), 0.0);
    for (int b = 0; b < bits; ++b) {
        const double weight_of_bit = static_cast<double>(1LL << b);
        bool any = false;
        for (int i = 0; i < n_in && !any; ++i) any = ((levels[i] >> b) & 1) != 0;
        if (!any) continue;
        for (int chunk = 0; chunk < n_in; chunk += p.phys_rows) {
            const int hi = std::min(chunk + p.phys_rows, n_in);
            int n_act = 0;
            for (int i = chunk; i < hi; ++i) n_act += (levels[i] >> b) & 1;
            if (n_act == 0) continue;
            for (int o = 0; o < n_out; ++o) {
                double analog = 0.0;
                for (int i = chunk; i < hi; ++i)
                    if ((levels[i] >> b) & 1) analog += g_at(i, o);
                if (p.sample_sink) p.sample_sink->push_back(analog);
                const double raw = use_adc ? p.adc->convert(analog) : analog;
                const double sum_w = (raw - n_act * g_min) / slope + n_act * p.wr.min;
                acc[static_cast<std::size_t>(o)] += weight_of_bit * sum_w;
            }
        }
    }
    return acc;
}

std::vector<double> cim_read(const SynapticArrayState& arr, const std::vector<double>& x,
                             const CimReadParams& p, bool transposed) {
    const int n_in = transposed ? arr.cols : arr.rows;
    const int n_out = transposed ? arr.rows : arr.cols;
    if (static_cast<int>(x.size()) != n_in)
        throw MappingError("cim read: input length mismatch");
    if (transposed && !arr.transposable)
        throw CapabilityError("transposed read on a non-transposable array");
    if (p.phys_rows < 1) throw MappingError("cim read: physical rows must be >= 1");

    if (!p.input_grid.enabled) {
        // Full-precision inputs cannot be driven bit-serially.
        if (p.adc != nullptr && p.adc->active())
            throw StateError("ADC requires bit-serial (quantized) inputs");
        std::vector<double> out(static_cast<std::size_t>(n_out), 0.0);
        for (int chunk = 0; chunk < n_in; chunk += p.phys_rows) {
            const int hi = std::min(chunk + p.phys_rows, n_in);
            for (int o = 0; o < n_out; ++o) {
                double acc = 0.0;
                for (int i = chunk; i < hi; ++i) {
                    const double g =
                        transposed ? arr.cell(o, i).conductance : arr.cell(i, o).conductance;
                    acc += conductance_to_weight(g, p.wr, arr.bounds) * x[i];
                }
                out[static_cast<std::size_t>(o)] += acc;
            }
        }
        return out;
    }

    const double step = p.input_grid.step();
    std::vector<long long> levels(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) levels[i] = quantize_level(x[i], p.input_grid);

    std::vector<double> out;
    if (!p.input_grid.is_signed) {
        out = bit_serial_pass(arr, levels, p.input_grid.bits, p, transposed);
    } else {
        // Signed inputs: positive and negative magnitudes in two passes.
        std::vector<long long> pos(levels.size()), neg(levels.size());
        for (std::size_t i = 0; i < levels.size(); ++i) {
            pos[i] = levels[i] > 0 ? levels[i] : 0;
            neg[i] = levels[i] < 0 ? -levels[i] : 0;
        }
        out = bit_serial_pass(arr, pos, p.input_grid.bits - 1, p, transposed);
        const auto nout = bit_serial_pass(arr, neg, p.input_grid.bits - 1, p, transposed);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= nout[i];
    }
    for (auto& v : out) v *= step;
    return out;
}

}  // namespace

std::vector<double> cim_forward_read(const SynapticArrayState& arr,
                                     const std::vector<double>& x, const CimReadParams& p) {
    return cim_read(arr, x, p, /*transposed=*/false);
}

std::vector<double> cim_transposed_read(const SynapticArrayState& arr,
                                        const std::vector<double>& v, const CimReadParams& p) {
    return cim_read(arr, v, p, /*transposed=*/true);
}

// ---------------------------------------------------------------------------
// Gradient-matrix unrolling.
// ---------------------------------------------------------------------------

GradientMatrixPlan unroll_gradient_matrices(const std::vector<int>& err_shape,
                                            const LayerDesc& layer, int layer_index,
                                            int sram_rows, int sram_cols) {
    if (layer.kind != LayerKind::conv && layer.kind != LayerKind::fc)
        throw MappingError("gradient plan: layer has no weights");
    GradientMatrixPlan plan;
    plan.layer_index = layer_index;
    if (layer.kind == LayerKind::conv) {
        if (err_shape.size() != 3 || err_shape[0] != layer.out_channels)
            throw MappingError("gradient plan: error shape inconsistent with layer");
        plan.out_h = err_shape[1];
        plan.out_w = err_shape[2];
        plan.err_rows = err_shape[1] * err_shape[2];
        plan.err_channels = layer.out_channels;
        plan.k = layer.k;
        plan.act_channels = layer.in_channels;
    } else {
        if (err_shape.size() != 1 || err_shape[0] != layer.out)
            throw MappingError("gradient plan: error shape inconsistent with layer");
        plan.out_h = plan.out_w = 1;
        plan.err_rows = 1;
        plan.err_channels = layer.out;
        plan.k = 1;
        plan.act_channels = layer.in;
    }
    if (plan.err_rows > sram_rows || plan.err_channels > sram_cols) {
        throw CapacityError("unrolled error (" + std::to_string(plan.err_rows) + "x" +
                            std::to_string(plan.err_channels) +
                            ") exceeds the gradient-unit array (" + std::to_string(sram_rows) +
                            "x" + std::to_string(sram_cols) + ")");
    }
    plan.duplication = compute_duplication(plan.err_rows, sram_rows);
    return plan;
}

Tensor gradient_via_plan(const GradientMatrixPlan& plan, const LayerDesc& layer,
                         const Tensor& activations, const Tensor& errors) {
    if (layer.kind == LayerKind::fc) {
        Tensor g({plan.act_channels, plan.err_channels});
        for (int i = 0; i < plan.act_channels; ++i)
            for (int j = 0; j < plan.err_channels; ++j)
                g.at2(i, j) = activations[static_cast<std::size_t>(i)] *
                              errors[static_cast<std::size_t>(j)];
        return g;
    }

    // Error channels live as columns of the in-array matrix; one shifted
    // activation window is streamed per (ky, kx, input channel).
    const int wp = plan.out_w, hp = plan.out_h;
    const int h = activations.dim(1), w = activations.dim(2);
    Tensor g({plan.k, plan.k, plan.act_channels, plan.err_channels});
    std::vector<double> window(static_cast<std::size_t>(plan.err_rows));
    for (int ky = 0; ky < plan.k; ++ky) {
        for (int kx = 0; kx < plan.k; ++kx) {
            for (int d = 0; d < plan.act_channels; ++d) {
                for (int oy = 0; oy < hp; ++oy) {
                    for (int ox = 0; ox < wp; ++ox) {
                        const int iy = oy * layer.stride + ky - layer.pad;
                        const int ix = ox * layer.stride + kx - layer.pad;
                        window[static_cast<std::size_t>(oy * wp + ox)] =
                            (iy < 0 || iy >= h || ix < 0 || ix >= w)
                                ? 0.0
                                : activations.at3(d, iy, ix);
                    }
                }
                for (int n = 0; n < plan.err_channels; ++n) {
                    double acc = 0.0;
                    for (int r = 0; r < plan.err_rows; ++r)
                        acc += window[static_cast<std::size_t>(r)] *
                               errors.at3(n, r / wp, r % wp);
                    g.at4(ky, kx, d, n) = acc;
                }
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Floorplanning.
// ---------------------------------------------------------------------------

const LayerPlacement* Floorplan::placement_for(int layer_index) const {
    for (const auto& p : layers)
        if (p.layer_index == layer_index) return &p;
    return nullptr;
}

Floorplan build_floorplan(const NetworkTopology& topo, const HierarchyParams& hw,
                          DeviceKind kind) {
    topo.validate_and_shapes();
    if (hw.array_rows < 1 || hw.array_cols < 1 || hw.arrays_per_pe < 1 || hw.pes_per_tile < 1)
        throw MappingError("floorplan: hierarchy parameters must be positive");

    // Digital storage spreads each weight over one column per bit.
    const int cells_per_weight = kind == DeviceKind::sram ? topo.weight_bits : 1;
    const int arrays_per_tile = hw.arrays_per_pe * hw.pes_per_tile;

    Floorplan fp;
    fp.hw = hw;
    int next_tile = 0;
    for (std::size_t i = 0; i < topo.layers.size(); ++i) {
        const LayerDesc& l = topo.layers[i];
        if (!l.has_weights()) continue;
        LayerPlacement p;
        p.layer_index = static_cast<int>(i);
        p.submap = map_kernels(l);
        const int phys_cols = p.submap.cols * cells_per_weight;
        p.partition = partition_matrix(p.submap.rows, phys_cols, hw.array_rows, hw.array_cols);
        p.duplication = (l.kind == LayerKind::conv && p.partition.row_tiles == 1)
                            ? compute_duplication(p.submap.rows, hw.array_rows)
                            : 1;
        p.arrays_used = p.submap.count() * p.partition.tiles();
        p.pes_used = (p.arrays_used + hw.arrays_per_pe - 1) / hw.arrays_per_pe;
        p.tiles_used = (p.pes_used + hw.pes_per_tile - 1) / hw.pes_per_tile;
        p.first_tile = next_tile;
        next_tile += p.tiles_used;
        p.used_cells = static_cast<long long>(p.submap.rows) * phys_cols * p.submap.count() *
                       p.duplication;
        fp.layers.push_back(p);
    }

    fp.tiles = next_tile;
    if (hw.max_tiles > 0 && fp.tiles > hw.max_tiles) {
        throw CapacityError("floorplan needs " + std::to_string(fp.tiles) +
                            " tiles but only " + std::to_string(hw.max_tiles) +
                            " are configured (short by " +
                            std::to_string(fp.tiles - hw.max_tiles) + ")");
    }
    fp.total_cells = static_cast<long long>(fp.tiles) * arrays_per_tile * hw.array_rows *
                     hw.array_cols;
    for (const auto& p : fp.layers) fp.used_cells += p.used_cells;
    fp.memory_utilization =
        fp.total_cells > 0 ? static_cast<double>(fp.used_cells) /
                                 static_cast<double>(fp.total_cells)
                           : 0.0;
    return fp;
}

}  // namespace cimtrain
