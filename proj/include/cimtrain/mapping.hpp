#pragma once

#include <vector>

#include "cimtrain/adc.hpp"
#include "cimtrain/device.hpp"
#include "cimtrain/quant.hpp"
#include "cimtrain/tensor.hpp"
#include "cimtrain/topology.hpp"

namespace cimtrain {

// ---------------------------------------------------------------------------
// Kernel decomposition: a KxK conv layer becomes K*K submatrices of shape
// in_channels x out_channels, indexed by kernel position; an FC layer is a
// single in x out matrix. Weight tensors are stored {k, k, in, out}, so each
// (ky, kx) submatrix is a contiguous block and reassembly is the identity.
// ---------------------------------------------------------------------------
struct SubmatrixMap {
    int k = 1;            // submatrix grid side (1 for FC)
    int rows = 0;         // logical rows per submatrix (= streamed input length)
    int cols = 0;         // logical cols per submatrix (= outputs)
    int count() const { return k * k; }
};

SubmatrixMap map_kernels(const LayerDesc& layer);

// ceil-division partition of a logical matrix onto fixed-size physical arrays.
struct PartitionGrid {
    int row_tiles = 0;
    int col_tiles = 0;
    int tiles() const { return row_tiles * col_tiles; }
};

PartitionGrid partition_matrix(int rows, int cols, int array_rows, int array_cols);

// floor(array_rows / submatrix_rows), >= 1: how many copies of a short
// submatrix fit in one array's rows. Read throughput scales by this factor.
int compute_duplication(int submatrix_rows, int array_rows);

// ---------------------------------------------------------------------------
// Array read paths. The "plain" reads compute exact weighted sums over the
// conductance-backed weights and are the oracle bypass. The CIM reads model
// the analog pipeline: bit-serial digital inputs, per-physical-array analog
// column sums, ADC conversion, digital decode and shift-add recombination.
// ---------------------------------------------------------------------------

struct CimReadParams {
    const AdcModel* adc = nullptr;       // null or off => exact partial sums
    QuantGrid input_grid;                // grid the input vector lives on
    WeightRange wr;                      // weight window of the conductance map
    int phys_rows = 128;                 // physical wordlines per array chunk
    std::vector<double>* sample_sink = nullptr;  // collects raw partial sums
};

// Forward read: out[c] = sum_r W[r,c] * x[r].
std::vector<double> forward_read(const SynapticArrayState& arr, const std::vector<double>& x,
                                 const WeightRange& wr);
std::vector<double> cim_forward_read(const SynapticArrayState& arr,
                                     const std::vector<double>& x, const CimReadParams& p);

// Transposed read: out[r] = sum_c W[r,c] * v[c]. Requires a transposable
// array (CapabilityError otherwise).
std::vector<double> transposed_read(const SynapticArrayState& arr, const std::vector<double>& v,
                                    const WeightRange& wr);
std::vector<double> cim_transposed_read(const SynapticArrayState& arr,
                                        const std::vector<double>& v, const CimReadParams& p);

// ---------------------------------------------------------------------------
// Gradient-matrix unrolling: the error map of a conv layer is unrolled one
// channel per column into an in-array matrix; shifted activation windows are
// streamed against it, one vector per (ky, kx, input channel).
// ---------------------------------------------------------------------------
struct GradientMatrixPlan {
    int layer_index = 0;
    int err_rows = 0;       // unrolled spatial size W' * W'
    int err_channels = 0;   // columns = layer output channels
    int k = 1;
    int act_channels = 0;   // schedule length = k * k * act_channels
    int out_h = 0, out_w = 0;
    int duplication = 1;    // error copies fitting in the holding array's rows

    int schedule_length() const { return k * k * act_channels; }
};

// err_shape = {out_channels, W', W'}; holding array sized sram_rows x sram_cols.
// Throws CapacityError when the unrolled error exceeds the holding array.
GradientMatrixPlan unroll_gradient_matrices(const std::vector<int>& err_shape,
                                            const LayerDesc& layer, int layer_index,
                                            int sram_rows, int sram_cols);

// Gradient of a conv layer computed through the plan: builds the unrolled
// error matrix, streams shifted activation windows, returns {k,k,in,out}.
// Matches the direct weight-gradient kernel exactly in exact mode.
Tensor gradient_via_plan(const GradientMatrixPlan& plan, const LayerDesc& layer,
                         const Tensor& activations, const Tensor& errors);

// ---------------------------------------------------------------------------
// Floorplanning. Layers are placed greedily in topology order at whole-tile
// granularity: a tile is never shared between layers, so per-layer tiles =
// ceil(arrays / (arrays_per_pe * pes_per_tile)). Utilization counts duplicated
// weight copies as used cells and unused cells of partially-filled arrays and
// tiles against the total.
// ---------------------------------------------------------------------------

struct HierarchyParams {
    int array_rows = 128;
    int array_cols = 128;
    int arrays_per_pe = 9;   // 3x3, sized to host one conv layer's submatrices
    int pes_per_tile = 4;    // 2x2
    int max_tiles = 0;       // 0 = size the chip to fit; else capacity-checked
};

struct LayerPlacement {
    int layer_index = 0;       // index into topology.layers
    SubmatrixMap submap;
    PartitionGrid partition;   // per submatrix
    int duplication = 1;
    int arrays_used = 0;       // submatrices * partition tiles
    int pes_used = 0;
    int tiles_used = 0;
    int first_tile = 0;
    long long used_cells = 0;  // physical cells carrying weights (incl. copies)
};

struct Floorplan {
    HierarchyParams hw;
    std::vector<LayerPlacement> layers;  // weight layers only, topology order
    int tiles = 0;
    long long total_cells = 0;
    long long used_cells = 0;
    double memory_utilization = 0.0;

    const LayerPlacement* placement_for(int layer_index) const;
};

Floorplan build_floorplan(const NetworkTopology& topo, const HierarchyParams& hw,
                          DeviceKind kind);

}  // namespace cimtrain
