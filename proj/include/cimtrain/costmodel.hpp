#pragma once

#include <string>

#include "cimtrain/device.hpp"
#include "cimtrain/mapping.hpp"
#include "cimtrain/topology.hpp"
#include "cimtrain/trace.hpp"

namespace cimtrain {

struct BatchSchedule {
    int batch_size = 200;
    int epochs = 1;
    int batches_per_epoch = 1;
};

// Per-component unit costs. Absolute numbers come from this editable table
// (shipped defaults in default_cost_table / data/cost_table.json); the
// simulator contributes the structural formulas, not circuit calibration.
// Units: energy J, latency s, area mm^2, power W, conductance S, voltage V.
struct CostTable {
    // column ADC
    double adc_energy = 2e-12;            // J per conversion
    double adc_base_latency = 1e-9;       // s per conversion
    double adc_current_coefficient = 1e-14;  // s*A: latency term k / I_column
    double adc_latency_ceiling = 1e-7;    // s cap as the column current -> 0
    double adc_area = 3e-3;               // mm^2 per ADC
    int adc_columns_per_unit = 8;         // columns sharing one ADC (serialized)
    double read_voltage = 0.5;            // V on active wordlines during reads

    // row drivers / switch matrix and address decoding
    double switch_energy_per_row = 2e-14;  // J per active row per cycle
    double switch_latency = 1e-10;         // s per cycle
    double switch_area = 1e-3;             // mm^2 per array
    double decoder_energy = 5e-14;         // J per cycle
    double decoder_latency = 1e-10;        // s per cycle
    double decoder_area = 5e-4;            // mm^2 per array

    // digital accumulation
    double adder_energy = 3e-14;      // J per add
    double adder_latency = 2e-10;     // s per add stage
    double adder_area = 1e-6;         // mm^2 per adder
    double shift_add_energy = 2e-14;  // J per column per cycle
    double shift_add_latency = 1e-10; // s per cycle
    double shift_add_area = 2e-6;     // mm^2 per column

    // in-array read energy drawn through the cells
    double cell_read_energy = 1e-15;  // J per active cell per cycle

    // global buffer
    double buffer_energy_read = 5e-14;   // J per bit
    double buffer_energy_write = 6e-14;  // J per bit
    double buffer_latency = 1e-9;        // s per access
    double buffer_access_bits = 128;     // bits moved per access
    double buffer_area_per_bit = 2e-7;   // mm^2 per bit

    // H-tree interconnect
    double htree_energy_per_bit = 1e-13;  // J per bit per hop
    double htree_latency_per_hop = 5e-10; // s per hop per bus transfer
    double htree_bus_bits = 128;          // bits per transfer
    double htree_area_per_tile = 5e-3;    // mm^2

    // off-chip memory (single-channel edge-class DRAM)
    double dram_energy_per_bit = 4e-12;  // J per bit
    double dram_bandwidth = 1e10;        // bits per s

    // SRAM cells (gradient unit and sram-kind weight storage)
    double sram_write_energy = 5e-14;   // J per bit
    double sram_write_latency = 1e-9;   // s per row write
    double sram_gmean = 2e-5;           // S, nominal cell conductance for reads

    // geometry
    double cell_area = 5e-8;         // mm^2 per cell before R_on scaling
    double mux_ron_reference = 1e4;  // ohm; mux/cell area scales by 1 + ref/R_on

    // leakage
    double leakage_per_array = 5e-6;      // W
    double leakage_buffer = 1e-4;         // W
    double leakage_other = 1e-4;          // W

    void validate() const;  // all costs >= 0; throws ConfigError
};

CostTable default_cost_table();
CostTable load_cost_table(const std::string& path);   // JSON, partial overrides
void save_cost_table(const CostTable& t, const std::string& path);

// ---------------------------------------------------------------------------

struct CostBreakdown {
    double adc = 0, accumulation = 0, buffer = 0, interconnect = 0, dram = 0, array = 0,
           other = 0;
    double total() const {
        return adc + accumulation + buffer + interconnect + dram + array + other;
    }
    CostBreakdown& operator+=(const CostBreakdown& o);
    CostBreakdown scaled(double f) const;
};

struct StepCost {
    double latency = 0.0;         // s
    double dynamic_energy = 0.0;  // J
    double leakage_energy = 0.0;  // J
    CostBreakdown latency_parts;
    CostBreakdown energy_parts;
    double ops = 0.0;  // 2 * active MACs
};

enum class TrainStep { feed_forward, error, weight_gradient, weight_update };

struct ReadCost {
    double latency = 0.0;
    double energy = 0.0;
    double ops = 0.0;
    CostBreakdown latency_parts;
    CostBreakdown energy_parts;
};

// Cost of one array-level read cycle. `activity` is the fraction of input
// lines carrying a one this cycle. Parallel readout drives all active rows at
// once (ADC latency rises as column current falls, capped by the configured
// ceiling); sequential readout pays one cycle per used row. Zero activity
// means the read never issues: everything including latency is zero.
ReadCost array_read_cost(int rows_used, int cols_used, double activity,
                         double mean_conductance, const CostTable& costs, ReadoutMode mode);

// Everything step_cost needs besides the step id.
struct CostContext {
    const NetworkTopology* topo = nullptr;
    const Floorplan* fp = nullptr;
    const EpochTrace* trace = nullptr;
    const DeviceSpec* device = nullptr;
    const CostTable* costs = nullptr;
    BatchSchedule sched;
    ReadoutMode readout = ReadoutMode::parallel;
    double constraint_ratio = 1.0;  // buffer-overhead-constraint c
    int sram_unit_rows = 0;         // gradient-unit geometry (sized at setup)
    int sram_unit_cols = 0;
};

// FF / ERR / GRAD are per-sample costs; UPDATE is per-batch. Throws
// TraceError when the epoch trace lacks the needed fields.
StepCost step_cost(TrainStep step, const CostContext& ctx);

// Global buffer size in bits: max over layers of activation / error /
// gradient element counts times the widest of those bit widths, plus the
// gradient-accumulation bound 2 * array cells * accumulated precision *
// constraint ratio, with accumulated precision = gradient bits + ceil(log2 B).
long long buffer_requirement(const NetworkTopology& topo, int array_rows, int array_cols,
                             int batch_size, double constraint_ratio);

struct AccumulationCost {
    double latency = 0.0;
    double energy = 0.0;
    int rounds = 0;
};

// Batch-gradient accumulation for one layer's arrays: latency =
// B * (buffer read + accumulate + buffer write) per round, ceil(n_arrays / c)
// sequential rounds; energy covers every array regardless of c.
AccumulationCost accumulation_schedule(int batch_size, int n_arrays, double constraint_ratio,
                                       const CostTable& costs);

struct EpochTotals {
    double latency = 0.0;
    double dynamic_energy = 0.0;
    double leakage_energy = 0.0;
    CostBreakdown latency_parts;   // by component, epoch-scaled
    CostBreakdown energy_parts;
    double step_latency[4] = {};   // by operation (FF, ERR, GRAD, UPDATE), epoch-scaled
    double step_energy[4] = {};
    double ops = 0.0;
    StepCost ff, err, grad, update;  // the unscaled per-step inputs, kept for reports
};

// Per-batch total = B*FF + B*ERR + B*GRAD + 1*UPDATE; epoch total scales by
// batches_per_epoch. Leakage integrates each step's leakage over the same
// counts, i.e. over total wall latency.
EpochTotals epoch_rollup(const StepCost& ff, const StepCost& err, const StepCost& grad,
                         const StepCost& update, const BatchSchedule& sched);

struct PeakMetrics {
    double peak_latency = 0.0;
    double peak_energy = 0.0;
    double peak_tops = 0.0;
    double peak_tops_per_watt = 0.0;
    double total_tops = 0.0;
    double total_tops_per_watt = 0.0;
};

// Peak numbers drop buffer, interconnect and DRAM components (in-array
// computation only); totals use the full epoch numbers with leakage included
// in the energy denominator.
PeakMetrics peak_metrics(const EpochTotals& totals);

struct AreaBreakdown {
    double array = 0, adc = 0, accumulation = 0, buffer = 0, interconnect = 0, other = 0;
    double total() const {
        return array + adc + accumulation + buffer + interconnect + other;
    }
};

// buffer_bits: from buffer_requirement; sram_unit_*: gradient-unit geometry.
AreaBreakdown area_rollup(const Floorplan& fp, const CostTable& costs, const DeviceSpec& dev,
                          long long buffer_bits, int sram_unit_rows, int sram_unit_cols);

}  // namespace cimtrain
