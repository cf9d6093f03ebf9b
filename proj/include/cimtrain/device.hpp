#pragma once

#include <string>
#include <vector>

#include "cimtrain/rng.hpp"
#include "cimtrain/tensor.hpp"

namespace cimtrain {

enum class DeviceKind { analog_envm, sram };
enum class ReadoutMode { sequential, parallel };

// One synaptic technology: conductance window, state count, update-curve
// nonlinearity labels, variation sigmas and write-pulse electricals.
struct DeviceSpec {
    std::string name;
    double r_on = 1e5;           // on-state resistance, ohm
    double on_off_ratio = 10.0;  // g_max / g_min
    int num_states = 256;        // p_max = num_states - 1
    double nl_ltp = 1.0;         // potentiation nonlinearity label, > 0
    double nl_ltd = 1.0;         // depression label magnitude
    bool nl_ltd_negative = true; // depression label sign flag (Table-style "-x")
    double c2c_sigma = 0.0;      // per-pulse noise, fraction of (g_max - g_min)
    double d2d_sigma = 0.0;      // std of the nonlinearity label across cells
    double write_voltage_ltp = 2.0;  // V
    double write_voltage_ltd = 2.0;  // V (magnitude)
    double write_pulse_width = 1e-7; // s
    DeviceKind kind = DeviceKind::analog_envm;
    int sram_cells_per_weight = 0;   // only meaningful for kind == sram
    std::string notes;               // free-form, e.g. catalog provenance

    int p_max() const { return num_states - 1; }
    double signed_nl_ltd() const { return nl_ltd_negative ? -nl_ltd : nl_ltd; }

    // Throws std::invalid_argument on violated invariants.
    void validate() const;
};

struct ConductanceBounds {
    double g_min = 0.0;
    double g_max = 0.0;
};

// g_max = 1/r_on, g_min = g_max / on_off_ratio.
ConductanceBounds conductance_bounds(const DeviceSpec& spec);

// ---------------------------------------------------------------------------
// Nonlinearity label calibration.
//
// The label of a curve-shape parameter A is defined as
//     label = 9 * maxdev(A / p_max)
// where maxdev is the maximum vertical deviation of the normalized update
// curve from the straight line through its endpoints, as a fraction of the
// conductance range. maxdev goes to 1 in the step limit (A -> 0) and to 0 in
// the linear limit (A -> inf), so labels cover (0, 9) monotonically. The
// calibrated range is [0.01, 8.99]; the label's sign carries over to A and
// flips which end of the curve has the large per-pulse steps.
// ---------------------------------------------------------------------------

// Maximum chord deviation of the normalized curve, for a = A / p_max > 0.
double curve_max_deviation(double a_over_pmax);

// label -> A (pulse-count units). Throws std::range_error outside [0.01, 8.99]
// magnitude.
double nl_label_to_a(double nl_label, int p_max);

// A -> label (inverse of the calibration map).
double a_to_nl_label(double a, int p_max);

// ---------------------------------------------------------------------------
// Update curves.
//
//   G_ltp(p) = B_p (1 - exp(-p / A_p)) + g_min
//   G_ltd(p) = -B_d (1 - exp((p - p_max) / A_d)) + g_max
//   B_x      = (g_max - g_min) / (1 - exp(-p_max / A_x))
//
// Both branches run from g_min at p = 0 to g_max at p = p_max; depression
// moves the state toward lower p along the LTD branch. A may be negative
// (positive depression label), which mirrors the curvature; B's normalization
// keeps the endpoints fixed either way.
// ---------------------------------------------------------------------------

struct UpdateCurve {
    double a_ltp = 0.0;  // pulse-count units, sign = curvature direction
    double a_ltd = 0.0;
    double b_ltp = 0.0;  // siemens, derived from a and the bounds
    double b_ltd = 0.0;
    double g_min = 0.0;
    double g_max = 0.0;
    int p_max = 1;

    static UpdateCurve from_a(double a_ltp, double a_ltd, double g_min, double g_max, int p_max);
    static UpdateCurve from_labels(double nl_ltp, double nl_ltd_signed, double g_min,
                                   double g_max, int p_max);
};

// Conductance-scale normalization for a given A.
double curve_b(double a, double g_min, double g_max, int p_max);

// Throw std::domain_error when p is outside [0, p_max].
double ltp_conductance(double p, const UpdateCurve& curve);
double ltd_conductance(double p, const UpdateCurve& curve);

// Effective pulse index of a conductance on each branch (inverse curves).
double ltp_inverse(double g, const UpdateCurve& curve);
double ltd_inverse(double g, const UpdateCurve& curve);

// ---------------------------------------------------------------------------
// Weight <-> conductance mapping (affine bijection).
// ---------------------------------------------------------------------------

struct WeightRange {
    double min = -1.0;
    double max = 1.0;
    double span() const { return max - min; }
};

double weight_to_conductance(double w, const WeightRange& wr, const ConductanceBounds& gb);
double conductance_to_weight(double g, const WeightRange& wr, const ConductanceBounds& gb);

// Signed pulse count for a desired weight change: round(delta_w / quantum)
// with the quantum = span / p_max, half rounded away from zero, clamped to
// +-p_max.
int pulses_for_delta(double delta_w, const WeightRange& wr, int p_max);

// ---------------------------------------------------------------------------
// Array state.
// ---------------------------------------------------------------------------

struct CellState {
    double conductance = 0.0;
    double a_ltp = 0.0;  // per-cell sampled curve parameters (D2D)
    double a_ltd = 0.0;
};

// A logical grid of cells holding one mapped submatrix. Physical partitioning
// onto fixed-size arrays is handled by the floorplan; device state is kept per
// logical weight (one eNVM cell per weight, n SRAM cells per n-bit weight).
struct SynapticArrayState {
    int rows = 0;
    int cols = 0;
    std::vector<CellState> cells;  // row-major
    ReadoutMode readout = ReadoutMode::parallel;
    bool transposable = true;
    DeviceKind kind = DeviceKind::analog_envm;
    ConductanceBounds bounds;
    int p_max = 1;

    CellState& cell(int r, int c) { return cells[static_cast<std::size_t>(r) * cols + c]; }
    const CellState& cell(int r, int c) const {
        return cells[static_cast<std::size_t>(r) * cols + c];
    }
    UpdateCurve cell_curve(int r, int c) const;
    double mean_conductance() const;
};

// Sample per-cell nonlinearity labels from Normal(spec label, d2d_sigma), fix
// them for the run, and set conductances from the given initial weights
// (all-midpoint when null).
SynapticArrayState init_array(int rows, int cols, const DeviceSpec& spec, std::uint64_t seed,
                              const Tensor* initial_weights = nullptr,
                              const WeightRange& wr = WeightRange{});

struct PulseNoise {
    double c2c_sigma = 0.0;
    bool per_pulse_draws = false;  // validation mode: one draw per pulse
};

// Apply n signed pulses to one cell: invert the matching branch at the current
// conductance, advance the effective pulse index (clamped), re-evaluate, add
// cycle-to-cycle noise, and clip to the conductance window. SRAM cells update
// exactly on the state grid with no noise.
void apply_pulses(CellState& cell, int n, const SynapticArrayState& arr, const PulseNoise& noise,
                  const rng::Key& key);

}  // namespace cimtrain
