#pragma once

#include <vector>

#include "cimtrain/quant.hpp"
#include "cimtrain/tensor.hpp"

namespace cimtrain {

// Last-iteration snapshot of one weight layer, the raw material for both the
// hardware cost estimation (activity fractions, delta pulses) and the
// distribution reports.
struct LayerTrace {
    int layer_index = 0;  // index into topology.layers
    Tensor activations;   // quantized input activations, last iteration
    Tensor old_weights;
    Tensor new_weights;
    Tensor delta_weights;           // new - old
    double act_ones_fraction = 0.0;     // bit-level: drives energy/current scaling
    double act_nonzero_fraction = 0.0;  // element-level: drives active-MAC counting
    double err_ones_fraction = 0.0;
    double err_nonzero_fraction = 0.0;
    double mean_conductance = 0.0;  // after the update
    long long forward_macs = 0;     // full MACs of one sample through the layer
    long long activation_elems = 0;
    long long error_elems = 0;
};

struct EpochTrace {
    int epoch = 0;          // 1-based
    double accuracy = 0.0;  // filled by the runner after evaluation
    double mean_loss = 0.0;
    std::vector<LayerTrace> layers;  // weight layers in forward order

    bool complete() const { return !layers.empty(); }
};

// Fraction of one-bits in the fixed-point expansion of a quantized
// activation tensor (the pseudo-trace activity estimate).
double input_activity(const Tensor& activations, const QuantGrid& grid);

struct LayerDistribution {
    double weight_mean = 0.0;
    double weight_std = 0.0;
    double delta_mean = 0.0;
    double delta_std = 0.0;
};

std::vector<LayerDistribution> distribution_summary(const EpochTrace& trace);

// Network-level scalar: sum over layers of (per-layer delta-weight mean *
// activation element count * weight element count).
double normalized_delta_mean(const EpochTrace& trace);

}  // namespace cimtrain
