#pragma once

#include <cstdint>
#include <vector>

#include "cimtrain/adc.hpp"
#include "cimtrain/device.hpp"
#include "cimtrain/kernels.hpp"
#include "cimtrain/mapping.hpp"
#include "cimtrain/quant.hpp"
#include "cimtrain/topology.hpp"

namespace cimtrain {

// exact: direct dense arithmetic on the conductance-backed weights (the
// oracle bypass). cim: bit-serial array reads with ADC quantization.
enum class ComputeMode { exact, cim };

struct LayerRuntime {
    LayerDesc desc;
    int topo_index = 0;
    std::vector<SynapticArrayState> arrays;  // conv: k*k submatrices; fc: one
    Tensor velocity;                         // momentum state, weight-shaped
    QuantGrid act_grid;   // applied to this layer's input activations
    QuantGrid err_grid;   // applied to the error at this layer's output
    QuantGrid grad_grid;  // applied to per-sample weight gradients
    long long forward_macs = 0;  // full MACs of one sample through this layer
};

// Per-sample forward bookkeeping needed by the backward pass; one instance
// per concurrently-processed sample.
struct SampleTape {
    std::vector<Tensor> inputs;  // input tensor of every layer, quantized
    std::vector<std::vector<int>> pool_indices;
    Tensor logits;
    int prediction = -1;
};

struct NetState {
    NetworkTopology topo;
    std::vector<std::vector<int>> shapes;  // per-layer output shapes
    std::vector<LayerRuntime> layers;      // parallel to topo.layers
    DeviceSpec device;
    WeightRange wr;
    AdcModel adc;                      // shared by all arrays
    ComputeMode mode = ComputeMode::exact;
    int phys_rows = 128;               // physical wordlines per array chunk
    PulseNoise noise;
    std::uint64_t seed = 0;
    bool quantize = true;              // false = full-precision research mode
    bool scales_calibrated = false;

    QuantGrid weight_grid() const;
    std::vector<int> weight_layer_indices() const;
};

// Builds arrays (with device-to-device sampling keyed off `seed`), draws
// initial weights uniformly on the weight grid, and leaves activation/error/
// gradient scales at 1.0 pending calibration.
NetState build_network(const NetworkTopology& topo, const DeviceSpec& device,
                       std::uint64_t seed);

// Assemble / program a layer's weight tensor ({k,k,in,out} or {in,out}).
Tensor layer_weights(const NetState& net, int layer_index);
void set_layer_weights(NetState& net, int layer_index, const Tensor& w);

// Forward one sample; returns logits (also stored on the tape).
Tensor forward_sample(const NetState& net, const Tensor& input, SampleTape& tape,
                      ExecPolicy policy);

struct BackwardResult {
    std::vector<Tensor> errors;  // per weight layer: quantized output error
    std::vector<Tensor> grads;   // per weight layer: quantized weight gradient
};

// Backward from d(loss)/d(logits); stochastic gradient rounding draws from
// `key` (one sub-stream per layer).
BackwardResult backward_sample(const NetState& net, const SampleTape& tape,
                               const Tensor& grad_logits, ExecPolicy policy,
                               const rng::Key& key);

// One full-precision pass over a calibration batch fixes per-layer
// power-of-two activation/error/gradient scales (with a 2x headroom margin),
// then the ADC level table is profiled from bit-serial partial sums of the
// first calibration sample. Deterministic; called once before training.
void calibrate_scales(NetState& net, const std::vector<Tensor>& inputs,
                      const std::vector<int>& labels);

double evaluate_accuracy(const NetState& net, const std::vector<Tensor>& inputs,
                         const std::vector<int>& labels, ExecPolicy policy);

}  // namespace cimtrain
