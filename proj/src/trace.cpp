#include "cimtrain/trace.hpp"

#include "cimtrain/errors.hpp"

namespace cimtrain {

double input_activity(const Tensor& activations, const QuantGrid& grid) {
    return ones_fraction(activations, grid);
}

std::vector<LayerDistribution> distribution_summary(const EpochTrace& trace) {
    if (!trace.complete()) throw TraceError("distribution summary of an empty trace");
    std::vector<LayerDistribution> out;
    out.reserve(trace.layers.size());
    for (const auto& lt : trace.layers) {
        LayerDistribution d;
        d.weight_mean = tensor_mean(lt.new_weights);
        d.weight_std = tensor_std(lt.new_weights);
        d.delta_mean = tensor_mean(lt.delta_weights);
        d.delta_std = tensor_std(lt.delta_weights);
        out.push_back(d);
    }
    return out;
}

double normalized_delta_mean(const EpochTrace& trace) {
    double s = 0.0;
    for (const auto& lt : trace.layers) {
        s += tensor_mean(lt.delta_weights) * static_cast<double>(lt.activation_elems) *
             static_cast<double>(lt.delta_weights.size());
    }
    return s;
}

}  // namespace cimtrain
