#pragma once

#include <string>
#include <vector>

namespace cimtrain {

enum class LayerKind { conv, fc, pool, relu };

struct LayerDesc {
    LayerKind kind = LayerKind::conv;
    // conv fields
    int k = 0;
    int in_channels = 0;
    int out_channels = 0;
    int stride = 1;
    int pad = 0;
    // fc fields
    int in = 0;
    int out = 0;

    bool has_weights() const { return kind == LayerKind::conv || kind == LayerKind::fc; }
    long long weight_count() const {
        if (kind == LayerKind::conv)
            return static_cast<long long>(k) * k * in_channels * out_channels;
        if (kind == LayerKind::fc) return static_cast<long long>(in) * out;
        return 0;
    }
    static LayerDesc conv(int k, int in_c, int out_c, int stride = 1, int pad = 1);
    static LayerDesc fc(int in, int out);
    static LayerDesc pool();
    static LayerDesc relu();
};

struct NetworkTopology {
    std::string name = "custom";
    std::vector<int> input_shape;  // {channels, height, width}
    int num_classes = 0;
    std::vector<LayerDesc> layers;
    int weight_bits = 8;
    int activation_bits = 8;
    int error_bits = 8;
    int gradient_bits = 8;

    // Throws TopologyError when adjacent shapes are incompatible or a bit
    // width is below 1. Returns the per-layer output shapes on success.
    std::vector<std::vector<int>> validate_and_shapes() const;

    long long total_weights() const;
    // Full multiply-accumulate count of one forward pass.
    long long forward_macs() const;
};

// Desk-scale default: four 3x3 conv layers and two FC layers on 8x8 inputs.
NetworkTopology default_topology(int input_channels = 1, int input_side = 8,
                                 int num_classes = 4);

// The full-scale reference stack: six 3x3 conv layers (128/128/256/256/512/512)
// with three pool stages and FC 8192-1024-num_classes on 32x32x3 inputs.
NetworkTopology vgg8_topology(int num_classes = 10);

// "default" | "vgg8"; throws ConfigError otherwise.
NetworkTopology topology_by_name(const std::string& name);

}  // namespace cimtrain
