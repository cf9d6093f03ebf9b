#include "cimtrain/topology.hpp"

#include "cimtrain/errors.hpp"

namespace cimtrain {

LayerDesc LayerDesc::conv(int k, int in_c, int out_c, int stride, int pad) {
    LayerDesc d;
    d.kind = LayerKind::conv;
    d.k = k;
    d.in_channels = in_c;
    d.out_channels = out_c;
    d.stride = stride;
    d.pad = pad;
    return d;
}

LayerDesc LayerDesc::fc(int in, int out) {
    LayerDesc d;
    d.kind = LayerKind::fc;
    d.in = in;
    d.out = out;
    return d;
}

LayerDesc LayerDesc::pool() {
    LayerDesc d;
    d.kind = LayerKind::pool;
    return d;
}

LayerDesc LayerDesc::relu() {
    LayerDesc d;
    d.kind = LayerKind::relu;
    return d;
}

std::vector<std::vector<int>> NetworkTopology::validate_and_shapes() const {
    if (weight_bits < 1 || activation_bits < 1 || error_bits < 1 || gradient_bits < 1)
        throw TopologyError(name + ": bit widths must be >= 1");
    if (input_shape.size() != 3)
        throw TopologyError(name + ": input shape must be {channels, height, width}");
    if (layers.empty()) throw TopologyError(name + ": no layers");

    std::vector<std::vector<int>> shapes;
    std::vector<int> cur = input_shape;
    bool flattened = false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerDesc& l = layers[i];
        switch (l.kind) {
            case LayerKind::conv: {
                if (flattened)
                    throw TopologyError(name + ": conv after flatten at layer " +
                                        std::to_string(i));
                if (l.in_channels != cur[0])
                    throw TopologyError(name + ": conv channel mismatch at layer " +
                                        std::to_string(i));
                const int ho = (cur[1] + 2 * l.pad - l.k) / l.stride + 1;
                const int wo = (cur[2] + 2 * l.pad - l.k) / l.stride + 1;
                if (ho < 1 || wo < 1)
                    throw TopologyError(name + ": conv output vanishes at layer " +
                                        std::to_string(i));
                cur = {l.out_channels, ho, wo};
                break;
            }
            case LayerKind::pool: {
                if (flattened)
                    throw TopologyError(name + ": pool after flatten at layer " +
                                        std::to_string(i));
                if (cur[1] % 2 != 0 || cur[2] % 2 != 0)
                    throw TopologyError(name + ": pool needs even sides at layer " +
                                        std::to_string(i));
                cur = {cur[0], cur[1] / 2, cur[2] / 2};
                break;
            }
            case LayerKind::relu:
                break;
            case LayerKind::fc: {
                long long flat = 1;
                for (int d : cur) flat *= d;
                if (flat != l.in)
                    throw TopologyError(name + ": fc input size mismatch at layer " +
                                        std::to_string(i) + " (have " + std::to_string(flat) +
                                        ", need " + std::to_string(l.in) + ")");
                cur = {l.out};
                flattened = true;
                break;
            }
        }
        shapes.push_back(cur);
    }
    if (num_classes > 0 && (cur.size() != 1 || cur[0] != num_classes))
        throw TopologyError(name + ": final layer does not produce num_classes outputs");
    return shapes;
}

long long NetworkTopology::total_weights() const {
    long long n = 0;
    for (const auto& l : layers) n += l.weight_count();
    return n;
}

long long NetworkTopology::forward_macs() const {
    long long macs = 0;
    std::vector<int> cur = input_shape;
    const auto shapes = validate_and_shapes();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerDesc& l = layers[i];
        if (l.kind == LayerKind::conv) {
            const auto& out = shapes[i];
            macs += l.weight_count() * out[1] * out[2];
        } else if (l.kind == LayerKind::fc) {
            macs += l.weight_count();
        }
    }
    return macs;
}

NetworkTopology default_topology(int input_channels, int input_side, int num_classes) {
    NetworkTopology t;
    t.name = "default";
    t.input_shape = {input_channels, input_side, input_side};
    t.num_classes = num_classes;
    const int s4 = input_side / 2;
    const int flat = 24 * (s4 / 2) * (s4 / 2);
    t.layers = {
        LayerDesc::conv(3, input_channels, 12), LayerDesc::relu(),
        LayerDesc::conv(3, 12, 12),             LayerDesc::relu(),
        LayerDesc::pool(),
        LayerDesc::conv(3, 12, 24),             LayerDesc::relu(),
        LayerDesc::conv(3, 24, 24),             LayerDesc::relu(),
        LayerDesc::pool(),
        LayerDesc::fc(flat, 48),                LayerDesc::relu(),
        LayerDesc::fc(48, num_classes),
    };
    return t;
}

NetworkTopology vgg8_topology(int num_classes) {
    NetworkTopology t;
    t.name = "vgg8";
    t.input_shape = {3, 32, 32};
    t.num_classes = num_classes;
    t.layers = {
        LayerDesc::conv(3, 3, 128),   LayerDesc::relu(),
        LayerDesc::conv(3, 128, 128), LayerDesc::relu(),
        LayerDesc::pool(),
        LayerDesc::conv(3, 128, 256), LayerDesc::relu(),
        LayerDesc::conv(3, 256, 256), LayerDesc::relu(),
        LayerDesc::pool(),
        LayerDesc::conv(3, 256, 512), LayerDesc::relu(),
        LayerDesc::conv(3, 512, 512), LayerDesc::relu(),
        LayerDesc::pool(),
        LayerDesc::fc(8192, 1024),    LayerDesc::relu(),
        LayerDesc::fc(1024, num_classes),
    };
    return t;
}

NetworkTopology topology_by_name(const std::string& name) {
    if (name == "default") return default_topology();
    if (name == "vgg8") return vgg8_topology();
    throw ConfigError("topology", "unknown topology '" + name + "'");
}

}  // namespace cimtrain
