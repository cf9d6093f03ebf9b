#include "cimtrain/net.hpp"

#include <algorithm>
#include <cmath>

#include "cimtrain/errors.hpp"

namespace cimtrain {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974;   // weight init draws
constexpr std::uint64_t kArrayStream = 0x61727279;  // per-array d2d seeds

Tensor flatten(const Tensor& t) {
    Tensor out({static_cast<int>(t.size())});
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i];
    return out;
}

std::vector<double> to_vec(const Tensor& t) {
    return std::vector<double>(t.data(), t.data() + t.size());
}

// Smallest power of two >= m, doubled for headroom. Power-of-two scales keep
// grid steps exactly representable across reruns.
double pow2_scale(double m) {
    if (!(m > 0)) return 1.0;
    return std::exp2(std::ceil(std::log2(m))) * 2.0;
}

}  // namespace

QuantGrid NetState::weight_grid() const {
    QuantGrid g;
    g.bits = topo.weight_bits;
    g.max_abs = std::max(std::abs(wr.min), std::abs(wr.max));
    g.is_signed = true;
    g.enabled = true;
    return g;
}

std::vector<int> NetState::weight_layer_indices() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < topo.layers.size(); ++i)
        if (topo.layers[i].has_weights()) out.push_back(static_cast<int>(i));
    return out;
}

NetState build_network(const NetworkTopology& topo, const DeviceSpec& device,
                       std::uint64_t seed) {
    device.validate();
    NetState net;
    net.topo = topo;
    net.shapes = topo.validate_and_shapes();
    net.device = device;
    net.seed = seed;
    net.adc.mode = AdcMode::off;
    net.noise.c2c_sigma = device.c2c_sigma;

    const QuantGrid wgrid = net.weight_grid();
    const rng::Key root(seed);

    std::vector<int> cur = topo.input_shape;
    for (std::size_t i = 0; i < topo.layers.size(); ++i) {
        const LayerDesc& l = topo.layers[i];
        LayerRuntime rt;
        rt.desc = l;
        rt.topo_index = static_cast<int>(i);
        rt.act_grid = {topo.activation_bits, 1.0, /*is_signed=*/false, /*enabled=*/true};
        rt.err_grid = {topo.error_bits, 1.0, true, true};
        rt.grad_grid = {topo.gradient_bits, 1.0, true, true};

        if (l.has_weights()) {
            // uniform init on [-0.5, 0.5], snapped to the weight grid
            const SubmatrixMap sm = map_kernels(l);
            Tensor w = l.kind == LayerKind::conv
                           ? Tensor({l.k, l.k, l.in_channels, l.out_channels})
                           : Tensor({l.in, l.out});
            const rng::Key wk = root.fork(kInitStream, i);
            for (std::size_t e = 0; e < w.size(); ++e) {
                const double u = rng::uniform(wk.fork(e)) - 0.5;
                w[e] = quantize_value(u, wgrid);
            }
            if (l.kind == LayerKind::conv) {
                const auto& out_shape = net.shapes[i];
                rt.forward_macs = l.weight_count() * out_shape[1] * out_shape[2];
                for (int ky = 0; ky < l.k; ++ky) {
                    for (int kx = 0; kx < l.k; ++kx) {
                        Tensor sub({sm.rows, sm.cols});
                        for (int d = 0; d < sm.rows; ++d)
                            for (int n = 0; n < sm.cols; ++n)
                                sub.at2(d, n) = w.at4(ky, kx, d, n);
                        const std::uint64_t aseed =
                            root.fork(kArrayStream, i, static_cast<std::uint64_t>(ky * l.k + kx))
                                .state;
                        rt.arrays.push_back(
                            init_array(sm.rows, sm.cols, device, aseed, &sub, net.wr));
                    }
                }
            } else {
                rt.forward_macs = l.weight_count();
                const std::uint64_t aseed = root.fork(kArrayStream, i, 0).state;
                rt.arrays.push_back(init_array(sm.rows, sm.cols, device, aseed, &w, net.wr));
            }
            rt.velocity = l.kind == LayerKind::conv
                              ? Tensor({l.k, l.k, l.in_channels, l.out_channels})
                              : Tensor({l.in, l.out});
        }
        net.layers.push_back(std::move(rt));
        cur = net.shapes[i];
    }
    return net;
}

Tensor layer_weights(const NetState& net, int layer_index) {
    const LayerRuntime& rt = net.layers[static_cast<std::size_t>(layer_index)];
    if (!rt.desc.has_weights()) throw MappingError("layer has no weights");
    if (rt.desc.kind == LayerKind::fc) {
        const SynapticArrayState& a = rt.arrays[0];
        Tensor w({a.rows, a.cols});
        for (int r = 0; r < a.rows; ++r)
            for (int c = 0; c < a.cols; ++c)
                w.at2(r, c) = conductance_to_weight(a.cell(r, c).conductance, net.wr, a.bounds);
        return w;
    }
    const LayerDesc& l = rt.desc;
    Tensor w({l.k, l.k, l.in_channels, l.out_channels});
    for (int ky = 0; ky < l.k; ++ky) {
        for (int kx = 0; kx < l.k; ++kx) {
            const SynapticArrayState& a = rt.arrays[static_cast<std::size_t>(ky * l.k + kx)];
            for (int d = 0; d < l.in_channels; ++d)
                for (int n = 0; n < l.out_channels; ++n)
                    w.at4(ky, kx, d, n) =
                        conductance_to_weight(a.cell(d, n).conductance, net.wr, a.bounds);
        }
    }
    return w;
}

void set_layer_weights(NetState& net, int layer_index, const Tensor& w) {
    LayerRuntime& rt = net.layers[static_cast<std::size_t>(layer_index)];
    if (!rt.desc.has_weights()) throw MappingError("layer has no weights");
    if (rt.desc.kind == LayerKind::fc) {
        SynapticArrayState& a = rt.arrays[0];
        for (int r = 0; r < a.rows; ++r)
            for (int c = 0; c < a.cols; ++c)
                a.cell(r, c).conductance = weight_to_conductance(w.at2(r, c), net.wr, a.bounds);
        return;
    }
    const LayerDesc& l = rt.desc;
    for (int ky = 0; ky < l.k; ++ky)
        for (int kx = 0; kx < l.k; ++kx) {
            SynapticArrayState& a = rt.arrays[static_cast<std::size_t>(ky * l.k + kx)];
            for (int d = 0; d < l.in_channels; ++d)
                for (int n = 0; n < l.out_channels; ++n)
                    a.cell(d, n).conductance =
                        weight_to_conductance(w.at4(ky, kx, d, n), net.wr, a.bounds);
        }
}

namespace {

CimReadParams cim_params(const NetState& net, const QuantGrid& in_grid) {
    CimReadParams p;
    p.adc = &net.adc;
    p.input_grid = in_grid;
    p.input_grid.enabled = in_grid.enabled && net.quantize;
    p.wr = net.wr;
    p.phys_rows = net.phys_rows;
    p.sample_sink = nullptr;
    return p;
}

void cim_conv_forward(const NetState& net, const LayerRuntime& rt, const Tensor& qin,
                      Tensor& out, std::vector<double>* sink) {
    const LayerDesc& l = rt.desc;
    const int h = qin.dim(1), w = qin.dim(2);
    const int ho = out.dim(1), wo = out.dim(2);
    CimReadParams p = cim_params(net, rt.act_grid);
    p.sample_sink = sink;
    std::vector<double> x(static_cast<std::size_t>(l.in_channels));
    for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
            for (int ky = 0; ky < l.k; ++ky) {
                const int iy = oy * l.stride + ky - l.pad;
                for (int kx = 0; kx < l.k; ++kx) {
                    const int ix = ox * l.stride + kx - l.pad;
                    const bool oob = iy < 0 || iy >= h || ix < 0 || ix >= w;
                    for (int d = 0; d < l.in_channels; ++d)
                        x[static_cast<std::size_t>(d)] = oob ? 0.0 : qin.at3(d, iy, ix);
                    const auto col =
                        cim_forward_read(rt.arrays[static_cast<std::size_t>(ky * l.k + kx)], x, p);
                    for (int n = 0; n < l.out_channels; ++n) out.at3(n, oy, ox) += col[n];
                }
            }
        }
    }
}

void cim_conv_input_grad(const NetState& net, const LayerRuntime& rt, const Tensor& err,
                         const std::vector<int>& in_shape, Tensor& grad_in) {
    const LayerDesc& l = rt.desc;
    const int h = in_shape[1], w = in_shape[2];
    const int ho = err.dim(1), wo = err.dim(2);
    CimReadParams p = cim_params(net, rt.err_grid);
    grad_in.reshape(in_shape);
    grad_in.fill(0.0);
    std::vector<double> v(static_cast<std::size_t>(l.out_channels));
    for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
            for (int n = 0; n < l.out_channels; ++n)
                v[static_cast<std::size_t>(n)] = err.at3(n, oy, ox);
            for (int ky = 0; ky < l.k; ++ky) {
                const int iy = oy * l.stride + ky - l.pad;
                if (iy < 0 || iy >= h) continue;
                for (int kx = 0; kx < l.k; ++kx) {
                    const int ix = ox * l.stride + kx - l.pad;
                    if (ix < 0 || ix >= w) continue;
                    const auto row = cim_transposed_read(
                        rt.arrays[static_cast<std::size_t>(ky * l.k + kx)], v, p);
                    for (int d = 0; d < l.in_channels; ++d) grad_in.at3(d, iy, ix) += row[d];
                }
            }
        }
    }
}

}  // namespace

Tensor forward_sample(const NetState& net, const Tensor& input, SampleTape& tape,
                      ExecPolicy policy) {
    if (input.shape() != net.topo.input_shape)
        throw TopologyError("input shape does not match the network");
    tape.inputs.assign(net.layers.size(), Tensor{});
    tape.pool_indices.assign(net.layers.size(), {});

    Tensor cur = input;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerRuntime& rt = net.layers[i];
        switch (rt.desc.kind) {
            case LayerKind::conv: {
                Tensor qin = cur;
                if (net.quantize) quantize_tensor(qin, rt.act_grid);
                tape.inputs[i] = qin;
                const auto& os = net.shapes[i];
                Tensor out({os[0], os[1], os[2]});
                if (net.mode == ComputeMode::exact) {
                    conv2d_forward(qin, layer_weights(net, static_cast<int>(i)), rt.desc.stride,
                                   rt.desc.pad, out, policy);
                } else {
                    out.fill(0.0);
                    cim_conv_forward(net, rt, qin, out, nullptr);
                }
                cur = std::move(out);
                break;
            }
            case LayerKind::fc: {
                Tensor qin = cur;
                if (net.quantize) quantize_tensor(qin, rt.act_grid);
                tape.inputs[i] = qin;
                Tensor flat = flatten(qin);
                Tensor out;
                if (net.mode == ComputeMode::exact) {
                    fc_forward(flat, layer_weights(net, static_cast<int>(i)), out, policy);
                } else {
                    CimReadParams p = cim_params(net, rt.act_grid);
                    const auto col = cim_forward_read(rt.arrays[0], to_vec(flat), p);
                    out.reshape({static_cast<int>(col.size())});
                    for (std::size_t j = 0; j < col.size(); ++j) out[j] = col[j];
                }
                cur = std::move(out);
                break;
            }
            case LayerKind::relu: {
                tape.inputs[i] = cur;
                Tensor out;
                relu_forward(cur, out, policy);
                cur = std::move(out);
                break;
            }
            case LayerKind::pool: {
                tape.inputs[i] = cur;
                Tensor out;
                maxpool2x2_forward(cur, out, tape.pool_indices[i], policy);
                cur = std::move(out);
                break;
            }
        }
    }
    tape.logits = cur;
    tape.prediction = 0;
    for (std::size_t j = 1; j < cur.size(); ++j)
        if (cur[j] > cur[static_cast<std::size_t>(tape.prediction)])
            tape.prediction = static_cast<int>(j);
    return cur;
}

BackwardResult backward_sample(const NetState& net, const SampleTape& tape,
                               const Tensor& grad_logits, ExecPolicy policy,
                               const rng::Key& key) {
    if (tape.inputs.size() != net.layers.size())
        throw StateError("backward without a forward tape");
    const int n_weight = static_cast<int>(net.weight_layer_indices().size());
    BackwardResult res;
    res.errors.assign(static_cast<std::size_t>(n_weight), Tensor{});
    res.grads.assign(static_cast<std::size_t>(n_weight), Tensor{});

    int wpos = n_weight;  // walk backwards
    Tensor grad = grad_logits;
    for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
        const LayerRuntime& rt = net.layers[static_cast<std::size_t>(i)];
        const Tensor& fwd_in = tape.inputs[static_cast<std::size_t>(i)];
        switch (rt.desc.kind) {
            case LayerKind::relu: {
                Tensor out;
                relu_backward(grad, fwd_in, out, policy);
                grad = std::move(out);
                break;
            }
            case LayerKind::pool: {
                Tensor out;
                maxpool2x2_backward(grad, tape.pool_indices[static_cast<std::size_t>(i)],
                                    fwd_in.shape(), out);
                grad = std::move(out);
                break;
            }
            case LayerKind::fc: {
                --wpos;
                Tensor err = grad;
                if (net.quantize) quantize_tensor(err, rt.err_grid);
                res.errors[static_cast<std::size_t>(wpos)] = err;
                Tensor flat = flatten(fwd_in);
                Tensor g;
                fc_weight_grad(flat, err, g, policy);
                if (net.quantize)
                    quantize_tensor(g, rt.grad_grid, RoundMode::stochastic,
                                    key.fork(static_cast<std::uint64_t>(i)));
                res.grads[static_cast<std::size_t>(wpos)] = std::move(g);
                Tensor gin;
                if (net.mode == ComputeMode::exact) {
                    fc_input_grad(err, layer_weights(net, i), gin, policy);
                } else {
                    CimReadParams p = cim_params(net, rt.err_grid);
                    const auto row = cim_transposed_read(rt.arrays[0], to_vec(err), p);
                    gin.reshape({static_cast<int>(row.size())});
                    for (std::size_t j = 0; j < row.size(); ++j) gin[j] = row[j];
                }
                gin.reshape(fwd_in.shape());  // un-flatten
                grad = std::move(gin);
                break;
            }
            case LayerKind::conv: {
                --wpos;
                Tensor err = grad;
                if (net.quantize) quantize_tensor(err, rt.err_grid);
                res.errors[static_cast<std::size_t>(wpos)] = err;
                Tensor g;
                conv2d_weight_grad(fwd_in, err, rt.desc.k, rt.desc.stride, rt.desc.pad, g,
                                   policy);
                if (net.quantize)
                    quantize_tensor(g, rt.grad_grid, RoundMode::stochastic,
                                    key.fork(static_cast<std::uint64_t>(i)));
                res.grads[static_cast<std::size_t>(wpos)] = std::move(g);
                Tensor gin;
                if (net.mode == ComputeMode::exact) {
                    conv2d_input_grad(err, layer_weights(net, i), rt.desc.stride, rt.desc.pad,
                                      fwd_in.dim(1), fwd_in.dim(2), gin, policy);
                } else {
                    cim_conv_input_grad(net, rt, err, fwd_in.shape(), gin);
                }
                grad = std::move(gin);
                break;
            }
        }
    }
    return res;
}

void calibrate_scales(NetState& net, const std::vector<Tensor>& inputs,
                      const std::vector<int>& labels) {
    if (inputs.empty()) throw ConfigError("calibration", "empty calibration batch");
    const bool saved_q = net.quantize;
    const ComputeMode saved_m = net.mode;
    net.quantize = false;
    net.mode = ComputeMode::exact;

    const auto widx = net.weight_layer_indices();
    std::vector<double> max_act(widx.size(), 0.0), max_err(widx.size(), 0.0),
        max_grad(widx.size(), 0.0);

    SampleTape tape;
    Tensor grad_logits;
    for (std::size_t s = 0; s < inputs.size(); ++s) {
        forward_sample(net, inputs[s], tape, ExecPolicy::serial);
        softmax_xent(tape.logits, labels[s], grad_logits);
        const auto back =
            backward_sample(net, tape, grad_logits, ExecPolicy::serial, rng::Key(0));
        for (std::size_t j = 0; j < widx.size(); ++j) {
            max_act[j] = std::max(
                max_act[j], tensor_abs_max(tape.inputs[static_cast<std::size_t>(widx[j])]));
            max_err[j] = std::max(max_err[j], tensor_abs_max(back.errors[j]));
            max_grad[j] = std::max(max_grad[j], tensor_abs_max(back.grads[j]));
        }
    }
    for (std::size_t j = 0; j < widx.size(); ++j) {
        LayerRuntime& rt = net.layers[static_cast<std::size_t>(widx[j])];
        rt.act_grid.max_abs = pow2_scale(max_act[j]);
        rt.err_grid.max_abs = pow2_scale(max_err[j]);
        rt.grad_grid.max_abs = pow2_scale(max_grad[j]);
    }
    net.quantize = saved_q;
    net.mode = saved_m;
    net.scales_calibrated = true;

    if (net.adc.mode != AdcMode::off) {
        // profile raw bit-serial partial sums on the first calibration sample
        AdcModel saved_adc = net.adc;
        net.adc.mode = AdcMode::off;
        net.quantize = true;

        std::vector<double> sink;
        Tensor cur = inputs[0];
        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            const LayerRuntime& rt = net.layers[i];
            std::vector<int> pool_idx;
            Tensor out;
            switch (rt.desc.kind) {
                case LayerKind::conv: {
                    Tensor qin = cur;
                    quantize_tensor(qin, rt.act_grid);
                    const auto& os = net.shapes[i];
                    out.reshape({os[0], os[1], os[2]});
                    out.fill(0.0);
                    cim_conv_forward(net, rt, qin, out, &sink);
                    break;
                }
                case LayerKind::fc: {
                    Tensor qin = cur;
                    quantize_tensor(qin, rt.act_grid);
                    CimReadParams p = cim_params(net, rt.act_grid);
                    p.sample_sink = &sink;
                    const auto col = cim_forward_read(rt.arrays[0], to_vec(flatten(qin)), p);
                    out.reshape({static_cast<int>(col.size())});
                    for (std::size_t j = 0; j < col.size(); ++j) out[j] = col[j];
                    break;
                }
                case LayerKind::relu:
                    relu_forward(cur, out, ExecPolicy::serial);
                    break;
                case LayerKind::pool:
                    maxpool2x2_forward(cur, out, pool_idx, ExecPolicy::serial);
                    break;
            }
            cur = std::move(out);
        }

        net.adc = saved_adc;
        net.quantize = saved_q;
        if (sink.empty()) throw StateError("adc calibration collected no partial sums");
        if (net.adc.mode == AdcMode::linear) {
            const auto [lo, hi] = std::minmax_element(sink.begin(), sink.end());
            net.adc.calibrate_linear(*lo, *hi > *lo ? *hi : *lo + 1.0);
        } else {
            net.adc.calibrate_quantile(std::move(sink));
        }
    }
}

double evaluate_accuracy(const NetState& net, const std::vector<Tensor>& inputs,
                         const std::vector<int>& labels, ExecPolicy policy) {
    if (inputs.empty()) return 0.0;
    std::size_t correct = 0;
    SampleTape tape;
    for (std::size_t s = 0; s < inputs.size(); ++s) {
        forward_sample(net, inputs[s], tape, policy);
        if (tape.prediction == labels[s]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(inputs.size());
}

}  // namespace cimtrain
