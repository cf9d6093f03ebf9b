#include "cimtrain/train.hpp"

#include <cmath>

#include "cimtrain/errors.hpp"

namespace cimtrain {

namespace {

constexpr std::uint64_t kGradStream = 0x67726164;  // stochastic rounding draws
constexpr std::uint64_t kC2cStream = 0x63326300;   // pulse-noise draws

}  // namespace

void momentum_update(Tensor& v, const Tensor& g, double beta, double lr, Tensor& delta_w) {
    if (!v.same_shape(g)) throw TopologyError("momentum: velocity/gradient shape mismatch");
    delta_w.reshape(v.shape());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = beta * v[i] + (1.0 - beta) * g[i];
        delta_w[i] = lr * v[i];
    }
}

EpochTrace train_epoch(NetState& net, const std::vector<Tensor>& images,
                       const std::vector<int>& labels, const TrainParams& params, int epoch,
                       ExecPolicy policy) {
    if (images.empty()) throw ConfigError("dataset", "training shard is empty");
    if (images.size() != labels.size())
        throw ConfigError("dataset", "image/label count mismatch");
    const int b_size = params.batch_size;
    if (b_size < 1) throw ConfigError("batch_size", "must be >= 1");
    const int n_batches = static_cast<int>(images.size()) / b_size;
    if (n_batches < 1)
        throw ConfigError("dataset", "fewer samples than one batch");

    const auto widx = net.weight_layer_indices();
    const std::size_t n_weight = widx.size();
    const rng::Key root(net.seed);
    const double beta = params.use_momentum ? params.beta : 0.0;

    EpochTrace trace;
    trace.epoch = epoch;
    double loss_sum = 0.0;
    const bool par = policy == ExecPolicy::parallel;

    for (int b = 0; b < n_batches; ++b) {
        const bool last_batch = b == n_batches - 1;
        const rng::Key batch_key =
            root.fork(kGradStream, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(b));

        std::vector<BackwardResult> per_sample(static_cast<std::size_t>(b_size));
        std::vector<double> per_loss(static_cast<std::size_t>(b_size), 0.0);
        SampleTape last_tape;  // tape of the final sample, kept for the trace

        // steps #1-#3: forward, error, per-sample weight gradients
#pragma omp parallel for if (par)
        for (int s = 0; s < b_size; ++s) {
            const std::size_t idx = static_cast<std::size_t>(b) * b_size + s;
            SampleTape tape;
            Tensor grad_logits;
            forward_sample(net, images[idx], tape, policy);
            per_loss[static_cast<std::size_t>(s)] =
                softmax_xent(tape.logits, labels[idx], grad_logits);
            per_sample[static_cast<std::size_t>(s)] = backward_sample(
                net, tape, grad_logits, policy, batch_key.fork(static_cast<std::uint64_t>(s)));
            if (s == b_size - 1) last_tape = std::move(tape);
        }
        for (double l : per_loss) loss_sum += l;

        // fixed-order digital accumulation across the batch
        std::vector<Tensor> accum(n_weight);
        for (std::size_t j = 0; j < n_weight; ++j) {
            accum[j] = per_sample[0].grads[j];
            for (int s = 1; s < b_size; ++s) {
                const Tensor& g = per_sample[static_cast<std::size_t>(s)].grads[j];
                for (std::size_t e = 0; e < accum[j].size(); ++e) accum[j][e] += g[e];
            }
            for (std::size_t e = 0; e < accum[j].size(); ++e)
                accum[j][e] /= static_cast<double>(b_size);
        }

        // step #4: one device update per batch
        std::vector<Tensor> old_w;
        if (last_batch) {
            old_w.reserve(n_weight);
            for (std::size_t j = 0; j < n_weight; ++j)
                old_w.push_back(layer_weights(net, widx[j]));
        }

        const rng::Key pulse_key = root.fork(kC2cStream, static_cast<std::uint64_t>(epoch),
                                             static_cast<std::uint64_t>(b));
        for (std::size_t j = 0; j < n_weight; ++j) {
            LayerRuntime& rt = net.layers[static_cast<std::size_t>(widx[j])];
            // descend: apply the negative of the momentum step
            Tensor descent(accum[j].shape());
            for (std::size_t e = 0; e < descent.size(); ++e) descent[e] = -accum[j][e];
            Tensor delta;
            momentum_update(rt.velocity, descent, beta, params.lr, delta);

            const rng::Key layer_key = pulse_key.fork(static_cast<std::uint64_t>(widx[j]));
            std::size_t e = 0;
            for (auto& arr : rt.arrays) {
                for (auto& cell : arr.cells) {
                    const int n = pulses_for_delta(delta[e], net.wr, arr.p_max);
                    if (n != 0) apply_pulses(cell, n, arr, net.noise, layer_key.fork(e));
                    ++e;
                }
            }
        }

        if (last_batch) {
            trace.layers.resize(n_weight);
            for (std::size_t j = 0; j < n_weight; ++j) {
                const LayerRuntime& rt = net.layers[static_cast<std::size_t>(widx[j])];
                LayerTrace& lt = trace.layers[j];
                lt.layer_index = widx[j];
                lt.activations = last_tape.inputs[static_cast<std::size_t>(widx[j])];
                lt.old_weights = std::move(old_w[j]);
                lt.new_weights = layer_weights(net, widx[j]);
                lt.delta_weights.reshape(lt.new_weights.shape());
                for (std::size_t e = 0; e < lt.delta_weights.size(); ++e)
                    lt.delta_weights[e] = lt.new_weights[e] - lt.old_weights[e];
                lt.act_ones_fraction = ones_fraction(lt.activations, rt.act_grid);
                lt.act_nonzero_fraction = nonzero_fraction(lt.activations, rt.act_grid);
                const Tensor& err = per_sample.back().errors[j];
                lt.err_ones_fraction = ones_fraction(err, rt.err_grid);
                lt.err_nonzero_fraction = nonzero_fraction(err, rt.err_grid);
                double g_sum = 0.0;
                std::size_t g_cnt = 0;
                for (const auto& arr : rt.arrays) {
                    g_sum += arr.mean_conductance() * static_cast<double>(arr.cells.size());
                    g_cnt += arr.cells.size();
                }
                lt.mean_conductance = g_cnt > 0 ? g_sum / static_cast<double>(g_cnt) : 0.0;
                lt.forward_macs = rt.forward_macs;
                lt.activation_elems = static_cast<long long>(lt.activations.size());
                lt.error_elems = static_cast<long long>(err.size());
            }
        }
    }

    trace.mean_loss = loss_sum / (static_cast<double>(n_batches) * b_size);
    return trace;
}

}  // namespace cimtrain
