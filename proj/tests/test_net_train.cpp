#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "cimtrain/kernels.hpp"
#include "cimtrain/net.hpp"
#include "cimtrain/rng.hpp"
#include "cimtrain/train.hpp"

using namespace cimtrain;

namespace {

DeviceSpec near_linear_device() {
    DeviceSpec d;
    d.name = "lin";
    d.r_on = 1e5;
    d.on_off_ratio = 10.0;
    d.num_states = 257;
    d.nl_ltp = 0.01;
    d.nl_ltd = 0.01;
    return d;
}

NetworkTopology tiny_topology() {
    NetworkTopology t;
    t.name = "tiny";
    t.input_shape = {1, 4, 4};
    t.num_classes = 4;
    t.layers = {LayerDesc::conv(3, 1, 4), LayerDesc::relu(), LayerDesc::pool(),
                LayerDesc::fc(16, 4)};
    return t;
}

Tensor random_input(std::uint64_t seed, const std::vector<int>& shape) {
    Tensor t(shape);
    const rng::Key k(seed);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng::uniform(k.fork(i));
    return t;
}

// Four-class toy task: the class names the brightest quadrant.
void quadrant_dataset(int n, std::uint64_t seed, std::vector<Tensor>& images,
                      std::vector<int>& labels) {
    const rng::Key k(seed);
    for (int s = 0; s < n; ++s) {
        Tensor img({1, 4, 4});
        const int cls = static_cast<int>(rng::below(k.fork(static_cast<std::uint64_t>(s), 0), 4));
        for (std::size_t i = 0; i < img.size(); ++i)
            img[i] = 0.1 * rng::uniform(k.fork(static_cast<std::uint64_t>(s), 1, i));
        const int r0 = (cls / 2) * 2, c0 = (cls % 2) * 2;
        for (int r = r0; r < r0 + 2; ++r)
            for (int c = c0; c < c0 + 2; ++c) img.at3(0, r, c) += 0.8;
        images.push_back(img);
        labels.push_back(cls);
    }
}

double sample_loss(const NetState& net, const Tensor& input, int label) {
    SampleTape tape;
    const Tensor logits = forward_sample(net, input, tape, ExecPolicy::serial);
    Tensor grad;
    return softmax_xent(logits, label, grad);
}

}  // namespace

TEST_CASE("network construction lays out arrays per submatrix") {
    const NetworkTopology topo = default_topology(1, 8, 4);
    NetState net = build_network(topo, near_linear_device(), 7);
    REQUIRE(net.layers.size() == topo.layers.size());
    CHECK(net.layers[0].arrays.size() == 9);   // 3x3 conv
    CHECK(net.layers[0].arrays[0].rows == 1);  // in_channels
    CHECK(net.layers[0].arrays[0].cols == 12);
    const int fc_idx = static_cast<int>(topo.layers.size()) - 1;
    REQUIRE(topo.layers[static_cast<std::size_t>(fc_idx)].kind == LayerKind::fc);
    CHECK(net.layers[static_cast<std::size_t>(fc_idx)].arrays.size() == 1);

    // initial weights live on the signed weight grid
    const QuantGrid grid = net.weight_grid();
    for (int li : net.weight_layer_indices()) {
        const Tensor w = layer_weights(net, li);
        for (std::size_t i = 0; i < w.size(); ++i) {
            CHECK(std::abs(w[i]) <= grid.max_abs + 1e-12);
            CHECK(w[i] == doctest::Approx(quantize_value(w[i], grid)).epsilon(1e-9));
        }
        CHECK(net.layers[static_cast<std::size_t>(li)].velocity.size() == w.size());
        for (std::size_t i = 0; i < w.size(); ++i)
            CHECK(net.layers[static_cast<std::size_t>(li)].velocity[i] == 0.0);
    }
}

TEST_CASE("programming weights and reading them back is the identity") {
    NetState net = build_network(tiny_topology(), near_linear_device(), 3);
    const rng::Key k(44);
    for (int li : net.weight_layer_indices()) {
        Tensor w = layer_weights(net, li);
        for (std::size_t i = 0; i < w.size(); ++i)
            w[i] = 0.8 * (2.0 * rng::uniform(k.fork(static_cast<std::uint64_t>(li), i)) - 1.0);
        set_layer_weights(net, li, w);
        const Tensor back = layer_weights(net, li);
        for (std::size_t i = 0; i < w.size(); ++i)
            CHECK(back[i] == doctest::Approx(w[i]).epsilon(1e-12));
    }
}

TEST_CASE("momentum update hand values") {
    Tensor v({1}), g({1}), dw({1});
    g[0] = 1.0;
    momentum_update(v, g, 0.9, 1.0, dw);
    CHECK(v[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(dw[0] == doctest::Approx(0.1).epsilon(1e-12));
    momentum_update(v, g, 0.9, 1.0, dw);
    CHECK(v[0] == doctest::Approx(0.19).epsilon(1e-12));
    CHECK(dw[0] == doctest::Approx(0.19).epsilon(1e-12));

    Tensor v2({1}), dw2({1});
    momentum_update(v2, g, 0.0, 0.5, dw2);  // beta 0 degenerates to plain SGD
    CHECK(v2[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dw2[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("forward passes are deterministic and policy independent") {
    NetState net = build_network(tiny_topology(), near_linear_device(), 11);
    const Tensor input = random_input(12, {1, 4, 4});
    for (ComputeMode mode : {ComputeMode::exact, ComputeMode::cim}) {
        net.mode = mode;
        SampleTape t1, t2, t3;
        const Tensor a = forward_sample(net, input, t1, ExecPolicy::serial);
        const Tensor b = forward_sample(net, input, t2, ExecPolicy::serial);
        const Tensor c = forward_sample(net, input, t3, ExecPolicy::parallel);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i] == b[i]);
            CHECK(a[i] == c[i]);
        }
        CHECK(t1.prediction == t3.prediction);
    }
}

TEST_CASE("array-path forward with the converter off equals the exact path") {
    NetState net = build_network(tiny_topology(), near_linear_device(), 21);
    net.adc.mode = AdcMode::off;
    const Tensor input = random_input(22, {1, 4, 4});
    SampleTape te, tc;
    net.mode = ComputeMode::exact;
    const Tensor exact = forward_sample(net, input, te, ExecPolicy::serial);
    net.mode = ComputeMode::cim;
    const Tensor cim = forward_sample(net, input, tc, ExecPolicy::serial);
    REQUIRE(exact.size() == cim.size());
    for (std::size_t i = 0; i < exact.size(); ++i)
        CHECK(cim[i] == doctest::Approx(exact[i]).epsilon(1e-9));
}

TEST_CASE("backward gradients match finite differences in research mode") {
    NetState net = build_network(tiny_topology(), near_linear_device(), 31);
    net.quantize = false;
    net.mode = ComputeMode::exact;
    const Tensor input = random_input(32, {1, 4, 4});
    const int label = 2;

    SampleTape tape;
    const Tensor logits = forward_sample(net, input, tape, ExecPolicy::serial);
    Tensor grad_logits;
    softmax_xent(logits, label, grad_logits);
    const BackwardResult bw =
        backward_sample(net, tape, grad_logits, ExecPolicy::serial, rng::Key(33));

    const std::vector<int> widx = net.weight_layer_indices();
    REQUIRE(bw.grads.size() == widx.size());
    const double h = 1e-5;
    const rng::Key pick(34);
    for (std::size_t j = 0; j < widx.size(); ++j) {
        Tensor w = layer_weights(net, widx[j]);
        REQUIRE(bw.grads[j].size() == w.size());
        for (int s = 0; s < 12; ++s) {
            const std::size_t i = static_cast<std::size_t>(
                rng::below(pick.fork(j, static_cast<std::uint64_t>(s)), w.size()));
            const double w0 = w[i];
            w[i] = w0 + h;
            set_layer_weights(net, widx[j], w);
            const double lp = sample_loss(net, input, label);
            w[i] = w0 - h;
            set_layer_weights(net, widx[j], w);
            const double lm = sample_loss(net, input, label);
            w[i] = w0;
            set_layer_weights(net, widx[j], w);
            const double fd = (lp - lm) / (2.0 * h);
            CHECK(bw.grads[j][i] ==
                  doctest::Approx(fd).epsilon(1e-3).scale(std::max(1.0, std::abs(fd))));
        }
    }
}

TEST_CASE("an epoch of training lowers the loss and repeats bit-for-bit") {
    std::vector<Tensor> images;
    std::vector<int> labels;
    quadrant_dataset(96, 900, images, labels);

    auto fresh = [] { return build_network(tiny_topology(), near_linear_device(), 41); };
    NetState net = fresh();
    calibrate_scales(net, {images.begin(), images.begin() + 16},
                     {labels.begin(), labels.begin() + 16});
    const double before = evaluate_accuracy(net, images, labels, ExecPolicy::serial);

    TrainParams tp;
    tp.batch_size = 16;
    tp.lr = 0.1;
    std::vector<double> losses;
    for (int e = 1; e <= 4; ++e)
        losses.push_back(train_epoch(net, images, labels, tp, e, ExecPolicy::parallel).mean_loss);
    const double after = evaluate_accuracy(net, images, labels, ExecPolicy::serial);
    CHECK(losses.back() < losses.front());
    CHECK(after >= before);
    CHECK(after > 0.5);  // quadrant task is easy

    // identical seeds reproduce identical weights and losses
    NetState net2 = fresh();
    calibrate_scales(net2, {images.begin(), images.begin() + 16},
                     {labels.begin(), labels.begin() + 16});
    std::vector<double> losses2;
    for (int e = 1; e <= 4; ++e)
        losses2.push_back(train_epoch(net2, images, labels, tp, e, ExecPolicy::serial).mean_loss);
    for (std::size_t i = 0; i < losses.size(); ++i) CHECK(losses[i] == losses2[i]);
    for (int li : net.weight_layer_indices()) {
        const Tensor a = layer_weights(net, li);
        const Tensor b = layer_weights(net2, li);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }
}

TEST_CASE("the epoch trace snapshots the last iteration") {
    std::vector<Tensor> images;
    std::vector<int> labels;
    quadrant_dataset(32, 901, images, labels);
    NetState net = build_network(tiny_topology(), near_linear_device(), 51);
    calibrate_scales(net, images, labels);
    TrainParams tp;
    tp.batch_size = 16;
    const EpochTrace tr = train_epoch(net, images, labels, tp, 1, ExecPolicy::serial);
    CHECK(tr.epoch == 1);
    CHECK(tr.complete());
    REQUIRE(tr.layers.size() == net.weight_layer_indices().size());
    for (const LayerTrace& lt : tr.layers) {
        CHECK(lt.act_ones_fraction >= 0.0);
        CHECK(lt.act_ones_fraction <= 1.0);
        CHECK(lt.err_ones_fraction >= 0.0);
        CHECK(lt.err_ones_fraction <= 1.0);
        CHECK(lt.activation_elems > 0);
        CHECK(lt.mean_conductance > 0.0);
        REQUIRE(lt.delta_weights.size() == lt.old_weights.size());
        for (std::size_t i = 0; i < lt.delta_weights.size(); ++i)
            CHECK(lt.delta_weights[i] ==
                  doctest::Approx(lt.new_weights[i] - lt.old_weights[i]).epsilon(1e-12));
    }
    // the traced new weights are the live device weights
    for (std::size_t j = 0; j < tr.layers.size(); ++j) {
        const Tensor live = layer_weights(net, tr.layers[j].layer_index);
        for (std::size_t i = 0; i < live.size(); ++i)
            CHECK(tr.layers[j].new_weights[i] == doctest::Approx(live[i]).epsilon(1e-12));
    }
}

TEST_CASE("weights stay inside the device window under aggressive updates") {
    std::vector<Tensor> images;
    std::vector<int> labels;
    quadrant_dataset(64, 902, images, labels);
    NetState net = build_network(tiny_topology(), near_linear_device(), 61);
    calibrate_scales(net, images, labels);
    TrainParams tp;
    tp.batch_size = 16;
    tp.lr = 25.0;  // deliberately saturating
    for (int e = 1; e <= 3; ++e) train_epoch(net, images, labels, tp, e, ExecPolicy::serial);
    const QuantGrid grid = net.weight_grid();
    for (int li : net.weight_layer_indices()) {
        const Tensor w = layer_weights(net, li);
        for (std::size_t i = 0; i < w.size(); ++i)
            CHECK(std::abs(w[i]) <= grid.max_abs + 1e-9);
        for (const SynapticArrayState& a : net.layers[static_cast<std::size_t>(li)].arrays)
            for (int r = 0; r < a.rows; ++r)
                for (int c = 0; c < a.cols; ++c) {
                    CHECK(a.cell(r, c).conductance >= a.bounds.g_min - 1e-18);
                    CHECK(a.cell(r, c).conductance <= a.bounds.g_max + 1e-18);
                }
    }
}

TEST_CASE("untrained networks score near chance") {
    std::vector<Tensor> images;
    std::vector<int> labels;
    const rng::Key k(903);
    for (int s = 0; s < 200; ++s) {
        images.push_back(random_input(9000 + static_cast<std::uint64_t>(s), {1, 4, 4}));
        labels.push_back(static_cast<int>(rng::below(k.fork(static_cast<std::uint64_t>(s)), 4)));
    }
    NetState net = build_network(tiny_topology(), near_linear_device(), 71);
    const double acc = evaluate_accuracy(net, images, labels, ExecPolicy::parallel);
    CHECK(acc >= 0.05);
    CHECK(acc <= 0.6);
}

TEST_CASE("calibration pins power-of-two scales deterministically") {
    std::vector<Tensor> images;
    std::vector<int> labels;
    quadrant_dataset(16, 904, images, labels);
    NetState a = build_network(tiny_topology(), near_linear_device(), 81);
    NetState b = build_network(tiny_topology(), near_linear_device(), 81);
    calibrate_scales(a, images, labels);
    calibrate_scales(b, images, labels);
    CHECK(a.scales_calibrated);
    for (int li : a.weight_layer_indices()) {
        const LayerRuntime& ra = a.layers[static_cast<std::size_t>(li)];
        const LayerRuntime& rb = b.layers[static_cast<std::size_t>(li)];
        CHECK(ra.act_grid.max_abs == rb.act_grid.max_abs);
        CHECK(ra.err_grid.max_abs == rb.err_grid.max_abs);
        CHECK(ra.grad_grid.max_abs == rb.grad_grid.max_abs);
        for (double s : {ra.act_grid.max_abs, ra.err_grid.max_abs, ra.grad_grid.max_abs}) {
            CHECK(s > 0.0);
            const double l2 = std::log2(s);
            CHECK(l2 == doctest::Approx(std::round(l2)).epsilon(1e-12));
        }
    }
}
