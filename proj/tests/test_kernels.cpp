#include <doctest.h>

#include <cmath>
#include <vector>

#include "cimtrain/kernels.hpp"
#include "cimtrain/rng.hpp"

using namespace cimtrain;

namespace {

Tensor random_tensor(std::vector<int> shape, std::uint64_t seed, double scale = 1.0) {
    Tensor t(std::move(shape));
    const rng::Key k(seed);
    for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = scale * (2.0 * rng::uniform(k.fork(i)) - 1.0);
    return t;
}

// Straight-line convolution written independently of the library kernels.
Tensor naive_conv(const Tensor& in, const Tensor& w, int stride, int pad) {
    const int D = in.dim(0), H = in.dim(1), W = in.dim(2);
    const int K = w.dim(0), N = w.dim(3);
    const int Ho = (H + 2 * pad - K) / stride + 1;
    const int Wo = (W + 2 * pad - K) / stride + 1;
    Tensor out({N, Ho, Wo});
    for (int n = 0; n < N; ++n)
        for (int oy = 0; oy < Ho; ++oy)
            for (int ox = 0; ox < Wo; ++ox) {
                double s = 0.0;
                for (int ky = 0; ky < K; ++ky)
                    for (int kx = 0; kx < K; ++kx)
                        for (int d = 0; d < D; ++d) {
                            const int iy = oy * stride + ky - pad;
                            const int ix = ox * stride + kx - pad;
                            if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                            s += in.at3(d, iy, ix) * w.at4(ky, kx, d, n);
                        }
                out.at3(n, oy, ox) = s;
            }
    return out;
}

double dot(const Tensor& a, const Tensor& b) {
    REQUIRE(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

TEST_CASE("1x1 convolution is a per-pixel scale") {
    Tensor in({1, 2, 2});
    in.at3(0, 0, 0) = 1;
    in.at3(0, 0, 1) = 2;
    in.at3(0, 1, 0) = 3;
    in.at3(0, 1, 1) = 4;
    Tensor w({1, 1, 1, 1});
    w.at4(0, 0, 0, 0) = 2.0;
    Tensor out;
    out.reshape({1, 2, 2});
    conv2d_forward(in, w, 1, 0, out, ExecPolicy::serial);
    CHECK(out.at3(0, 0, 0) == 2);
    CHECK(out.at3(0, 0, 1) == 4);
    CHECK(out.at3(0, 1, 0) == 6);
    CHECK(out.at3(0, 1, 1) == 8);
}

TEST_CASE("center-tap 3x3 kernel with padding reproduces the input") {
    Tensor in = random_tensor({2, 4, 4}, 5);
    Tensor w({3, 3, 2, 2});
    w.at4(1, 1, 0, 0) = 1.0;
    w.at4(1, 1, 1, 1) = 1.0;
    Tensor out;
    out.reshape({2, 4, 4});
    conv2d_forward(in, w, 1, 1, out, ExecPolicy::serial);
    for (std::size_t i = 0; i < in.size(); ++i)
        CHECK(out[i] == doctest::Approx(in[i]).epsilon(1e-15));
}

TEST_CASE("convolution matches a straight-line reference on random instances") {
    struct Case {
        int d, h, w, k, n, stride, pad;
    };
    const Case cases[] = {
        {1, 5, 5, 3, 2, 1, 1}, {3, 6, 6, 3, 4, 1, 0}, {2, 7, 5, 3, 3, 2, 1},
        {4, 4, 4, 1, 5, 1, 0}, {2, 8, 8, 5, 2, 1, 2},
    };
    int id = 0;
    for (const Case& c : cases) {
        const Tensor in = random_tensor({c.d, c.h, c.w}, 100 + id);
        const Tensor w = random_tensor({c.k, c.k, c.d, c.n}, 200 + id);
        const Tensor want = naive_conv(in, w, c.stride, c.pad);
        Tensor got;
        got.reshape(want.shape());
        conv2d_forward(in, w, c.stride, c.pad, got, ExecPolicy::serial);
        for (std::size_t i = 0; i < want.size(); ++i)
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
        ++id;
    }
}

TEST_CASE("fully-connected forward on a hand example") {
    Tensor in({2});
    in[0] = 1;
    in[1] = 2;
    Tensor w({2, 2});
    w.at2(0, 0) = 1;
    w.at2(0, 1) = 2;
    w.at2(1, 0) = 3;
    w.at2(1, 1) = 4;
    Tensor out;
    fc_forward(in, w, out, ExecPolicy::serial);
    REQUIRE(out.size() == 2);
    CHECK(out[0] == 7);
    CHECK(out[1] == 10);
}

TEST_CASE("input gradients satisfy the adjoint identity") {
    // <conv(x), g> == <x, conv_input_grad(g)> for every linear map
    const Tensor x = random_tensor({3, 6, 6}, 7);
    const Tensor w = random_tensor({3, 3, 3, 4}, 8);
    Tensor y;
    y.reshape({4, 6, 6});
    conv2d_forward(x, w, 1, 1, y, ExecPolicy::serial);
    const Tensor g = random_tensor({4, 6, 6}, 9);
    Tensor gx;
    gx.reshape({3, 6, 6});
    conv2d_input_grad(g, w, 1, 1, 6, 6, gx, ExecPolicy::serial);
    CHECK(dot(y, g) == doctest::Approx(dot(x, gx)).epsilon(1e-10));

    const Tensor xf = random_tensor({10}, 17);
    const Tensor wf = random_tensor({10, 6}, 18);
    Tensor yf;
    fc_forward(xf, wf, yf, ExecPolicy::serial);
    const Tensor gf = random_tensor({6}, 19);
    Tensor gxf;
    fc_input_grad(gf, wf, gxf, ExecPolicy::serial);
    CHECK(dot(yf, gf) == doctest::Approx(dot(xf, gxf)).epsilon(1e-10));
}

TEST_CASE("weight gradients satisfy the bilinearity identity") {
    // <conv(x; w), g> == <w, weight_grad(x, g)>
    const Tensor x = random_tensor({2, 5, 5}, 21);
    const Tensor w = random_tensor({3, 3, 2, 3}, 22);
    Tensor y;
    y.reshape({3, 5, 5});
    conv2d_forward(x, w, 1, 1, y, ExecPolicy::serial);
    const Tensor g = random_tensor({3, 5, 5}, 23);
    Tensor gw;
    conv2d_weight_grad(x, g, 3, 1, 1, gw, ExecPolicy::serial);
    REQUIRE(gw.size() == w.size());
    CHECK(dot(y, g) == doctest::Approx(dot(w, gw)).epsilon(1e-10));

    const Tensor xf = random_tensor({7}, 24);
    const Tensor wf = random_tensor({7, 4}, 25);
    Tensor yf;
    fc_forward(xf, wf, yf, ExecPolicy::serial);
    const Tensor gf = random_tensor({4}, 26);
    Tensor gwf;
    fc_weight_grad(xf, gf, gwf, ExecPolicy::serial);
    CHECK(dot(yf, gf) == doctest::Approx(dot(wf, gwf)).epsilon(1e-10));
}

TEST_CASE("max pooling keeps the argmax and routes gradients to it") {
    Tensor in({1, 2, 4});
    const double vals[8] = {1, 5, 2, 3, 4, 0, 9, 8};
    for (int i = 0; i < 8; ++i) in[static_cast<std::size_t>(i)] = vals[i];
    Tensor out;
    std::vector<int> idx;
    maxpool2x2_forward(in, out, idx, ExecPolicy::serial);
    REQUIRE(out.size() == 2);
    CHECK(out.at3(0, 0, 0) == 5);
    CHECK(out.at3(0, 0, 1) == 9);

    Tensor g({1, 1, 2});
    g[0] = 0.5;
    g[1] = -2.0;
    Tensor gin;
    maxpool2x2_backward(g, idx, {1, 2, 4}, gin);
    REQUIRE(gin.size() == 8);
    for (int i = 0; i < 8; ++i) {
        if (i == 1)
            CHECK(gin[static_cast<std::size_t>(i)] == 0.5);
        else if (i == 6)
            CHECK(gin[static_cast<std::size_t>(i)] == -2.0);
        else
            CHECK(gin[static_cast<std::size_t>(i)] == 0.0);
    }
}

TEST_CASE("relu clamps forward and masks backward") {
    Tensor in({4});
    in[0] = -1;
    in[1] = 0;
    in[2] = 2;
    in[3] = -0.5;
    Tensor out;
    relu_forward(in, out, ExecPolicy::serial);
    CHECK(out[0] == 0);
    CHECK(out[1] == 0);
    CHECK(out[2] == 2);
    CHECK(out[3] == 0);
    Tensor g({4});
    g.fill(1.0);
    Tensor gin;
    relu_backward(g, in, gin, ExecPolicy::serial);
    CHECK(gin[0] == 0);
    CHECK(gin[1] == 0);
    CHECK(gin[2] == 1);
    CHECK(gin[3] == 0);
}

TEST_CASE("softmax cross-entropy on symmetric logits") {
    Tensor logits({2});
    Tensor g;
    const double loss = softmax_xent(logits, 0, g);
    CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(g[0] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("softmax cross-entropy gradient matches finite differences") {
    Tensor logits = random_tensor({5}, 31, 2.0);
    Tensor g;
    softmax_xent(logits, 2, g);
    const double h = 1e-6;
    for (int i = 0; i < 5; ++i) {
        Tensor up = logits, dn = logits;
        up[static_cast<std::size_t>(i)] += h;
        dn[static_cast<std::size_t>(i)] -= h;
        Tensor tmp;
        const double fd = (softmax_xent(up, 2, tmp) - softmax_xent(dn, 2, tmp)) / (2 * h);
        CHECK(g[static_cast<std::size_t>(i)] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("serial and parallel execution are bit-identical") {
    const Tensor in = random_tensor({3, 9, 9}, 41);
    const Tensor w = random_tensor({3, 3, 3, 5}, 42);
    Tensor a, b;
    a.reshape({5, 9, 9});
    b.reshape({5, 9, 9});
    conv2d_forward(in, w, 1, 1, a, ExecPolicy::serial);
    conv2d_forward(in, w, 1, 1, b, ExecPolicy::parallel);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

    const Tensor g = random_tensor({5, 9, 9}, 43);
    Tensor ga, gb;
    ga.reshape({3, 9, 9});
    gb.reshape({3, 9, 9});
    conv2d_input_grad(g, w, 1, 1, 9, 9, ga, ExecPolicy::serial);
    conv2d_input_grad(g, w, 1, 1, 9, 9, gb, ExecPolicy::parallel);
    for (std::size_t i = 0; i < ga.size(); ++i) CHECK(ga[i] == gb[i]);

    Tensor wa, wb;
    conv2d_weight_grad(in, g, 3, 1, 1, wa, ExecPolicy::serial);
    conv2d_weight_grad(in, g, 3, 1, 1, wb, ExecPolicy::parallel);
    for (std::size_t i = 0; i < wa.size(); ++i) CHECK(wa[i] == wb[i]);

    const Tensor xf = random_tensor({257}, 44);
    const Tensor wf = random_tensor({257, 33}, 45);
    Tensor ya, yb;
    fc_forward(xf, wf, ya, ExecPolicy::serial);
    fc_forward(xf, wf, yb, ExecPolicy::parallel);
    for (std::size_t i = 0; i < ya.size(); ++i) CHECK(ya[i] == yb[i]);
}
