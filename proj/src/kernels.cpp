#include "cimtrain/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "cimtrain/errors.hpp"

namespace cimtrain {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw TopologyError(what);
}

}  // namespace

void conv2d_forward(const Tensor& input, const Tensor& weights, int stride, int pad,
                    Tensor& output, ExecPolicy policy) {
    require(input.shape().size() == 3, "conv input must be {D,H,W}");
    require(weights.shape().size() == 4, "conv weights must be {K,K,D,N}");
    const int d = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int k = weights.dim(0), n = weights.dim(3);
    require(weights.dim(1) == k && weights.dim(2) == d, "conv weight shape mismatch");
    const int ho = (h + 2 * pad - k) / stride + 1;
    const int wo = (w + 2 * pad - k) / stride + 1;
    require(ho >= 1 && wo >= 1, "conv output collapses to zero size");
    output.reshape({n, ho, wo});

    const bool par = policy == ExecPolicy::parallel;
#pragma omp parallel for collapse(2) if (par)
    for (int oc = 0; oc < n; ++oc) {
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
                double acc = 0.0;
                for (int ky = 0; ky < k; ++ky) {
                    const int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < k; ++kx) {
                        const int ix = ox * stride + kx - pad;
                        if (ix < 0 || ix >= w) continue;
                        for (int ic = 0; ic < d; ++ic)
                            acc += input.at3(ic, iy, ix) * weights.at4(ky, kx, ic, oc);
                    }
                }
                output.at3(oc, oy, ox) = acc;
            }
        }
    }
}

void conv2d_input_grad(const Tensor& grad_out, const Tensor& weights, int stride, int pad,
                       int in_h, int in_w, Tensor& grad_in, ExecPolicy policy) {
    require(grad_out.shape().size() == 3, "conv grad_out must be {N,Ho,Wo}");
    require(weights.shape().size() == 4, "conv weights must be {K,K,D,N}");
    const int n = grad_out.dim(0), ho = grad_out.dim(1), wo = grad_out.dim(2);
    const int k = weights.dim(0), d = weights.dim(2);
    require(weights.dim(3) == n, "conv weight/out channel mismatch");
    grad_in.reshape({d, in_h, in_w});

    const bool par = policy == ExecPolicy::parallel;
#pragma omp parallel for collapse(2) if (par)
    for (int ic = 0; ic < d; ++ic) {
        for (int iy = 0; iy < in_h; ++iy) {
            for (int ix = 0; ix < in_w; ++ix) {
                double acc = 0.0;
                for (int ky = 0; ky < k; ++ky) {
                    const int num_y = iy + pad - ky;
                    if (num_y < 0 || num_y % stride != 0) continue;
                    const int oy = num_y / stride;
                    if (oy >= ho) continue;
                    for (int kx = 0; kx < k; ++kx) {
                        const int num_x = ix + pad - kx;
                        if (num_x < 0 || num_x % stride != 0) continue;
                        const int ox = num_x / stride;
                        if (ox >= wo) continue;
                        for (int oc = 0; oc < n; ++oc)
                            acc += grad_out.at3(oc, oy, ox) * weights.at4(ky, kx, ic, oc);
                    }
                }
                grad_in.at3(ic, iy, ix) = acc;
            }
        }
    }
}

void conv2d_weight_grad(const Tensor& input, const Tensor& grad_out, int k, int stride,
                        int pad, Tensor& grad_w, ExecPolicy policy) {
    require(input.shape().size() == 3 && grad_out.shape().size() == 3,
            "conv weight-grad operands must be 3-d");
    const int d = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int n = grad_out.dim(0), ho = grad_out.dim(1), wo = grad_out.dim(2);
    grad_w.reshape({k, k, d, n});

    const bool par = policy == ExecPolicy::parallel;
#pragma omp parallel for collapse(2) if (par)
    for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
            for (int ic = 0; ic < d; ++ic) {
                for (int oc = 0; oc < n; ++oc) {
                    double acc = 0.0;
                    for (int oy = 0; oy < ho; ++oy) {
                        const int iy = oy * stride + ky - pad;
                        if (iy < 0 || iy >= h) continue;
                        for (int ox = 0; ox < wo; ++ox) {
                            const int ix = ox * stride + kx - pad;
                            if (ix < 0 || ix >= w) continue;
                            acc += input.at3(ic, iy, ix) * grad_out.at3(oc, oy, ox);
                        }
                    }
                    grad_w.at4(ky, kx, ic, oc) = acc;
                }
            }
        }
    }
}

void fc_forward(const Tensor& input, const Tensor& weights, Tensor& output,
                ExecPolicy policy) {
    require(weights.shape().size() == 2, "fc weights must be {in,out}");
    const int in = weights.dim(0), out = weights.dim(1);
    require(static_cast<int>(input.size()) == in, "fc input size mismatch");
    output.reshape({out});

    const bool par = policy == ExecPolicy::parallel;
#pragma omp parallel for if (par)
    for (int j = 0; j < out; ++j) {
        double acc = 0.0;
        for (int i = 0; i < in; ++i) acc += input[i] * weights.at2(i, j);
        output[static_cast<std::size_t>(j)] = acc;
    }
}

void fc_input_grad(const Tensor& grad_out, const Tensor& weights, Tensor& grad_in,
                   ExecPolicy policy) {
    require(weights.shape().size() == 2, "fc weights must be {in,out}");
    const int in = weights.dim(0), out = weights.dim(1);
    require(static_cast<int>(grad_out.size()) == out, "fc grad size mismatch");
    grad_in.reshape({in});

    const bool par = policy == ExecPolicy::parallel;
#pragma omp parallel for if (par)
    for (int i = 0; i < in; ++i) {
        double acc = 0.0;
        for (int j = 0; j < out; ++j) acc += weights.at2(i, j) * grad_out[static_cast<std::size_t>(j)];
        grad_in[static_cast<std::size_t>(i)] = acc;
    }
}

void fc_weight_grad(const Tensor& input, const Tensor& grad_out, Tensor& grad_w,
                    ExecPolicy policy) {
    const int in = static_cast<int>(input.size());
    const int out = static_cast<int>(grad_out.size());
    grad_w.reshape({in, out});

    const bool par = policy == ExecPolicy::parallel;
#pragma omp parallel for if (par)
    for (int i = 0; i < in; ++i)
        for (int j = 0; j < out; ++j)
            grad_w.at2(i, j) = input[static_cast<std::size_t>(i)] * grad_out[static_cast<std::size_t>(j)];
}

void maxpool2x2_forward(const Tensor& input, Tensor& output, std::vector<int>& indices,
                        ExecPolicy policy) {
    require(input.shape().size() == 3, "pool input must be {C,H,W}");
    const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
    require(h % 2 == 0 && w % 2 == 0, "pool input sides must be even");
    const int ho = h / 2, wo = w / 2;
    output.reshape({c, ho, wo});
    indices.assign(output.size(), 0);

    const bool par = policy == ExecPolicy::parallel;
#pragma omp parallel for if (par)
    for (int ic = 0; ic < c; ++ic) {
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
                int best = (ic * h + oy * 2) * w + ox * 2;
                double best_v = input[static_cast<std::size_t>(best)];
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const int idx = (ic * h + oy * 2 + dy) * w + ox * 2 + dx;
                        if (input[static_cast<std::size_t>(idx)] > best_v) {  // first-wins on ties
                            best_v = input[static_cast<std::size_t>(idx)];
                            best = idx;
                        }
                    }
                }
                const std::size_t oidx = (static_cast<std::size_t>(ic) * ho + oy) * wo + ox;
                output[oidx] = best_v;
                indices[oidx] = best;
            }
        }
    }
}

void maxpool2x2_backward(const Tensor& grad_out, const std::vector<int>& indices,
                         const std::vector<int>& in_shape, Tensor& grad_in) {
    grad_in.reshape(in_shape);
    grad_in.fill(0.0);
    for (std::size_t i = 0; i < grad_out.size(); ++i)
        grad_in[static_cast<std::size_t>(indices[i])] += grad_out[i];
}

void relu_forward(const Tensor& input, Tensor& output, ExecPolicy policy) {
    output.reshape(input.shape());
    const std::int64_t n = static_cast<std::int64_t>(input.size());
    const bool par = policy == ExecPolicy::parallel;
#pragma omp parallel for if (par)
    for (std::int64_t i = 0; i < n; ++i) {
        const std::size_t u = static_cast<std::size_t>(i);
        output[u] = input[u] > 0 ? input[u] : 0.0;
    }
}

void relu_backward(const Tensor& grad_out, const Tensor& forward_input, Tensor& grad_in,
                   ExecPolicy policy) {
    grad_in.reshape(forward_input.shape());
    const std::int64_t n = static_cast<std::int64_t>(grad_in.size());
    const bool par = policy == ExecPolicy::parallel;
#pragma omp parallel for if (par)
    for (std::int64_t i = 0; i < n; ++i) {
        const std::size_t u = static_cast<std::size_t>(i);
        grad_in[u] = forward_input[u] > 0 ? grad_out[u] : 0.0;
    }
}

double softmax_xent(const Tensor& logits, int label, Tensor& grad_logits) {
    const int n = static_cast<int>(logits.size());
    if (label < 0 || label >= n) throw TopologyError("label outside logit range");
    double mx = logits[0];
    for (std::size_t i = 0; i < logits.size(); ++i) mx = std::max(mx, logits[i]);
    double z = 0.0;
    grad_logits.reshape(logits.shape());
    for (int i = 0; i < n; ++i) {
        const std::size_t u = static_cast<std::size_t>(i);
        grad_logits[u] = std::exp(logits[u] - mx);
        z += grad_logits[u];
    }
    for (int i = 0; i < n; ++i) grad_logits[static_cast<std::size_t>(i)] /= z;
    const double loss = -std::log(std::max(grad_logits[static_cast<std::size_t>(label)], 1e-300));
    grad_logits[static_cast<std::size_t>(label)] -= 1.0;
    return loss;
}

}  // namespace cimtrain
