#pragma once

#include "cimtrain/tensor.hpp"

namespace cimtrain {

// Every kernel has a serial reference implementation and an OpenMP variant.
// The parallel forms are pure gathers — each output element is produced by
// exactly one thread with the same inner summation order as the serial code —
// so the two policies are bit-identical, which the test suite asserts.
enum class ExecPolicy { serial, parallel };

// input {D,H,W}, weights {K,K,D,N}, output {N,Ho,Wo}
void conv2d_forward(const Tensor& input, const Tensor& weights, int stride, int pad,
                    Tensor& output, ExecPolicy policy);

// grad wrt input, gather form: for each input element, sum over the output
// positions whose receptive field covers it.
void conv2d_input_grad(const Tensor& grad_out, const Tensor& weights, int stride, int pad,
                       int in_h, int in_w, Tensor& grad_in, ExecPolicy policy);

// grad wrt weights {K,K,D,N}
void conv2d_weight_grad(const Tensor& input, const Tensor& grad_out, int k, int stride,
                        int pad, Tensor& grad_w, ExecPolicy policy);

// weights {in,out}; out_j = sum_i in_i * W[i,j]
void fc_forward(const Tensor& input, const Tensor& weights, Tensor& output,
                ExecPolicy policy);
void fc_input_grad(const Tensor& grad_out, const Tensor& weights, Tensor& grad_in,
                   ExecPolicy policy);
void fc_weight_grad(const Tensor& input, const Tensor& grad_out, Tensor& grad_w,
                    ExecPolicy policy);

// 2x2/stride-2 max pooling; indices stores the flat argmax per output element
// so the backward pass can scatter exactly.
void maxpool2x2_forward(const Tensor& input, Tensor& output, std::vector<int>& indices,
                        ExecPolicy policy);
void maxpool2x2_backward(const Tensor& grad_out, const std::vector<int>& indices,
                         const std::vector<int>& in_shape, Tensor& grad_in);

void relu_forward(const Tensor& input, Tensor& output, ExecPolicy policy);
void relu_backward(const Tensor& grad_out, const Tensor& forward_input, Tensor& grad_in,
                   ExecPolicy policy);

// softmax + cross-entropy on logits; returns loss, fills grad wrt logits
double softmax_xent(const Tensor& logits, int label, Tensor& grad_logits);

}  // namespace cimtrain
