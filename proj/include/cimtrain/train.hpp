#pragma once

#include "cimtrain/net.hpp"
#include "cimtrain/trace.hpp"

namespace cimtrain {

struct TrainParams {
    int batch_size = 32;
    double lr = 0.1;
    double beta = 0.9;          // momentum coefficient
    bool use_momentum = true;   // false runs plain SGD (beta treated as 0)
};

// v' = beta*v + (1-beta)*g; delta_w = lr*v'. The caller chooses the sign
// convention of g; the training loop feeds the descent direction.
void momentum_update(Tensor& v, const Tensor& g, double beta, double lr, Tensor& delta_w);

// One epoch of the four-step schedule: per batch, forward (#1) and error
// (#2) and per-sample weight gradients (#3) over batch_size samples, then a
// single device update (#4) from the batch-accumulated gradient. Returns the
// last-iteration trace. Trailing samples that do not fill a batch are
// dropped. Per-sample work may run concurrently; the gradient reduction is
// fixed-order, so results are independent of thread count.
EpochTrace train_epoch(NetState& net, const std::vector<Tensor>& images,
                       const std::vector<int>& labels, const TrainParams& params, int epoch,
                       ExecPolicy policy);

}  // namespace cimtrain
