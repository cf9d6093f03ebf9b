// Timing comparison of the serial reference kernels against the OpenMP
// variants. Both code paths are gather-form and bit-identical; this tool
// only reports wall-clock speedups on this machine.

#include <chrono>
#include <cstdio>
#include <functional>

#include <omp.h>

#include "cimtrain/kernels.hpp"
#include "cimtrain/rng.hpp"
#include "cimtrain/tensor.hpp"

using namespace cimtrain;

namespace {

Tensor random_tensor(const std::vector<int>& shape, std::uint64_t salt) {
    Tensor t(shape);
    const rng::Key key(0xbe9c);
    for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = rng::uniform(key.fork(salt, i)) - 0.5;
    return t;
}

double time_best_of(int reps, const std::function<void()>& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
}

void report(const char* name, double serial_s, double parallel_s) {
    std::printf("%-22s %10.3f ms %10.3f ms %8.2fx\n", name, serial_s * 1e3,
                parallel_s * 1e3, serial_s / parallel_s);
}

}  // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());
    std::printf("%-22s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

    const int d = 32, n = 64, hw = 32, k = 3;
    const Tensor input = random_tensor({d, hw, hw}, 1);
    const Tensor weights = random_tensor({k, k, d, n}, 2);
    Tensor out({n, hw, hw});
    Tensor grad_out = random_tensor({n, hw, hw}, 3);
    Tensor grad_in({d, hw, hw});
    Tensor grad_w({k, k, d, n});

    report("conv2d_forward",
           time_best_of(3, [&] { conv2d_forward(input, weights, 1, 1, out,
                                                ExecPolicy::serial); }),
           time_best_of(3, [&] { conv2d_forward(input, weights, 1, 1, out,
                                                ExecPolicy::parallel); }));
    report("conv2d_input_grad",
           time_best_of(3, [&] {
               conv2d_input_grad(grad_out, weights, 1, 1, hw, hw, grad_in,
                                 ExecPolicy::serial);
           }),
           time_best_of(3, [&] {
               conv2d_input_grad(grad_out, weights, 1, 1, hw, hw, grad_in,
                                 ExecPolicy::parallel);
           }));
    report("conv2d_weight_grad",
           time_best_of(3, [&] {
               conv2d_weight_grad(input, grad_out, k, 1, 1, grad_w, ExecPolicy::serial);
           }),
           time_best_of(3, [&] {
               conv2d_weight_grad(input, grad_out, k, 1, 1, grad_w, ExecPolicy::parallel);
           }));

    const int fin = 4096, fout = 1024;
    const Tensor fx = random_tensor({fin}, 4);
    const Tensor fw = random_tensor({fin, fout}, 5);
    Tensor fy({fout});
    report("fc_forward",
           time_best_of(5, [&] { fc_forward(fx, fw, fy, ExecPolicy::serial); }),
           time_best_of(5, [&] { fc_forward(fx, fw, fy, ExecPolicy::parallel); }));
    return 0;
}
