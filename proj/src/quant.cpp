#include "cimtrain/quant.hpp"

#include <cmath>

namespace cimtrain {

namespace {

long long clamp_level(long long k, const QuantGrid& grid) {
    if (k < grid.level_min()) return grid.level_min();
    if (k > grid.level_max()) return grid.level_max();
    return k;
}

}  // namespace

double quantize_value(double v, const QuantGrid& grid, RoundMode mode, const rng::Key& key) {
    if (!grid.enabled) return v;
    const double step = grid.step();
    const double x = v / step;
    long long k;
    if (mode == RoundMode::nearest) {
        // Half-away-from-zero, symmetric for potentiation and depression.
        k = static_cast<long long>(x >= 0 ? std::floor(x + 0.5) : std::ceil(x - 0.5));
    } else {
        const double lo = std::floor(x);
        const double frac = x - lo;
        k = static_cast<long long>(lo) + (rng::uniform(key) < frac ? 1 : 0);
    }
    return static_cast<double>(clamp_level(k, grid)) * step;
}

long long quantize_level(double v, const QuantGrid& grid) {
    const double x = v / grid.step();
    const long long k =
        static_cast<long long>(x >= 0 ? std::floor(x + 0.5) : std::ceil(x - 0.5));
    return clamp_level(k, grid);
}

void quantize_tensor(Tensor& t, const QuantGrid& grid, RoundMode mode, const rng::Key& key) {
    if (!grid.enabled) return;
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = quantize_value(t[i], grid, mode, key.fork(i));
    }
}

double ones_fraction(const Tensor& t, const QuantGrid& grid) {
    if (t.empty()) return 0.0;
    std::size_t ones = 0;
    const int bits = grid.is_signed ? grid.bits - 1 : grid.bits;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const unsigned long long mag =
            static_cast<unsigned long long>(std::llabs(quantize_level(t[i], grid)));
        ones += static_cast<std::size_t>(__builtin_popcountll(mag));
    }
    return static_cast<double>(ones) / (static_cast<double>(t.size()) * bits);
}

double nonzero_fraction(const Tensor& t, const QuantGrid& grid) {
    if (t.empty()) return 0.0;
    std::size_t nz = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (quantize_level(t[i], grid) != 0) ++nz;
    }
    return static_cast<double>(nz) / static_cast<double>(t.size());
}

}  // namespace cimtrain
