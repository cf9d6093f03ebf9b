#pragma once

#include "cimtrain/rng.hpp"
#include "cimtrain/tensor.hpp"

namespace cimtrain {

enum class RoundMode { nearest, stochastic };

// Uniform fixed-point grid. Unsigned grids place 2^bits levels on [0, max_abs]
// with both endpoints representable. Signed grids are symmetric around zero
// and drop the most-negative code, giving 2^bits - 1 levels on [-max_abs, max_abs];
// zero and both endpoints land exactly on the grid.
struct QuantGrid {
    int bits = 8;
    double max_abs = 1.0;
    bool is_signed = true;
    bool enabled = true;

    double step() const {
        if (!is_signed) return max_abs / static_cast<double>((1LL << bits) - 1);
        return max_abs / static_cast<double>((1LL << (bits - 1)) - 1);
    }
    long long level_min() const { return is_signed ? -((1LL << (bits - 1)) - 1) : 0; }
    long long level_max() const {
        return is_signed ? ((1LL << (bits - 1)) - 1) : ((1LL << bits) - 1);
    }
};

// Snap one value to the grid. Stochastic mode rounds up with probability equal
// to the fractional position, so the expected value equals the (clipped) input.
double quantize_value(double v, const QuantGrid& grid, RoundMode mode, const rng::Key& key);

inline double quantize_value(double v, const QuantGrid& grid) {
    return quantize_value(v, grid, RoundMode::nearest, rng::Key(0));
}

// Integer level index of an already-quantized (or arbitrary) value.
long long quantize_level(double v, const QuantGrid& grid);

void quantize_tensor(Tensor& t, const QuantGrid& grid, RoundMode mode, const rng::Key& key);

inline void quantize_tensor(Tensor& t, const QuantGrid& grid) {
    quantize_tensor(t, grid, RoundMode::nearest, rng::Key(0));
}

// Fraction of one-bits in the unsigned binary expansion of the magnitude
// levels of a quantized tensor. This is the row-activity proxy used by the
// pseudo-traced hardware estimation.
double ones_fraction(const Tensor& t, const QuantGrid& grid);

// Fraction of elements with a nonzero level; used for MAC/ops accounting.
double nonzero_fraction(const Tensor& t, const QuantGrid& grid);

}  // namespace cimtrain
