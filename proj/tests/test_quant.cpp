#include <doctest.h>

#include <cmath>

#include "cimtrain/quant.hpp"

using namespace cimtrain;

TEST_CASE("signed grid geometry: symmetric, zero representable") {
    QuantGrid g;
    g.bits = 5;
    g.max_abs = 1.0;
    g.is_signed = true;
    CHECK(g.level_min() == -15);
    CHECK(g.level_max() == 15);
    CHECK(g.step() == doctest::Approx(1.0 / 15.0).epsilon(1e-15));
    // 2^bits - 1 levels, both endpoints and zero exactly on the grid
    CHECK(quantize_value(1.0, g) == 1.0);
    CHECK(quantize_value(-1.0, g) == -1.0);
    CHECK(quantize_value(0.0, g) == 0.0);
}

TEST_CASE("unsigned grid geometry") {
    QuantGrid g;
    g.bits = 3;
    g.max_abs = 7.0;
    g.is_signed = false;
    CHECK(g.level_min() == 0);
    CHECK(g.level_max() == 7);
    CHECK(g.step() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(quantize_value(-2.5, g) == 0.0);  // clips at zero
    CHECK(quantize_value(9.0, g) == 7.0);   // clips at full scale
}

TEST_CASE("nearest rounding, half away from zero") {
    QuantGrid g;
    g.bits = 8;
    g.max_abs = 2.54;  // step = 0.02
    g.is_signed = true;
    CHECK(g.step() == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(quantize_value(0.26, g) == doctest::Approx(0.26).epsilon(1e-12));
    CHECK(quantize_value(0.013, g) == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(quantize_value(0.009, g) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(quantize_value(0.03, g) == doctest::Approx(0.04).epsilon(1e-12));    // tie: away
    CHECK(quantize_value(-0.03, g) == doctest::Approx(-0.04).epsilon(1e-12));  // symmetric
}

TEST_CASE("nearest quantization is idempotent") {
    QuantGrid g;
    g.bits = 6;
    g.max_abs = 1.0;
    g.is_signed = true;
    const rng::Key k(77);
    for (std::uint64_t i = 0; i < 2000; ++i) {
        const double v = 3.0 * (rng::uniform(k.fork(i)) - 0.5);
        const double q = quantize_value(v, g);
        CHECK(quantize_value(q, g) == q);
    }
}

TEST_CASE("disabled grid passes values through") {
    QuantGrid g;
    g.enabled = false;
    CHECK(quantize_value(0.123456, g) == 0.123456);
    Tensor t({2});
    t[0] = 0.777;
    t[1] = -1.9;
    quantize_tensor(t, g);
    CHECK(t[0] == 0.777);
    CHECK(t[1] == -1.9);
}

TEST_CASE("stochastic rounding lands on the two neighbors and is unbiased") {
    QuantGrid g;
    g.bits = 8;
    g.max_abs = 2.54;  // step = 0.02
    g.is_signed = true;
    const double v = 0.013;
    const rng::Key k(2468);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double q =
            quantize_value(v, g, RoundMode::stochastic, k.fork(static_cast<std::uint64_t>(i)));
        const bool neighbor = std::abs(q) < 1e-15 || std::abs(q - 0.02) < 1e-12;
        REQUIRE(neighbor);
        sum += q;
    }
    // expected value equals the input to better than 1%
    CHECK(std::abs(sum / n - v) < 0.01 * v);
}

TEST_CASE("stochastic rounding of an on-grid value is exact") {
    QuantGrid g;
    g.bits = 8;
    g.max_abs = 2.54;
    g.is_signed = true;
    const rng::Key k(13);
    for (std::uint64_t i = 0; i < 100; ++i)
        CHECK(quantize_value(0.26, g, RoundMode::stochastic, k.fork(i)) ==
              doctest::Approx(0.26).epsilon(1e-12));
}

TEST_CASE("bit-level ones fraction on an unsigned grid") {
    QuantGrid g;
    g.bits = 2;
    g.max_abs = 3.0;  // step 1: levels 0..3
    g.is_signed = false;
    Tensor t({4});
    t[0] = 0;  // 00
    t[1] = 1;  // 01
    t[2] = 2;  // 10
    t[3] = 3;  // 11
    CHECK(ones_fraction(t, g) == doctest::Approx(4.0 / 8.0).epsilon(1e-15));
}

TEST_CASE("ones fraction of a signed grid counts magnitude bits") {
    QuantGrid g;
    g.bits = 3;
    g.max_abs = 3.0;  // step 1: levels -3..3, 2 magnitude bits
    g.is_signed = true;
    Tensor t({2});
    t[0] = -3;  // magnitude 11
    t[1] = 1;   // magnitude 01
    CHECK(ones_fraction(t, g) == doctest::Approx(3.0 / 4.0).epsilon(1e-15));
}

TEST_CASE("ones fraction endpoints") {
    QuantGrid g;
    g.bits = 4;
    g.max_abs = 1.0;
    g.is_signed = false;
    Tensor zeros({16});
    CHECK(ones_fraction(zeros, g) == 0.0);
    Tensor full = Tensor::full({16}, 1.0);  // every element at the all-ones code
    CHECK(ones_fraction(full, g) == 1.0);
}

TEST_CASE("nonzero fraction counts nonzero levels") {
    QuantGrid g;
    g.bits = 4;
    g.max_abs = 1.0;
    g.is_signed = true;
    Tensor t({4});
    t[0] = 0.0;
    t[1] = 0.5;
    t[2] = 0.0;
    t[3] = -1.0;
    CHECK(nonzero_fraction(t, g) == doctest::Approx(0.5).epsilon(1e-15));
    // values rounding to level zero count as zero
    t[1] = 1e-9;
    CHECK(nonzero_fraction(t, g) == doctest::Approx(0.25).epsilon(1e-15));
}
