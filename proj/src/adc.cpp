#include "cimtrain/adc.hpp"

#include <algorithm>
#include <stdexcept>

#include "cimtrain/errors.hpp"

namespace cimtrain {

void AdcModel::calibrate_linear(double lo, double hi) {
    if (bits < 1 || bits > 16) throw ConfigError("adc_bits", "must be in [1, 16]");
    if (!(hi > lo)) throw std::invalid_argument("adc calibration range is empty");
    const int n = 1 << bits;
    levels.assign(n, 0.0);
    for (int i = 0; i < n; ++i)
        levels[i] = lo + (hi - lo) * i / (n - 1);
}

void AdcModel::calibrate_quantile(std::vector<double> samples) {
    if (bits < 1 || bits > 16) throw ConfigError("adc_bits", "must be in [1, 16]");
    if (samples.empty()) throw std::invalid_argument("adc calibration sample is empty");
    std::sort(samples.begin(), samples.end());
    std::vector<double> distinct;
    distinct.push_back(samples.front());
    for (double v : samples)
        if (v != distinct.back()) distinct.push_back(v);

    const std::size_t n = std::size_t{1} << bits;
    if (distinct.size() <= n) {
        levels = std::move(distinct);  // small alphabet: represent it exactly
        return;
    }
    levels.clear();
    levels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        // mid-quantile positions so both tails are represented
        const std::size_t idx =
            static_cast<std::size_t>((i + 0.5) * static_cast<double>(samples.size()) /
                                     static_cast<double>(n));
        double v = samples[std::min(idx, samples.size() - 1)];
        if (levels.empty() || v != levels.back()) levels.push_back(v);
    }
}

double AdcModel::convert(double x) const {
    if (!active()) return x;
    if (levels.empty()) throw StateError("adc used before calibration");
    auto it = std::lower_bound(levels.begin(), levels.end(), x);
    if (it == levels.begin()) return *it;
    if (it == levels.end()) return levels.back();
    const double hi = *it, lo = *(it - 1);
    return (x - lo) <= (hi - x) ? lo : hi;
}

}  // namespace cimtrain
