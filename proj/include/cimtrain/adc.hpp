#pragma once

#include <cstdint>
#include <vector>

namespace cimtrain {

// Column-sum quantizer. `off` passes analog values through unchanged (used by
// the exact-arithmetic oracle path). `linear` places 2^bits levels uniformly
// over a calibrated range; `quantile` places them at equal-probability points
// of a calibration sample, which concentrates resolution where partial sums
// actually land. When the calibration sample contains <= 2^bits distinct
// values the quantile table stores them verbatim and conversion is lossless.
enum class AdcMode { off, linear, quantile };

struct AdcModel {
    AdcMode mode = AdcMode::off;
    int bits = 6;
    std::vector<double> levels;  // sorted, non-empty once calibrated

    bool active() const { return mode != AdcMode::off; }
    bool calibrated() const { return !active() || !levels.empty(); }

    void calibrate_linear(double lo, double hi);
    void calibrate_quantile(std::vector<double> samples);

    // Nearest calibrated level; exact midpoints resolve to the lower level.
    double convert(double x) const;
};

}  // namespace cimtrain
