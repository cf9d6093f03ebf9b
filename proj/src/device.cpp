#include "cimtrain/device.hpp"

#include <cmath>
#include <stdexcept>

namespace cimtrain {

namespace {

constexpr double kLabelScale = 9.0;   // label at the step-function limit
constexpr double kLabelMin = 0.01;
constexpr double kLabelMax = 8.99;

constexpr std::uint64_t kD2dStream = 0x6432640a;  // "d2d"

double sign_of(double x) { return x < 0 ? -1.0 : 1.0; }

}  // namespace

void DeviceSpec::validate() const {
    if (!(r_on > 0)) throw std::invalid_argument(name + ": r_on must be > 0");
    if (!(on_off_ratio >= 1)) throw std::invalid_argument(name + ": on_off_ratio must be >= 1");
    if (num_states < 2) throw std::invalid_argument(name + ": num_states must be >= 2");
    if (c2c_sigma < 0) throw std::invalid_argument(name + ": c2c_sigma must be >= 0");
    if (d2d_sigma < 0) throw std::invalid_argument(name + ": d2d_sigma must be >= 0");
    if (write_pulse_width <= 0) throw std::invalid_argument(name + ": write_pulse_width must be > 0");
    if (kind == DeviceKind::sram) {
        if (sram_cells_per_weight < 1)
            throw std::invalid_argument(name + ": sram_cells_per_weight must be >= 1");
        return;  // nonlinearity/variation fields are ignored for digital updates
    }
    if (std::abs(nl_ltp) < kLabelMin || std::abs(nl_ltp) > kLabelMax)
        throw std::invalid_argument(name + ": nl_ltp outside the calibrated label range");
    if (nl_ltd < kLabelMin || nl_ltd > kLabelMax)
        throw std::invalid_argument(name + ": nl_ltd outside the calibrated label range");
}

ConductanceBounds conductance_bounds(const DeviceSpec& spec) {
    const double g_max = 1.0 / spec.r_on;
    return {g_max / spec.on_off_ratio, g_max};
}

double curve_max_deviation(double a) {
    // Normalized curve g(x) = (1 - e^{-x/a}) / (1 - e^{-1/a}) on [0, 1].
    // The deviation g(x) - x peaks where e^{-x/a} = a (1 - e^{-1/a}) =: s,
    // giving maxdev = a (1 - s) / s + a ln s.
    const double s = -a * std::expm1(-1.0 / a);
    return a * (1.0 - s) / s + a * std::log(s);
}

double nl_label_to_a(double nl_label, int p_max) {
    const double mag = std::abs(nl_label);
    if (!(mag >= kLabelMin && mag <= kLabelMax))
        throw std::range_error("nonlinearity label outside calibrated range [0.01, 8.99]");
    const double target = mag / kLabelScale;
    // curve_max_deviation is strictly decreasing in a; bisect.
    double lo = 1e-7, hi = 1e5;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (curve_max_deviation(mid) > target)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-15 * hi) break;
    }
    return sign_of(nl_label) * 0.5 * (lo + hi) * p_max;
}

double a_to_nl_label(double a, int p_max) {
    return sign_of(a) * kLabelScale * curve_max_deviation(std::abs(a) / p_max);
}

double curve_b(double a, double g_min, double g_max, int p_max) {
    const double dg = g_max - g_min;
    if (a > 0) return dg / (-std::expm1(-p_max / a));
    // Negative a: rewrite to avoid exp overflow for strongly curved branches.
    const double q_end = std::exp(-p_max / std::abs(a));
    return -dg * q_end / (1.0 - q_end);
}

UpdateCurve UpdateCurve::from_a(double a_ltp, double a_ltd, double g_min, double g_max,
                                int p_max) {
    UpdateCurve c;
    c.a_ltp = a_ltp;
    c.a_ltd = a_ltd;
    c.g_min = g_min;
    c.g_max = g_max;
    c.p_max = p_max;
    c.b_ltp = curve_b(a_ltp, g_min, g_max, p_max);
    c.b_ltd = curve_b(a_ltd, g_min, g_max, p_max);
    return c;
}

UpdateCurve UpdateCurve::from_labels(double nl_ltp, double nl_ltd_signed, double g_min,
                                     double g_max, int p_max) {
    return from_a(nl_label_to_a(nl_ltp, p_max), nl_label_to_a(nl_ltd_signed, p_max), g_min,
                  g_max, p_max);
}

namespace {

void check_p(double p, int p_max) {
    if (!(p >= 0.0 && p <= static_cast<double>(p_max)))
        throw std::domain_error("pulse index outside [0, p_max]");
}

double clamp01(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }

}  // namespace

double ltp_conductance(double p, const UpdateCurve& curve) {
    check_p(p, curve.p_max);
    const double dg = curve.g_max - curve.g_min;
    if (curve.a_ltp > 0)
        return curve.b_ltp * (-std::expm1(-p / curve.a_ltp)) + curve.g_min;
    // Mirrored curvature: g_min + dg (r - Q) / (1 - Q), r = e^{-(p_max-p)/|a|}.
    const double aa = std::abs(curve.a_ltp);
    const double q_end = std::exp(-curve.p_max / aa);
    const double r = std::exp(-(curve.p_max - p) / aa);
    return curve.g_min + dg * (r - q_end) / (1.0 - q_end);
}

double ltd_conductance(double p, const UpdateCurve& curve) {
    check_p(p, curve.p_max);
    const double dg = curve.g_max - curve.g_min;
    if (curve.a_ltd > 0)
        return curve.b_ltd * std::expm1(-(curve.p_max - p) / curve.a_ltd) + curve.g_max;
    const double aa = std::abs(curve.a_ltd);
    const double q_end = std::exp(-curve.p_max / aa);
    const double q = std::exp(-p / aa);
    return curve.g_max - dg * (q - q_end) / (1.0 - q_end);
}

double ltp_inverse(double g, const UpdateCurve& curve) {
    const double dg = curve.g_max - curve.g_min;
    const double frac = clamp01((g - curve.g_min) / dg, 0.0, 1.0);
    if (curve.a_ltp > 0) {
        const double q_end = std::exp(-curve.p_max / curve.a_ltp);
        const double u = frac * (1.0 - q_end);  // (g - g_min) / b
        return -curve.a_ltp * std::log1p(-u);
    }
    const double aa = std::abs(curve.a_ltp);
    const double q_end = std::exp(-curve.p_max / aa);
    const double r = q_end + frac * (1.0 - q_end);
    return curve.p_max + aa * std::log(r);
}

double ltd_inverse(double g, const UpdateCurve& curve) {
    const double dg = curve.g_max - curve.g_min;
    const double frac = clamp01((curve.g_max - g) / dg, 0.0, 1.0);
    if (curve.a_ltd > 0) {
        const double q_end = std::exp(-curve.p_max / curve.a_ltd);
        return curve.p_max + curve.a_ltd * std::log1p(-frac * (1.0 - q_end));
    }
    const double aa = std::abs(curve.a_ltd);
    const double q_end = std::exp(-curve.p_max / aa);
    const double q = q_end + frac * (1.0 - q_end);
    return -aa * std::log(q);
}

double weight_to_conductance(double w, const WeightRange& wr, const ConductanceBounds& gb) {
    const double tol = 1e-9 * wr.span();
    if (w < wr.min - tol || w > wr.max + tol)
        throw std::domain_error("weight outside configured range");
    w = clamp01(w, wr.min, wr.max);
    return gb.g_min + (w - wr.min) / wr.span() * (gb.g_max - gb.g_min);
}

double conductance_to_weight(double g, const WeightRange& wr, const ConductanceBounds& gb) {
    const double tol = 1e-9 * (gb.g_max - gb.g_min);
    if (g < gb.g_min - tol || g > gb.g_max + tol)
        throw std::domain_error("conductance outside device range");
    g = clamp01(g, gb.g_min, gb.g_max);
    return wr.min + (g - gb.g_min) / (gb.g_max - gb.g_min) * wr.span();
}

int pulses_for_delta(double delta_w, const WeightRange& wr, int p_max) {
    const double quantum = wr.span() / p_max;
    const double x = delta_w / quantum;
    double n = x >= 0 ? std::floor(x + 0.5) : std::ceil(x - 0.5);
    if (n > p_max) n = p_max;
    if (n < -p_max) n = -p_max;
    return static_cast<int>(n);
}

UpdateCurve SynapticArrayState::cell_curve(int r, int c) const {
    const CellState& cs = cell(r, c);
    return UpdateCurve::from_a(cs.a_ltp, cs.a_ltd, bounds.g_min, bounds.g_max, p_max);
}

double SynapticArrayState::mean_conductance() const {
    if (cells.empty()) return 0.0;
    double s = 0.0;
    for (const auto& c : cells) s += c.conductance;
    return s / static_cast<double>(cells.size());
}

namespace {

// Keep a D2D sample inside the calibrated label range without biasing its sign.
double clamp_label(double sample, double mean) {
    double s = sample == 0.0 ? sign_of(mean) : sign_of(sample);
    double mag = std::abs(sample);
    mag = clamp01(mag, kLabelMin, kLabelMax);
    return s * mag;
}

}  // namespace

SynapticArrayState init_array(int rows, int cols, const DeviceSpec& spec, std::uint64_t seed,
                              const Tensor* initial_weights, const WeightRange& wr) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("array dimensions must be >= 1");
    spec.validate();

    SynapticArrayState arr;
    arr.rows = rows;
    arr.cols = cols;
    arr.readout = ReadoutMode::parallel;
    arr.transposable = true;
    arr.kind = spec.kind;
    arr.bounds = conductance_bounds(spec);
    arr.p_max = spec.p_max();
    arr.cells.resize(static_cast<std::size_t>(rows) * cols);

    const rng::Key base = rng::Key(seed).fork(kD2dStream);
    const double ltd_mean = spec.signed_nl_ltd();

    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            CellState& cell = arr.cell(r, c);
            if (spec.kind == DeviceKind::analog_envm) {
                double lp = spec.nl_ltp;
                double ld = ltd_mean;
                if (spec.d2d_sigma > 0) {
                    const rng::Key k = base.fork(r, c);
                    lp = clamp_label(lp + spec.d2d_sigma * rng::gaussian(k.fork(0)), lp);
                    ld = clamp_label(ld + spec.d2d_sigma * rng::gaussian(k.fork(1)), ld);
                } else {
                    lp = clamp_label(lp, lp);
                    ld = clamp_label(ld, ld);
                }
                cell.a_ltp = nl_label_to_a(lp, arr.p_max);
                cell.a_ltd = nl_label_to_a(ld, arr.p_max);
            }
            double w = 0.5 * (wr.min + wr.max);
            if (initial_weights) {
                w = initial_weights->at2(r, c);
            }
            cell.conductance = weight_to_conductance(w, wr, arr.bounds);
            if (spec.kind == DeviceKind::sram) {
                // digital cells sit exactly on the state grid
                const double gstep = (arr.bounds.g_max - arr.bounds.g_min) / arr.p_max;
                const double lvl = std::floor((cell.conductance - arr.bounds.g_min) / gstep + 0.5);
                cell.conductance = arr.bounds.g_min + lvl * gstep;
            }
        }
    }
    return arr;
}

void apply_pulses(CellState& cell, int n, const SynapticArrayState& arr, const PulseNoise& noise,
                  const rng::Key& key) {
    if (n == 0) return;
    const double g_min = arr.bounds.g_min;
    const double g_max = arr.bounds.g_max;

    if (arr.kind == DeviceKind::sram) {
        const double gstep = (g_max - g_min) / arr.p_max;
        double lvl = std::floor((cell.conductance - g_min) / gstep + 0.5) + n;
        lvl = clamp01(lvl, 0.0, static_cast<double>(arr.p_max));
        cell.conductance = g_min + lvl * gstep;
        return;
    }

    const UpdateCurve curve =
        UpdateCurve::from_a(cell.a_ltp, cell.a_ltd, g_min, g_max, arr.p_max);
    const double noise_std = noise.c2c_sigma * (g_max - g_min);

    auto jump = [&](double g, int k) {
        if (k > 0) {
            double p = ltp_inverse(g, curve);
            p = std::min(p + k, static_cast<double>(curve.p_max));
            return ltp_conductance(p, curve);
        }
        double p = ltd_inverse(g, curve);
        p = std::max(p + k, 0.0);
        return ltd_conductance(p, curve);
    };

    double g = cell.conductance;
    if (noise.per_pulse_draws && noise_std > 0) {
        const int step = n > 0 ? 1 : -1;
        for (int i = 0; i < std::abs(n); ++i) {
            g = jump(g, step);
            g += noise_std * rng::gaussian(key.fork(i));
            g = clamp01(g, g_min, g_max);
        }
    } else {
        g = jump(g, n);
        if (noise_std > 0) {
            g += noise_std * std::sqrt(static_cast<double>(std::abs(n))) *
                 rng::gaussian(key.fork(0));
        }
        g = clamp01(g, g_min, g_max);
    }
    cell.conductance = g;
}

}  // namespace cimtrain
