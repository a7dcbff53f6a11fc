#pragma once

// The four intrusiveness variables: lateral position (LP), lateral speed
// (LS), high-pass filtered steering angle (FSA) and interference torque (IT).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "lka/error.hpp"
#include "lka/telemetry.hpp"

namespace lka {

// ---------------------------------------------------------------------------
// Lateral position and speed
// ---------------------------------------------------------------------------

/// Signed offset of the vehicle centre from the lane centre; negative when
/// the vehicle sits left of centre.
inline double lateral_position(double distance_left, double distance_right) {
    if (!std::isfinite(distance_left) || !std::isfinite(distance_right))
        throw input_error("lane distances must be finite");
    if (distance_left < 0.0 || distance_right < 0.0) throw input_error("lane distances must be >= 0");
    return (distance_left - distance_right) / 2.0;
}

inline IndicatorSeries lateral_position(const FrameTable& t, const std::string& left_signal,
                                        const std::string& right_signal) {
    const Channel* left = t.find(left_signal);
    const Channel* right = t.find(right_signal);
    if (!left || !right) throw input_error("lane distance channels '" + left_signal + "'/'" + right_signal + "' missing");
    Series s;
    s.period = t.period;
    s.start_time = t.start_time;
    s.samples.assign(t.frame_count(), 0.0);
    s.valid_mask.assign(t.frame_count(), 0);
    for (std::size_t k = 0; k < t.frame_count(); ++k) {
        if (!t.frame_valid[k] || !left->present[k] || !right->present[k]) continue;
        try {
            s.samples[k] = lateral_position(left->values[k], right->values[k]);
        } catch (const Error& e) {
            throw input_error("frame " + std::to_string(k) + ": " + e.what());
        }
        s.valid_mask[k] = 1;
    }
    return make_indicator_series(Indicator::lane_keeping, std::move(s));
}

namespace detail {

/// Trailing moving average over `window` frames; frames without a full valid
/// window become invalid.
inline Series trailing_mean(const Series& x, std::size_t window) {
    Series out = x;
    if (window <= 1) return out;
    std::size_t run = 0;
    double sum = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!x.valid_mask[k]) {
            run = 0;
            sum = 0.0;
            out.valid_mask[k] = 0;
            continue;
        }
        sum += x.samples[k];
        ++run;
        if (run > window) sum -= x.samples[k - window];
        if (run >= window) {
            out.samples[k] = sum / static_cast<double>(window);
        } else {
            out.valid_mask[k] = 0;
        }
    }
    return out;
}

} // namespace detail

/// Backward first difference LS[k] = (LP[k] - LP[k-1]) / dt. Invalid where
/// either neighbour is invalid. `smooth_frames > 1` pre-smooths LP with a
/// trailing moving average.
inline IndicatorSeries lateral_speed(const Series& lp, double dt, std::size_t smooth_frames = 1) {
    if (!(dt > 0.0)) throw input_error("lateral_speed: dt must be > 0");
    const Series src = detail::trailing_mean(lp, smooth_frames);
    Series s;
    s.period = lp.period;
    s.start_time = lp.start_time;
    s.samples.assign(src.size(), 0.0);
    s.valid_mask.assign(src.size(), 0);
    for (std::size_t k = 1; k < src.size(); ++k) {
        if (src.valid_mask[k] && src.valid_mask[k - 1]) {
            s.samples[k] = (src.samples[k] - src.samples[k - 1]) / dt;
            s.valid_mask[k] = 1;
        }
    }
    return make_indicator_series(Indicator::dynamic_stability, std::move(s));
}

// ---------------------------------------------------------------------------
// High-pass filtering
// ---------------------------------------------------------------------------

struct HighPassSpec {
    double cutoff_hz = 1.0;
    int order = 2;
    bool zero_phase = true;
};

/// Direct-form II transposed biquad coefficients (a0 normalised to 1).
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;

    double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

/// Butterworth high-pass as a cascade of second-order sections, designed by
/// the bilinear transform with frequency prewarping.
inline std::vector<Biquad> butterworth_highpass(double cutoff_hz, int order, double sample_rate) {
    if (order < 1 || order > 12) throw input_error("high-pass order must be in 1..12");
    const double nyquist = sample_rate / 2.0;
    if (!(cutoff_hz > 0.0 && cutoff_hz < nyquist)) throw input_error("high-pass cutoff must lie in (0, Nyquist)");

    const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate);
    std::vector<Biquad> sections;
    for (int i = 1; i <= order / 2; ++i) {
        const double theta = (2.0 * i - 1.0) * std::numbers::pi / (2.0 * order);
        const double inv_q = 2.0 * std::sin(theta); // 1/Q of the k-th pole pair
        const double norm = 1.0 / (1.0 + k * inv_q + k * k);
        Biquad s;
        s.b0 = norm;
        s.b1 = -2.0 * norm;
        s.b2 = norm;
        s.a1 = 2.0 * (k * k - 1.0) * norm;
        s.a2 = (1.0 - k * inv_q + k * k) * norm;
        sections.push_back(s);
    }
    if (order % 2 == 1) {
        const double norm = 1.0 / (1.0 + k);
        Biquad s;
        s.b0 = norm;
        s.b1 = -norm;
        s.a1 = (k - 1.0) * norm;
        sections.push_back(s);
    }
    return sections;
}

namespace detail {

/// Runs the cascade in place. State starts at the steady state for a constant
/// input equal to x.front(), which removes the start-up step.
inline void run_cascade(const std::vector<Biquad>& sections, std::vector<double>& x) {
    if (x.empty()) return;
    double steady_in = x.front();
    for (const auto& s : sections) {
        const double steady_out = s.dc_gain() * steady_in;
        double z2 = s.b2 * steady_in - s.a2 * steady_out;
        double z1 = steady_out - s.b0 * steady_in;
        for (auto& v : x) {
            const double in = v;
            const double y = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * y + z2;
            z2 = s.b2 * in - s.a2 * y;
            v = y;
        }
        steady_in = steady_out;
    }
}

} // namespace detail

/// Warm-up length in samples: one period of the cutoff frequency.
inline std::size_t highpass_warmup(const HighPassSpec& spec, double period) {
    return static_cast<std::size_t>(std::ceil(1.0 / (spec.cutoff_hz * period) - 1e-9));
}

/// Filters one contiguous run: odd-reflection padding by the warm-up length,
/// forward (and, for zero phase, backward) pass, then trim.
inline std::vector<double> highpass_run(const std::vector<Biquad>& sections, const std::vector<double>& run,
                                        std::size_t pad, bool zero_phase) {
    const std::size_t n = run.size();
    pad = std::min(pad, n > 0 ? n - 1 : 0);
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t j = pad; j >= 1; --j) ext.push_back(2.0 * run.front() - run[j]);
    ext.insert(ext.end(), run.begin(), run.end());
    for (std::size_t j = 1; j <= pad; ++j) ext.push_back(2.0 * run.back() - run[n - 1 - j]);

    detail::run_cascade(sections, ext);
    if (zero_phase) {
        std::reverse(ext.begin(), ext.end());
        detail::run_cascade(sections, ext);
        std::reverse(ext.begin(), ext.end());
    }
    return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

/// Steering angle with low-frequency (normal steering control) content
/// removed. Each maximal contiguous valid run is filtered independently;
/// runs shorter than the warm-up length are emitted as invalid.
inline IndicatorSeries filtered_steering_angle(const Series& steering_deg, const HighPassSpec& spec = {}) {
    const double fs = 1.0 / steering_deg.period;
    const auto sections = butterworth_highpass(spec.cutoff_hz, spec.order, fs);
    const std::size_t warmup = highpass_warmup(spec, steering_deg.period);

    Series out;
    out.period = steering_deg.period;
    out.start_time = steering_deg.start_time;
    out.samples.assign(steering_deg.size(), 0.0);
    out.valid_mask.assign(steering_deg.size(), 0);

    std::vector<double> run;
    std::size_t k = 0;
    const std::size_t n = steering_deg.size();
    while (k < n) {
        if (!steering_deg.valid_mask[k]) {
            ++k;
            continue;
        }
        const std::size_t begin = k;
        while (k < n && steering_deg.valid_mask[k]) ++k;
        if (k - begin < warmup) continue;
        run.assign(steering_deg.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                   steering_deg.samples.begin() + static_cast<std::ptrdiff_t>(k));
        const auto filtered = highpass_run(sections, run, warmup, spec.zero_phase);
        for (std::size_t j = 0; j < filtered.size(); ++j) {
            out.samples[begin + j] = filtered[j];
            out.valid_mask[begin + j] = 1;
        }
    }
    return make_indicator_series(Indicator::steering_stability, std::move(out));
}

// ---------------------------------------------------------------------------
// Interference torque
// ---------------------------------------------------------------------------

/// Torques in Nm; negative accelerates the steering wheel clockwise.
struct TorquePair {
    double l = 0.0; ///< caused by LKAS
    double d = 0.0; ///< caused by the driver
};

inline int sign(double x) { return (x > 0.0) - (x < 0.0); }

/// LKAS torque counts as interference when its sign differs from the
/// driver's; otherwise the result is zero.
inline double interference_torque(TorquePair p) { return sign(p.l) != sign(p.d) ? p.l : 0.0; }

/// Per-frame interference torque. Driver torque with |d| <= deadband is
/// treated as sign 0; deadband 0 applies the literal rule.
inline IndicatorSeries interference_torque(const Series& lka, const Series& driver, double deadband = 0.0) {
    if (lka.size() != driver.size()) throw input_error("torque series length mismatch");
    if (!(deadband >= 0.0)) throw input_error("deadband must be >= 0");
    Series s;
    s.period = lka.period;
    s.start_time = lka.start_time;
    s.samples.assign(lka.size(), 0.0);
    s.valid_mask.assign(lka.size(), 0);
    for (std::size_t k = 0; k < lka.size(); ++k) {
        if (!lka.valid_mask[k] || !driver.valid_mask[k]) continue;
        const double d = std::abs(driver.samples[k]) <= deadband ? 0.0 : driver.samples[k];
        s.samples[k] = interference_torque({lka.samples[k], d});
        s.valid_mask[k] = 1;
    }
    return make_indicator_series(Indicator::non_interference, std::move(s));
}

} // namespace lka
