#pragma once

// Deterministic synthetic drive logs with controllable intrusiveness.
//
// Lateral position is a unit-variance second-order Gauss-Markov process
// x'' + 2 zeta w x' + w^2 x = noise, for which Var(x') = w^2 Var(x); picking
// w = ls_sd / lp_sd per section therefore targets both the LP and the LS
// spread with one process. Each section is then scaled so that its realised
// LP standard deviation equals the target. Section-to-section gain changes
// are cross-faded over one second so no artificial steps appear.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lka/derive.hpp"
#include "lka/error.hpp"
#include "lka/telemetry.hpp"

namespace lka {

using PerSection = std::map<SectionKind, double>;
using TimeSpan = std::pair<double, double>; ///< [start, end) seconds

struct TremorSpec {
    double freq_hz = 1.5;
    double amplitude_deg = 0.3;
    std::vector<TimeSpan> episodes;
};

struct SyntheticSetting {
    SettingMeta meta{"synthetic", GripCondition::non_grip, "synthetic", std::nullopt};
    std::vector<std::pair<SectionKind, double>> route; ///< (kind, duration s)
    PerSection lp_sd_target;  ///< m
    PerSection ls_sd_target;  ///< m/s
    PerSection fsa_sd_target; ///< deg, high-frequency steering jitter
    PerSection it_sd_target;  ///< Nm
    PerSection lp_mean;       ///< optional LP offsets (m), default 0
    std::optional<TremorSpec> tremor;
    std::vector<TimeSpan> turn_signal_events;
    std::uint64_t seed = 1;
    double lane_width = 3.3;
    double vehicle_half_width = 0.9;
    bool allow_departure = false; ///< lift the LP bound to half the lane width
    std::size_t extra_channels = 0; ///< unrelated filler signals (headlamp, wiper, ...)
    double period = default_period;
};

/// Channel names emitted by generate_drive, in column order.
inline const std::vector<std::string>& synthetic_core_signals() {
    static const std::vector<std::string> names{"lkas_status",    "turn_signal",  "curvature_radius",
                                                "distance_left",  "distance_right", "steering_angle",
                                                "lka_torque",     "driver_torque"};
    return names;
}

inline double lp_bound(const SyntheticSetting& s) {
    return s.allow_departure ? s.lane_width / 2.0 : s.lane_width / 2.0 - s.vehicle_half_width;
}

inline void validate(const SyntheticSetting& s) {
    if (s.route.empty()) throw input_error("synthetic route is empty");
    if (!(s.period > 0.0) || !(s.period >= 1e-4)) throw input_error("synthetic period must be >= 0.1 ms");
    if (!(s.lane_width > 0.0)) throw input_error("lane_width must be > 0");
    if (!(s.vehicle_half_width >= 0.0) || !(lp_bound(s) > 0.0)) throw input_error("vehicle does not fit the lane");
    auto is_curve = [](SectionKind k) { return k != SectionKind::straight; };
    for (std::size_t i = 0; i < s.route.size(); ++i) {
        const auto [kind, dur] = s.route[i];
        if (!(dur > 0.0)) throw input_error("route durations must be > 0");
        if (i > 0 && (s.route[i - 1].first == kind || (is_curve(kind) && is_curve(s.route[i - 1].first))))
            throw input_error("route sections " + std::to_string(i - 1) + " and " + std::to_string(i) +
                              " would merge into one section (adjacent curves or repeated kind)");
        for (const auto* target : {&s.lp_sd_target, &s.ls_sd_target, &s.fsa_sd_target, &s.it_sd_target}) {
            auto it = target->find(kind);
            if (it == target->end() || !(it->second > 0.0))
                throw input_error("every sd target must be > 0 for section kind " + std::string(to_string(kind)));
        }
        const double lp = s.lp_sd_target.at(kind);
        if (lp > s.lane_width) throw input_error("lp_sd_target exceeds the lane width");
        if (lp > lp_bound(s)) throw input_error("lp_sd_target exceeds the admissible lateral range");
    }
    if (s.tremor) {
        const auto& t = *s.tremor;
        if (!(t.freq_hz > 1.0) || !(t.freq_hz < 0.5 / s.period)) throw input_error("tremor frequency must lie in (1 Hz, Nyquist)");
        if (!(t.amplitude_deg > 0.0)) throw input_error("tremor amplitude must be > 0");
        for (const auto& [a, b] : t.episodes)
            if (!(b > a) || a < 0.0) throw input_error("tremor episodes need 0 <= start < end");
    }
    for (const auto& [a, b] : s.turn_signal_events)
        if (!(b >= a) || a < 0.0) throw input_error("turn signal events need 0 <= start <= end");
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// mt19937_64 with a fixed normal transform so streams are identical across
/// standard libraries.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream) : eng_(splitmix64(seed ^ splitmix64(stream))) {}

    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Unit-variance second-order process with per-frame natural frequency.
inline std::vector<double> second_order_process(Rng& rng, const std::vector<double>& omega, double zeta, double dt) {
    std::vector<double> x(omega.size());
    if (omega.empty()) return x;
    double pos = rng.normal();
    double vel = rng.normal() * omega.front();
    for (std::size_t k = 0; k < omega.size(); ++k) {
        x[k] = pos;
        const double w = omega[k];
        const double q = 4.0 * zeta * w * w * w;
        vel += (-2.0 * zeta * w * vel - w * w * pos) * dt + std::sqrt(q * dt) * rng.normal();
        pos += vel * dt;
    }
    return x;
}

struct Layout {
    std::vector<std::size_t> begin; ///< first frame of each route entry
    std::vector<std::size_t> length;
    std::size_t frames = 0;
};

inline Layout layout(const SyntheticSetting& s) {
    Layout l;
    for (const auto& [kind, dur] : s.route) {
        l.begin.push_back(l.frames);
        const auto n = static_cast<std::size_t>(std::llround(dur / s.period));
        l.length.push_back(std::max<std::size_t>(n, 1));
        l.frames += l.length.back();
    }
    return l;
}

/// Piecewise-constant per-entry values with raised-cosine cross-fades of
/// +-`half` frames around each entry boundary.
inline std::vector<double> blend(const Layout& l, const std::vector<double>& value, std::size_t half) {
    std::vector<double> out(l.frames);
    for (std::size_t e = 0; e < value.size(); ++e)
        std::fill(out.begin() + static_cast<std::ptrdiff_t>(l.begin[e]),
                  out.begin() + static_cast<std::ptrdiff_t>(l.begin[e] + l.length[e]), value[e]);
    for (std::size_t e = 1; e < value.size(); ++e) {
        const std::size_t h = std::min({half, l.length[e - 1] / 2, l.length[e] / 2});
        if (h == 0) continue;
        const std::size_t b = l.begin[e];
        for (std::size_t k = b - h; k < b + h; ++k) {
            const double frac = (static_cast<double>(k - (b - h)) + 0.5) / static_cast<double>(2 * h);
            const double w = 0.5 * (1.0 - std::cos(std::numbers::pi * frac));
            out[k] = (1.0 - w) * value[e - 1] + w * value[e];
        }
    }
    return out;
}

inline double sample_sd(const std::vector<double>& x, std::size_t begin, std::size_t n) {
    double m = 0.0;
    for (std::size_t k = begin; k < begin + n; ++k) m += x[k];
    m /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t k = begin; k < begin + n; ++k) ss += (x[k] - m) * (x[k] - m);
    return n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
}

/// Raised-cosine on/off envelope of the union of `spans` with `ramp` s edges.
inline double span_envelope(const std::vector<TimeSpan>& spans, double t, double ramp) {
    double env = 0.0;
    for (const auto& [a, b] : spans) {
        if (t < a || t > b) continue;
        const double r = std::min(ramp, (b - a) / 2.0);
        double e = 1.0;
        if (t < a + r) e = 0.5 * (1.0 - std::cos(std::numbers::pi * (t - a) / r));
        else if (t > b - r) e = 0.5 * (1.0 - std::cos(std::numbers::pi * (b - t) / r));
        env = std::max(env, e);
    }
    return env;
}

} // namespace detail

inline constexpr double straight_radius_m = 5000.0;
inline constexpr double low_curve_min_radius_m = 2000.0;
inline constexpr double high_curve_min_radius_m = 600.0;

/// Emits a sparse multi-rate log: LKAS status and turn signal at 10 Hz, all
/// other channels at 100 Hz with per-signal staggered timestamps, so the
/// resampler's carry-forward path is exercised.
inline RawLog generate_drive(const SyntheticSetting& s) {
    validate(s);
    const auto lay = detail::layout(s);
    const std::size_t N = lay.frames;
    const double dt = s.period;
    const std::size_t fade = static_cast<std::size_t>(std::llround(0.5 / dt));

    std::vector<SectionKind> kind(N);
    for (std::size_t e = 0; e < s.route.size(); ++e)
        std::fill(kind.begin() + static_cast<std::ptrdiff_t>(lay.begin[e]),
                  kind.begin() + static_cast<std::ptrdiff_t>(lay.begin[e] + lay.length[e]), s.route[e].first);
    auto per_entry = [&](const PerSection& m, double fallback) {
        std::vector<double> v;
        for (const auto& [k, d] : s.route) {
            auto it = m.find(k);
            v.push_back(it == m.end() ? fallback : it->second);
        }
        return v;
    };
    auto gains_for = [&](const std::vector<double>& latent, const PerSection& target) {
        const auto tgt = per_entry(target, 0.0);
        std::vector<double> g(tgt.size());
        for (std::size_t e = 0; e < g.size(); ++e) {
            const double sd = detail::sample_sd(latent, lay.begin[e], lay.length[e]);
            g[e] = sd > 0.0 ? tgt[e] / sd : 0.0;
        }
        return detail::blend(lay, g, fade);
    };

    // lateral position
    detail::Rng lp_rng(s.seed, 1);
    std::vector<double> omega(N);
    {
        std::vector<double> w;
        for (const auto& [k, d] : s.route) w.push_back(s.ls_sd_target.at(k) / s.lp_sd_target.at(k));
        omega = detail::blend(lay, w, fade);
    }
    const auto lp_latent = detail::second_order_process(lp_rng, omega, 0.5, dt);
    const auto lp_gain = gains_for(lp_latent, s.lp_sd_target);
    const auto lp_offset = detail::blend(lay, per_entry(s.lp_mean, 0.0), fade);
    const double bound = lp_bound(s);
    std::vector<double> lp(N);
    for (std::size_t k = 0; k < N; ++k) lp[k] = std::clamp(lp_gain[k] * lp_latent[k] + lp_offset[k], -bound, bound);

    // curvature radius
    std::vector<double> radius(N);
    for (std::size_t e = 0; e < s.route.size(); ++e) {
        const auto n = static_cast<double>(lay.length[e]);
        for (std::size_t j = 0; j < lay.length[e]; ++j) {
            double r;
            if (s.route[e].first == SectionKind::straight) {
                r = straight_radius_m / (1.0 - 0.6 * std::sin(std::numbers::pi * static_cast<double>(j) / n));
            } else {
                const double r_min = s.route[e].first == SectionKind::low_curve ? low_curve_min_radius_m
                                                                                 : high_curve_min_radius_m;
                const double k0 = 1.0 / straight_radius_m;
                const double kappa = k0 + (1.0 / r_min - k0) * std::sin(std::numbers::pi * (static_cast<double>(j) + 0.5) / n);
                r = std::min(1.0 / kappa, std::nextafter(straight_radius_m, 0.0));
            }
            radius[lay.begin[e] + j] = r;
        }
    }

    // steering angle: track following + slow wander + high-frequency jitter + tremor
    detail::Rng steer_rng(s.seed, 2);
    const double phase1 = 2.0 * std::numbers::pi * steer_rng.uniform();
    const double phase2 = 2.0 * std::numbers::pi * steer_rng.uniform();
    const auto jitter_latent =
        detail::second_order_process(steer_rng, std::vector<double>(N, 2.0 * std::numbers::pi * 3.0), 0.3, dt);
    const auto jitter_gain = gains_for(jitter_latent, s.fsa_sd_target);
    std::vector<double> steering(N);
    for (std::size_t k = 0; k < N; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double track = 15.0 * std::atan(2.8 / radius[k]) * 180.0 / std::numbers::pi;
        const double wander = 0.3 * std::sin(2.0 * std::numbers::pi * 0.03 * t + phase1) +
                              0.2 * std::sin(2.0 * std::numbers::pi * 0.07 * t + phase2);
        double tremor = 0.0;
        if (s.tremor)
            tremor = s.tremor->amplitude_deg * std::sin(2.0 * std::numbers::pi * s.tremor->freq_hz * t) *
                     detail::span_envelope(s.tremor->episodes, t, 0.25);
        steering[k] = track + wander + jitter_gain[k] * jitter_latent[k] + tremor;
    }

    // torques: the driver-side reading leans against the LKAS torque, so the
    // signs disagree on roughly three quarters of the frames
    detail::Rng torque_rng(s.seed, 3);
    const auto l0 = detail::second_order_process(torque_rng, std::vector<double>(N, 2.0 * std::numbers::pi * 0.4), 0.7, dt);
    const auto n0 = detail::second_order_process(torque_rng, std::vector<double>(N, 2.0 * std::numbers::pi * 0.3), 0.7, dt);
    std::vector<double> d0(N), it0(N);
    for (std::size_t k = 0; k < N; ++k) {
        d0[k] = -l0[k] + n0[k];
        it0[k] = interference_torque({l0[k], d0[k]});
    }
    const auto torque_gain = gains_for(it0, s.it_sd_target);

    RawLog log;
    log.metadata = s.meta;
    const auto& core = synthetic_core_signals();
    log.signal_names = core;
    for (std::size_t c = 0; c < s.extra_channels; ++c) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "aux_%03zu", c);
        log.signal_names.emplace_back(buf);
    }
    enum : std::uint32_t { status, turn, curv, dleft, dright, steer, lka, drv };
    const auto ticks = static_cast<std::int64_t>(std::llround(dt / 1e-4));
    auto at = [&](std::size_t k, std::int64_t off) {
        return static_cast<double>(static_cast<std::int64_t>(k) * ticks + off) / 1e4;
    };
    const std::size_t slow_every = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.1 / dt)));
    log.records.reserve(N * (6 + s.extra_channels) + 2 * (N / slow_every + 1));
    const double half_lane = s.lane_width / 2.0;
    for (std::size_t k = 0; k < N; ++k) {
        if (k % slow_every == 0) {
            log.records.push_back({at(k, 2), status, 1.0});
            const double t = static_cast<double>(k) * dt;
            bool on = false;
            for (const auto& [a, b] : s.turn_signal_events) on = on || (t >= a && t <= b);
            log.records.push_back({at(k, 3), turn, on ? 1.0 : 0.0});
        }
        log.records.push_back({at(k, 5), curv, radius[k]});
        log.records.push_back({at(k, 15), dleft, std::max(0.0, half_lane + lp[k])});
        log.records.push_back({at(k, 35), dright, std::max(0.0, half_lane - lp[k])});
        log.records.push_back({at(k, 55), steer, steering[k]});
        for (std::size_t c = 0; c < s.extra_channels; ++c)
            log.records.push_back({at(k, 55), static_cast<std::uint32_t>(core.size() + c),
                                   static_cast<double>(((k / 50) * 31 + c * 17) % 1000) / 10.0});
        log.records.push_back({at(k, 75), lka, torque_gain[k] * l0[k]});
        log.records.push_back({at(k, 85), drv, torque_gain[k] * d0[k]});
    }
    return log;
}

/// Copy of `base` with every sd target and the tremor amplitude scaled.
inline SyntheticSetting scaled_setting(const SyntheticSetting& base, double severity) {
    SyntheticSetting s = base;
    for (auto* m : {&s.lp_sd_target, &s.ls_sd_target, &s.fsa_sd_target, &s.it_sd_target})
        for (auto& [k, v] : *m) v *= severity;
    if (s.tremor) s.tremor->amplitude_deg *= severity;
    if (severity != 1.0) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "x%g", severity);
        s.meta.setting_id += buf;
    }
    return s;
}

/// One drive per severity, all sharing the base seed so only amplitudes differ.
inline std::vector<std::pair<double, RawLog>> generate_setting_family(const SyntheticSetting& base,
                                                                      const std::vector<double>& severities) {
    if (severities.size() < 2) throw input_error("a setting family needs at least two severities");
    for (std::size_t i = 0; i < severities.size(); ++i) {
        if (!(severities[i] > 0.0)) throw input_error("severities must be > 0");
        if (i > 0 && !(severities[i] > severities[i - 1])) throw input_error("severities must be strictly ascending");
    }
    std::vector<std::pair<double, RawLog>> out;
    for (double sev : severities) out.emplace_back(sev, generate_drive(scaled_setting(base, sev)));
    return out;
}

// ---------------------------------------------------------------------------
// JSON setting files
// ---------------------------------------------------------------------------

namespace detail {

inline PerSection per_section_from_json(const json& j) {
    PerSection m;
    for (const auto& [k, v] : j.items()) m[parse_section_kind(k)] = v.get<double>();
    return m;
}

inline json per_section_to_json(const PerSection& m) {
    json j = json::object();
    for (const auto& [k, v] : m) j[std::string(to_string(k))] = v;
    return j;
}

inline std::vector<TimeSpan> spans_from_json(const json& j) {
    std::vector<TimeSpan> out;
    for (const auto& e : j) out.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
    return out;
}

} // namespace detail

inline SyntheticSetting synthetic_setting_from_json(const json& j) {
    SyntheticSetting s;
    try {
        s.meta = j.get<SettingMeta>();
        if (s.meta.setting_id.empty()) s.meta.setting_id = "synthetic";
        if (s.meta.vehicle_model.empty()) s.meta.vehicle_model = "synthetic";
        for (const auto& e : j.at("route"))
            s.route.emplace_back(parse_section_kind(e.at("kind").get<std::string>()), e.at("duration_s").get<double>());
        s.lp_sd_target = detail::per_section_from_json(j.at("lp_sd_target"));
        s.ls_sd_target = detail::per_section_from_json(j.at("ls_sd_target"));
        s.fsa_sd_target = detail::per_section_from_json(j.at("fsa_sd_target"));
        s.it_sd_target = detail::per_section_from_json(j.at("it_sd_target"));
        if (j.contains("lp_mean")) s.lp_mean = detail::per_section_from_json(j.at("lp_mean"));
        if (j.contains("tremor") && !j.at("tremor").is_null()) {
            const auto& t = j.at("tremor");
            s.tremor = TremorSpec{t.at("freq_hz").get<double>(), t.at("amplitude_deg").get<double>(),
                                  detail::spans_from_json(t.value("episodes", json::array()))};
        }
        if (j.contains("turn_signal_events")) s.turn_signal_events = detail::spans_from_json(j.at("turn_signal_events"));
        s.seed = j.value("seed", std::uint64_t{1});
        s.lane_width = j.value("lane_width", 3.3);
        s.vehicle_half_width = j.value("vehicle_half_width", 0.9);
        s.allow_departure = j.value("allow_departure", false);
        s.extra_channels = j.value("extra_channels", std::size_t{0});
        s.period = j.value("period", default_period);
    } catch (const json::exception& e) {
        throw input_error(std::string("malformed synthetic setting: ") + e.what());
    }
    validate(s);
    return s;
}

inline json to_json(const SyntheticSetting& s) {
    json j = s.meta;
    j["route"] = json::array();
    for (const auto& [k, d] : s.route) j["route"].push_back({{"kind", to_string(k)}, {"duration_s", d}});
    j["lp_sd_target"] = detail::per_section_to_json(s.lp_sd_target);
    j["ls_sd_target"] = detail::per_section_to_json(s.ls_sd_target);
    j["fsa_sd_target"] = detail::per_section_to_json(s.fsa_sd_target);
    j["it_sd_target"] = detail::per_section_to_json(s.it_sd_target);
    if (!s.lp_mean.empty()) j["lp_mean"] = detail::per_section_to_json(s.lp_mean);
    if (s.tremor) {
        json eps = json::array();
        for (const auto& [a, b] : s.tremor->episodes) eps.push_back({a, b});
        j["tremor"] = {{"freq_hz", s.tremor->freq_hz}, {"amplitude_deg", s.tremor->amplitude_deg}, {"episodes", eps}};
    }
    json ts = json::array();
    for (const auto& [a, b] : s.turn_signal_events) ts.push_back({a, b});
    j["turn_signal_events"] = ts;
    j["seed"] = s.seed;
    j["lane_width"] = s.lane_width;
    j["vehicle_half_width"] = s.vehicle_half_width;
    j["allow_departure"] = s.allow_departure;
    j["extra_channels"] = s.extra_channels;
    j["period"] = s.period;
    return j;
}

} // namespace lka
