#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "lka/error.hpp"
#include "lka/telemetry.hpp"

namespace lka {

/// Radius-of-curvature thresholds (meters). Ties go upward: R == straight
/// threshold is straight, a curve whose minimum R equals the high threshold
/// is a low curve.
struct CurvatureRule {
    double straight_threshold_m = 5000.0;
    double high_threshold_m = 1000.0;
    std::size_t min_section_frames = 1; ///< shorter sections are dropped
};

inline void validate(const CurvatureRule& r) {
    if (!(r.high_threshold_m > 0.0 && r.straight_threshold_m > r.high_threshold_m))
        throw input_error("curvature thresholds must satisfy straight > high > 0");
    if (r.min_section_frames == 0) throw input_error("min_section_frames must be >= 1");
}

/// Splits a drive into straight / low-curve / high-curve sections using |R|.
/// Invalid frames, missing curvature and non-positive radii break runs, so a
/// section never spans a gap.
inline std::vector<CurveSection> segment(const FrameTable& table, const std::string& curvature_signal,
                                         const CurvatureRule& rule = {}) {
    validate(rule);
    const Channel* ch = table.find(curvature_signal);
    if (!ch) throw input_error("curvature channel '" + curvature_signal + "' not in table");

    const std::size_t n = table.frame_count();
    auto usable = [&](std::size_t k) {
        return table.frame_valid[k] && ch->present[k] && std::abs(ch->values[k]) > 0.0;
    };
    auto is_straight = [&](std::size_t k) { return std::abs(ch->values[k]) >= rule.straight_threshold_m; };

    std::vector<CurveSection> out;
    std::size_t k = 0;
    while (k < n) {
        if (!usable(k)) {
            ++k;
            continue;
        }
        const bool straight = is_straight(k);
        const std::size_t begin = k;
        double min_r = std::abs(ch->values[k]);
        while (k < n && usable(k) && is_straight(k) == straight) {
            min_r = std::min(min_r, std::abs(ch->values[k]));
            ++k;
        }
        CurveSection s;
        s.begin = begin;
        s.end = k;
        if (straight)
            s.kind = SectionKind::straight;
        else
            s.kind = min_r >= rule.high_threshold_m ? SectionKind::low_curve : SectionKind::high_curve;
        if (s.length() >= rule.min_section_frames) out.push_back(s);
    }
    return out;
}

/// Total duration in seconds per section kind.
inline std::map<SectionKind, double> section_durations(const std::vector<CurveSection>& sections, double period) {
    std::map<SectionKind, double> d;
    for (auto kind : all_section_kinds) d[kind] = 0.0;
    for (const auto& s : sections) d[s.kind] += static_cast<double>(s.length()) * period;
    return d;
}

} // namespace lka
