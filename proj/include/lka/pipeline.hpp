#pragma once

// Wires derive + segmentation + outlier removal into a DriveAnalysis.

#include <optional>
#include <string>

#include "lka/derive.hpp"
#include "lka/ingest.hpp"
#include "lka/scoring.hpp"
#include "lka/segmentation.hpp"
#include "lka/telemetry.hpp"

namespace lka {

/// Logical signal names the pipeline reads.
struct SignalRoles {
    std::string distance_left = "distance_left";
    std::string distance_right = "distance_right";
    std::string steering_angle = "steering_angle";
    std::string lka_torque = "lka_torque";
    std::string driver_torque = "driver_torque";
    std::string curvature = "curvature_radius";
    std::string lkas_status = "lkas_status";
    std::string turn_signal = "turn_signal";
};

struct DeriveOptions {
    HighPassSpec high_pass;
    double it_deadband = 0.0;
    std::size_t ls_smooth_frames = 1;
    std::optional<double> outlier_k = 5.0; ///< nullopt disables outlier removal
};

/// Filter policy matching the roles; the turn-signal filter is enabled when
/// the table carries that channel.
inline FilterPolicy default_filter_policy(const FrameTable& t, const SignalRoles& roles = {}) {
    FilterPolicy p;
    p.lkas_status_signal = roles.lkas_status;
    if (t.find(roles.turn_signal)) p.turn_signal_signal = roles.turn_signal;
    return p;
}

/// Derives LP, LS, FSA and IT from a filtered frame table and splits the
/// drive into curve sections. Indicators whose input channels are absent are
/// recorded in `missing` instead of failing the whole drive.
inline DriveAnalysis analyze_drive(const FrameTable& frames, const SignalRoles& roles = {},
                                   const CurvatureRule& rule = {}, const DeriveOptions& opt = {}) {
    DriveAnalysis a;
    a.meta = frames.metadata;
    a.period = frames.period;
    a.sections = segment(frames, roles.curvature, rule);

    auto need = [&](Indicator ind, std::initializer_list<const std::string*> names) {
        for (const auto* n : names) {
            if (!frames.find(*n)) {
                a.missing[ind] = "channel '" + *n + "' absent";
                return false;
            }
        }
        return true;
    };
    auto keep = [&](IndicatorSeries s) {
        if (opt.outlier_k) {
            std::size_t valid = 0;
            for (auto v : s.valid_mask) valid += v;
            if (valid >= 2) s = remove_outliers(s, *opt.outlier_k);
        }
        a.series[s.indicator] = std::move(s);
    };

    if (need(Indicator::lane_keeping, {&roles.distance_left, &roles.distance_right})) {
        auto lp = lateral_position(frames, roles.distance_left, roles.distance_right);
        auto ls = lateral_speed(lp, frames.period, opt.ls_smooth_frames);
        keep(std::move(lp));
        keep(std::move(ls));
    } else {
        a.missing[Indicator::dynamic_stability] = a.missing[Indicator::lane_keeping];
    }
    if (need(Indicator::steering_stability, {&roles.steering_angle}))
        keep(filtered_steering_angle(channel_series(frames, *frames.find(roles.steering_angle)), opt.high_pass));
    if (need(Indicator::non_interference, {&roles.lka_torque, &roles.driver_torque}))
        keep(interference_torque(channel_series(frames, *frames.find(roles.lka_torque)),
                                 channel_series(frames, *frames.find(roles.driver_torque)), opt.it_deadband));
    return a;
}

} // namespace lka
