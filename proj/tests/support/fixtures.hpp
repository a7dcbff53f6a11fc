#pragma once

#include <string>
#include <vector>

#include "lka/ingest.hpp"
#include "lka/pipeline.hpp"
#include "lka/synthgen.hpp"
#include "lka/telemetry.hpp"

namespace fixture {

// Raw records of the sparse log fragment used to illustrate time-based
// reduction (vars 1..3, times 0.0015 .. 0.0315).
inline lka::RawLog sparse_fragment_log() {
    lka::RawLog log;
    log.signal_names = {"var1", "var2", "var3"};
    log.records = {{0.0015, 0, 2.0}, {0.0053, 2, 5.0}, {0.0091, 1, 3.0}, {0.0115, 1, 3.0}, {0.0153, 2, 6.0},
                   {0.0215, 1, 3.5}, {0.0253, 2, 7.0}, {0.0291, 2, 6.0}, {0.0315, 1, 3.0}};
    return log;
}

inline std::string sparse_fragment_csv() {
    return "time,var1,var2,var3\n"
           "0.0015,2,,\n0.0034,,,\n0.0053,,,5\n0.0072,,,\n0.0091,,3,\n0.0101,,,\n0.0115,,3,\n"
           "0.0134,,,\n0.0153,,,6\n0.0172,,,\n0.0191,,,\n0.0201,,,\n0.0215,,3.5,\n0.0234,,,\n"
           "0.0253,,,7\n0.0272,,,\n0.0291,,,6\n0.0301,,,\n0.0315,,3,\n";
}

// Good/bad sd targets per section; `bad` selects the intrusive set.
inline lka::SyntheticSetting target_setting(bool bad, std::vector<std::pair<lka::SectionKind, double>> route) {
    using lka::SectionKind;
    lka::SyntheticSetting s;
    s.meta.setting_id = bad ? "bad" : "good";
    s.route = std::move(route);
    if (!bad) {
        s.lp_sd_target = {{SectionKind::straight, 0.081}, {SectionKind::low_curve, 0.075}, {SectionKind::high_curve, 0.268}};
        s.ls_sd_target = {{SectionKind::straight, 0.122}, {SectionKind::low_curve, 0.119}, {SectionKind::high_curve, 0.108}};
        s.fsa_sd_target = {{SectionKind::straight, 0.001}, {SectionKind::low_curve, 0.001}, {SectionKind::high_curve, 0.001}};
        s.it_sd_target = {{SectionKind::straight, 0.007}, {SectionKind::low_curve, 0.006}, {SectionKind::high_curve, 0.005}};
        s.seed = 101;
    } else {
        s.lp_sd_target = {{SectionKind::straight, 0.554}, {SectionKind::low_curve, 0.580}, {SectionKind::high_curve, 0.765}};
        s.ls_sd_target = {{SectionKind::straight, 0.275}, {SectionKind::low_curve, 0.335}, {SectionKind::high_curve, 0.329}};
        s.fsa_sd_target = {{SectionKind::straight, 0.213}, {SectionKind::low_curve, 0.258}, {SectionKind::high_curve, 0.304}};
        s.it_sd_target = {{SectionKind::straight, 0.564}, {SectionKind::low_curve, 0.638}, {SectionKind::high_curve, 0.842}};
        s.allow_departure = true;
        s.seed = 202;
    }
    return s;
}

// Moderate base setting for severity families: every target scales well
// inside the lane bound up to severity 4.
inline lka::SyntheticSetting family_base() {
    using lka::SectionKind;
    lka::SyntheticSetting s;
    s.meta.setting_id = "base";
    s.route = {{SectionKind::straight, 120}, {SectionKind::low_curve, 60}, {SectionKind::straight, 60},
               {SectionKind::high_curve, 60}, {SectionKind::straight, 60}};
    for (auto k : lka::all_section_kinds) {
        s.lp_sd_target[k] = 0.08;
        s.ls_sd_target[k] = 0.12;
        s.fsa_sd_target[k] = 0.02;
        s.it_sd_target[k] = 0.1;
    }
    s.seed = 7;
    return s;
}

// resample + filter + derive, as the score command does
inline lka::DriveAnalysis analyze_log(const lka::RawLog& log, const lka::DeriveOptions& opt = {}) {
    const auto frames = lka::resample(log);
    const auto filtered = lka::filter_frames(frames, lka::default_filter_policy(frames));
    return lka::analyze_drive(filtered, {}, {}, opt);
}

inline std::vector<double> samples_in(const lka::DriveAnalysis& a, lka::Indicator ind, lka::SectionKind kind) {
    return lka::section_samples(a.series.at(ind), a.sections, kind);
}

} // namespace fixture
