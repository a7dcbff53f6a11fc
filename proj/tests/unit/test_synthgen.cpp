#include <gtest/gtest.h>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "lka/io.hpp"
#include "lka/spectral.hpp"

using namespace lka;

namespace {

DeriveOptions no_outliers() {
    DeriveOptions o;
    o.outlier_k = std::nullopt;
    return o;
}

SyntheticSetting quick(std::uint64_t seed = 3) {
    auto s = fixture::family_base();
    s.route = {{SectionKind::straight, 40}, {SectionKind::high_curve, 30}, {SectionKind::straight, 20},
               {SectionKind::low_curve, 30}, {SectionKind::straight, 20}};
    s.seed = seed;
    return s;
}

} // namespace

TEST(Synthgen, DeterministicForSeed) {
    const auto a = generate_drive(quick());
    const auto b = generate_drive(quick());
    EXPECT_EQ(a, b);
    EXPECT_EQ(raw_log_to_csv(a), raw_log_to_csv(b));
    EXPECT_NE(generate_drive(quick(4)).records, a.records);
}

TEST(Synthgen, EmitsCoreChannelsWithStaggeredTimes) {
    const auto log = generate_drive(quick());
    for (const auto& n : synthetic_core_signals()) EXPECT_TRUE(log.signal_index(n)) << n;
    const auto left = *log.signal_index("distance_left");
    std::size_t off_grid = 0, n = 0;
    for (const auto& r : log.records) {
        if (r.signal != left) continue;
        ++n;
        const double frac = r.timestamp / 0.01 - std::round(r.timestamp / 0.01);
        off_grid += std::abs(frac) > 1e-6;
    }
    EXPECT_EQ(off_grid, n);
    for (std::size_t i = 1; i < log.records.size(); ++i)
        EXPECT_LE(log.records[i - 1].timestamp, log.records[i].timestamp);
}

TEST(Synthgen, ExtraChannels) {
    auto s = quick();
    s.extra_channels = 5;
    const auto log = generate_drive(s);
    EXPECT_EQ(log.signal_names.size(), synthetic_core_signals().size() + 5);
}

TEST(Synthgen, SegmentationRecoversRoute) {
    const auto s = quick();
    const auto a = fixture::analyze_log(generate_drive(s));
    ASSERT_EQ(a.sections.size(), s.route.size());
    for (std::size_t i = 0; i < s.route.size(); ++i) {
        EXPECT_EQ(a.sections[i].kind, s.route[i].first);
        EXPECT_NEAR(a.sections[i].length() * 0.01, s.route[i].second, 0.011);
    }
}

TEST(Synthgen, LpStaysInsideLaneBound) {
    auto s = quick();
    for (auto& [k, v] : s.lp_sd_target) v = 0.5;
    for (auto& [k, v] : s.ls_sd_target) v = 0.4;
    const auto a = fixture::analyze_log(generate_drive(s), no_outliers());
    const double bound = lp_bound(s);
    const auto& lp = a.series.at(Indicator::lane_keeping);
    for (std::size_t k = 0; k < lp.size(); ++k)
        if (lp.valid_mask[k]) {
            EXPECT_LE(std::abs(lp.samples[k]), bound + 1e-9);
        }
}

TEST(Synthgen, GoodStraightLpSdNearTarget) {
    auto s = fixture::target_setting(false, {{SectionKind::straight, 300}});
    const auto a = fixture::analyze_log(generate_drive(s));
    const auto lp = fixture::samples_in(a, Indicator::lane_keeping, SectionKind::straight);
    EXPECT_NEAR(oracle::sd(lp), 0.081, 0.0081);
    const auto ls = fixture::samples_in(a, Indicator::dynamic_stability, SectionKind::straight);
    EXPECT_NEAR(oracle::sd(ls), 0.122, 0.0122);
}

TEST(Synthgen, TremorInjectionFoundOnce) {
    auto s = quick();
    s.route = {{SectionKind::straight, 60}};
    for (auto& [k, v] : s.fsa_sd_target) v = 0.01;
    s.tremor = TremorSpec{1.5, 0.3, {{25.0, 35.0}}};
    const auto frames = resample(generate_drive(s));
    const auto fsa = filtered_steering_angle(channel_series(frames, *frames.find("steering_angle")));
    const auto sg = spectrogram(stft(fsa), MagnitudeScale::amplitude);
    const auto ep = tremor_report(sg, 1.0, 10.0, 0.1);
    ASSERT_EQ(ep.size(), 1u);
    EXPECT_NEAR(ep[0].peak_freq_hz, 1.5, 0.4);
}

TEST(Synthgen, FamilyScalesAndValidates) {
    const auto base = quick();
    const auto fam = generate_setting_family(base, {1.0, 2.0, 4.0});
    ASSERT_EQ(fam.size(), 3u);
    EXPECT_EQ(fam[0].second, generate_drive(base));
    double prev = 0.0;
    for (const auto& [sev, log] : fam) {
        const auto a = fixture::analyze_log(log);
        const double sd = oracle::sd(fixture::samples_in(a, Indicator::lane_keeping, SectionKind::straight));
        EXPECT_GT(sd, prev) << sev;
        prev = sd;
    }
    EXPECT_THROW(generate_setting_family(base, {2.0, 1.0}), Error);
    EXPECT_THROW(generate_setting_family(base, {1.0}), Error);
}

TEST(Synthgen, InfeasibleSettingsRejected) {
    auto s = quick();
    s.lp_sd_target[SectionKind::straight] = 4.0;
    EXPECT_THROW(generate_drive(s), Error);
    s = quick();
    s.route.clear();
    EXPECT_THROW(generate_drive(s), Error);
    s = quick();
    s.tremor = TremorSpec{0.8, 0.3, {{1, 2}}};
    EXPECT_THROW(generate_drive(s), Error);
    s = quick();
    s.it_sd_target[SectionKind::low_curve] = 0.0;
    EXPECT_THROW(generate_drive(s), Error);
    s = quick();
    s.route = {{SectionKind::low_curve, 10}, {SectionKind::high_curve, 10}};
    EXPECT_THROW(generate_drive(s), Error);
}

TEST(Synthgen, JsonRoundTrip) {
    auto s = fixture::target_setting(true, {{SectionKind::straight, 30}, {SectionKind::low_curve, 20}});
    s.tremor = TremorSpec{2.0, 0.2, {{1, 5}, {10, 12}}};
    s.turn_signal_events = {{3, 4}};
    const auto back = synthetic_setting_from_json(json::parse(to_json(s).dump()));
    EXPECT_EQ(generate_drive(back), generate_drive(s));
}
