#include <gtest/gtest.h>

#include <limits>

#include "lka/telemetry.hpp"

using namespace lka;

namespace {

FrameTable small_table(std::size_t n) {
    FrameTable t;
    t.period = 0.01;
    t.names = {"a", "b"};
    t.frame_valid.assign(n, 1);
    t.channels.resize(2);
    for (auto& c : t.channels) {
        c.values.assign(n, 1.0);
        c.present.assign(n, 1);
    }
    return t;
}

ScoreReport sample_report() {
    ScoreReport r;
    r.reference_id = "A";
    r.candidate_id = "B";
    r.weights = {{SectionKind::straight, 1.0}, {SectionKind::low_curve, 0.5}, {SectionKind::high_curve, 2.0}};
    r.per_section[{Indicator::lane_keeping, SectionKind::straight}] = 81.234567890123;
    r.per_section[{Indicator::lane_keeping, SectionKind::high_curve}] = 0.1 + 0.2;
    r.indicator_scores[Indicator::lane_keeping] = 54.3210987654321;
    r.stats[{Indicator::lane_keeping, SectionKind::straight, Role::reference}] = {-0.033, 0.081, 38000};
    r.stats[{Indicator::lane_keeping, SectionKind::straight, Role::candidate}] = {0.356, 0.554, 38600};
    r.levene[{Indicator::lane_keeping, SectionKind::straight}] = {1234.5, 1e-250};
    r.levene[{Indicator::lane_keeping, SectionKind::high_curve}] = {std::numeric_limits<double>::infinity(), 0.0};
    r.omitted[Indicator::non_interference] = "missing in candidate: channel 'driver_torque' absent";
    return r;
}

} // namespace

TEST(FrameTableValidation, WellFormedTableHasNoViolations) {
    EXPECT_TRUE(validate_frame_table(small_table(10)).empty());
}

TEST(FrameTableValidation, ChannelLengthMismatch) {
    auto t = small_table(10);
    t.channels[1].values.push_back(2.0);
    t.channels[1].present.push_back(1);
    const auto v = validate_frame_table(t);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, Violation::Kind::length_mismatch);
}

TEST(FrameTableValidation, NonFinitePresentValue) {
    auto t = small_table(4);
    t.channels[0].values[2] = std::numeric_limits<double>::quiet_NaN();
    const auto v = validate_frame_table(t);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, Violation::Kind::non_finite);
    // absent frames may hold anything
    t.channels[0].present[2] = 0;
    EXPECT_TRUE(validate_frame_table(t).empty());
}

TEST(FrameTableValidation, BadPeriodAndNames) {
    auto t = small_table(3);
    t.period = 0.0;
    t.names.pop_back();
    const auto v = validate_frame_table(t);
    ASSERT_EQ(v.size(), 2u);
    EXPECT_EQ(v[0].kind, Violation::Kind::bad_period);
    EXPECT_EQ(v[1].kind, Violation::Kind::name_mismatch);
}

TEST(SeriesValidation, NaNWhereValid) {
    Series s;
    s.samples = {0.0, std::numeric_limits<double>::quiet_NaN(), 1.0};
    s.valid_mask = {1, 1, 1};
    const auto v = validate_series(s);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, Violation::Kind::non_finite);
    s.valid_mask[1] = 0;
    EXPECT_TRUE(validate_series(s).empty());
}

TEST(Indicators, UnitsAndCodes) {
    EXPECT_EQ(unit(Indicator::lane_keeping), "m");
    EXPECT_EQ(unit(Indicator::dynamic_stability), "m/s");
    EXPECT_EQ(unit(Indicator::steering_stability), "deg");
    EXPECT_EQ(unit(Indicator::non_interference), "Nm");
    for (auto i : all_indicators) {
        EXPECT_EQ(parse_indicator(code(i)), i);
        EXPECT_EQ(make_indicator_series(i, {}).unit, unit(i));
    }
    EXPECT_THROW(parse_indicator("XX"), Error);
}

TEST(SectionKinds, RoundTripNames) {
    for (auto k : all_section_kinds) EXPECT_EQ(parse_section_kind(to_string(k)), k);
    EXPECT_THROW(parse_section_kind("hairpin"), Error);
}

TEST(SettingMeta, RatingRange) {
    json j = {{"setting_id", "A"}, {"grip_condition", "grip"}, {"subjective_rating", 101}};
    EXPECT_THROW(j.get<SettingMeta>(), Error);
    j["subjective_rating"] = 64.5;
    const auto m = j.get<SettingMeta>();
    EXPECT_EQ(m.grip_condition, GripCondition::grip);
    EXPECT_EQ(*m.subjective_rating, 64.5);
    EXPECT_EQ(json(m).get<SettingMeta>(), m);
}

TEST(ScoreReportJson, RoundTripIsExact) {
    const auto r = sample_report();
    const auto text = to_json(r).dump();
    const auto back = score_report_from_json(json::parse(text));
    EXPECT_EQ(back, r);
}

TEST(ScoreReportJson, EmptyReportRoundTrips) {
    ScoreReport r;
    EXPECT_EQ(score_report_from_json(to_json(r)), r);
}

TEST(ScoreReportJson, VersionMismatchIsVersionError) {
    auto j = to_json(sample_report());
    j["schema_version"] = 99;
    try {
        score_report_from_json(j);
        FAIL() << "expected a version error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::version);
        EXPECT_EQ(e.exit_code(), 4);
    }
}

TEST(ScoreReportJson, MalformedIsInputError) {
    auto j = to_json(sample_report());
    j.erase("similarities");
    try {
        score_report_from_json(j);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::input);
    }
}
