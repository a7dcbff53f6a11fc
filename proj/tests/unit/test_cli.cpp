#include <gtest/gtest.h>

#include <filesystem>
#include <numbers>
#include <sstream>

#include "../support/fixtures.hpp"
#include "lka/cli.hpp"

using namespace lka;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "lka");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("lka_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string frames_for(const SyntheticSetting& s, const std::string& name) {
        const auto r = resample(generate_drive(s));
        const auto t = filter_frames(r, default_filter_policy(r));
        write_frames(path(name), t);
        return path(name);
    }

    fs::path dir_;
};

SyntheticSetting small_setting(double severity = 1.0) {
    auto s = fixture::family_base();
    s.route = {{SectionKind::straight, 60}, {SectionKind::high_curve, 30}, {SectionKind::straight, 30}};
    return scaled_setting(s, severity);
}

FrameTable steering_only(std::vector<double> steer) {
    FrameTable t;
    t.names = {"steering_angle"};
    t.channels.resize(1);
    t.channels[0].values = std::move(steer);
    t.channels[0].present.assign(t.channels[0].values.size(), 1);
    t.frame_valid.assign(t.channels[0].values.size(), 1);
    return t;
}

} // namespace

TEST_F(CliTest, IngestReportsRouteDurations) {
    auto s = fixture::family_base();
    s.route = {{SectionKind::straight, 300}, {SectionKind::high_curve, 60}};
    write_file(path("drive.csv"), raw_log_to_csv(generate_drive(s)));
    const auto r = run_cli({"ingest", path("drive.csv"), "-o", path("out"), "--setting-id", "S1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(path("out/frames.bin")));
    const auto summary = read_json_file(path("out/summary.json"));
    EXPECT_NEAR(summary["sections"]["straight"]["duration_s"].get<double>(), 300.0, 0.01 + 1e-9);
    EXPECT_NEAR(summary["sections"]["high_curve"]["duration_s"].get<double>(), 60.0, 0.01 + 1e-9);
    EXPECT_EQ(summary["sections"]["low_curve"]["mmss"], "00:00");
    EXPECT_EQ(summary["setting"]["setting_id"], "S1");
    EXPECT_NE(r.out.find("05:00"), std::string::npos);
    EXPECT_EQ(read_frames(path("out/frames.bin")).metadata.setting_id, "S1");
}

TEST_F(CliTest, IngestEmptyCsvExitsTwo) {
    write_file(path("empty.csv"), "");
    EXPECT_EQ(run_cli({"ingest", path("empty.csv"), "-o", path("out")}).code, 2);
}

TEST_F(CliTest, IngestParseErrorHasLineNumber) {
    write_file(path("bad.csv"), "time,lkas_status\n0.0,1\n0.01,x\n");
    const auto r = run_cli({"ingest", path("bad.csv"), "-o", path("out")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST_F(CliTest, IngestUnwritableOutputExitsThree) {
    write_file(path("drive.csv"), raw_log_to_csv(generate_drive(small_setting())));
    EXPECT_EQ(run_cli({"ingest", path("drive.csv"), "-o", "/dev/null/out"}).code, 3);
}

TEST_F(CliTest, MissingInputFileExitsThree) {
    EXPECT_EQ(run_cli({"ingest", path("nope.csv"), "-o", path("out")}).code, 3);
}

TEST_F(CliTest, UnknownFlagExitsTwo) {
    EXPECT_EQ(run_cli({"score", "--bogus"}).code, 2);
    EXPECT_EQ(run_cli({}).code, 2);
    EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST_F(CliTest, ScoreSelfIsHundred) {
    const auto f = frames_for(small_setting(), "a.bin");
    const auto r = run_cli({"score", f, f, "-o", path("out"), "--jobs", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rep = score_report_from_json(read_json_file(path("out/report.json")));
    for (auto ind : all_indicators) EXPECT_EQ(rep.indicator_scores.at(ind), 100.0);
    EXPECT_NE(r.out.find("100.00"), std::string::npos) << r.out;
    EXPECT_TRUE(fs::exists(path("out/cells/LP_straight.csv")));
    EXPECT_TRUE(fs::exists(path("out/cells/IT_high_curve.svg")));
    const auto csv = read_file(path("out/cells/LP_straight.csv"));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "edge_lo,edge_hi,prob_ref,prob_cand");
}

TEST_F(CliTest, ScoreSeverityFourBelowHundred) {
    const auto a = frames_for(small_setting(1.0), "a.bin");
    const auto b = frames_for(small_setting(4.0), "b.bin");
    ASSERT_EQ(run_cli({"score", a, b, "-o", path("out")}).code, 0);
    const auto rep = score_report_from_json(read_json_file(path("out/report.json")));
    for (auto ind : all_indicators) EXPECT_LT(rep.indicator_scores.at(ind), 100.0);
}

TEST_F(CliTest, ScoreFlagsMissingDriverTorque) {
    const auto a = frames_for(small_setting(), "a.bin");
    auto t = read_frames(a);
    for (std::size_t i = 0; i < t.names.size(); ++i)
        if (t.names[i] == "driver_torque") {
            t.names.erase(t.names.begin() + static_cast<std::ptrdiff_t>(i));
            t.channels.erase(t.channels.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    write_frames(path("b.bin"), t);
    const auto r = run_cli({"score", a, path("b.bin"), "-o", path("out")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto line_start = r.out.find("IT non-interference");
    ASSERT_NE(line_start, std::string::npos);
    const auto line = r.out.substr(line_start, r.out.find('\n', line_start) - line_start);
    EXPECT_NE(line.find("omitted"), std::string::npos) << line;
}

TEST_F(CliTest, ScoreVersionMismatchExitsFour) {
    const auto a = frames_for(small_setting(), "a.bin");
    auto bytes = read_file(a);
    bytes[8] = 2;
    write_file(path("v2.bin"), bytes);
    EXPECT_EQ(run_cli({"score", a, path("v2.bin"), "-o", path("out")}).code, 4);
}

TEST_F(CliTest, ReportRendersAndChecksVersion) {
    const auto f = frames_for(small_setting(), "a.bin");
    ASSERT_EQ(run_cli({"score", f, f, "-o", path("out")}).code, 0);
    const auto r = run_cli({"report", path("out/report.json")});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("LP lane keeping"), std::string::npos);
    auto j = read_json_file(path("out/report.json"));
    j["schema_version"] = 2;
    write_file(path("v2.json"), j.dump());
    EXPECT_EQ(run_cli({"report", path("v2.json")}).code, 4);
}

TEST_F(CliTest, SpectrumZeroSignal) {
    write_frames(path("z.bin"), steering_only(std::vector<double>(3000, 0.0)));
    const auto r = run_cli({"spectrum", path("z.bin"), "-o", path("sp")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = read_json_file(path("sp/tremor.json"));
    EXPECT_TRUE(j["episodes"].empty());
    EXPECT_TRUE(fs::exists(path("sp/spectrogram.csv")));
    EXPECT_TRUE(fs::exists(path("sp/spectrogram.svg")));
}

TEST_F(CliTest, SpectrumInjectedTremor) {
    std::vector<double> x(6000, 0.0);
    for (std::size_t k = 2000; k < 3000; ++k) x[k] = 0.3 * std::sin(2.0 * std::numbers::pi * 1.5 * k * 0.01);
    write_frames(path("t.bin"), steering_only(x));
    const auto r = run_cli({"spectrum", path("t.bin"), "-o", path("sp"), "--tremor-band", "1,10",
                            "--tremor-threshold", "0.1"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = read_json_file(path("sp/tremor.json"));
    ASSERT_EQ(j["episodes"].size(), 1u);
    EXPECT_NEAR(j["episodes"][0]["peak_freq_hz"].get<double>(), 1.5, 100.0 / 256.0);
}

TEST_F(CliTest, SpectrumShortLogWarns) {
    write_frames(path("s.bin"), steering_only(std::vector<double>(200, 0.0)));
    const auto r = run_cli({"spectrum", path("s.bin"), "-o", path("sp")});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.err.find("warning"), std::string::npos);
    EXPECT_EQ(read_json_file(path("sp/tremor.json"))["warnings"].size(), 1u);
}

TEST_F(CliTest, SpectrumWithoutSteeringExitsTwo) {
    auto t = steering_only(std::vector<double>(500, 0.0));
    t.names[0] = "yaw_rate";
    write_frames(path("n.bin"), t);
    EXPECT_EQ(run_cli({"spectrum", path("n.bin"), "-o", path("sp")}).code, 2);
}

TEST_F(CliTest, SynthWritesIngestibleCsv) {
    write_file(path("setting.json"), to_json(small_setting()).dump());
    ASSERT_EQ(run_cli({"synth", path("setting.json"), "-o", path("a.csv"), "--seed", "9"}).code, 0);
    ASSERT_EQ(run_cli({"synth", path("setting.json"), "-o", path("b.csv"), "--seed", "9"}).code, 0);
    EXPECT_EQ(read_file(path("a.csv")), read_file(path("b.csv")));
    EXPECT_FALSE(parse_raw_log(read_file(path("a.csv"))).records.empty());
    write_file(path("bad.json"), "{\"route\": []}");
    EXPECT_EQ(run_cli({"synth", path("bad.json"), "-o", path("c.csv")}).code, 2);
}

namespace {

void write_report(const std::string& p, const std::string& id, double score) {
    ScoreReport r;
    r.reference_id = "ref";
    r.candidate_id = id;
    for (auto ind : all_indicators) r.indicator_scores[ind] = score;
    write_file(p, to_json(r).dump());
}

} // namespace

TEST_F(CliTest, CorrelateRatingsEqualScores) {
    const std::vector<std::pair<std::string, double>> s{{"B", 40}, {"C", 55}, {"D", 70}, {"E", 85}};
    std::string ratings = "setting_id,rating\n";
    std::vector<std::string> args{"correlate"};
    for (const auto& [id, v] : s) {
        write_report(path(id + ".json"), id, v);
        args.push_back(path(id + ".json"));
        ratings += id + "," + std::to_string(v) + "\n";
    }
    write_file(path("ratings.csv"), ratings);
    args.insert(args.end(), {"--ratings", path("ratings.csv"), "-o", path("corr.json")});
    ASSERT_EQ(run_cli(args).code, 0);
    const auto j = read_json_file(path("corr.json"));
    for (const auto& [k, e] : j["indicators"].items()) {
        EXPECT_NEAR(e["pearson_r"].get<double>(), 1.0, 1e-12);
        EXPECT_NEAR(e["slope"].get<double>(), 1.0, 1e-12);
        EXPECT_NEAR(e["intercept"].get<double>(), 0.0, 1e-10);
    }
}

TEST_F(CliTest, CorrelateAffineRatings) {
    const std::vector<std::pair<std::string, double>> s{{"B", 20}, {"C", 50}, {"D", 60}, {"E", 90}, {"F", 35}};
    std::string ratings = "setting_id,rating\n";
    std::vector<std::string> args{"correlate"};
    for (const auto& [id, v] : s) {
        write_report(path(id + ".json"), id, v);
        args.push_back(path(id + ".json"));
        ratings += id + "," + std::to_string(0.5 * v + 10.0) + "\n";
    }
    write_file(path("ratings.csv"), ratings);
    args.insert(args.end(), {"--ratings", path("ratings.csv"), "-o", path("corr.json")});
    ASSERT_EQ(run_cli(args).code, 0);
    const auto e = read_json_file(path("corr.json"))["indicators"]["LP"];
    EXPECT_NEAR(e["slope"].get<double>(), 0.5, 1e-12);
    EXPECT_NEAR(e["intercept"].get<double>(), 10.0, 1e-10);
    EXPECT_NEAR(e["pearson_r"].get<double>(), 1.0, 1e-12);
}

TEST_F(CliTest, CorrelateNeedsThreeMatches) {
    write_report(path("B.json"), "B", 40);
    write_report(path("C.json"), "C", 60);
    write_report(path("D.json"), "D", 80);
    write_file(path("ratings.csv"), "setting_id,rating\nB,10\nC,20\n");
    EXPECT_EQ(run_cli({"correlate", path("B.json"), path("C.json"), path("D.json"), "--ratings", path("ratings.csv"),
                       "-o", path("corr.json")})
                  .code,
              2);
}

TEST_F(CliTest, ConfigFileIsApplied) {
    write_file(path("cfg.json"), R"({"stft": {"window": 64, "hop": 64, "tremor_threshold": 0.5}, "output_dir": "cfg_out"})");
    write_frames(path("z.bin"), steering_only(std::vector<double>(640, 0.0)));
    ASSERT_EQ(run_cli({"--config", path("cfg.json"), "spectrum", path("z.bin")}).code, 0);
    const auto j = read_json_file(path("cfg_out/tremor.json"));
    EXPECT_EQ(j["window"], 64);
    EXPECT_EQ(j["threshold"], 0.5);
    write_file(path("bad_cfg.json"), R"({"curvature": {"straight_threshold_m": 10, "high_threshold_m": 100}})");
    EXPECT_EQ(run_cli({"--config", path("bad_cfg.json"), "spectrum", path("z.bin")}).code, 2);
    EXPECT_EQ(run_cli({"--config", path("none.json"), "spectrum", path("z.bin")}).code, 2);
}
