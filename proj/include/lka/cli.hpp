#pragma once

// Command-line front end: ingest, score, spectrum, synth, correlate, report.
// run() is callable in-process so tests can drive it with captured streams.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lka/error.hpp"
#include "lka/ingest.hpp"
#include "lka/io.hpp"
#include "lka/pipeline.hpp"
#include "lka/scoring.hpp"
#include "lka/segmentation.hpp"
#include "lka/spectral.hpp"
#include "lka/synthgen.hpp"
#include "lka/telemetry.hpp"

namespace lka::cli {

namespace fs = std::filesystem;

struct RunConfig {
    std::optional<fs::path> signal_map_path;
    std::optional<json> signal_map;
    double period = default_period;
    FilterPolicy filter;
    bool filter_turn_signal_auto = true; ///< use turn_signal when the channel exists
    std::optional<double> outlier_k = 5.0;
    CurvatureRule curvature;
    BinPolicy bins;
    std::map<SectionKind, double> weights;
    DeriveOptions derive;
    StftSpec stft;
    double tremor_lo_hz = 1.0;
    double tremor_hi_hz = 10.0;
    double tremor_threshold = 0.1; ///< deg, amplitude-scaled magnitude
    fs::path output_dir = "out";
};

namespace detail {

inline BinMode parse_bin_mode(const std::string& s) {
    if (s == "freedman_diaconis") return BinMode::freedman_diaconis;
    if (s == "fixed_width") return BinMode::fixed_width;
    if (s == "fixed_edges") return BinMode::fixed_edges;
    throw input_error("unknown bin mode '" + s + "'");
}

inline RangeMode parse_range_mode(const std::string& s) {
    if (s == "pooled_min_max") return RangeMode::pooled_min_max;
    if (s == "reference_min_max") return RangeMode::reference_min_max;
    if (s == "explicit_range") return RangeMode::explicit_range;
    throw input_error("unknown range mode '" + s + "'");
}

inline OutOfRange parse_out_of_range(const std::string& s) {
    if (s == "extend") return OutOfRange::extend;
    if (s == "drop") return OutOfRange::drop;
    throw input_error("unknown out_of_range policy '" + s + "'");
}

} // namespace detail

/// Reads a config file. Relative paths inside it resolve against its directory.
inline RunConfig run_config_from_json(const json& j, const fs::path& base_dir = {}) {
    RunConfig c;
    try {
        if (j.contains("signal_map")) {
            const auto& m = j.at("signal_map");
            if (m.is_string()) c.signal_map_path = base_dir / m.get<std::string>();
            else c.signal_map = m;
        }
        c.period = j.value("period", c.period);
        if (j.contains("filter")) {
            const auto& f = j.at("filter");
            c.filter.lkas_status_signal = f.value("lkas_status_signal", c.filter.lkas_status_signal);
            c.filter.active_value = f.value("active_value", c.filter.active_value);
            if (f.contains("turn_signal_signal")) {
                c.filter_turn_signal_auto = false;
                if (!f.at("turn_signal_signal").is_null())
                    c.filter.turn_signal_signal = f.at("turn_signal_signal").get<std::string>();
            }
            c.filter.lane_change_exclusion_window =
                f.value("lane_change_exclusion_window", c.filter.lane_change_exclusion_window);
            if (f.contains("outlier_k")) {
                if (f.at("outlier_k").is_null()) c.outlier_k.reset();
                else c.outlier_k = f.at("outlier_k").get<double>();
            }
        }
        if (j.contains("curvature")) {
            const auto& r = j.at("curvature");
            c.curvature.straight_threshold_m = r.value("straight_threshold_m", c.curvature.straight_threshold_m);
            c.curvature.high_threshold_m = r.value("high_threshold_m", c.curvature.high_threshold_m);
            c.curvature.min_section_frames = r.value("min_section_frames", c.curvature.min_section_frames);
        }
        if (j.contains("bins")) {
            const auto& b = j.at("bins");
            if (b.contains("mode")) c.bins.mode = detail::parse_bin_mode(b.at("mode").get<std::string>());
            if (b.contains("width")) c.bins.width = b.at("width").get<double>();
            if (b.contains("edges")) c.bins.edges = b.at("edges").get<std::vector<double>>();
            if (b.contains("range_mode"))
                c.bins.range_mode = detail::parse_range_mode(b.at("range_mode").get<std::string>());
            if (b.contains("range")) {
                const auto r = b.at("range").get<std::vector<double>>();
                if (r.size() != 2) throw input_error("bins.range needs two values");
                c.bins.range_lo = r[0];
                c.bins.range_hi = r[1];
            }
            if (b.contains("out_of_range"))
                c.bins.out_of_range = detail::parse_out_of_range(b.at("out_of_range").get<std::string>());
            c.bins.max_bins = b.value("max_bins", c.bins.max_bins);
        }
        if (j.contains("weights"))
            for (const auto& [k, w] : j.at("weights").items()) c.weights[parse_section_kind(k)] = w.get<double>();
        if (j.contains("derive")) {
            const auto& d = j.at("derive");
            c.derive.high_pass.cutoff_hz = d.value("hp_cutoff", c.derive.high_pass.cutoff_hz);
            c.derive.high_pass.order = d.value("hp_order", c.derive.high_pass.order);
            c.derive.it_deadband = d.value("it_deadband", c.derive.it_deadband);
            c.derive.ls_smooth_frames = d.value("ls_smooth", c.derive.ls_smooth_frames);
        }
        if (j.contains("stft")) {
            const auto& s = j.at("stft");
            c.stft.window_len = s.value("window", c.stft.window_len);
            c.stft.hop = s.value("hop", c.stft.hop);
            if (s.contains("tremor_band")) {
                const auto band = s.at("tremor_band").get<std::vector<double>>();
                if (band.size() != 2) throw input_error("stft.tremor_band needs two values");
                c.tremor_lo_hz = band[0];
                c.tremor_hi_hz = band[1];
            }
            c.tremor_threshold = s.value("tremor_threshold", c.tremor_threshold);
        }
        if (j.contains("output_dir")) c.output_dir = base_dir / j.at("output_dir").get<std::string>();
    } catch (const json::exception& e) {
        throw input_error(std::string("config: ") + e.what());
    }
    return c;
}

inline void validate(const RunConfig& c) {
    if (!(c.period > 0.0) || !std::isfinite(c.period)) throw input_error("period must be positive");
    if (c.signal_map_path && !fs::exists(*c.signal_map_path))
        throw input_error("signal map '" + c.signal_map_path->string() + "' does not exist");
    validate(c.filter);
    if (c.outlier_k && !(*c.outlier_k > 0.0)) throw input_error("outlier_k must be > 0");
    validate(c.curvature);
    validate(c.bins);
    for (const auto& [k, w] : c.weights)
        if (!(w >= 0.0) || !std::isfinite(w)) throw input_error("weights must be finite and >= 0");
    validate(c.stft);
    if (!(c.tremor_lo_hz >= 0.0 && c.tremor_hi_hz > c.tremor_lo_hz)) throw input_error("tremor band must be lo < hi");
    if (!(c.tremor_threshold >= 0.0)) throw input_error("tremor threshold must be >= 0");
    if (c.derive.ls_smooth_frames == 0) throw input_error("ls_smooth must be >= 1");
    if (!(c.derive.it_deadband >= 0.0)) throw input_error("it_deadband must be >= 0");
}

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

inline std::string mmss(double seconds) {
    const long s = std::lround(seconds);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%02ld:%02ld", s / 60, s % 60);
    return buf;
}

inline std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

/// Four-row table of indicator scores with the per-section similarities.
inline std::string format_score_table(const ScoreReport& r) {
    std::ostringstream os;
    os << "reference: " << r.reference_id << "\ncandidate: " << r.candidate_id << "\n\n";
    os << std::left << std::setw(34) << "indicator" << std::setw(9) << "p";
    for (auto k : all_section_kinds) os << std::setw(12) << to_string(k);
    os << '\n';
    for (auto ind : all_indicators) {
        const std::string label = std::string(code(ind)) + " " + std::string(display_name(ind));
        os << std::setw(34) << label;
        if (auto o = r.omitted.find(ind); o != r.omitted.end()) {
            os << "omitted (" << o->second << ")\n";
            continue;
        }
        auto p = r.indicator_scores.find(ind);
        os << std::setw(9) << (p != r.indicator_scores.end() ? fixed2(p->second) : "-");
        for (auto k : all_section_kinds) {
            auto s = r.per_section.find({ind, k});
            os << std::setw(12) << (s != r.per_section.end() ? fixed2(s->second) : "-");
        }
        os << '\n';
    }
    return os.str();
}

inline void write_cell_csv(std::ostream& os, const CellDetail& d) {
    os << "edge_lo,edge_hi,prob_ref,prob_cand\n";
    std::string line;
    for (std::size_t i = 0; i < d.reference.probs.size(); ++i) {
        line.clear();
        append_double(line, d.reference.edges[i]);
        line += ',';
        append_double(line, d.reference.edges[i + 1]);
        line += ',';
        append_double(line, d.reference.probs[i]);
        line += ',';
        append_double(line, d.candidate.probs[i]);
        os << line << '\n';
    }
}

/// Step outlines of both PDFs over a shaded intersection.
inline void write_cell_svg(std::ostream& os, const CellDetail& d, const std::string& title) {
    const double W = 640, H = 360, L = 50, R = 10, T = 30, B = 40;
    const auto& e = d.reference.edges;
    double pmax = 0.0;
    for (std::size_t i = 0; i < d.reference.probs.size(); ++i)
        pmax = std::max({pmax, d.reference.probs[i], d.candidate.probs[i]});
    if (pmax <= 0.0) pmax = 1.0;
    const double x0 = e.front(), x1 = e.back();
    auto X = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto Y = [&](double p) { return H - B - p / pmax * (H - T - B); };
    char buf[128];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.3f", v);
        return std::string(buf);
    };
    auto steps = [&](const std::vector<double>& p) {
        std::string pts = num(X(e.front())) + "," + num(Y(0));
        for (std::size_t i = 0; i < p.size(); ++i)
            pts += " " + num(X(e[i])) + "," + num(Y(p[i])) + " " + num(X(e[i + 1])) + "," + num(Y(p[i]));
        pts += " " + num(X(e.back())) + "," + num(Y(0));
        return pts;
    };
    std::vector<double> inter(d.reference.probs.size());
    for (std::size_t i = 0; i < inter.size(); ++i) inter[i] = std::min(d.reference.probs[i], d.candidate.probs[i]);

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << L << "\" y=\"20\" font-size=\"14\">" << title << "</text>\n";
    os << "<polygon points=\"" << steps(inter) << "\" fill=\"#bbbbbb\"/>\n";
    os << "<polyline points=\"" << steps(d.reference.probs) << "\" fill=\"none\" stroke=\"#1f77b4\"/>\n";
    os << "<polyline points=\"" << steps(d.candidate.probs) << "\" fill=\"none\" stroke=\"#d62728\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << L << "\" y=\"" << H - 10 << "\" font-size=\"11\">" << num(x0) << "</text>\n";
    os << "<text x=\"" << W - R << "\" y=\"" << H - 10 << "\" font-size=\"11\" text-anchor=\"end\">" << num(x1)
       << "</text>\n";
    os << "</svg>\n";
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

inline void write_text(const fs::path& p, const std::string& s) { write_file(p, s); }

inline FrameTable ingest_table(const fs::path& log_path, const RunConfig& cfg, const SettingMeta& meta) {
    ColumnSchema schema;
    if (cfg.signal_map_path) schema = schema_from_signal_map(read_json_file(*cfg.signal_map_path));
    else if (cfg.signal_map) schema = schema_from_signal_map(*cfg.signal_map);
    const std::string text = read_file(log_path);
    RawLog log = parse_raw_log(text, schema);
    log.metadata = meta;
    FrameTable t = resample(log, cfg.period);
    FilterPolicy policy = cfg.filter;
    if (cfg.filter_turn_signal_auto && t.find("turn_signal")) policy.turn_signal_signal = "turn_signal";
    return filter_frames(t, policy);
}

inline json section_summary(const FrameTable& t, const std::vector<CurveSection>& sections) {
    json j;
    j["setting"] = t.metadata;
    j["period_s"] = t.period;
    j["frames"] = t.frame_count();
    j["valid_frames"] = t.valid_count();
    j["duration_s"] = static_cast<double>(t.frame_count()) * t.period;
    json secs = json::object();
    const auto dur = section_durations(sections, t.period);
    double total = 0.0;
    for (auto k : all_section_kinds) {
        std::size_t count = 0, frames = 0;
        for (const auto& s : sections)
            if (s.kind == k) {
                ++count;
                frames += s.length();
            }
        const double d = dur.count(k) ? dur.at(k) : 0.0;
        total += d;
        secs[std::string(to_string(k))] = {{"duration_s", d}, {"mmss", mmss(d)}, {"frames", frames}, {"count", count}};
    }
    j["sections"] = secs;
    j["sections_total_s"] = total;
    return j;
}

inline int cmd_ingest(const fs::path& log_path, const RunConfig& cfg, const SettingMeta& meta, Streams io) {
    FrameTable t = ingest_table(log_path, cfg, meta);
    ensure_directory(cfg.output_dir);
    json summary;
    if (t.find("curvature_radius")) {
        summary = section_summary(t, segment(t, "curvature_radius", cfg.curvature));
    } else {
        io.err << "warning: no curvature_radius channel, section durations unavailable\n";
        summary = section_summary(t, {});
        summary["sections"] = nullptr;
    }
    write_frames(cfg.output_dir / "frames.bin", t);
    write_text(cfg.output_dir / "summary.json", summary.dump(2) + "\n");

    io.out << "setting " << t.metadata.setting_id << ": " << t.frame_count() << " frames, " << t.valid_count()
           << " valid, " << mmss(summary["duration_s"].get<double>()) << "\n";
    if (!summary["sections"].is_null())
        for (auto k : all_section_kinds) {
            const auto& s = summary["sections"][std::string(to_string(k))];
            io.out << "  " << std::left << std::setw(11) << to_string(k) << s["mmss"].get<std::string>() << "  ("
                   << s["count"].get<std::size_t>() << " sections)\n";
        }
    return 0;
}

inline DriveAnalysis analyze(const FrameTable& t, const RunConfig& cfg) {
    DeriveOptions opt = cfg.derive;
    opt.outlier_k = cfg.outlier_k;
    return analyze_drive(t, SignalRoles{}, cfg.curvature, opt);
}

inline int cmd_score(const fs::path& ref_path, const fs::path& cand_path, const RunConfig& cfg, unsigned jobs,
                     Streams io) {
    const auto ref = analyze(read_frames(ref_path), cfg);
    const auto cand = analyze(read_frames(cand_path), cfg);
    const auto cmp = compare_settings_detailed(ref, cand, cfg.bins, cfg.weights, jobs);

    ensure_directory(cfg.output_dir);
    write_text(cfg.output_dir / "report.json", to_json(cmp.report).dump(2) + "\n");
    const fs::path cells = cfg.output_dir / "cells";
    ensure_directory(cells);
    for (const auto& [cell, d] : cmp.cells) {
        const std::string stem = std::string(code(cell.first)) + "_" + std::string(to_string(cell.second));
        std::ostringstream csv, svg;
        write_cell_csv(csv, d);
        write_cell_svg(svg, d, stem + " s=" + fixed2(cmp.report.per_section.at(cell)));
        write_text(cells / (stem + ".csv"), csv.str());
        write_text(cells / (stem + ".svg"), svg.str());
    }
    io.out << format_score_table(cmp.report);
    return 0;
}

inline int cmd_spectrum(const fs::path& frames_path, const RunConfig& cfg, Streams io) {
    const FrameTable t = read_frames(frames_path);
    const Channel* steer = t.find("steering_angle");
    if (!steer) throw input_error("frames have no steering_angle channel");
    const auto fsa = filtered_steering_angle(channel_series(t, *steer), cfg.derive.high_pass);
    const Stft X = stft(fsa, cfg.stft);
    const Spectrogram sg = spectrogram(X, MagnitudeScale::amplitude);
    const auto episodes = tremor_report(sg, cfg.tremor_lo_hz, cfg.tremor_hi_hz, cfg.tremor_threshold);

    ensure_directory(cfg.output_dir);
    std::ostringstream csv, svg;
    write_spectrogram_csv(csv, sg);
    write_spectrogram_svg(svg, sg);
    write_text(cfg.output_dir / "spectrogram.csv", csv.str());
    write_text(cfg.output_dir / "spectrogram.svg", svg.str());
    json j;
    j["band_hz"] = {cfg.tremor_lo_hz, cfg.tremor_hi_hz};
    j["threshold"] = cfg.tremor_threshold;
    j["scale"] = "amplitude";
    j["window"] = cfg.stft.window_len;
    j["hop"] = cfg.stft.hop;
    j["episodes"] = json::array();
    for (const auto& e : episodes) j["episodes"].push_back(to_json(e));
    j["warnings"] = X.warnings;
    write_text(cfg.output_dir / "tremor.json", j.dump(2) + "\n");

    for (const auto& w : X.warnings) io.err << "warning: " << w << "\n";
    io.out << sg.time_axis.size() << " spectrogram columns, " << episodes.size() << " tremor episode(s)\n";
    for (const auto& e : episodes)
        io.out << "  " << fixed2(e.t_start) << "-" << fixed2(e.t_end) << " s  peak " << fixed2(e.peak_freq_hz)
               << " Hz  " << e.peak_magnitude << " deg\n";
    return 0;
}

inline int cmd_synth(const fs::path& setting_path, const fs::path& out_csv, std::optional<std::uint64_t> seed,
                     std::optional<double> severity, Streams io) {
    SyntheticSetting s = synthetic_setting_from_json(read_json_file(setting_path));
    if (seed) s.seed = *seed;
    if (severity) s = scaled_setting(s, *severity);
    const RawLog log = generate_drive(s);
    if (out_csv.has_parent_path()) ensure_directory(out_csv.parent_path());
    write_text(out_csv, raw_log_to_csv(log));
    io.out << "wrote " << log.records.size() << " records for setting " << s.meta.setting_id << " to "
           << out_csv.string() << "\n";
    return 0;
}

inline std::map<std::string, double> read_ratings(const fs::path& path) {
    const std::string text = read_file(path);
    std::map<std::string, double> out;
    std::vector<std::string_view> f;
    std::size_t line_no = 0;
    std::string_view rest = text;
    while (!rest.empty()) {
        const auto nl = rest.find('\n');
        std::string_view line = rest.substr(0, nl);
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
        ++line_no;
        line = lka::detail::trim(line);
        if (line.empty()) continue;
        lka::detail::split_line(line, f);
        if (f.size() != 2) throw input_error(path.string() + ":" + std::to_string(line_no) + ": expected 2 fields");
        double v = 0.0;
        if (!lka::detail::parse_double(lka::detail::trim(f[1]), v)) {
            if (line_no == 1) continue; // header
            throw input_error(path.string() + ":" + std::to_string(line_no) + ": invalid rating");
        }
        if (!(v >= 0.0 && v <= 100.0))
            throw input_error(path.string() + ":" + std::to_string(line_no) + ": rating outside [0, 100]");
        out[std::string(lka::detail::trim(f[0]))] = v;
    }
    return out;
}

inline int cmd_correlate(const std::vector<fs::path>& reports, const fs::path& ratings_path, const fs::path& out_path,
                         Streams io) {
    const auto ratings = read_ratings(ratings_path);
    std::vector<ScoreReport> matched;
    for (const auto& p : reports) {
        auto r = score_report_from_json(read_json_file(p));
        if (ratings.count(r.candidate_id)) matched.push_back(std::move(r));
        else io.err << "warning: no rating for setting '" << r.candidate_id << "'\n";
    }
    if (matched.size() < 3)
        throw input_error("correlation needs at least 3 rated settings, got " + std::to_string(matched.size()));

    json j;
    j["settings"] = json::array();
    for (const auto& r : matched) j["settings"].push_back(r.candidate_id);
    j["indicators"] = json::object();
    for (auto ind : all_indicators) {
        std::vector<double> x, y;
        for (const auto& r : matched)
            if (auto it = r.indicator_scores.find(ind); it != r.indicator_scores.end()) {
                x.push_back(it->second);
                y.push_back(ratings.at(r.candidate_id));
            }
        json e;
        e["n"] = x.size();
        try {
            if (x.size() < 3) throw input_error("fewer than 3 settings with this score");
            const auto pr = pearson(x, y);
            const auto reg = linear_regression(x, y);
            e["pearson_r"] = pr.r;
            e["t"] = lka::detail::number_to_json(pr.t_stat);
            e["p_value"] = pr.p_value;
            e["intercept"] = reg.intercept;
            e["slope"] = reg.slope;
            e["intercept_p"] = reg.intercept_p;
            e["slope_p"] = reg.slope_p;
            e["r_squared"] = reg.r_squared;
            io.out << std::left << std::setw(4) << code(ind) << " r=" << fixed2(pr.r) << " p=" << pr.p_value
                   << " rating = " << reg.intercept << " + " << reg.slope << " * score\n";
        } catch (const Error& err) {
            e["error"] = err.what();
            io.out << std::left << std::setw(4) << code(ind) << " " << err.what() << "\n";
        }
        j["indicators"][std::string(code(ind))] = e;
    }
    if (out_path.has_parent_path()) ensure_directory(out_path.parent_path());
    write_text(out_path, j.dump(2) + "\n");
    return 0;
}

inline int cmd_report(const fs::path& report_path, Streams io) {
    const auto r = score_report_from_json(read_json_file(report_path));
    io.out << format_score_table(r);
    if (!r.levene.empty()) {
        io.out << "\nLevene (equal variances)\n";
        for (const auto& [cell, l] : r.levene)
            io.out << "  " << std::left << std::setw(4) << code(cell.first) << std::setw(11) << to_string(cell.second)
                   << " W=" << l.W << " p=" << l.p_value << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"LKAS intrusiveness analytics"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    app.add_option("--config", config_path, "run configuration (JSON)");
    app.add_option("--seed", seed, "override the synthetic seed");
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

    // shared overrides
    std::optional<double> period, straight, high, hp_cutoff, deadband, tremor_threshold;
    std::optional<std::size_t> ls_smooth, stft_window, stft_hop;
    std::vector<double> tremor_band;
    std::optional<std::string> signal_map, output_dir;

    auto add_output = [&](CLI::App* c) { c->add_option("-o,--output-dir", output_dir, "output directory"); };
    auto add_curvature = [&](CLI::App* c) {
        c->add_option("--straight-threshold", straight, "straight radius threshold (m)");
        c->add_option("--high-threshold", high, "high-curve radius threshold (m)");
    };
    auto add_derive = [&](CLI::App* c) {
        c->add_option("--hp-cutoff", hp_cutoff, "steering high-pass cutoff (Hz)");
        c->add_option("--it-deadband", deadband, "interference torque deadband (Nm)");
        c->add_option("--ls-smooth", ls_smooth, "lateral speed smoothing (frames)");
    };

    auto* ingest = app.add_subcommand("ingest", "parse a CSV log into a frame table");
    std::string log_path;
    SettingMeta meta;
    std::optional<std::string> setting_id, grip, vehicle;
    std::optional<double> rating;
    ingest->add_option("log", log_path, "CSV log")->required();
    ingest->add_option("--period", period, "resampling period (s)");
    ingest->add_option("--signal-map", signal_map, "logical -> physical column map (JSON)");
    ingest->add_option("--setting-id", setting_id, "defaults to the log file stem");
    ingest->add_option("--grip", grip, "grip | non_grip");
    ingest->add_option("--vehicle-model", vehicle);
    ingest->add_option("--rating", rating, "subjective rating in [0, 100]");
    add_output(ingest);
    add_curvature(ingest);

    auto* score = app.add_subcommand("score", "compare a candidate drive with a reference");
    std::string ref_frames, cand_frames;
    score->add_option("reference", ref_frames, "reference frames.bin")->required();
    score->add_option("candidate", cand_frames, "candidate frames.bin")->required();
    add_output(score);
    add_curvature(score);
    add_derive(score);

    auto* spectrum = app.add_subcommand("spectrum", "steering spectrogram and tremor report");
    std::string spec_frames;
    spectrum->add_option("frames", spec_frames, "frames.bin")->required();
    spectrum->add_option("--hp-cutoff", hp_cutoff, "steering high-pass cutoff (Hz)");
    spectrum->add_option("--stft-window", stft_window, "window length (samples)");
    spectrum->add_option("--stft-hop", stft_hop, "hop (samples)");
    spectrum->add_option("--tremor-band", tremor_band, "lo,hi (Hz)")->expected(2)->delimiter(',');
    spectrum->add_option("--tremor-threshold", tremor_threshold, "amplitude threshold (deg)");
    add_output(spectrum);

    auto* synth = app.add_subcommand("synth", "generate a synthetic drive log");
    std::string setting_path, synth_out = "drive.csv";
    std::optional<double> severity;
    synth->add_option("setting", setting_path, "setting JSON")->required();
    synth->add_option("-o,--output", synth_out, "CSV path");
    synth->add_option("--severity", severity, "scale the sd targets")->check(CLI::PositiveNumber);

    auto* correlate = app.add_subcommand("correlate", "correlate indicator scores with ratings");
    std::vector<std::string> report_paths;
    std::string ratings_path, corr_out = "correlation.json";
    correlate->add_option("reports", report_paths, "report.json files")->required();
    correlate->add_option("--ratings", ratings_path, "CSV: setting_id,rating")->required();
    correlate->add_option("-o,--output", corr_out, "output JSON");

    auto* report = app.add_subcommand("report", "print a saved score report");
    std::string report_path;
    report->add_option("report", report_path, "report.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::input);
    }

    try {
        RunConfig cfg;
        if (config_path) {
            const fs::path p = *config_path;
            if (!fs::exists(p)) throw input_error("config '" + p.string() + "' does not exist");
            cfg = run_config_from_json(read_json_file(p), p.parent_path());
        }
        if (period) cfg.period = *period;
        if (signal_map) cfg.signal_map_path = *signal_map;
        if (output_dir) cfg.output_dir = *output_dir;
        if (straight) cfg.curvature.straight_threshold_m = *straight;
        if (high) cfg.curvature.high_threshold_m = *high;
        if (hp_cutoff) cfg.derive.high_pass.cutoff_hz = *hp_cutoff;
        if (deadband) cfg.derive.it_deadband = *deadband;
        if (ls_smooth) cfg.derive.ls_smooth_frames = *ls_smooth;
        if (stft_window) cfg.stft.window_len = *stft_window;
        if (stft_hop) cfg.stft.hop = *stft_hop;
        if (tremor_band.size() == 2) {
            cfg.tremor_lo_hz = tremor_band[0];
            cfg.tremor_hi_hz = tremor_band[1];
        }
        if (tremor_threshold) cfg.tremor_threshold = *tremor_threshold;
        validate(cfg);

        Streams io{out, err};
        if (*ingest) {
            meta.setting_id = setting_id ? *setting_id : fs::path(log_path).stem().string();
            if (grip) meta.grip_condition = parse_grip(*grip);
            if (vehicle) meta.vehicle_model = *vehicle;
            meta.subjective_rating = rating;
            validate(meta);
            return cmd_ingest(log_path, cfg, meta, io);
        }
        if (*score) return cmd_score(ref_frames, cand_frames, cfg, jobs, io);
        if (*spectrum) return cmd_spectrum(spec_frames, cfg, io);
        if (*synth) return cmd_synth(setting_path, synth_out, seed, severity, io);
        if (*correlate) {
            std::vector<fs::path> paths(report_paths.begin(), report_paths.end());
            return cmd_correlate(paths, ratings_path, corr_out, io);
        }
        if (*report) return cmd_report(report_path, io);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    }
    return 0;
}

} // namespace lka::cli
