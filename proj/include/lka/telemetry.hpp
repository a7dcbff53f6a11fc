#pragma once

// Shared domain types: raw logs, resampled frame tables, curve sections,
// derived indicator series and setting-vs-reference score reports.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lka/error.hpp"

namespace lka {

using json = nlohmann::json;

inline constexpr double default_period = 0.01;

// ---------------------------------------------------------------------------
// Settings
// ---------------------------------------------------------------------------

enum class GripCondition { grip, non_grip };

inline std::string_view to_string(GripCondition g) { return g == GripCondition::grip ? "grip" : "non_grip"; }

inline GripCondition parse_grip(std::string_view s) {
    if (s == "grip") return GripCondition::grip;
    if (s == "non_grip") return GripCondition::non_grip;
    throw input_error("unknown grip condition '" + std::string(s) + "'");
}

struct SettingMeta {
    std::string setting_id;
    GripCondition grip_condition = GripCondition::non_grip;
    std::string vehicle_model;
    std::optional<double> subjective_rating; ///< average rating on a 0..100 scale

    bool operator==(const SettingMeta&) const = default;
};

inline void validate(const SettingMeta& m) {
    if (m.subjective_rating && !(*m.subjective_rating >= 0.0 && *m.subjective_rating <= 100.0))
        throw input_error("subjective_rating must lie in [0, 100]");
}

inline void to_json(json& j, const SettingMeta& m) {
    j = json{{"setting_id", m.setting_id},
             {"grip_condition", std::string(to_string(m.grip_condition))},
             {"vehicle_model", m.vehicle_model}};
    if (m.subjective_rating) j["subjective_rating"] = *m.subjective_rating;
}

inline void from_json(const json& j, SettingMeta& m) {
    m.setting_id = j.value("setting_id", std::string{});
    m.grip_condition = parse_grip(j.value("grip_condition", std::string("non_grip")));
    m.vehicle_model = j.value("vehicle_model", std::string{});
    if (j.contains("subjective_rating") && !j.at("subjective_rating").is_null())
        m.subjective_rating = j.at("subjective_rating").get<double>();
    else
        m.subjective_rating.reset();
    validate(m);
}

// ---------------------------------------------------------------------------
// Raw logs
// ---------------------------------------------------------------------------

/// One decoded observation. `signal` indexes RawLog::signal_names.
struct RawRecord {
    double timestamp = 0.0; ///< seconds relative to log start
    std::uint32_t signal = 0;
    double value = 0.0;

    bool operator==(const RawRecord&) const = default;
};

/// Sparse multi-rate record stream; records are sorted by timestamp, ties
/// keep input order.
struct RawLog {
    std::vector<RawRecord> records;
    std::vector<std::string> signal_names;
    SettingMeta metadata;

    std::optional<std::uint32_t> signal_index(std::string_view name) const {
        for (std::size_t i = 0; i < signal_names.size(); ++i)
            if (signal_names[i] == name) return static_cast<std::uint32_t>(i);
        return std::nullopt;
    }

    bool operator==(const RawLog&) const = default;
};

// ---------------------------------------------------------------------------
// Frame tables
// ---------------------------------------------------------------------------

/// One resampled signal. `present[k] == 0` marks frame k as not observed.
struct Channel {
    std::vector<double> values;
    std::vector<std::uint8_t> present;

    std::size_t size() const { return values.size(); }
    std::optional<double> at(std::size_t k) const {
        if (present[k]) return values[k];
        return std::nullopt;
    }

    bool operator==(const Channel&) const = default;
};

/// Dense fixed-period table. Frame k sits at start_time + k * period.
/// Filtering clears `frame_valid` and leaves channel values untouched.
struct FrameTable {
    double period = default_period;
    double start_time = 0.0;
    std::vector<std::string> names;
    std::vector<Channel> channels;
    std::vector<std::uint8_t> frame_valid;
    SettingMeta metadata;

    std::size_t frame_count() const { return frame_valid.size(); }
    double time_at(std::size_t k) const { return start_time + static_cast<double>(k) * period; }

    const Channel* find(std::string_view name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return &channels[i];
        return nullptr;
    }

    std::size_t valid_count() const {
        std::size_t n = 0;
        for (auto v : frame_valid) n += v ? 1 : 0;
        return n;
    }

    bool operator==(const FrameTable&) const = default;
};

// ---------------------------------------------------------------------------
// Sections and indicators
// ---------------------------------------------------------------------------

enum class SectionKind { straight, low_curve, high_curve };

inline constexpr std::array<SectionKind, 3> all_section_kinds{
    SectionKind::straight, SectionKind::low_curve, SectionKind::high_curve};

inline std::string_view to_string(SectionKind k) {
    switch (k) {
    case SectionKind::straight: return "straight";
    case SectionKind::low_curve: return "low_curve";
    case SectionKind::high_curve: return "high_curve";
    }
    return "?";
}

inline SectionKind parse_section_kind(std::string_view s) {
    for (auto k : all_section_kinds)
        if (to_string(k) == s) return k;
    throw input_error("unknown section kind '" + std::string(s) + "'");
}

/// Half-open frame interval [begin, end) of one drive.
struct CurveSection {
    SectionKind kind = SectionKind::straight;
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - begin; }
    bool operator==(const CurveSection&) const = default;
};

enum class Indicator { lane_keeping, dynamic_stability, steering_stability, non_interference };

inline constexpr std::array<Indicator, 4> all_indicators{
    Indicator::lane_keeping, Indicator::dynamic_stability, Indicator::steering_stability,
    Indicator::non_interference};

/// Variable code of the derived variable backing each indicator.
inline std::string_view code(Indicator i) {
    switch (i) {
    case Indicator::lane_keeping: return "LP";
    case Indicator::dynamic_stability: return "LS";
    case Indicator::steering_stability: return "FSA";
    case Indicator::non_interference: return "IT";
    }
    return "?";
}

inline std::string_view unit(Indicator i) {
    switch (i) {
    case Indicator::lane_keeping: return "m";
    case Indicator::dynamic_stability: return "m/s";
    case Indicator::steering_stability: return "deg";
    case Indicator::non_interference: return "Nm";
    }
    return "?";
}

inline std::string_view display_name(Indicator i) {
    switch (i) {
    case Indicator::lane_keeping: return "lane keeping";
    case Indicator::dynamic_stability: return "dynamic behaviour stability";
    case Indicator::steering_stability: return "steering stability";
    case Indicator::non_interference: return "non-interference";
    }
    return "?";
}

inline Indicator parse_indicator(std::string_view s) {
    for (auto i : all_indicators)
        if (code(i) == s) return i;
    throw input_error("unknown indicator '" + std::string(s) + "'");
}

/// A sampled signal aligned to a frame grid.
struct Series {
    double period = default_period;
    double start_time = 0.0;
    std::vector<double> samples;
    std::vector<std::uint8_t> valid_mask;

    std::size_t size() const { return samples.size(); }
    bool operator==(const Series&) const = default;
};

struct IndicatorSeries : Series {
    Indicator indicator = Indicator::lane_keeping;
    std::string unit;

    bool operator==(const IndicatorSeries&) const = default;
};

inline IndicatorSeries make_indicator_series(Indicator ind, Series s) {
    IndicatorSeries out;
    static_cast<Series&>(out) = std::move(s);
    out.indicator = ind;
    out.unit = std::string(unit(ind));
    return out;
}

/// Extracts a channel as a Series; absent or filtered frames are invalid.
inline Series channel_series(const FrameTable& t, const Channel& c) {
    Series s;
    s.period = t.period;
    s.start_time = t.start_time;
    s.samples = c.values;
    s.valid_mask.resize(c.size());
    for (std::size_t k = 0; k < c.size(); ++k)
        s.valid_mask[k] = (c.present[k] && t.frame_valid[k]) ? 1 : 0;
    return s;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
    enum class Kind { length_mismatch, non_finite, bad_period, name_mismatch };
    Kind kind;
    std::string detail;
};

inline std::vector<Violation> validate_frame_table(const FrameTable& t) {
    std::vector<Violation> out;
    if (!(t.period > 0.0) || !std::isfinite(t.period))
        out.push_back({Violation::Kind::bad_period, "period must be positive and finite"});
    if (t.names.size() != t.channels.size())
        out.push_back({Violation::Kind::name_mismatch,
                       std::to_string(t.names.size()) + " names for " +
                           std::to_string(t.channels.size()) + " channels"});
    const std::size_t n = t.frame_valid.size();
    for (std::size_t c = 0; c < t.channels.size(); ++c) {
        const auto& ch = t.channels[c];
        const std::string label = c < t.names.size() ? t.names[c] : "#" + std::to_string(c);
        if (ch.values.size() != n || ch.present.size() != n) {
            out.push_back({Violation::Kind::length_mismatch,
                           "channel '" + label + "' has " + std::to_string(ch.values.size()) +
                               " values / " + std::to_string(ch.present.size()) +
                               " markers, table has " + std::to_string(n) + " frames"});
            continue;
        }
        for (std::size_t k = 0; k < n; ++k) {
            if (ch.present[k] && !std::isfinite(ch.values[k])) {
                out.push_back({Violation::Kind::non_finite,
                               "channel '" + label + "' frame " + std::to_string(k)});
                break;
            }
        }
    }
    return out;
}

inline std::vector<Violation> validate_series(const Series& s) {
    std::vector<Violation> out;
    if (s.samples.size() != s.valid_mask.size())
        out.push_back({Violation::Kind::length_mismatch,
                       std::to_string(s.samples.size()) + " samples vs " +
                           std::to_string(s.valid_mask.size()) + " mask entries"});
    const std::size_t n = std::min(s.samples.size(), s.valid_mask.size());
    for (std::size_t k = 0; k < n; ++k) {
        if (s.valid_mask[k] && !std::isfinite(s.samples[k])) {
            out.push_back({Violation::Kind::non_finite, "sample " + std::to_string(k)});
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Score reports
// ---------------------------------------------------------------------------

struct Descriptive {
    double mean = 0.0;
    double sd = 0.0;
    std::size_t n = 0;

    bool operator==(const Descriptive&) const = default;
};

struct LeveneResult {
    double W = 0.0;
    double p_value = 1.0;

    bool operator==(const LeveneResult&) const = default;
};

enum class Role { reference, candidate };

inline std::string_view to_string(Role r) { return r == Role::reference ? "reference" : "candidate"; }

inline Role parse_role(std::string_view s) {
    if (s == "reference") return Role::reference;
    if (s == "candidate") return Role::candidate;
    throw input_error("unknown role '" + std::string(s) + "'");
}

inline constexpr int report_schema_version = 1;

using Cell = std::pair<Indicator, SectionKind>;

struct ScoreReport {
    int schema_version = report_schema_version;
    std::string reference_id;
    std::string candidate_id;
    std::map<Cell, double> per_section;                 ///< similarity s in [0, 100]
    std::map<SectionKind, double> weights;              ///< w >= 0
    std::map<Indicator, double> indicator_scores;       ///< p in [0, 100]
    std::map<std::tuple<Indicator, SectionKind, Role>, Descriptive> stats;
    std::map<Cell, LeveneResult> levene;
    std::map<Indicator, std::string> omitted;           ///< indicator -> reason

    bool operator==(const ScoreReport&) const = default;
};

namespace detail {

// JSON has no infinities; encode them as strings so reports round-trip.
inline json number_to_json(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

inline double number_from_json(const json& j) {
    if (j.is_number()) return j.get<double>();
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw input_error("expected a number, got '" + s + "'");
}

} // namespace detail

inline json to_json(const ScoreReport& r) {
    json j;
    j["schema_version"] = r.schema_version;
    j["reference_id"] = r.reference_id;
    j["candidate_id"] = r.candidate_id;
    j["weights"] = json::object();
    for (const auto& [k, w] : r.weights) j["weights"][std::string(to_string(k))] = w;
    j["indicator_scores"] = json::object();
    for (const auto& [i, p] : r.indicator_scores) j["indicator_scores"][std::string(code(i))] = p;
    j["similarities"] = json::array();
    for (const auto& [cell, s] : r.per_section)
        j["similarities"].push_back({{"indicator", code(cell.first)},
                                     {"section", to_string(cell.second)},
                                     {"similarity", s}});
    j["stats"] = json::array();
    for (const auto& [key, d] : r.stats)
        j["stats"].push_back({{"indicator", code(std::get<0>(key))},
                              {"section", to_string(std::get<1>(key))},
                              {"setting", to_string(std::get<2>(key))},
                              {"mean", d.mean},
                              {"sd", d.sd},
                              {"n", d.n}});
    j["levene"] = json::array();
    for (const auto& [cell, l] : r.levene)
        j["levene"].push_back({{"indicator", code(cell.first)},
                               {"section", to_string(cell.second)},
                               {"W", detail::number_to_json(l.W)},
                               {"p_value", l.p_value}});
    j["omitted"] = json::array();
    for (const auto& [i, reason] : r.omitted)
        j["omitted"].push_back({{"indicator", code(i)}, {"reason", reason}});
    return j;
}

inline ScoreReport score_report_from_json(const json& j) {
    ScoreReport r;
    try {
        r.schema_version = j.at("schema_version").get<int>();
        if (r.schema_version != report_schema_version)
            throw version_error("report schema version " + std::to_string(r.schema_version) +
                                ", expected " + std::to_string(report_schema_version));
        r.reference_id = j.at("reference_id").get<std::string>();
        r.candidate_id = j.at("candidate_id").get<std::string>();
        for (const auto& [k, w] : j.at("weights").items()) r.weights[parse_section_kind(k)] = w.get<double>();
        for (const auto& [k, p] : j.at("indicator_scores").items())
            r.indicator_scores[parse_indicator(k)] = p.get<double>();
        for (const auto& e : j.at("similarities"))
            r.per_section[{parse_indicator(e.at("indicator").get<std::string>()),
                           parse_section_kind(e.at("section").get<std::string>())}] =
                e.at("similarity").get<double>();
        for (const auto& e : j.at("stats"))
            r.stats[{parse_indicator(e.at("indicator").get<std::string>()),
                     parse_section_kind(e.at("section").get<std::string>()),
                     parse_role(e.at("setting").get<std::string>())}] =
                Descriptive{e.at("mean").get<double>(), e.at("sd").get<double>(),
                            e.at("n").get<std::size_t>()};
        for (const auto& e : j.at("levene"))
            r.levene[{parse_indicator(e.at("indicator").get<std::string>()),
                      parse_section_kind(e.at("section").get<std::string>())}] =
                LeveneResult{detail::number_from_json(e.at("W")), e.at("p_value").get<double>()};
        for (const auto& e : j.at("omitted"))
            r.omitted[parse_indicator(e.at("indicator").get<std::string>())] =
                e.at("reason").get<std::string>();
    } catch (const json::exception& e) {
        throw input_error(std::string("malformed score report: ") + e.what());
    }
    return r;
}

} // namespace lka
