#pragma once

// CSV log parsing, carry-forward resampling onto a fixed grid, frame
// filters and robust outlier removal.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "lka/error.hpp"
#include "lka/telemetry.hpp"

namespace lka {

/// How CSV columns become signals.
struct ColumnSchema {
    std::string time_column = "time";
    std::map<std::string, std::string> rename; ///< physical column -> logical signal name
    bool keep_unmapped = true;                 ///< false: only renamed columns are ingested
    double time_tolerance = 0.001;             ///< out-of-order slack (s) that is silently reordered
};

/// Builds a schema from a signal-name map (logical role -> physical column).
/// Only mapped columns are ingested.
inline ColumnSchema schema_from_signal_map(const json& map) {
    ColumnSchema s;
    s.keep_unmapped = false;
    if (!map.is_object()) throw input_error("signal map must be a JSON object");
    for (const auto& [logical, physical] : map.items()) {
        if (!physical.is_string()) throw input_error("signal map entry '" + logical + "' must be a string");
        if (logical == "time") {
            s.time_column = physical.get<std::string>();
            continue;
        }
        s.rename[physical.get<std::string>()] = logical;
    }
    return s;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

inline bool parse_double(std::string_view s, double& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

/// Splits one CSV line into `fields` (views into `line`); no quoted commas.
inline void split_line(std::string_view line, std::vector<std::string_view>& fields) {
    fields.clear();
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            return;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

} // namespace detail

/// Parses a sparse CSV log: a time column plus one column per signal, where an
/// empty cell means "not recorded". One record is produced per non-empty cell.
inline RawLog parse_raw_log(std::string_view text, const ColumnSchema& schema = {}) {
    RawLog log;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    auto next_line = [&](std::string_view& line) {
        if (pos >= text.size()) return false;
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        return true;
    };

    std::string_view line;
    bool have_header = false;
    while (next_line(line)) {
        if (!detail::trim(line).empty()) {
            have_header = true;
            break;
        }
    }
    if (!have_header) throw input_error("empty CSV: missing header row");

    std::vector<std::string_view> fields;
    detail::split_line(line, fields);
    const std::size_t n_fields = fields.size();
    std::optional<std::size_t> time_col;
    std::vector<std::int64_t> column_signal(n_fields, -1);
    std::vector<std::string> column_names(n_fields);
    for (std::size_t c = 0; c < n_fields; ++c) {
        const std::string name(fields[c]);
        column_names[c] = name;
        if (name == schema.time_column) {
            if (time_col) throw input_error("line " + std::to_string(line_no) + ": duplicate time column");
            time_col = c;
            continue;
        }
        std::string logical;
        if (auto it = schema.rename.find(name); it != schema.rename.end())
            logical = it->second;
        else if (schema.keep_unmapped)
            logical = name;
        else
            continue;
        if (log.signal_index(logical))
            throw input_error("line " + std::to_string(line_no) + ": duplicate signal column '" + logical + "'");
        column_signal[c] = static_cast<std::int64_t>(log.signal_names.size());
        log.signal_names.push_back(logical);
    }
    if (!time_col) throw input_error("header has no '" + schema.time_column + "' column");
    if (log.signal_names.empty()) throw input_error("header has no signal columns");

    bool needs_sort = false;
    double max_time = -1.0;
    while (next_line(line)) {
        if (detail::trim(line).empty()) continue;
        detail::split_line(line, fields);
        if (fields.size() != n_fields)
            throw input_error("line " + std::to_string(line_no) + ": expected " + std::to_string(n_fields) +
                              " fields, got " + std::to_string(fields.size()));
        double t = 0.0;
        if (!detail::parse_double(fields[*time_col], t) || !std::isfinite(t))
            throw input_error("line " + std::to_string(line_no) + ", column '" + schema.time_column +
                              "': invalid time '" + std::string(fields[*time_col]) + "'");
        if (t < 0.0) throw input_error("line " + std::to_string(line_no) + ": negative time");
        if (t < max_time) {
            if (max_time - t > schema.time_tolerance)
                throw input_error("line " + std::to_string(line_no) + ": time goes backwards by " +
                                  std::to_string(max_time - t) + " s");
            needs_sort = true;
        }
        max_time = std::max(max_time, t);
        for (std::size_t c = 0; c < n_fields; ++c) {
            if (column_signal[c] < 0 || fields[c].empty()) continue;
            double v = 0.0;
            if (!detail::parse_double(fields[c], v) || !std::isfinite(v))
                throw input_error("line " + std::to_string(line_no) + ", column '" + column_names[c] +
                                  "': invalid value '" + std::string(fields[c]) + "'");
            log.records.push_back({t, static_cast<std::uint32_t>(column_signal[c]), v});
        }
    }
    if (needs_sort)
        std::stable_sort(log.records.begin(), log.records.end(),
                         [](const RawRecord& a, const RawRecord& b) { return a.timestamp < b.timestamp; });
    return log;
}

namespace detail {
// Slack for comparing decimal timestamps against k * period.
inline constexpr double grid_eps = 1e-6;
} // namespace detail

/// Last-observation-carried-forward resampling. Frame k holds, per signal, the
/// most recent record with timestamp <= frame time; frames before a signal's
/// first record are absent. The grid is anchored at multiples of `period`.
inline FrameTable resample(const RawLog& log, double period = default_period) {
    if (!(period > 0.0) || !std::isfinite(period)) throw input_error("resample period must be positive");
    if (log.records.empty()) throw input_error("cannot resample an empty log");

    const double first = log.records.front().timestamp;
    const double last = log.records.back().timestamp;
    const auto k0 = static_cast<std::int64_t>(std::ceil(first / period - detail::grid_eps));
    const auto k_last = static_cast<std::int64_t>(std::floor(last / period + detail::grid_eps));
    const std::size_t n = k_last >= k0 ? static_cast<std::size_t>(k_last - k0 + 1) : 0;

    FrameTable t;
    t.period = period;
    t.start_time = static_cast<double>(k0) * period;
    t.names = log.signal_names;
    t.metadata = log.metadata;
    t.frame_valid.assign(n, 1);
    const std::size_t n_signals = log.signal_names.size();
    t.channels.resize(n_signals);
    for (auto& c : t.channels) {
        c.values.assign(n, 0.0);
        c.present.assign(n, 0);
    }

    std::vector<double> current(n_signals, 0.0);
    std::vector<std::uint8_t> seen(n_signals, 0);
    std::size_t r = 0;
    const auto& recs = log.records;
    for (std::size_t k = 0; k < n; ++k) {
        const double limit = static_cast<double>(k0 + static_cast<std::int64_t>(k)) * period + detail::grid_eps * period;
        while (r < recs.size() && recs[r].timestamp <= limit) {
            current[recs[r].signal] = recs[r].value;
            seen[recs[r].signal] = 1;
            ++r;
        }
        for (std::size_t s = 0; s < n_signals; ++s) {
            t.channels[s].values[k] = current[s];
            t.channels[s].present[k] = seen[s];
        }
    }
    return t;
}

/// Emits one record per present value at its frame time (inverse view of a
/// dense table).
inline RawLog to_raw_log(const FrameTable& t) {
    RawLog log;
    log.signal_names = t.names;
    log.metadata = t.metadata;
    for (std::size_t k = 0; k < t.frame_count(); ++k)
        for (std::size_t s = 0; s < t.channels.size(); ++s)
            if (t.channels[s].present[k])
                log.records.push_back({t.time_at(k), static_cast<std::uint32_t>(s), t.channels[s].values[k]});
    return log;
}

struct FilterPolicy {
    std::string lkas_status_signal = "lkas_status";
    double active_value = 1.0;
    std::optional<std::string> turn_signal_signal;
    double lane_change_exclusion_window = 2.0; ///< seconds before and after
    double outlier_k = 5.0;
};

inline void validate(const FilterPolicy& p) {
    if (!(p.lane_change_exclusion_window >= 0.0)) throw input_error("lane_change_exclusion_window must be >= 0");
    if (!(p.outlier_k > 0.0)) throw input_error("outlier_k must be > 0");
}

/// Invalidates frames where LKAS is not active and frames within the exclusion
/// window around any turn-signal activation. Values are never modified.
inline FrameTable filter_frames(const FrameTable& table, const FilterPolicy& policy) {
    validate(policy);
    const Channel* status = table.find(policy.lkas_status_signal);
    if (!status) throw input_error("LKAS status channel '" + policy.lkas_status_signal + "' not in table");
    const Channel* turn = nullptr;
    if (policy.turn_signal_signal) {
        turn = table.find(*policy.turn_signal_signal);
        if (!turn) throw input_error("turn signal channel '" + *policy.turn_signal_signal + "' not in table");
    }

    FrameTable out = table;
    const std::size_t n = out.frame_count();
    for (std::size_t k = 0; k < n; ++k)
        if (!status->present[k] || std::abs(status->values[k] - policy.active_value) > 1e-9) out.frame_valid[k] = 0;

    if (turn) {
        const auto reach = static_cast<std::size_t>(
            std::floor(policy.lane_change_exclusion_window / table.period + detail::grid_eps));
        // difference array over the union of [k - reach, k + reach]
        std::vector<int> delta(n + 1, 0);
        bool any = false;
        for (std::size_t k = 0; k < n; ++k) {
            if (turn->present[k] && turn->values[k] != 0.0) {
                const std::size_t lo = k >= reach ? k - reach : 0;
                const std::size_t hi = std::min(n, k + reach + 1);
                ++delta[lo];
                --delta[hi];
                any = true;
            }
        }
        if (any) {
            int cover = 0;
            for (std::size_t k = 0; k < n; ++k) {
                cover += delta[k];
                if (cover > 0) out.frame_valid[k] = 0;
            }
        }
    }
    return out;
}

namespace detail {

inline double median_in_place(std::vector<double>& v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return lo + (hi - lo) / 2.0;
}

} // namespace detail

inline constexpr double mad_normal_scale = 1.4826;

/// Robust z-score filter: invalidates samples with |x - median| > k * 1.4826 * MAD.
/// When MAD is zero every sample different from the median is an outlier.
template <class S>
S remove_outliers(const S& series, double k) {
    static_assert(std::is_base_of_v<Series, S>);
    if (!(k > 0.0)) throw input_error("outlier k must be > 0");
    std::vector<double> vals;
    vals.reserve(series.size());
    for (std::size_t i = 0; i < series.size(); ++i)
        if (series.valid_mask[i]) vals.push_back(series.samples[i]);
    if (vals.size() < 2) throw input_error("outlier removal needs at least 2 valid samples");

    const double med = detail::median_in_place(vals);
    for (auto& v : vals) v = std::abs(v - med);
    const double mad = mad_normal_scale * detail::median_in_place(vals);

    S out = series;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!out.valid_mask[i]) continue;
        const double dev = std::abs(out.samples[i] - med);
        if (mad == 0.0 ? dev != 0.0 : dev > k * mad) out.valid_mask[i] = 0;
    }
    return out;
}

} // namespace lka
