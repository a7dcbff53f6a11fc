#pragma once

// Empirical PDFs on shared bins, intersection similarity, per-indicator
// weighted scores, and the statistics used alongside them.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "lka/error.hpp"
#include "lka/telemetry.hpp"

namespace lka {

// ---------------------------------------------------------------------------
// Histograms and PDFs
// ---------------------------------------------------------------------------

struct Histogram {
    std::vector<double> edges; ///< d + 1 strictly ascending values
    std::vector<std::size_t> counts;
    std::size_t n_total = 0;
    std::size_t n_out_of_range = 0;
};

struct EmpiricalPdf {
    std::vector<double> edges;
    std::vector<double> probs;

    bool operator==(const EmpiricalPdf&) const = default;
};

enum class BinMode { freedman_diaconis, fixed_width, fixed_edges };
enum class RangeMode { pooled_min_max, reference_min_max, explicit_range };
enum class OutOfRange { extend, drop };

struct BinPolicy {
    BinMode mode = BinMode::freedman_diaconis;
    std::optional<double> width;              ///< fixed_width
    std::optional<std::vector<double>> edges; ///< fixed_edges
    RangeMode range_mode = RangeMode::pooled_min_max;
    std::optional<double> range_lo, range_hi; ///< explicit_range
    OutOfRange out_of_range = OutOfRange::extend;
    std::size_t max_bins = 10000;
};

inline void validate_edges(std::span<const double> edges) {
    if (edges.size() < 2) throw input_error("bin edges need at least two values");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (!std::isfinite(edges[i])) throw input_error("bin edges must be finite");
        if (i > 0 && !(edges[i] > edges[i - 1])) throw input_error("bin edges must be strictly ascending");
    }
}

inline void validate(const BinPolicy& p) {
    switch (p.mode) {
    case BinMode::fixed_width:
        if (!p.width || !(*p.width > 0.0)) throw input_error("fixed_width binning needs width > 0");
        break;
    case BinMode::fixed_edges:
        if (!p.edges) throw input_error("fixed_edges binning needs edges");
        validate_edges(*p.edges);
        break;
    case BinMode::freedman_diaconis: break;
    }
    if (p.range_mode == RangeMode::explicit_range &&
        (!p.range_lo || !p.range_hi || !(*p.range_hi >= *p.range_lo)))
        throw input_error("explicit range needs range_lo <= range_hi");
    if (p.max_bins == 0) throw input_error("max_bins must be >= 1");
}

/// Linear-interpolation quantile (R type 7) of already sorted data.
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw input_error("quantile of empty data");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Freedman-Diaconis bin width 2 IQR n^(-1/3), clamped to >= 1e-9. Returns 0
/// when the IQR is zero.
inline double freedman_diaconis_width(std::span<const double> samples) {
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
    if (!(iqr > 0.0)) return 0.0;
    return std::max(1e-9, 2.0 * iqr * std::pow(static_cast<double>(s.size()), -1.0 / 3.0));
}

/// One edge set shared by both samples, as required for the intersection.
inline std::vector<double> shared_edges(std::span<const double> reference, std::span<const double> candidate,
                                        const BinPolicy& policy = {}) {
    validate(policy);
    if (reference.empty()) throw input_error("reference sample is empty");
    if (policy.mode == BinMode::fixed_edges) return *policy.edges;

    auto [rmin, rmax] = std::minmax_element(reference.begin(), reference.end());
    double lo = *rmin, hi = *rmax;
    if (policy.range_mode == RangeMode::pooled_min_max && !candidate.empty()) {
        auto [cmin, cmax] = std::minmax_element(candidate.begin(), candidate.end());
        lo = std::min(lo, *cmin);
        hi = std::max(hi, *cmax);
    } else if (policy.range_mode == RangeMode::explicit_range) {
        lo = *policy.range_lo;
        hi = *policy.range_hi;
    }
    const double range = hi - lo;
    if (!(range > 0.0)) {
        // degenerate: every sample sits on one value
        const double half = policy.width ? *policy.width / 2.0 : 0.5;
        return {lo - half, lo + half};
    }

    double width = 0.0;
    if (policy.mode == BinMode::fixed_width) {
        width = *policy.width;
    } else {
        std::vector<double> pooled(reference.begin(), reference.end());
        pooled.insert(pooled.end(), candidate.begin(), candidate.end());
        width = freedman_diaconis_width(pooled);
        if (width == 0.0) width = range / 50.0;
    }
    auto bins = static_cast<std::size_t>(std::ceil(range / width * (1.0 - 1e-12)));
    bins = std::clamp<std::size_t>(bins, 1, policy.max_bins);
    if (static_cast<double>(bins) * width < range) width = range / static_cast<double>(bins);

    std::vector<double> edges(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) edges[i] = lo + static_cast<double>(i) * width;
    edges.back() = std::max(edges.back(), hi);
    return edges;
}

/// Bin index for x in half-open bins [e_i, e_{i+1}), last bin closed;
/// nullopt outside [e_0, e_d].
inline std::optional<std::size_t> bin_index(std::span<const double> edges, double x) {
    const std::size_t d = edges.size() - 1;
    if (x < edges.front() || x > edges.back()) return std::nullopt;
    if (x == edges.back()) return d - 1;
    const auto it = std::upper_bound(edges.begin(), edges.end(), x);
    return static_cast<std::size_t>(it - edges.begin()) - 1;
}

inline Histogram histogram(std::span<const double> samples, std::span<const double> edges,
                           OutOfRange policy = OutOfRange::extend) {
    validate_edges(edges);
    Histogram h;
    h.edges.assign(edges.begin(), edges.end());
    h.counts.assign(edges.size() - 1, 0);
    h.n_total = samples.size();
    for (double x : samples) {
        if (auto b = bin_index(edges, x)) {
            ++h.counts[*b];
        } else if (policy == OutOfRange::extend) {
            ++h.counts[x < edges.front() ? 0 : h.counts.size() - 1];
        } else {
            ++h.n_out_of_range;
        }
    }
    return h;
}

/// Bin frequencies divided by the total observation count.
inline EmpiricalPdf empirical_pdf(std::span<const double> samples, std::span<const double> edges,
                                  OutOfRange policy = OutOfRange::extend) {
    if (samples.empty()) throw input_error("empirical PDF of an empty sample");
    const Histogram h = histogram(samples, edges, policy);
    EmpiricalPdf p;
    p.edges = h.edges;
    p.probs.resize(h.counts.size());
    const auto n = static_cast<double>(h.n_total);
    for (std::size_t i = 0; i < h.counts.size(); ++i) p.probs[i] = static_cast<double>(h.counts[i]) / n;
    return p;
}

/// Intersection similarity 100 * sum_i min(P_i, Q_i), in [0, 100]. Exactly
/// 100 iff the PDFs are equal element-wise.
inline double intersection_similarity(const EmpiricalPdf& P, const EmpiricalPdf& Q) {
    if (P.edges != Q.edges) throw input_error("PDFs are defined on different bin edges");
    if (P.probs.size() != Q.probs.size()) throw input_error("PDFs have different bin counts");
    if (P.probs == Q.probs) return 100.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < P.probs.size(); ++i) acc += std::min(P.probs[i], Q.probs[i]);
    return std::clamp(100.0 * acc, 0.0, std::nextafter(100.0, 0.0));
}

// ---------------------------------------------------------------------------
// Weighted indicator score
// ---------------------------------------------------------------------------

inline double weight_for(const std::map<SectionKind, double>& weights, SectionKind k) {
    auto it = weights.find(k);
    return it == weights.end() ? 1.0 : it->second;
}

/// Weighted arithmetic mean of the per-section similarities present in the
/// map; missing weights default to 1.
inline double indicator_score(const std::map<SectionKind, double>& per_section,
                              const std::map<SectionKind, double>& weights = {}) {
    if (per_section.empty()) throw input_error("indicator score needs at least one section");
    double num = 0.0, den = 0.0;
    for (const auto& [kind, s] : per_section) {
        const double w = weight_for(weights, kind);
        if (!(w >= 0.0) || !std::isfinite(w)) throw input_error("section weights must be finite and >= 0");
        num += w * s;
        den += w;
    }
    if (!(den > 0.0)) throw input_error("section weights are all zero");
    return num / den;
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

inline double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// Sample mean and (n - 1) standard deviation.
inline Descriptive descriptive_stats(std::span<const double> x) {
    if (x.size() < 2) throw input_error("descriptive statistics need n >= 2");
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return {m, std::sqrt(ss / static_cast<double>(x.size() - 1)), x.size()};
}

/// Upper-tail probability of F(d1, d2) at w.
inline double f_upper_tail(double w, double d1, double d2) {
    if (std::isinf(w)) return 0.0;
    if (!(w > 0.0)) return 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::fisher_f_distribution<double>(d1, d2), w));
}

/// Two-sided p-value of Student t with `dof` degrees of freedom.
inline double t_two_sided(double t, double dof) {
    if (std::isinf(t)) return 0.0;
    if (std::isnan(t)) return 1.0;
    return 2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t_distribution<double>(dof), std::abs(t)));
}

/// Classic (mean-centred) Levene test for equality of variances across
/// k >= 2 groups. W is F(k - 1, N - k) distributed under the null.
inline LeveneResult levene_test(const std::vector<std::vector<double>>& groups) {
    const std::size_t k = groups.size();
    if (k < 2) throw input_error("Levene's test needs at least two groups");
    std::size_t N = 0;
    for (const auto& g : groups) {
        if (g.size() < 2) throw input_error("Levene's test needs n >= 2 in every group");
        N += g.size();
    }
    if (N <= k) throw input_error("Levene's test needs N > k");

    std::vector<std::vector<double>> z(k);
    std::vector<double> zbar(k);
    double zsum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double m = mean(groups[i]);
        z[i].reserve(groups[i].size());
        for (double y : groups[i]) z[i].push_back(std::abs(y - m));
        zbar[i] = mean(z[i]);
        zsum += std::accumulate(z[i].begin(), z[i].end(), 0.0);
    }
    const double zgrand = zsum / static_cast<double>(N);
    double between = 0.0, within = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        between += static_cast<double>(z[i].size()) * (zbar[i] - zgrand) * (zbar[i] - zgrand);
        for (double v : z[i]) within += (v - zbar[i]) * (v - zbar[i]);
    }
    const double d1 = static_cast<double>(k - 1);
    const double d2 = static_cast<double>(N - k);
    if (within == 0.0) {
        if (between == 0.0) return {0.0, 1.0};
        return {std::numeric_limits<double>::infinity(), 0.0};
    }
    const double W = (d2 / d1) * between / within;
    return {W, f_upper_tail(W, d1, d2)};
}

inline LeveneResult levene_test(std::span<const double> a, std::span<const double> b) {
    return levene_test({std::vector<double>(a.begin(), a.end()), std::vector<double>(b.begin(), b.end())});
}

struct PearsonResult {
    double r = 0.0;
    double t_stat = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

inline PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw input_error("pearson: length mismatch");
    if (x.size() < 3) throw input_error("pearson: need n >= 3");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw input_error("pearson: zero variance");
    PearsonResult res;
    res.n = x.size();
    res.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double dof = static_cast<double>(x.size() - 2);
    const double one_minus = 1.0 - res.r * res.r;
    res.t_stat = one_minus <= 0.0 ? std::copysign(std::numeric_limits<double>::infinity(), res.r)
                                  : res.r * std::sqrt(dof / one_minus);
    res.p_value = t_two_sided(res.t_stat, dof);
    return res;
}

/// Average ranks (1-based), ties share their mean rank.
inline std::vector<double> ranks(std::span<const double> x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t m = i; m <= j; ++m) r[idx[m]] = avg;
        i = j + 1;
    }
    return r;
}

/// Spearman rank correlation (Pearson r of average ranks).
inline double spearman(std::span<const double> x, std::span<const double> y) {
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    return pearson(rx, ry).r;
}

struct Regression {
    double intercept = 0.0;
    double slope = 0.0;
    double intercept_se = 0.0;
    double slope_se = 0.0;
    double intercept_p = 1.0;
    double slope_p = 1.0;
    double r_squared = 0.0;
    std::size_t n = 0;
};

/// Ordinary least squares y = intercept + slope * x with t-test p-values.
inline Regression linear_regression(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw input_error("regression: length mismatch");
    if (x.size() < 3) throw input_error("regression: need n >= 3");
    const auto n = static_cast<double>(x.size());
    const double mx = mean(x), my = mean(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw input_error("regression: zero variance in x");
    Regression r;
    r.n = x.size();
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (r.intercept + r.slope * x[i]);
        sse += e * e;
    }
    r.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    const double dof = n - 2.0;
    const double s2 = sse / dof;
    r.slope_se = std::sqrt(s2 / sxx);
    r.intercept_se = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
    auto p_of = [&](double est, double se) {
        if (se == 0.0) return est == 0.0 ? 1.0 : 0.0;
        return t_two_sided(est / se, dof);
    };
    r.slope_p = p_of(r.slope, r.slope_se);
    r.intercept_p = p_of(r.intercept, r.intercept_se);
    return r;
}

// ---------------------------------------------------------------------------
// Setting comparison
// ---------------------------------------------------------------------------

/// A drive reduced to its derived indicator series and curve sections.
struct DriveAnalysis {
    SettingMeta meta;
    double period = default_period;
    std::map<Indicator, IndicatorSeries> series;
    std::map<Indicator, std::string> missing; ///< indicator -> why it could not be derived
    std::vector<CurveSection> sections;
};

/// Valid samples of `s` inside sections of `kind`.
inline std::vector<double> section_samples(const IndicatorSeries& s, const std::vector<CurveSection>& sections,
                                           SectionKind kind) {
    std::vector<double> out;
    for (const auto& sec : sections) {
        if (sec.kind != kind) continue;
        const std::size_t end = std::min(sec.end, s.size());
        for (std::size_t k = sec.begin; k < end; ++k)
            if (s.valid_mask[k]) out.push_back(s.samples[k]);
    }
    return out;
}

struct CellDetail {
    EmpiricalPdf reference;
    EmpiricalPdf candidate;
};

struct Comparison {
    ScoreReport report;
    std::map<Cell, CellDetail> cells;
};

inline Comparison compare_settings_detailed(const DriveAnalysis& reference, const DriveAnalysis& candidate,
                                            const BinPolicy& policy = {},
                                            const std::map<SectionKind, double>& weights = {},
                                            unsigned jobs = 1) {
    validate(policy);
    Comparison out;
    ScoreReport& rep = out.report;
    rep.reference_id = reference.meta.setting_id;
    rep.candidate_id = candidate.meta.setting_id;
    for (auto kind : all_section_kinds) rep.weights[kind] = weight_for(weights, kind);

    struct Task {
        Cell cell;
        std::vector<double> ref, cand;
        std::optional<double> similarity;
        std::optional<CellDetail> detail;
        std::optional<Descriptive> ref_stats, cand_stats;
        std::optional<LeveneResult> levene;
    };
    std::vector<Task> tasks;
    for (auto ind : all_indicators) {
        const auto r = reference.series.find(ind);
        const auto c = candidate.series.find(ind);
        if (r == reference.series.end() || c == candidate.series.end()) {
            std::string why;
            if (r == reference.series.end()) {
                auto m = reference.missing.find(ind);
                why = "missing in reference" + (m != reference.missing.end() ? ": " + m->second : std::string{});
            } else {
                auto m = candidate.missing.find(ind);
                why = "missing in candidate" + (m != candidate.missing.end() ? ": " + m->second : std::string{});
            }
            rep.omitted[ind] = why;
            continue;
        }
        for (auto kind : all_section_kinds) {
            Task t;
            t.cell = {ind, kind};
            t.ref = section_samples(r->second, reference.sections, kind);
            t.cand = section_samples(c->second, candidate.sections, kind);
            tasks.push_back(std::move(t));
        }
    }

    auto run = [&](Task& t) {
        if (t.ref.size() >= 2) t.ref_stats = descriptive_stats(t.ref);
        if (t.cand.size() >= 2) t.cand_stats = descriptive_stats(t.cand);
        if (t.ref.empty() || t.cand.empty()) return;
        const auto edges = shared_edges(t.ref, t.cand, policy);
        CellDetail d{empirical_pdf(t.ref, edges, policy.out_of_range), empirical_pdf(t.cand, edges, policy.out_of_range)};
        t.similarity = intersection_similarity(d.reference, d.candidate);
        t.detail = std::move(d);
        if (t.ref.size() >= 2 && t.cand.size() >= 2) t.levene = levene_test(t.ref, t.cand);
    };

    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(tasks.size())));
    if (jobs == 1) {
        for (auto& t : tasks) run(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(jobs);
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < jobs; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = next++; i < tasks.size(); i = next++) run(tasks[i]);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        pool.clear();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    std::map<Indicator, std::map<SectionKind, double>> by_indicator;
    for (auto& t : tasks) {
        const auto [ind, kind] = t.cell;
        if (t.ref_stats) rep.stats[{ind, kind, Role::reference}] = *t.ref_stats;
        if (t.cand_stats) rep.stats[{ind, kind, Role::candidate}] = *t.cand_stats;
        if (!t.similarity) continue;
        rep.per_section[t.cell] = *t.similarity;
        by_indicator[ind][kind] = *t.similarity;
        out.cells[t.cell] = std::move(*t.detail);
        if (t.levene) rep.levene[t.cell] = *t.levene;
    }
    for (auto ind : all_indicators) {
        if (rep.omitted.count(ind)) continue;
        auto it = by_indicator.find(ind);
        if (it == by_indicator.end()) {
            rep.omitted[ind] = "no curve section with samples in both drives";
            continue;
        }
        rep.indicator_scores[ind] = indicator_score(it->second, rep.weights);
    }
    return out;
}

/// Scores `candidate` against `reference` per (indicator, section kind) and
/// aggregates each indicator over the sections present in both drives.
inline ScoreReport compare_settings(const DriveAnalysis& reference, const DriveAnalysis& candidate,
                                    const BinPolicy& policy = {}, const std::map<SectionKind, double>& weights = {},
                                    unsigned jobs = 1) {
    return compare_settings_detailed(reference, candidate, policy, weights, jobs).report;
}

} // namespace lka
