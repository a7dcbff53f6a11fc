#pragma once

// Hann-windowed short-time Fourier transform, magnitude spectrogram and
// steering-tremor episode detection.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "lka/error.hpp"
#include "lka/telemetry.hpp"

namespace lka {

using cplx = std::complex<double>;

/// Symmetric Hann window, w[k] = 0.5 (1 - cos(2 pi k / (n - 1))).
inline std::vector<double> hann_window(std::size_t n) {
    if (n < 2) throw input_error("Hann window length must be >= 2");
    std::vector<double> w(n);
    const double denom = static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) w[k] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / denom));
    // exact symmetry and zero endpoints regardless of cos rounding
    for (std::size_t k = 0; k < n / 2; ++k) w[n - 1 - k] = w[k];
    w.front() = 0.0;
    w.back() = 0.0;
    return w;
}

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// In-place forward DFT, X[k] = sum_n x[n] exp(-2 pi i k n / N). Radix-2
/// for power-of-two sizes, direct evaluation otherwise.
inline void fft(std::vector<cplx>& a) {
    const std::size_t n = a.size();
    if (n <= 1) return;
    if (!is_power_of_two(n)) {
        std::vector<cplx> out(n);
        for (std::size_t k = 0; k < n; ++k) {
            cplx acc{0.0, 0.0};
            for (std::size_t j = 0; j < n; ++j) {
                const double ang = -2.0 * std::numbers::pi * static_cast<double>((k * j) % n) / static_cast<double>(n);
                acc += a[j] * cplx(std::cos(ang), std::sin(ang));
            }
            out[k] = acc;
        }
        a = std::move(out);
        return;
    }
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        for (std::size_t k = 0; k < half; ++k) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
            const cplx tw(std::cos(ang), std::sin(ang));
            for (std::size_t i = 0; i < n; i += len) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + half] * tw;
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
}

struct StftSpec {
    std::size_t window_len = 256; ///< frames; 2.56 s at 100 Hz
    std::size_t hop = 128;
};

inline void validate(const StftSpec& s) {
    if (s.window_len < 2) throw input_error("STFT window must be >= 2 frames");
    if (s.hop == 0 || s.hop > s.window_len) throw input_error("STFT hop must satisfy 0 < hop <= window");
}

/// STFT of a gap-aware series. Only the non-negative frequency half
/// (window_len / 2 + 1 bins) of each column is kept.
struct Stft {
    StftSpec spec;
    double sample_rate = 100.0;
    std::vector<std::vector<cplx>> columns;
    std::vector<std::size_t> column_start; ///< first frame index of each column
    std::vector<std::size_t> column_run;   ///< ordinal of the gap-free run the column belongs to
    std::vector<double> column_time;       ///< centre time of each column (s)
    std::vector<std::string> warnings;

    std::size_t bins() const { return spec.window_len / 2 + 1; }
};

inline Stft stft(const Series& x, const StftSpec& spec = {}) {
    validate(spec);
    Stft out;
    out.spec = spec;
    out.sample_rate = 1.0 / x.period;
    const auto w = hann_window(spec.window_len);
    const std::size_t n = x.size();
    std::vector<cplx> buf(spec.window_len);
    std::size_t run_id = 0;
    std::size_t k = 0;
    while (k < n) {
        if (!x.valid_mask[k]) {
            ++k;
            continue;
        }
        const std::size_t begin = k;
        while (k < n && x.valid_mask[k]) ++k;
        const std::size_t len = k - begin;
        if (len < spec.window_len) {
            out.warnings.push_back("run at " + std::to_string(x.start_time + static_cast<double>(begin) * x.period) +
                                   " s has " + std::to_string(len) + " frames, shorter than the " +
                                   std::to_string(spec.window_len) + "-frame window; skipped");
            continue;
        }
        for (std::size_t off = 0; off + spec.window_len <= len; off += spec.hop) {
            const std::size_t s0 = begin + off;
            for (std::size_t j = 0; j < spec.window_len; ++j) buf[j] = cplx(x.samples[s0 + j] * w[j], 0.0);
            fft(buf);
            out.columns.emplace_back(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(out.bins()));
            out.column_start.push_back(s0);
            out.column_run.push_back(run_id);
            out.column_time.push_back(x.start_time +
                                      (static_cast<double>(s0) + static_cast<double>(spec.window_len - 1) / 2.0) * x.period);
        }
        ++run_id;
    }
    return out;
}

enum class MagnitudeScale {
    raw,      ///< |X| exactly
    amplitude ///< single-sided: 2|X| / sum(w) on interior bins, |X| / sum(w) at DC and Nyquist
};

struct Spectrogram {
    std::vector<std::vector<double>> magnitudes; ///< [time column][frequency bin], all >= 0
    std::vector<double> freq_axis;               ///< Hz per bin, 0..Nyquist
    std::vector<double> time_axis;               ///< s per column
    std::vector<std::size_t> column_run;
    MagnitudeScale scale = MagnitudeScale::raw;
};

/// Element-wise complex magnitude of a coefficient matrix.
inline std::vector<std::vector<double>> magnitude(const std::vector<std::vector<cplx>>& X) {
    std::vector<std::vector<double>> m(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) {
        m[i].resize(X[i].size());
        for (std::size_t j = 0; j < X[i].size(); ++j) m[i][j] = std::abs(X[i][j]);
    }
    return m;
}

inline Spectrogram spectrogram(const Stft& X, MagnitudeScale scale = MagnitudeScale::raw) {
    Spectrogram sg;
    sg.scale = scale;
    sg.magnitudes = magnitude(X.columns);
    const std::size_t bins = X.bins();
    const std::size_t n = X.spec.window_len;
    sg.freq_axis.resize(bins);
    for (std::size_t b = 0; b < bins; ++b)
        sg.freq_axis[b] = static_cast<double>(b) * X.sample_rate / static_cast<double>(n);
    sg.time_axis = X.column_time;
    sg.column_run = X.column_run;
    if (scale == MagnitudeScale::amplitude) {
        const auto w = hann_window(n);
        double gain = 0.0;
        for (double v : w) gain += v;
        for (auto& col : sg.magnitudes) {
            for (std::size_t b = 0; b < bins; ++b) {
                const bool edge = b == 0 || (n % 2 == 0 && b == bins - 1);
                col[b] *= (edge ? 1.0 : 2.0) / gain;
            }
        }
    }
    return sg;
}

struct TremorEpisode {
    double t_start = 0.0; ///< centre time of the first column above threshold
    double t_end = 0.0;   ///< centre time of the last column above threshold
    double peak_freq_hz = 0.0;
    double peak_magnitude = 0.0;
    std::size_t first_column = 0;
    std::size_t last_column = 0;
};

/// Groups consecutive columns (within one gap-free run) whose in-band peak
/// magnitude exceeds `threshold` into episodes.
inline std::vector<TremorEpisode> tremor_report(const Spectrogram& sg, double f_lo, double f_hi, double threshold) {
    const double nyquist = sg.freq_axis.empty() ? 0.0 : sg.freq_axis.back();
    if (!(f_lo >= 0.0 && f_lo < f_hi)) throw input_error("tremor band must satisfy 0 <= f_lo < f_hi");
    if (!sg.freq_axis.empty() && f_hi > nyquist + 1e-9) throw input_error("tremor band exceeds Nyquist");
    std::vector<std::size_t> band;
    for (std::size_t b = 0; b < sg.freq_axis.size(); ++b)
        if (sg.freq_axis[b] >= f_lo && sg.freq_axis[b] <= f_hi) band.push_back(b);
    if (!sg.freq_axis.empty() && band.empty()) throw input_error("tremor band contains no frequency bin");

    std::vector<TremorEpisode> out;
    bool open = false;
    for (std::size_t c = 0; c < sg.magnitudes.size(); ++c) {
        double peak = 0.0;
        std::size_t peak_bin = band.empty() ? 0 : band.front();
        for (auto b : band) {
            if (sg.magnitudes[c][b] > peak) {
                peak = sg.magnitudes[c][b];
                peak_bin = b;
            }
        }
        const bool hot = peak > threshold;
        if (open && (!hot || sg.column_run[c] != sg.column_run[c - 1])) open = false;
        if (!hot) continue;
        if (!open) {
            out.push_back({sg.time_axis[c], sg.time_axis[c], sg.freq_axis[peak_bin], peak, c, c});
            open = true;
            continue;
        }
        auto& e = out.back();
        e.t_end = sg.time_axis[c];
        e.last_column = c;
        if (peak > e.peak_magnitude) {
            e.peak_magnitude = peak;
            e.peak_freq_hz = sg.freq_axis[peak_bin];
        }
    }
    return out;
}

inline json to_json(const TremorEpisode& e) {
    return json{{"t_start_s", e.t_start},
                {"t_end_s", e.t_end},
                {"peak_freq_hz", e.peak_freq_hz},
                {"peak_magnitude", e.peak_magnitude}};
}

/// Long-form CSV: time_s,freq_hz,magnitude.
inline void write_spectrogram_csv(std::ostream& os, const Spectrogram& sg) {
    os << "time_s,freq_hz,magnitude\n";
    char buf[96];
    for (std::size_t c = 0; c < sg.magnitudes.size(); ++c)
        for (std::size_t b = 0; b < sg.freq_axis.size(); ++b) {
            std::snprintf(buf, sizeof buf, "%.4f,%.6g,%.9g\n", sg.time_axis[c], sg.freq_axis[b], sg.magnitudes[c][b]);
            os << buf;
        }
}

/// Heatmap with time on x and frequency on y; grey-scale by magnitude
/// relative to the global peak. Output bytes depend only on the input.
inline void write_spectrogram_svg(std::ostream& os, const Spectrogram& sg, double max_freq_hz = 0.0) {
    const double cell_w = 4.0, cell_h = 4.0, margin = 40.0;
    std::size_t bins = sg.freq_axis.size();
    if (max_freq_hz > 0.0)
        while (bins > 1 && sg.freq_axis[bins - 1] > max_freq_hz) --bins;
    const std::size_t cols = sg.magnitudes.size();
    double peak = 0.0;
    for (const auto& col : sg.magnitudes)
        for (std::size_t b = 0; b < bins; ++b) peak = std::max(peak, col[b]);
    const double width = margin * 2 + cell_w * static_cast<double>(cols);
    const double height = margin * 2 + cell_h * static_cast<double>(bins);
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                  width, height, width, height);
    os << buf;
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t b = 0; b < bins; ++b) {
            const double rel = peak > 0.0 ? sg.magnitudes[c][b] / peak : 0.0;
            const int shade = 255 - static_cast<int>(std::lround(rel * 255.0));
            std::snprintf(buf, sizeof buf,
                          "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"rgb(%d,%d,%d)\"/>\n",
                          margin + cell_w * static_cast<double>(c),
                          margin + cell_h * static_cast<double>(bins - 1 - b), cell_w, cell_h, shade, shade, 255);
            os << buf;
        }
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%.0f\" y=\"%.0f\" font-size=\"12\">time (s)</text>\n", width / 2,
                  height - 10);
    os << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"12\" y=\"%.0f\" font-size=\"12\" transform=\"rotate(-90 12 %.0f)\">frequency (Hz)</text>\n",
                  height / 2, height / 2);
    os << buf;
    os << "</svg>\n";
}

} // namespace lka
