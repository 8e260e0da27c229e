// Objective quality metrics: frame-aligned Mel Cepstral Distortion, the
// published short-time objective intelligibility procedure (15 one-third
// octave bands from 150 Hz, 384 ms segments, clipped normalized correlation),
// and the mean-syllable-duration latency proxy.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pvc/audio.hpp"
#include "pvc/bitstream.hpp"
#include "pvc/errors.hpp"
#include "pvc/fft.hpp"
#include "pvc/mfcc.hpp"
#include "pvc/mlp.hpp"
#include "pvc/prosody.hpp"
#include "json.hpp"

namespace pvc {

constexpr int kMcdCepstra = 13;  // c1..c13, c0 excluded

/// (10/ln 10) * sqrt(2) * mean Euclidean distance over 13 mel-cepstra.
/// Rows carry c0 first; coefficient 0 is excluded from the distance.
inline double mcd_from_cepstra(const std::vector<std::vector<double>>& ref,
                               const std::vector<std::vector<double>>& test) {
    size_t n = std::min(ref.size(), test.size());
    if (n == 0) throw TooShort("mcd needs at least one frame");
    double acc = 0.0;
    for (size_t t = 0; t < n; ++t) {
        double d2 = 0.0;
        for (int k = 1; k <= kMcdCepstra; ++k) {
            double d = ref[t][static_cast<size_t>(k)] - test[t][static_cast<size_t>(k)];
            d2 += d * d;
        }
        acc += std::sqrt(d2);
    }
    return (10.0 / std::log(10.0)) * std::sqrt(2.0) * (acc / static_cast<double>(n));
}

/// Frame-aligned MCD in dB between two clips at the same sample rate.
inline double mcd(const AudioClip& ref, const AudioClip& test) {
    if (ref.sample_rate != test.sample_rate)
        throw ConfigError("mcd: sample rates differ");
    FrameGrid grid{kWindowMs, 10};
    MfccConfig cfg;
    cfg.mean_normalize = false;
    auto ref_c = frames_to_cepstra(frame_signal(to_canonical_rate(ref), grid), kMcdCepstra + 1, cfg);
    auto test_c = frames_to_cepstra(frame_signal(to_canonical_rate(test), grid), kMcdCepstra + 1, cfg);
    if (ref_c.empty() || test_c.empty()) throw TooShort("mcd: clip shorter than one frame");
    return mcd_from_cepstra(ref_c, test_c);
}

// ---------------------------------------------------------------------------
// STOI

namespace detail {

constexpr int kStoiRate = 10000;
constexpr int kStoiFrame = 256;
constexpr int kStoiHop = 128;
constexpr int kStoiFft = 512;
constexpr int kStoiBands = 15;
constexpr double kStoiLowestBandHz = 150.0;
constexpr int kStoiSegFrames = 30;      // 384 ms at the 12.8 ms hop
constexpr double kStoiDynRangeDb = 40.0;
constexpr double kStoiBeta = -15.0;     // lower SDR bound in dB

inline std::vector<std::vector<double>> stoi_band_matrix() {
    std::vector<std::vector<double>> bands(kStoiBands,
                                           std::vector<double>(kStoiFft / 2 + 1, 0.0));
    double bin_hz = static_cast<double>(kStoiRate) / kStoiFft;
    for (int j = 0; j < kStoiBands; ++j) {
        double cf = kStoiLowestBandHz * std::pow(2.0, j / 3.0);
        double f_lo = cf / std::pow(2.0, 1.0 / 6.0);
        double f_hi = cf * std::pow(2.0, 1.0 / 6.0);
        for (int k = 0; k <= kStoiFft / 2; ++k) {
            double f = k * bin_hz;
            if (f >= f_lo && f < f_hi) bands[static_cast<size_t>(j)][static_cast<size_t>(k)] = 1.0;
        }
    }
    return bands;
}

// Hann-windowed frames, hop 128. Returns frame start offsets too.
inline std::vector<std::vector<double>> stoi_frames(const std::vector<double>& x) {
    std::vector<double> win(kStoiFrame);
    for (int i = 0; i < kStoiFrame; ++i)
        win[static_cast<size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * (i + 1) / (kStoiFrame + 1));
    std::vector<std::vector<double>> frames;
    for (size_t start = 0; start + kStoiFrame <= x.size(); start += kStoiHop) {
        std::vector<double> f(kStoiFrame);
        for (int i = 0; i < kStoiFrame; ++i) f[static_cast<size_t>(i)] = x[start + static_cast<size_t>(i)] * win[static_cast<size_t>(i)];
        frames.push_back(std::move(f));
    }
    return frames;
}

// Frames of the reference below (max - 40 dB) are dropped from both signals.
inline void remove_silent_frames(std::vector<std::vector<double>>& xf,
                                 std::vector<std::vector<double>>& yf) {
    std::vector<double> db(xf.size());
    double mx = -1e300;
    for (size_t i = 0; i < xf.size(); ++i) {
        double e = 0.0;
        for (double v : xf[i]) e += v * v;
        db[i] = 10.0 * std::log10(e + 1e-300);
        mx = std::max(mx, db[i]);
    }
    std::vector<std::vector<double>> xk, yk;
    for (size_t i = 0; i < xf.size(); ++i)
        if (db[i] > mx - kStoiDynRangeDb) {
            xk.push_back(std::move(xf[i]));
            yk.push_back(std::move(yf[i]));
        }
    xf = std::move(xk);
    yf = std::move(yk);
}

}  // namespace detail

/// Short-time objective intelligibility in [0, 1]. Both clips are resampled
/// to 10 kHz internally; clips shorter than one 384 ms segment raise
/// TooShort.
inline double stoi(const AudioClip& reference, const AudioClip& test) {
    auto x = resample(reference.samples, reference.sample_rate, detail::kStoiRate);
    auto y = resample(test.samples, test.sample_rate, detail::kStoiRate);
    size_t n = std::min(x.size(), y.size());
    x.resize(n);
    y.resize(n);

    auto xf = detail::stoi_frames(x);
    auto yf = detail::stoi_frames(y);
    detail::remove_silent_frames(xf, yf);
    if (static_cast<int>(xf.size()) < detail::kStoiSegFrames)
        throw TooShort("stoi needs at least 384 ms of active speech");

    static const auto bands = detail::stoi_band_matrix();
    size_t m_frames = xf.size();
    std::vector<std::vector<double>> xb(detail::kStoiBands, std::vector<double>(m_frames));
    std::vector<std::vector<double>> yb(detail::kStoiBands, std::vector<double>(m_frames));
    for (size_t t = 0; t < m_frames; ++t) {
        auto xs = power_spectrum(xf[t], detail::kStoiFft);
        auto ys = power_spectrum(yf[t], detail::kStoiFft);
        for (int j = 0; j < detail::kStoiBands; ++j) {
            double ex = 0.0, ey = 0.0;
            for (size_t k = 0; k < xs.size(); ++k) {
                ex += bands[static_cast<size_t>(j)][k] * xs[k];
                ey += bands[static_cast<size_t>(j)][k] * ys[k];
            }
            xb[static_cast<size_t>(j)][t] = std::sqrt(ex);
            yb[static_cast<size_t>(j)][t] = std::sqrt(ey);
        }
    }

    const int N = detail::kStoiSegFrames;
    double clip_factor = 1.0 + std::pow(10.0, -detail::kStoiBeta / 20.0);
    double sum = 0.0;
    size_t count = 0;
    for (size_t m = static_cast<size_t>(N); m <= m_frames; ++m) {
        for (int j = 0; j < detail::kStoiBands; ++j) {
            const double* xs = &xb[static_cast<size_t>(j)][m - static_cast<size_t>(N)];
            const double* ys = &yb[static_cast<size_t>(j)][m - static_cast<size_t>(N)];
            double ex = 0.0, ey = 0.0;
            for (int i = 0; i < N; ++i) {
                ex += xs[i] * xs[i];
                ey += ys[i] * ys[i];
            }
            double alpha = ey > 0.0 ? std::sqrt(ex / ey) : 0.0;
            double xm = 0.0, ym = 0.0;
            std::vector<double> yc(static_cast<size_t>(N));
            for (int i = 0; i < N; ++i) {
                yc[static_cast<size_t>(i)] = std::min(alpha * ys[i], clip_factor * xs[i]);
                xm += xs[i];
                ym += yc[static_cast<size_t>(i)];
            }
            xm /= N;
            ym /= N;
            double num = 0.0, dx = 0.0, dy = 0.0;
            for (int i = 0; i < N; ++i) {
                double a = xs[i] - xm, b = yc[static_cast<size_t>(i)] - ym;
                num += a * b;
                dx += a * a;
                dy += b * b;
            }
            double den = std::sqrt(dx * dy);
            if (den < 1e-30) continue;  // degenerate band segment
            sum += num / den;
            ++count;
        }
    }
    if (count == 0) throw TooShort("stoi: no usable band segments");
    return std::clamp(sum / static_cast<double>(count), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Latency proxy and the quality report

/// Mean decoded syllable duration in ms.
inline double latency_report(const std::vector<SyllableCode>& codes) {
    if (codes.empty()) throw NoSyllables("latency report needs at least one syllable");
    double acc = 0.0;
    for (const auto& c : codes) acc += c.dur_steps * static_cast<double>(kDurStepMs);
    return acc / static_cast<double>(codes.size());
}

struct QualityReport {
    double mcd_db = 0.0;
    double stoi_score = 0.0;
    bool has_bitrate = false;
    BitRateReport bitrate;
    bool has_latency = false;
    double mean_syllable_ms = 0.0;
};

inline nlohmann::json quality_report_to_json(const QualityReport& q) {
    nlohmann::json j{{"mcd_db", q.mcd_db}, {"stoi", q.stoi_score}};
    if (q.has_bitrate) {
        j["bitrate_bps"] = {{"code", q.bitrate.code_bps},
                            {"code_duration", q.bitrate.code_duration_bps},
                            {"f0_mean", q.bitrate.f0_mean_bps},
                            {"f0_slope", q.bitrate.f0_slope_bps},
                            {"syllable_duration", q.bitrate.syllable_duration_bps},
                            {"total", q.bitrate.total_bps}};
        j["blocks_per_s"] = q.bitrate.blocks_per_s;
        j["syllables_per_s"] = q.bitrate.syllables_per_s;
    }
    if (q.has_latency) j["mean_syllable_ms"] = q.mean_syllable_ms;
    return j;
}

}  // namespace pvc
