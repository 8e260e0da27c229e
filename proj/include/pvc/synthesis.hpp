// Decoder back end. Speech parameters per frame are 28 statics — 24 LSPs,
// log gain, log HNR, glottal pole angle and log magnitude — plus deltas and
// delta-deltas (84 total). The vocoder renders an HNR-weighted mix of a
// glottal-shaped pulse train and noise through the LPC filter, overlap-added
// with cross-faded frame joins and pulse-phase continuity.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pvc/audio.hpp"
#include "pvc/common.hpp"
#include "pvc/errors.hpp"
#include "pvc/lpc.hpp"
#include "pvc/mfcc.hpp"
#include "pvc/mlp.hpp"
#include "pvc/pitch.hpp"

namespace pvc {

constexpr int kStaticParams = 28;   // 24 LSP + gain + hnr + glottal t + glottal log m
constexpr int kFullParams = 84;     // statics + deltas + delta-deltas
constexpr double kGainFloorLog = -23.0;

/// Indices into a static parameter row.
namespace param {
constexpr int kLsp = 0;
constexpr int kGain = 24;
constexpr int kHnr = 25;
constexpr int kGlottalAngle = 26;
constexpr int kGlottalLogMag = 27;
}  // namespace param

using ParamRow = std::vector<double>;  // kStaticParams or kFullParams wide

inline std::vector<double> lsp_of(const ParamRow& row) {
    return std::vector<double>(row.begin() + param::kLsp, row.begin() + param::kLsp + kLpcOrder);
}

namespace detail {

// Dominant complex pole pair of a 2nd-order pre-emphasis inverse model of
// the LPC residual: angle t and log magnitude log(m). Fitted over a span of
// several pitch periods so the estimate does not jitter with pulse phase.
inline std::pair<double, double> glottal_pole(const std::vector<double>& residual_span) {
    auto r = autocorrelation(residual_span, 2);
    r[0] = r[0] * (1.0 + 1e-9) + 1e-12;
    auto b = levinson(r, 2);
    double b1 = b[0], b2 = b[1];
    double disc = b1 * b1 - 4.0 * b2;
    double t, m;
    if (disc < 0.0) {
        m = std::sqrt(b2);
        t = std::acos(std::clamp(-b1 / (2.0 * m), -1.0, 1.0));
    } else {
        double r1 = (-b1 + std::sqrt(disc)) / 2.0;
        double r2 = (-b1 - std::sqrt(disc)) / 2.0;
        double dom = std::fabs(r1) >= std::fabs(r2) ? r1 : r2;
        m = std::fabs(dom);
        t = dom >= 0.0 ? 0.05 : M_PI - 0.05;
    }
    m = std::clamp(m, 1e-3, 0.97);
    t = std::clamp(t, 0.02, M_PI - 0.02);
    return {t, std::log(m)};
}

// FIR pre-emphasis by the inverse of the glottal pole pair.
inline std::vector<double> tilt_inverse_filter(const std::vector<double>& x, double t,
                                               double m) {
    double c1 = -2.0 * m * std::cos(t), c2 = m * m;
    std::vector<double> y(x.size());
    for (size_t n = 0; n < x.size(); ++n) {
        double acc = x[n];
        if (n >= 1) acc += c1 * x[n - 1];
        if (n >= 2) acc += c2 * x[n - 2];
        y[n] = acc;
    }
    return y;
}

// Full-band harmonic-to-noise ratio: the interpolated normalized
// autocorrelation peak rho near the pitch lag (Boersma's harmonicity,
// computed on the raw frame) feeds hnr = log(rho / (1 - rho)). rho is the
// periodic energy fraction, so this is the lag-domain form of the
// harmonic/aperiodic split.
inline double frame_hnr(const std::vector<double>& frame, double f0_hz) {
    int n = static_cast<int>(frame.size());
    int lag0 = static_cast<int>(std::lround(kCanonicalRate / std::clamp(f0_hz, 50.0, 500.0)));
    int lo = std::max(2, static_cast<int>(std::floor(lag0 * 0.85)));
    int hi = std::min(n - 2, static_cast<int>(std::ceil(lag0 * 1.15)));
    std::vector<double> r(static_cast<size_t>(std::max(hi + 2, 0)), 0.0);
    double best = 0.0;
    int best_lag = -1;
    for (int lag = lo; lag <= hi; ++lag) {
        double num = 0.0, e0 = 0.0, e1 = 0.0;
        for (int i = 0; i + lag < n; ++i) {
            num += frame[static_cast<size_t>(i)] * frame[static_cast<size_t>(i + lag)];
            e0 += frame[static_cast<size_t>(i)] * frame[static_cast<size_t>(i)];
            e1 += frame[static_cast<size_t>(i + lag)] * frame[static_cast<size_t>(i + lag)];
        }
        double den = std::sqrt(e0 * e1);
        r[static_cast<size_t>(lag)] = den > 0.0 ? num / den : 0.0;
        if (r[static_cast<size_t>(lag)] > best) {
            best = r[static_cast<size_t>(lag)];
            best_lag = lag;
        }
    }
    if (best_lag > lo && best_lag < hi) {
        double a = r[static_cast<size_t>(best_lag - 1)], b = r[static_cast<size_t>(best_lag)],
               c = r[static_cast<size_t>(best_lag + 1)];
        double denom = a - 2.0 * b + c;
        if (std::fabs(denom) > 1e-12) best = b - 0.125 * (a - c) * (a - c) / denom;
    }
    double rho = std::clamp(best, 1e-3, 1.0 - 1e-3);
    return std::log(rho / (1.0 - rho));
}

}  // namespace detail

/// Per-frame analysis: order-24 LPC -> LSPs, residual gain, HNR and the
/// glottal pole, with delta features appended (84-dim rows). The continuous
/// F0 track is computed internally when not supplied.
inline std::vector<ParamRow> extract_speech_params(const AudioClip& clip, const FrameGrid& grid,
                                                   const F0Track* f0 = nullptr) {
    if (clip.sample_rate != kCanonicalRate)
        throw ConfigError("extract_speech_params expects 16 kHz input");
    int n = grid.frame_count(clip.samples.size());
    std::vector<ParamRow> statics;
    if (n <= 0) return statics;

    F0Track local;
    if (!f0) {
        try {
            local = extract_continuous_f0(clip, grid);
        } catch (const NoVoicedSpeech&) {
            local.log_f0.assign(static_cast<size_t>(n), std::log(120.0));
            local.voicing_mask.assign(static_cast<size_t>(n), 0);
        }
        f0 = &local;
    }
    if (static_cast<int>(f0->log_f0.size()) != n)
        throw DimensionError("extract_speech_params: F0 track does not match the grid");

    int w = grid.window_samples(), s = grid.shift_samples();
    std::vector<double> hamming(static_cast<size_t>(w));
    for (int i = 0; i < w; ++i)
        hamming[static_cast<size_t>(i)] = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / (w - 1));

    statics.resize(static_cast<size_t>(n));
    constexpr int kVoicedSpan = 640;  // several pitch periods, phase-robust
    for (int fi = 0; fi < n; ++fi) {
        std::vector<double> raw(clip.samples.begin() + static_cast<long>(fi) * s,
                                clip.samples.begin() + static_cast<long>(fi) * s + w);
        std::vector<double> windowed(static_cast<size_t>(w));
        for (int i = 0; i < w; ++i) windowed[static_cast<size_t>(i)] = raw[static_cast<size_t>(i)] * hamming[static_cast<size_t>(i)];

        double err = 0.0;
        auto lpc = lpc_from_frame(windowed, kLpcOrder, &err);
        auto lsp = lpc_to_lsp(lpc);

        double f0_hz = std::exp(f0->log_f0[static_cast<size_t>(fi)]);
        double hnr = detail::frame_hnr(raw, f0_hz);
        double rho = 1.0 / (1.0 + std::exp(-hnr));

        // Tilt model and gain come from the residual. Voiced frames use a
        // longer centered span so the estimates do not beat against the
        // pulse phase; unvoiced frames stay frame-local so short noise
        // phones are not polluted by their periodic neighbours.
        std::vector<double> res_src;
        if (rho >= 0.5) {
            long center = static_cast<long>(fi) * s + w / 2;
            long g0 = std::max<long>(0, center - kVoicedSpan / 2);
            long g1 = std::min<long>(static_cast<long>(clip.samples.size()), center + kVoicedSpan / 2);
            res_src.assign(clip.samples.begin() + g0, clip.samples.begin() + g1);
        } else {
            res_src = raw;
        }
        auto span_res = inverse_filter(res_src, lpc);
        span_res.erase(span_res.begin(),
                       span_res.begin() + std::min<size_t>(kLpcOrder, span_res.size()));

        auto [gt, glm] = detail::glottal_pole(span_res);
        double gm = std::exp(glm);

        // Gain = RMS of the fully whitened residual (tilt removed), matching
        // the synthesis excitation scale before its glottal shaping.
        auto whitened = detail::tilt_inverse_filter(span_res, gt, gm);
        double energy = 0.0;
        for (double v : whitened) energy += v * v;
        double gain_lin = std::sqrt(energy / std::max<size_t>(whitened.size(), 1));
        double gain = std::max(std::log(gain_lin + 1e-12), kGainFloorLog);

        ParamRow row;
        row.reserve(kStaticParams);
        row.insert(row.end(), lsp.begin(), lsp.end());
        row.push_back(gain);
        row.push_back(hnr);
        row.push_back(gt);
        row.push_back(glm);
        statics[static_cast<size_t>(fi)] = std::move(row);
    }

    auto d1 = delta_features(statics, 2);
    auto d2 = delta_features(d1, 2);
    std::vector<ParamRow> full(statics.size());
    for (size_t t = 0; t < statics.size(); ++t) {
        full[t].reserve(kFullParams);
        full[t].insert(full[t].end(), statics[t].begin(), statics[t].end());
        full[t].insert(full[t].end(), d1[t].begin(), d1[t].end());
        full[t].insert(full[t].end(), d2[t].begin(), d2[t].end());
    }
    return full;
}

/// Forward pass of the synthesis net over stacked (binary or continuous)
/// posteriors, LSP stabilization applied. Only the 28 statics are returned;
/// delta outputs are training targets only.
inline std::vector<ParamRow> synth_forward(const MlpWeights& net,
                                           const std::vector<std::vector<double>>& stacked) {
    std::vector<ParamRow> rows;
    rows.reserve(stacked.size());
    for (const auto& x : stacked) {
        auto y = mlp_forward(net, x);
        if (static_cast<int>(y.size()) < kStaticParams)
            throw DimensionError("synthesis net output is narrower than the statics");
        ParamRow row(y.begin(), y.begin() + kStaticParams);
        std::vector<double> lsp(row.begin(), row.begin() + kLpcOrder);
        stabilize_lsp(lsp);
        std::copy(lsp.begin(), lsp.end(), row.begin());
        row[param::kGain] = std::max(row[param::kGain], kGainFloorLog);
        row[param::kGlottalLogMag] = std::min(row[param::kGlottalLogMag], std::log(0.98));
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Vocoder

struct Excitation {
    std::vector<double> samples;
    std::vector<long> pulse_positions;
};

/// Excitation for the whole utterance: per-frame HNR-weighted mix of a pulse
/// train at the decoded F0 and unit-variance noise, scaled by the frame gain
/// and shaped by the glottal pole filter (the inverse of the analysis-side
/// tilt removal). Pulse phase runs continuously across frames.
inline Excitation build_excitation(const std::vector<ParamRow>& params, const F0Track& f0,
                                   const FrameGrid& grid, uint64_t seed = 0x5eed) {
    Excitation exc;
    int n = static_cast<int>(params.size());
    if (n == 0) return exc;
    int w = grid.window_samples(), s = grid.shift_samples();
    long total = static_cast<long>(n - 1) * s + w;

    auto frame_of = [&](long pos) { return std::min<long>(pos / s, n - 1); };

    // Pulse track: height sqrt(period) makes the train unit-power. Positions
    // accumulate in float and round to the nearest sample, so a constant F0
    // places an exactly periodic train.
    std::vector<double> pulses(static_cast<size_t>(total), 0.0);
    double next_pulse = 0.0;
    while (next_pulse < static_cast<double>(total)) {
        long pos = std::lround(next_pulse);
        if (pos >= total) break;
        int fi = static_cast<int>(frame_of(pos));
        double f0_hz = std::clamp(std::exp(f0.log_f0[static_cast<size_t>(fi)]), 50.0, 500.0);
        double period = kCanonicalRate / f0_hz;
        pulses[static_cast<size_t>(pos)] += std::sqrt(period);
        exc.pulse_positions.push_back(pos);
        next_pulse += period;
    }

    // Unit-power voiced/unvoiced mix, scaled by the frame gain.
    Rng rng(seed);
    std::vector<double> mix(static_cast<size_t>(total));
    for (long i = 0; i < total; ++i) {
        int fi = static_cast<int>(frame_of(i));
        const auto& row = params[static_cast<size_t>(fi)];
        double voiced = 1.0 / (1.0 + std::exp(-row[param::kHnr]));
        // The floor value means silence, not just a very quiet frame.
        double gain = row[param::kGain] > kGainFloorLog + 1e-9 ? std::exp(row[param::kGain]) : 0.0;
        mix[static_cast<size_t>(i)] =
            gain * (std::sqrt(voiced) * pulses[static_cast<size_t>(i)] +
                    std::sqrt(1.0 - voiced) * rng.normal());
    }

    // Glottal shaping, coefficients switching per frame, state carried.
    exc.samples.assign(static_cast<size_t>(total), 0.0);
    double y1 = 0.0, y2 = 0.0;
    for (long i = 0; i < total; ++i) {
        const auto& row = params[static_cast<size_t>(frame_of(i))];
        double m = std::exp(row[param::kGlottalLogMag]);
        double t = row[param::kGlottalAngle];
        double y = mix[static_cast<size_t>(i)] + 2.0 * m * std::cos(t) * y1 - m * m * y2;
        exc.samples[static_cast<size_t>(i)] = y;
        y2 = y1;
        y1 = y;
    }
    return exc;
}

/// Render the waveform. Output length is exactly
/// n_frames * shift + window - shift samples; peak-normalized to 0.9.
inline AudioClip vocode(const std::vector<ParamRow>& params, const F0Track& f0,
                        const FrameGrid& grid, uint64_t seed = 0x5eed) {
    if (params.size() != f0.log_f0.size())
        throw DimensionError("vocode: params and F0 track lengths differ");
    AudioClip out;
    out.sample_rate = kCanonicalRate;
    int n = static_cast<int>(params.size());
    if (n == 0) return out;

    int w = grid.window_samples(), s = grid.shift_samples();
    long total = static_cast<long>(n - 1) * s + w;
    out.samples.assign(static_cast<size_t>(total), 0.0);
    auto exc = build_excitation(params, f0, grid, seed);

    int fade = std::min(s, w - s);
    constexpr int kPreRoll = 240;

    for (int fi = 0; fi < n; ++fi) {
        long start = static_cast<long>(fi) * s;
        long seg_len = (fi + 1 < n) ? s + fade : w;
        auto lsp = lsp_of(params[static_cast<size_t>(fi)]);
        auto lpc = lsp_to_lpc(lsp);

        long pre = std::min<long>(kPreRoll, start);
        std::vector<double> seg(static_cast<size_t>(pre + seg_len), 0.0);
        for (long i = 0; i < pre + seg_len; ++i) {
            double acc = exc.samples[static_cast<size_t>(start - pre + i)];
            for (int j = 1; j <= kLpcOrder && j <= i; ++j)
                acc -= lpc[static_cast<size_t>(j - 1)] * seg[static_cast<size_t>(i - j)];
            seg[static_cast<size_t>(i)] = acc;
        }

        for (long i = 0; i < seg_len; ++i) {
            double weight = 1.0;
            if (fi > 0 && i < fade) {
                double x = (static_cast<double>(i) + 0.5) / fade * (M_PI / 2.0);
                weight = std::sin(x) * std::sin(x);
            } else if (fi + 1 < n && i >= seg_len - fade) {
                double x = (static_cast<double>(i - (seg_len - fade)) + 0.5) / fade * (M_PI / 2.0);
                weight = std::cos(x) * std::cos(x);
            }
            out.samples[static_cast<size_t>(start + i)] += weight * seg[static_cast<size_t>(pre + i)];
        }
    }

    double peak = 0.0;
    for (double x : out.samples) peak = std::max(peak, std::fabs(x));
    if (peak > 1e-9)
        for (double& x : out.samples) x *= 0.9 / peak;
    return out;
}

}  // namespace pvc
