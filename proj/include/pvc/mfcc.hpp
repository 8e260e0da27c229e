// MFCC pipeline: 26-band mel filterbank, DCT-II cepstra, delta/delta-delta
// regression, per-utterance cepstral mean normalization of the statics, and
// temporal context stacking for the analyzer inputs.

#pragma once

#include <cmath>
#include <vector>

#include "pvc/audio.hpp"
#include "pvc/errors.hpp"
#include "pvc/fft.hpp"

namespace pvc {

constexpr int kMelBands = 26;
constexpr int kNumCepstra = 13;
constexpr double kLogFloor = 1e-10;

struct MfccConfig {
    int n_fft = 512;
    int n_bands = kMelBands;
    int n_ceps = kNumCepstra;   // statics per frame
    int delta_window = 2;       // regression half-window
    bool mean_normalize = true; // per-utterance CMN on statics
};

/// Per-frame features: statics, and statics+deltas+delta-deltas.
struct AcousticFeatures {
    std::vector<std::vector<double>> statics;  // n_frames x n_ceps
    std::vector<std::vector<double>> full;     // n_frames x 3*n_ceps
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular mel filterbank over the one-sided spectrum.
inline std::vector<std::vector<double>> mel_filterbank(int n_bands, int n_fft,
                                                       int sample_rate,
                                                       double f_lo = 0.0,
                                                       double f_hi = 0.0) {
    if (f_hi <= 0.0) f_hi = sample_rate / 2.0;
    int n_bins = n_fft / 2 + 1;
    double mel_lo = hz_to_mel(f_lo), mel_hi = hz_to_mel(f_hi);
    std::vector<double> edges(n_bands + 2);
    for (int i = 0; i < n_bands + 2; ++i)
        edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_bands + 1));
    std::vector<std::vector<double>> fb(n_bands, std::vector<double>(n_bins, 0.0));
    double bin_hz = static_cast<double>(sample_rate) / n_fft;
    for (int b = 0; b < n_bands; ++b) {
        double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
        for (int k = 0; k < n_bins; ++k) {
            double f = k * bin_hz;
            if (f > lo && f < mid)
                fb[b][k] = (f - lo) / (mid - lo);
            else if (f >= mid && f < hi)
                fb[b][k] = (hi - f) / (hi - mid);
        }
    }
    return fb;
}

/// Orthonormal DCT-II basis, n_out x n_in.
inline std::vector<std::vector<double>> dct_matrix(int n_out, int n_in) {
    std::vector<std::vector<double>> m(n_out, std::vector<double>(n_in));
    for (int k = 0; k < n_out; ++k) {
        double norm = std::sqrt((k == 0 ? 1.0 : 2.0) / n_in);
        for (int n = 0; n < n_in; ++n)
            m[k][n] = norm * std::cos(M_PI * k * (2.0 * n + 1.0) / (2.0 * n_in));
    }
    return m;
}

/// Raw cepstra for pre-windowed frames; no normalization, no deltas.
/// Exposed separately so the MCD metric can use its own order.
inline std::vector<std::vector<double>> frames_to_cepstra(
    const std::vector<std::vector<double>>& frames, int n_ceps,
    const MfccConfig& cfg = MfccConfig()) {
    std::vector<std::vector<double>> out;
    if (frames.empty()) return out;
    auto fb = mel_filterbank(cfg.n_bands, cfg.n_fft, kCanonicalRate);
    auto dct = dct_matrix(n_ceps, cfg.n_bands);
    out.reserve(frames.size());
    std::vector<double> logmel(cfg.n_bands);
    for (const auto& frame : frames) {
        auto spec = power_spectrum(frame, cfg.n_fft);
        for (int b = 0; b < cfg.n_bands; ++b) {
            double e = 0.0;
            for (size_t k = 0; k < spec.size(); ++k) e += fb[b][k] * spec[k];
            logmel[b] = std::log(std::max(e, kLogFloor));
        }
        std::vector<double> ceps(n_ceps, 0.0);
        for (int k = 0; k < n_ceps; ++k) {
            double acc = 0.0;
            for (int b = 0; b < cfg.n_bands; ++b) acc += dct[k][b] * logmel[b];
            ceps[k] = acc;
        }
        out.push_back(std::move(ceps));
    }
    return out;
}

/// Standard regression deltas over a +/-window context, edge frames replicated.
inline std::vector<std::vector<double>> delta_features(
    const std::vector<std::vector<double>>& x, int window) {
    std::vector<std::vector<double>> d(x.size());
    if (x.empty()) return d;
    int n = static_cast<int>(x.size());
    int dim = static_cast<int>(x[0].size());
    double denom = 0.0;
    for (int k = 1; k <= window; ++k) denom += 2.0 * k * k;
    for (int t = 0; t < n; ++t) {
        d[t].assign(dim, 0.0);
        for (int k = 1; k <= window; ++k) {
            int tp = std::min(n - 1, t + k);
            int tm = std::max(0, t - k);
            for (int j = 0; j < dim; ++j) d[t][j] += k * (x[tp][j] - x[tm][j]);
        }
        for (int j = 0; j < dim; ++j) d[t][j] /= denom;
    }
    return d;
}

/// Full 39-dim MFCC features (13 statics + deltas + delta-deltas).
inline AcousticFeatures compute_mfcc(const std::vector<std::vector<double>>& frames,
                                     const MfccConfig& cfg = MfccConfig()) {
    AcousticFeatures feats;
    feats.statics = frames_to_cepstra(frames, cfg.n_ceps, cfg);
    if (feats.statics.empty()) return feats;
    if (cfg.mean_normalize) {
        int n = static_cast<int>(feats.statics.size());
        std::vector<double> mean(cfg.n_ceps, 0.0);
        for (const auto& row : feats.statics)
            for (int j = 0; j < cfg.n_ceps; ++j) mean[j] += row[j];
        for (int j = 0; j < cfg.n_ceps; ++j) mean[j] /= n;
        for (auto& row : feats.statics)
            for (int j = 0; j < cfg.n_ceps; ++j) row[j] -= mean[j];
    }
    auto d1 = delta_features(feats.statics, cfg.delta_window);
    auto d2 = delta_features(d1, cfg.delta_window);
    feats.full.resize(feats.statics.size());
    for (size_t t = 0; t < feats.statics.size(); ++t) {
        auto& row = feats.full[t];
        row.reserve(3 * cfg.n_ceps);
        row.insert(row.end(), feats.statics[t].begin(), feats.statics[t].end());
        row.insert(row.end(), d1[t].begin(), d1[t].end());
        row.insert(row.end(), d2[t].begin(), d2[t].end());
    }
    return feats;
}

/// Concatenate each frame with its (context-1)/2 neighbours on both sides,
/// replicating the boundary frames at the edges.
inline std::vector<std::vector<double>> stack_context(
    const std::vector<std::vector<double>>& x, int context) {
    if (context < 1 || context % 2 == 0)
        throw DimensionError("context must be odd and positive");
    std::vector<std::vector<double>> out;
    if (x.empty()) return out;
    int n = static_cast<int>(x.size());
    int half = (context - 1) / 2;
    size_t dim = x[0].size();
    out.resize(x.size());
    for (int t = 0; t < n; ++t) {
        out[t].reserve(dim * context);
        for (int c = -half; c <= half; ++c) {
            int src = std::clamp(t + c, 0, n - 1);
            out[t].insert(out[t].end(), x[src].begin(), x[src].end());
        }
    }
    return out;
}

}  // namespace pvc
