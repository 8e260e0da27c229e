// Continuous pitch extraction: normalized-autocorrelation F0 per frame,
// voicing decision, and linear log-domain interpolation through unvoiced
// regions so the returned track has no gaps.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pvc/audio.hpp"
#include "pvc/errors.hpp"

namespace pvc {

struct PitchConfig {
    double f0_min_hz = 50.0;
    double f0_max_hz = 500.0;
    double voicing_threshold = 0.3;   // normalized autocorrelation peak
    double silence_rms = 1e-5;        // below this a frame is never voiced
    int analysis_window = 512;        // samples, centered on each frame
};

/// Gap-free log-F0 track. voicing_mask is diagnostic only.
struct F0Track {
    std::vector<double> log_f0;
    std::vector<uint8_t> voicing_mask;
};

namespace detail {

// Normalized autocorrelation r(L) over a window, with parabolic peak
// interpolation for sub-sample lag resolution.
inline bool frame_pitch(const double* x, int n, const PitchConfig& cfg,
                        double* f0_out, double* peak_out) {
    double energy = 0.0;
    for (int i = 0; i < n; ++i) energy += x[i] * x[i];
    double rms = std::sqrt(energy / n);
    if (rms < cfg.silence_rms) return false;

    int lag_min = static_cast<int>(std::floor(kCanonicalRate / cfg.f0_max_hz));
    int lag_max = static_cast<int>(std::ceil(kCanonicalRate / cfg.f0_min_hz));
    lag_max = std::min(lag_max, n - 2);
    if (lag_max <= lag_min) return false;

    std::vector<double> r(lag_max + 1, 0.0);
    double best = -1.0;
    int best_lag = -1;
    for (int L = lag_min; L <= lag_max; ++L) {
        double num = 0.0, e0 = 0.0, e1 = 0.0;
        for (int i = 0; i + L < n; ++i) {
            num += x[i] * x[i + L];
            e0 += x[i] * x[i];
            e1 += x[i + L] * x[i + L];
        }
        double den = std::sqrt(e0 * e1);
        r[L] = den > 0.0 ? num / den : 0.0;
        if (r[L] > best) {
            best = r[L];
            best_lag = L;
        }
    }
    if (best_lag < 0 || best < cfg.voicing_threshold) return false;

    double lag = best_lag;
    if (best_lag > lag_min && best_lag < lag_max) {
        double a = r[best_lag - 1], b = r[best_lag], c = r[best_lag + 1];
        double denom = a - 2.0 * b + c;
        if (std::fabs(denom) > 1e-12) {
            double shift = 0.5 * (a - c) / denom;
            if (std::fabs(shift) <= 1.0) lag += shift;
        }
    }
    *f0_out = kCanonicalRate / lag;
    *peak_out = best;
    return true;
}

}  // namespace detail

/// Per-frame F0 with unvoiced gaps filled by linear interpolation of log-F0;
/// leading/trailing unvoiced frames hold the nearest voiced value.
/// Throws NoVoicedSpeech when no frame passes the voicing test.
inline F0Track extract_continuous_f0(const AudioClip& clip, const FrameGrid& grid,
                                     const PitchConfig& cfg = PitchConfig()) {
    if (clip.sample_rate != kCanonicalRate)
        throw ConfigError("extract_continuous_f0 expects 16 kHz input");
    int n_frames = grid.frame_count(clip.samples.size());
    if (n_frames <= 0) throw NoVoicedSpeech("clip shorter than one window");

    F0Track track;
    track.log_f0.assign(n_frames, 0.0);
    track.voicing_mask.assign(n_frames, 0);

    int win = cfg.analysis_window;
    int shift = grid.shift_samples();
    int frame_center_off = grid.window_samples() / 2;
    std::vector<double> buf(win);
    double lo = std::log(cfg.f0_min_hz), hi = std::log(cfg.f0_max_hz);

    for (int f = 0; f < n_frames; ++f) {
        long center = static_cast<long>(f) * shift + frame_center_off;
        long start = center - win / 2;
        for (int i = 0; i < win; ++i) {
            long idx = start + i;
            buf[i] = (idx >= 0 && idx < static_cast<long>(clip.samples.size()))
                         ? clip.samples[static_cast<size_t>(idx)]
                         : 0.0;
        }
        double f0, peak;
        if (detail::frame_pitch(buf.data(), win, cfg, &f0, &peak)) {
            track.voicing_mask[f] = 1;
            track.log_f0[f] = std::clamp(std::log(f0), lo, hi);
        }
    }

    // Interpolate through unvoiced gaps; hold at the edges.
    int first = -1, last = -1;
    for (int f = 0; f < n_frames; ++f)
        if (track.voicing_mask[f]) {
            if (first < 0) first = f;
            last = f;
        }
    if (first < 0) throw NoVoicedSpeech();
    for (int f = 0; f < first; ++f) track.log_f0[f] = track.log_f0[first];
    for (int f = last + 1; f < n_frames; ++f) track.log_f0[f] = track.log_f0[last];
    int prev = first;
    for (int f = first + 1; f <= last; ++f) {
        if (!track.voicing_mask[f]) continue;
        for (int g = prev + 1; g < f; ++g) {
            double t = static_cast<double>(g - prev) / (f - prev);
            track.log_f0[g] = (1.0 - t) * track.log_f0[prev] + t * track.log_f0[f];
        }
        prev = f;
    }
    return track;
}

}  // namespace pvc
