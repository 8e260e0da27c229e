// Syllable-level F0 stylization: an order-2 discrete Legendre (= least
// squares line) fit per syllable reported as (mean, slope), 3-bit linear
// codebooks spanning mu +/- 3 sigma, and 16 ms duration steps capped at
// 256 ms. Longer segments are split evenly before fitting; slivers shorter
// than two frames merge backward.

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "pvc/common.hpp"
#include "pvc/errors.hpp"
#include "pvc/pitch.hpp"
#include "json.hpp"

namespace pvc {

constexpr int kDurStepMs = 16;
constexpr int kMaxDurSteps = 16;  // 4-bit field, up to 256 ms
constexpr int kProsodyLevels = 8; // 3-bit codebooks

/// Line fit of one syllable's log-F0: value at the segment center and slope
/// in log-Hz per second.
struct DlopCoeffs {
    double mean = 0.0;     // log-Hz
    double slope = 0.0;    // log-Hz / s
    double span_ms = 0.0;  // syllable duration

    bool operator==(const DlopCoeffs&) const = default;
};

/// Quantized syllable: two 3-bit indices plus the 4-bit duration.
struct SyllableCode {
    int mean_idx = 0;   // 0..7
    int slope_idx = 0;  // 0..7
    int dur_steps = 1;  // 1..16, wire value dur_steps-1

    bool operator==(const SyllableCode&) const = default;
};

/// Samples are taken as uniformly spaced over [0, span_ms] inclusive.
/// Projection onto the order-0/1 orthonormal discrete Legendre basis,
/// reported as the least-squares line through the samples.
inline DlopCoeffs fit_dlop(const std::vector<double>& segment, double span_ms) {
    size_t n = segment.size();
    if (n < 2) throw SegmentTooShort("fit_dlop needs at least 2 samples");
    if (span_ms <= 0.0) throw SegmentTooShort("fit_dlop span must be positive");
    double dt_s = span_ms / 1000.0 / static_cast<double>(n - 1);
    double t_bar = 0.5 * (n - 1);  // sample index units
    double y_bar = mean_of(segment);
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double dti = static_cast<double>(i) - t_bar;
        num += dti * (segment[i] - y_bar);
        den += dti * dti;
    }
    DlopCoeffs c;
    c.mean = y_bar;
    c.slope = (num / den) / dt_s;
    c.span_ms = span_ms;
    return c;
}

/// Reconstructed sample values of a fitted line (same spacing convention).
inline std::vector<double> dlop_reconstruct(const DlopCoeffs& c, size_t n) {
    std::vector<double> y(n);
    double dt_s = c.span_ms / 1000.0 / static_cast<double>(std::max<size_t>(n, 2) - 1);
    double t_bar = 0.5 * (static_cast<double>(n) - 1.0);
    for (size_t i = 0; i < n; ++i)
        y[i] = c.mean + c.slope * (static_cast<double>(i) - t_bar) * dt_s;
    return y;
}

// ---------------------------------------------------------------------------
// Codebooks

struct ProsodicParamCodebook {
    double mu = 0.0, sigma = 0.0;
    std::vector<double> levels;  // 8 strictly increasing values

    double step() const { return levels.size() > 1 ? levels[1] - levels[0] : 0.0; }
};

struct ProsodicCodebook {
    ProsodicParamCodebook mean;   // log-Hz
    ProsodicParamCodebook slope;  // log-Hz / s

    uint64_t content_hash() const {
        std::vector<uint8_t> b;
        for (const auto* p : {&mean, &slope}) {
            put_f64(b, p->mu);
            put_f64(b, p->sigma);
            for (double v : p->levels) put_f64(b, v);
        }
        return fnv1a64(b);
    }
};

namespace detail {

inline ProsodicParamCodebook build_param_codebook(const std::vector<double>& values,
                                                  const char* what) {
    ProsodicParamCodebook cb;
    cb.mu = mean_of(values);
    cb.sigma = stddev_of(values);
    if (cb.sigma <= 0.0)
        throw DegenerateCorpus(std::string("prosodic ") + what + " has zero variance");
    cb.levels.resize(kProsodyLevels);
    double lo = cb.mu - 3.0 * cb.sigma, hi = cb.mu + 3.0 * cb.sigma;
    for (int i = 0; i < kProsodyLevels; ++i)
        cb.levels[static_cast<size_t>(i)] = lo + (hi - lo) * i / (kProsodyLevels - 1);
    return cb;
}

}  // namespace detail

/// Per-parameter mu/sigma over the corpus; 8 levels linearly spaced on
/// [mu - 3 sigma, mu + 3 sigma].
inline ProsodicCodebook build_prosodic_codebooks(const std::vector<DlopCoeffs>& corpus) {
    if (corpus.size() < 2) throw EmptyCorpus("prosodic codebook needs >= 2 syllables");
    std::vector<double> means, slopes;
    means.reserve(corpus.size());
    slopes.reserve(corpus.size());
    for (const auto& c : corpus) {
        means.push_back(c.mean);
        slopes.push_back(c.slope);
    }
    ProsodicCodebook cb;
    cb.mean = detail::build_param_codebook(means, "mean");
    cb.slope = detail::build_param_codebook(slopes, "slope");
    return cb;
}

/// Nearest level; ties go to the lower index; out-of-range clamps to 0 / 7.
inline int quantize_param(double value, const ProsodicParamCodebook& cb) {
    int best = 0;
    double best_dist = std::fabs(value - cb.levels[0]);
    for (size_t i = 1; i < cb.levels.size(); ++i) {
        double d = std::fabs(value - cb.levels[i]);
        if (d < best_dist) {
            best_dist = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

inline double dequantize_param(int index, const ProsodicParamCodebook& cb) {
    if (index < 0 || index >= static_cast<int>(cb.levels.size()))
        throw CorruptStream("prosodic index out of range");
    return cb.levels[static_cast<size_t>(index)];
}

// ---------------------------------------------------------------------------
// Syllable segmentation + stylization

namespace detail {

struct FrameSegment {
    int first = 0;  // inclusive frame index
    int count = 0;
};

// Segments between consecutive boundaries plus utterance start/end, with
// sub-2-frame slivers merged backward (forward for a leading sliver) and
// long segments split evenly so every span fits the 16-step duration cap.
inline std::vector<FrameSegment> segment_frames(int n_frames, double shift_ms,
                                                double window_ms,
                                                const std::vector<double>& boundaries_ms) {
    std::vector<FrameSegment> segs;
    if (n_frames <= 0) return segs;
    auto frame_center = [&](int f) { return f * shift_ms + window_ms / 2.0; };

    // Cut points in frame index space.
    std::vector<int> cuts{0};
    for (double b : boundaries_ms) {
        int f = 0;
        while (f < n_frames && frame_center(f) < b) ++f;
        cuts.push_back(f);
    }
    cuts.push_back(n_frames);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        int first = cuts[i], count = cuts[i + 1] - cuts[i];
        if (count <= 0) continue;
        if (count < 2 && !segs.empty()) {
            segs.back().count += count;  // merge sliver backward
            continue;
        }
        segs.push_back({first, count});
    }
    // A leading sliver merges forward.
    while (segs.size() >= 2 && segs.front().count < 2) {
        segs[1].first = segs[0].first;
        segs[1].count += segs[0].count;
        segs.erase(segs.begin());
    }

    // Split any segment longer than the duration cap into even parts.
    double cap_ms = static_cast<double>(kMaxDurSteps * kDurStepMs);
    std::vector<FrameSegment> out;
    for (const auto& s : segs) {
        double span = (s.count - 1) * shift_ms;
        int parts = std::max(1, static_cast<int>(std::ceil(span / cap_ms)));
        while (parts > 1 && s.count / parts < 2) --parts;
        int base = s.count / parts, extra = s.count % parts;
        int at = s.first;
        for (int p = 0; p < parts; ++p) {
            int c = base + (p < extra ? 1 : 0);
            out.push_back({at, c});
            at += c;
        }
    }
    return out;
}

}  // namespace detail

/// DLOP coefficients per syllable with durations already rounded to 16 ms
/// steps (clamped to 16). Boundaries are utterance times in ms.
inline std::vector<DlopCoeffs> stylize_prosody(const F0Track& track,
                                               const std::vector<double>& boundaries_ms,
                                               const FrameGrid& grid) {
    int n = static_cast<int>(track.log_f0.size());
    auto segs = detail::segment_frames(n, grid.shift_ms, grid.window_ms, boundaries_ms);
    std::vector<DlopCoeffs> coeffs;
    coeffs.reserve(segs.size());
    for (const auto& s : segs) {
        if (s.count < 2) continue;  // a lone sliver utterance
        std::vector<double> seg(track.log_f0.begin() + s.first,
                                track.log_f0.begin() + s.first + s.count);
        double span = (s.count - 1) * static_cast<double>(grid.shift_ms);
        DlopCoeffs c = fit_dlop(seg, span);
        int steps = std::clamp(static_cast<int>(std::lround(span / kDurStepMs)), 1, kMaxDurSteps);
        c.span_ms = steps * static_cast<double>(kDurStepMs);
        coeffs.push_back(c);
    }
    return coeffs;
}

inline std::vector<SyllableCode> quantize_prosody(const std::vector<DlopCoeffs>& coeffs,
                                                  const ProsodicCodebook& cb) {
    std::vector<SyllableCode> codes;
    codes.reserve(coeffs.size());
    for (const auto& c : coeffs) {
        SyllableCode sc;
        sc.mean_idx = quantize_param(c.mean, cb.mean);
        sc.slope_idx = quantize_param(c.slope, cb.slope);
        sc.dur_steps = std::clamp(static_cast<int>(std::lround(c.span_ms / kDurStepMs)), 1,
                                  kMaxDurSteps);
        codes.push_back(sc);
    }
    return codes;
}

inline std::vector<DlopCoeffs> dequantize_prosody(const std::vector<SyllableCode>& codes,
                                                  const ProsodicCodebook& cb) {
    std::vector<DlopCoeffs> coeffs;
    coeffs.reserve(codes.size());
    for (const auto& sc : codes) {
        if (sc.dur_steps < 1 || sc.dur_steps > kMaxDurSteps)
            throw CorruptStream("syllable duration out of range");
        DlopCoeffs c;
        c.mean = dequantize_param(sc.mean_idx, cb.mean);
        c.slope = dequantize_param(sc.slope_idx, cb.slope);
        c.span_ms = sc.dur_steps * static_cast<double>(kDurStepMs);
        coeffs.push_back(c);
    }
    return coeffs;
}

/// Piecewise-linear log-F0 on the frame grid: per syllable a line from
/// (mean, slope) over its span, segments abutted in order, no smoothing.
/// Frames past the prosodic span hold the final value.
inline F0Track render_prosody(const std::vector<DlopCoeffs>& coeffs, const FrameGrid& grid,
                              int n_frames = -1) {
    F0Track track;
    if (coeffs.empty()) return track;
    double total_ms = 0.0;
    for (const auto& c : coeffs) total_ms += c.span_ms;
    if (n_frames < 0)
        n_frames = std::max(1, static_cast<int>(std::ceil(total_ms / grid.shift_ms)));
    track.log_f0.assign(static_cast<size_t>(n_frames), 0.0);
    track.voicing_mask.assign(static_cast<size_t>(n_frames), 1);

    std::vector<double> start_ms(coeffs.size());
    double at = 0.0;
    for (size_t j = 0; j < coeffs.size(); ++j) {
        start_ms[j] = at;
        at += coeffs[j].span_ms;
    }
    size_t j = 0;
    for (int f = 0; f < n_frames; ++f) {
        double t = f * static_cast<double>(grid.shift_ms) + grid.window_ms / 2.0;
        while (j + 1 < coeffs.size() && t >= start_ms[j + 1]) ++j;
        const auto& c = coeffs[j];
        double center = start_ms[j] + c.span_ms / 2.0;
        double dt_s = (std::min(t, start_ms[j] + c.span_ms) - center) / 1000.0;
        track.log_f0[static_cast<size_t>(f)] = c.mean + c.slope * dt_s;
    }
    return track;
}

/// Stylize, then quantize against the codebook.
inline std::vector<SyllableCode> encode_prosody(const F0Track& track,
                                                const std::vector<double>& boundaries_ms,
                                                const ProsodicCodebook& cb,
                                                const FrameGrid& grid) {
    return quantize_prosody(stylize_prosody(track, boundaries_ms, grid), cb);
}

/// Dequantize, then render on the frame grid.
inline F0Track decode_prosody(const std::vector<SyllableCode>& codes,
                              const ProsodicCodebook& cb, const FrameGrid& grid,
                              int n_frames = -1) {
    return render_prosody(dequantize_prosody(codes, cb), grid, n_frames);
}

// ---------------------------------------------------------------------------
// JSON persistence

inline nlohmann::json prosodic_codebook_to_json(const ProsodicCodebook& cb) {
    auto param = [](const ProsodicParamCodebook& p) {
        return nlohmann::json{{"mu", p.mu}, {"sigma", p.sigma}, {"levels", p.levels}};
    };
    return nlohmann::json{{"format", "pvc-prosodic-codebook"},
                          {"version", 1},
                          {"mean", param(cb.mean)},
                          {"slope", param(cb.slope)},
                          {"units", {{"mean", "log_hz"}, {"slope", "log_hz_per_s"}}}};
}

inline ProsodicCodebook prosodic_codebook_from_json(const nlohmann::json& j) {
    auto param = [](const nlohmann::json& je) {
        ProsodicParamCodebook p;
        p.mu = je.at("mu").get<double>();
        p.sigma = je.at("sigma").get<double>();
        p.levels = je.at("levels").get<std::vector<double>>();
        if (p.levels.size() != kProsodyLevels)
            throw CorruptStream("prosodic codebook must have 8 levels");
        return p;
    };
    ProsodicCodebook cb;
    cb.mean = param(j.at("mean"));
    cb.slope = param(j.at("slope"));
    return cb;
}

inline void save_prosodic_codebook(const std::string& path, const ProsodicCodebook& cb) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    f << prosodic_codebook_to_json(cb).dump(2) << "\n";
}

inline ProsodicCodebook load_prosodic_codebook(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
        return prosodic_codebook_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptStream(path + ": " + e.what());
    }
}

}  // namespace pvc
