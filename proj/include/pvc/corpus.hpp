// Synthetic CV-syllable corpus with known phonological labels, syllable
// boundaries and F0. Utterances alternate consonants {s, m, t} and vowels
// {a, i, u} at the configured syllable rate over a declining F0 contour with
// per-syllable excursions, so both prosodic codebook parameters have spread.

#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pvc/analyzers.hpp"
#include "pvc/audio.hpp"
#include "pvc/common.hpp"
#include "pvc/errors.hpp"
#include "pvc/snn.hpp"

namespace pvc {

inline std::vector<std::string> default_class_names(Scheme scheme) {
    switch (scheme) {
        case Scheme::GP:
            return {"A", "a", "E", "H", "h", "I", "i", "N", "S", "u", "U", "silence"};
        case Scheme::SPE:
            return {"vocalic", "consonantal", "high", "back", "low", "anterior", "coronal",
                    "round", "tense", "voice", "continuant", "nasal", "strident", "rising",
                    "silence"};
        case Scheme::ESPE:
            return {"anterior", "approximant", "back", "continuant", "coronal", "dental",
                    "fricative", "glottal", "high", "labial", "low", "mid", "nasal",
                    "retroflex", "round", "stop", "tense", "velar", "voiced", "vowel",
                    "silence"};
    }
    return {};
}

/// Toy phone inventory -> active phonological classes per scheme.
inline std::vector<std::string> phone_classes(Scheme scheme, char phone) {
    static const std::map<char, std::vector<std::string>> gp = {
        {'a', {"A", "a"}},      {'i', {"I", "i"}},      {'u', {"U", "u"}},
        {'s', {"S", "h"}},      {'m', {"N", "U"}},      {'t', {"H", "E"}},
        {'_', {"silence"}}};
    static const std::map<char, std::vector<std::string>> spe = {
        {'a', {"vocalic", "low", "back", "voice", "continuant", "tense"}},
        {'i', {"vocalic", "high", "voice", "continuant", "tense"}},
        {'u', {"vocalic", "high", "back", "round", "voice", "continuant", "tense"}},
        {'s', {"consonantal", "anterior", "coronal", "continuant", "strident"}},
        {'m', {"consonantal", "anterior", "nasal", "voice"}},
        {'t', {"consonantal", "anterior", "coronal"}},
        {'_', {"silence"}}};
    static const std::map<char, std::vector<std::string>> espe = {
        {'a', {"vowel", "low", "back", "voiced", "continuant", "tense"}},
        {'i', {"vowel", "high", "voiced", "continuant", "tense"}},
        {'u', {"vowel", "high", "back", "round", "voiced", "continuant", "tense"}},
        {'s', {"fricative", "anterior", "coronal", "continuant"}},
        {'m', {"nasal", "labial", "anterior", "voiced"}},
        {'t', {"stop", "anterior", "coronal"}},
        {'_', {"silence"}}};
    const auto& table = scheme == Scheme::GP ? gp : scheme == Scheme::SPE ? spe : espe;
    auto it = table.find(phone);
    if (it == table.end()) throw ConfigError(std::string("unknown toy phone ") + phone);
    return it->second;
}

struct ToyPhone {
    char symbol = '_';
    double start_ms = 0.0;
    double dur_ms = 0.0;
    bool voiced = false;
};

struct ToyUtterance {
    AudioClip clip;
    std::vector<ToyPhone> phones;
    BoundarySet boundaries_ms;          // syllable onsets + end of speech
    std::vector<double> log_f0_by_ms;   // ground-truth contour, 1 ms steps
};

struct ToyCorpusConfig {
    int n_syllables = 8;
    double syllable_rate_hz = 4.0;      // consonant + vowel per syllable
    double consonant_fraction = 0.28;
    double edge_silence_ms = 50.0;
    double f0_start_hz = 135.0;
    double f0_end_hz = 95.0;
};

namespace detail {

// Two-pole resonator applied in place.
inline void resonate(std::vector<double>& x, double freq_hz, double bw_hz) {
    double r = std::exp(-M_PI * bw_hz / kCanonicalRate);
    double c = 2.0 * r * std::cos(2.0 * M_PI * freq_hz / kCanonicalRate);
    double y1 = 0.0, y2 = 0.0;
    for (auto& v : x) {
        double y = v + c * y1 - r * r * y2;
        y2 = y1;
        y1 = y;
        v = y;
    }
}

// Resonator whose center frequency glides from f_start to f_end over the
// first ramp_samples (formant transition).
inline void resonate_glide(std::vector<double>& x, double f_start, double f_end,
                           double bw_hz, size_t ramp_samples) {
    double r = std::exp(-M_PI * bw_hz / kCanonicalRate);
    double y1 = 0.0, y2 = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        double frac = ramp_samples ? std::min(1.0, static_cast<double>(i) / ramp_samples) : 1.0;
        double f = f_start + (f_end - f_start) * frac;
        double c = 2.0 * r * std::cos(2.0 * M_PI * f / kCanonicalRate);
        double y = x[i] + c * y1 - r * r * y2;
        y2 = y1;
        y1 = y;
        x[i] = y;
    }
}

inline void normalize_rms(std::vector<double>& x, double target) {
    double e = 0.0;
    for (double v : x) e += v * v;
    double rms = std::sqrt(e / static_cast<double>(x.size()));
    if (rms > 1e-12)
        for (double& v : x) v *= target / rms;
}

inline void edge_fade(std::vector<double>& x, int fade_samples) {
    int n = static_cast<int>(x.size());
    int f = std::min(fade_samples, n / 2);
    for (int i = 0; i < f; ++i) {
        double g = 0.5 - 0.5 * std::cos(M_PI * i / f);
        x[static_cast<size_t>(i)] *= g;
        x[static_cast<size_t>(n - 1 - i)] *= g;
    }
}

}  // namespace detail

inline ToyUtterance generate_toy_utterance(Rng& rng, const ToyCorpusConfig& cfg = {}) {
    ToyUtterance utt;
    utt.clip.sample_rate = kCanonicalRate;

    double syl_ms = 1000.0 / cfg.syllable_rate_hz;
    double cons_ms = syl_ms * cfg.consonant_fraction;
    double vowel_ms = syl_ms - cons_ms;
    double speech_start = cfg.edge_silence_ms;
    double speech_end = speech_start + cfg.n_syllables * syl_ms;
    double total_ms = speech_end + cfg.edge_silence_ms;
    size_t total_samples = static_cast<size_t>(std::lround(total_ms * kCanonicalRate / 1000.0));
    utt.clip.samples.assign(total_samples, 0.0);

    const char consonants[] = {'s', 'm', 't'};
    const char vowels[] = {'a', 'i', 'u'};

    // Phone sequence with edge silences.
    utt.phones.push_back({'_', 0.0, speech_start, false});
    for (int s = 0; s < cfg.n_syllables; ++s) {
        double at = speech_start + s * syl_ms;
        char c = consonants[rng.uniform_int(3)];
        char v = vowels[rng.uniform_int(3)];
        utt.phones.push_back({c, at, cons_ms, c == 'm'});
        utt.phones.push_back({v, at + cons_ms, vowel_ms, true});
        utt.boundaries_ms.push_back(at);
    }
    utt.boundaries_ms.push_back(speech_end);
    utt.phones.push_back({'_', speech_end, cfg.edge_silence_ms, false});

    // Ground-truth log-F0: utterance declination plus per-syllable offset and
    // slope.
    size_t n_ms = static_cast<size_t>(std::lround(total_ms)) + 1;
    utt.log_f0_by_ms.assign(n_ms, std::log(cfg.f0_start_hz));
    double lf_start = std::log(cfg.f0_start_hz), lf_end = std::log(cfg.f0_end_hz);
    std::vector<double> syl_offset(static_cast<size_t>(cfg.n_syllables));
    std::vector<double> syl_slope(static_cast<size_t>(cfg.n_syllables));
    for (int s = 0; s < cfg.n_syllables; ++s) {
        syl_offset[static_cast<size_t>(s)] = rng.uniform(-0.08, 0.08);
        syl_slope[static_cast<size_t>(s)] = rng.uniform(-3.0, 3.0);  // log-Hz / s
    }
    for (size_t t = 0; t < n_ms; ++t) {
        double tt = static_cast<double>(t);
        double decl = lf_start + (lf_end - lf_start) * std::clamp((tt - speech_start) /
                                                                  (speech_end - speech_start),
                                                                  0.0, 1.0);
        int s = static_cast<int>(std::floor((tt - speech_start) / syl_ms));
        s = std::clamp(s, 0, cfg.n_syllables - 1);
        double center = speech_start + (s + 0.5) * syl_ms;
        utt.log_f0_by_ms[t] = decl + syl_offset[static_cast<size_t>(s)] +
                              syl_slope[static_cast<size_t>(s)] * (tt - center) / 1000.0;
    }

    // Render each phone. Vowel realizations are drawn from overlapping
    // formant ranges (as real vowel categories overlap), so the analyzers
    // produce genuinely graded posteriors on ambiguous instances.
    struct Formants {
        double f1, b1, f2, b2, amp;
    };
    auto vowel_formants = [&rng](char v) -> Formants {
        Formants fm;
        switch (v) {
            case 'a': fm = {rng.uniform(500, 850), 90, rng.uniform(850, 1500), 110, 0.28}; break;
            case 'i': fm = {rng.uniform(250, 450), 70, rng.uniform(1700, 2400), 140, 0.25}; break;
            default: fm = {rng.uniform(280, 550), 70, rng.uniform(700, 1150), 100, 0.26}; break;
        }
        fm.amp *= 1.0 + rng.uniform(-0.25, 0.25);
        return fm;
    };

    // Formant loci for the consonant-to-vowel transitions.
    auto locus = [](char c) -> std::pair<double, double> {
        switch (c) {
            case 's': return {420.0, 1900.0};
            case 'm': return {350.0, 950.0};
            case 't': return {450.0, 1750.0};
            default: return {500.0, 1500.0};
        }
    };

    char prev_phone = '_';
    for (const auto& ph : utt.phones) {
        size_t start = static_cast<size_t>(std::lround(ph.start_ms * kCanonicalRate / 1000.0));
        size_t len = static_cast<size_t>(std::lround(ph.dur_ms * kCanonicalRate / 1000.0));
        len = std::min(len, total_samples - std::min(start, total_samples));
        if (len == 0) continue;
        std::vector<double> seg(len, 0.0);

        auto fill_pulses = [&]() {
            double next = 0.0;
            while (next < static_cast<double>(len)) {
                size_t pos = static_cast<size_t>(next);
                size_t ms = std::min(static_cast<size_t>((ph.start_ms * kCanonicalRate / 1000.0 +
                                                          next) /
                                                         16.0),
                                     utt.log_f0_by_ms.size() - 1);
                double f0 = std::exp(utt.log_f0_by_ms[ms]);
                seg[pos] = 1.0;
                next += kCanonicalRate / f0;
            }
        };

        switch (ph.symbol) {
            case 'a':
            case 'i':
            case 'u': {
                auto fm = vowel_formants(ph.symbol);
                auto [l1, l2] = locus(prev_phone);
                fill_pulses();
                // Coarticulation: formants glide from the consonant locus.
                size_t ramp = static_cast<size_t>(0.12 * kCanonicalRate);
                detail::resonate_glide(seg, l1, fm.f1, fm.b1, ramp);
                detail::resonate_glide(seg, l2, fm.f2, fm.b2, ramp);
                for (auto& v : seg) v += 0.002 * rng.normal();
                detail::normalize_rms(seg, fm.amp);
                break;
            }
            case 's': {
                for (auto& v : seg) v = rng.normal();
                detail::resonate(seg, 4600.0 * (1.0 + rng.uniform(-0.1, 0.1)), 1800.0);
                detail::normalize_rms(seg, 0.05 * (1.0 + rng.uniform(-0.3, 0.3)));
                break;
            }
            case 'm': {
                fill_pulses();
                detail::resonate(seg, 250.0 * (1.0 + rng.uniform(-0.1, 0.1)), 70.0);
                detail::resonate(seg, 1100.0 * (1.0 + rng.uniform(-0.1, 0.1)), 220.0);
                detail::normalize_rms(seg, 0.10 * (1.0 + rng.uniform(-0.25, 0.25)));
                break;
            }
            case 't': {
                size_t closure = static_cast<size_t>(0.6 * static_cast<double>(len));
                for (size_t i = closure; i < len; ++i) seg[i] = rng.normal();
                detail::resonate(seg, 3200.0 * (1.0 + rng.uniform(-0.1, 0.1)), 1500.0);
                detail::normalize_rms(seg, 0.04 * (1.0 + rng.uniform(-0.3, 0.3)));
                break;
            }
            default: {  // silence
                for (auto& v : seg) v = 1e-4 * rng.normal();
                break;
            }
        }
        detail::edge_fade(seg, 128);  // 8 ms
        for (size_t i = 0; i < len && start + i < total_samples; ++i)
            utt.clip.samples[start + i] += seg[i];
        prev_phone = ph.symbol;
    }
    // A recording-like noise floor so closures are not mathematically silent
    // and the analyzers see honestly noisy observations.
    for (auto& v : utt.clip.samples) v += 4e-3 * rng.normal();
    return utt;
}

/// Per-frame K-bit label vectors for the grid (frame center decides the
/// phone).
inline std::vector<BinaryFrame> toy_labels_for_grid(const ToyUtterance& utt,
                                                    const FrameGrid& grid, Scheme scheme,
                                                    const std::vector<std::string>& class_names) {
    int n = grid.frame_count(utt.clip.samples.size());
    std::vector<BinaryFrame> labels(static_cast<size_t>(std::max(0, n)));
    for (int f = 0; f < n; ++f) {
        double center = grid.frame_center_ms(f);
        char phone = '_';
        for (const auto& ph : utt.phones)
            if (center >= ph.start_ms && center < ph.start_ms + ph.dur_ms) {
                phone = ph.symbol;
                break;
            }
        auto active = phone_classes(scheme, phone);
        BinaryFrame bits(class_names.size(), 0);
        for (size_t k = 0; k < class_names.size(); ++k)
            for (const auto& name : active)
                if (name == class_names[k]) bits[k] = 1;
        labels[static_cast<size_t>(f)] = std::move(bits);
    }
    return labels;
}

// ---------------------------------------------------------------------------
// On-disk corpus: WAV + labels + boundaries + manifest

struct ManifestEntry {
    std::string wav_path;
    std::string labels_path;
    std::string boundaries_path;
};

inline void write_labels_file(const std::string& path, const std::vector<BinaryFrame>& labels,
                              Scheme scheme, int shift_ms) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    f << "# scheme=" << scheme_name(scheme) << " K="
      << (labels.empty() ? 0 : labels.front().size()) << " shift_ms=" << shift_ms << "\n";
    for (const auto& row : labels) {
        for (uint8_t b : row) f << (b ? '1' : '0');
        f << "\n";
    }
}

inline std::vector<BinaryFrame> read_labels_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    std::vector<BinaryFrame> labels;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        BinaryFrame row;
        row.reserve(line.size());
        for (char c : line) {
            if (c == '0' || c == '1') row.push_back(c == '1' ? 1 : 0);
        }
        if (!row.empty()) labels.push_back(std::move(row));
    }
    return labels;
}

inline void write_boundaries_file(const std::string& path, const BoundarySet& bounds) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    for (size_t i = 0; i < bounds.size(); ++i) f << (i ? " " : "") << bounds[i];
    f << "\n";
}

inline BoundarySet read_boundaries_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    BoundarySet bounds;
    double v;
    while (f >> v) bounds.push_back(v);
    return bounds;
}

inline void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    for (const auto& e : entries)
        f << e.wav_path << "\t" << e.labels_path << "\t" << e.boundaries_path << "\n";
}

inline std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open manifest " + path);
    std::vector<ManifestEntry> entries;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        ManifestEntry e;
        if (!std::getline(ss, e.wav_path, '\t') || !std::getline(ss, e.labels_path, '\t') ||
            !std::getline(ss, e.boundaries_path, '\t'))
            throw ConfigError("manifest line needs wav<TAB>labels<TAB>boundaries: " + line);
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace pvc
