// Bank of per-class phonological analyzers. Each class has its own 2-output
// softmax network whose "present" probability becomes one coordinate of the
// posterior vector; binarization thresholds at 0.5 (ties map to 1).

#pragma once

#include <string>
#include <vector>

#include "pvc/errors.hpp"
#include "pvc/mlp.hpp"

namespace pvc {

enum class Scheme : uint8_t { GP = 0, SPE = 1, ESPE = 2 };

inline int scheme_class_count(Scheme s) {
    switch (s) {
        case Scheme::GP: return 12;
        case Scheme::SPE: return 15;
        case Scheme::ESPE: return 21;
    }
    return 0;
}

inline std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::GP: return "GP";
        case Scheme::SPE: return "SPE";
        case Scheme::ESPE: return "eSPE";
    }
    return "?";
}

inline Scheme scheme_from_name(const std::string& name) {
    if (name == "GP" || name == "gp") return Scheme::GP;
    if (name == "SPE" || name == "spe") return Scheme::SPE;
    if (name == "eSPE" || name == "espe" || name == "ESPE") return Scheme::ESPE;
    throw ConfigError("unknown phonological scheme: " + name);
}

/// K class-conditional probabilities for one frame.
struct PosteriorFrame {
    std::vector<double> values;  // each in [0, 1]
};

using BinaryFrame = std::vector<uint8_t>;  // K entries of 0/1

/// bit k = 1 iff values[k] >= 0.5.
inline BinaryFrame binarize(const PosteriorFrame& frame) {
    BinaryFrame bits(frame.values.size());
    for (size_t k = 0; k < frame.values.size(); ++k)
        bits[k] = frame.values[k] >= 0.5 ? 1 : 0;
    return bits;
}

/// One analyzer network per phonological class. Output index 0 is "present".
struct AnalyzerBank {
    Scheme scheme = Scheme::GP;
    std::vector<std::string> class_names;
    std::vector<MlpWeights> nets;

    int class_count() const { return static_cast<int>(nets.size()); }
};

/// Runs every class network over the stacked feature frames.
inline std::vector<PosteriorFrame> analyze(const AnalyzerBank& bank,
                                           const std::vector<std::vector<double>>& stacked,
                                           int jobs = 1) {
    std::vector<PosteriorFrame> out(stacked.size());
    int K = bank.class_count();
    for (auto& f : out) f.values.assign(static_cast<size_t>(K), 0.0);
    parallel_for(stacked.size(), jobs, [&](size_t t) {
        for (int k = 0; k < K; ++k) {
            auto p = mlp_forward(bank.nets[static_cast<size_t>(k)], stacked[t]);
            out[t].values[static_cast<size_t>(k)] = p[0];
        }
    });
    return out;
}

}  // namespace pvc
