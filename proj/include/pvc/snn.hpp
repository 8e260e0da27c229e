// Neuromorphic syllable boundary detector. The 13-dim cepstral stream is
// reduced to one channel-weighted series, convolved with a difference-of-
// Gaussians kernel (wide minus narrow, so energy dips become drive peaks),
// interpolated to 1 kHz and fed to 10 excitatory + 10 inhibitory leaky
// integrate-and-fire neurons. Each inhibitory spike burst marks a putative
// syllable boundary. Training is derivative-free: coordinate descent over
// the channel weights and kernel shape with seeded random restarts.

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "pvc/audio.hpp"
#include "pvc/common.hpp"
#include "pvc/errors.hpp"
#include "json.hpp"

namespace pvc {

constexpr int kSnnChannels = 13;

struct TemporalKernel {
    double length_ms = 260.0;
    double sigma_narrow_ms = 16.0;
    double sigma_wide_ms = 60.0;
    double center_offset_ms = 0.0;  // shifts detected boundaries in time
    double gain = 2.5;
};

struct LifParams {
    double tau_exc_ms = 20.0;
    double tau_inh_ms = 10.0;
    double threshold = 1.0;
    double threshold_spread = 0.04;  // per-neuron multiplicative ramp
    double reset = 0.0;
    double v_rest = 0.0;
    double refractory_ms = 5.0;
    int n_exc = 10;
    int n_inh = 10;
};

// All-to-all coupling realized as exponentially decaying synaptic currents:
// every presynaptic spike adds its weight to the pool current. The slow
// inhibitory decay is what holds the network in the syllabic rhythm band.
struct CouplingParams {
    double w_exc_to_inh = 0.35;
    double w_inh_to_exc = -0.40;
    double syn_tau_ei_ms = 8.0;
    double syn_tau_ie_ms = 80.0;
};

struct BurstParams {
    int min_spikes = 3;          // distinct inhibitory neurons
    double window_ms = 20.0;
    double min_separation_ms = 50.0;
};

struct SnnParams {
    std::vector<double> channel_weights = {1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    TemporalKernel kernel;
    LifParams lif;
    CouplingParams coupling;
    BurstParams burst;
    bool normalize_series = true;  // z-score the weighted series per utterance
};

/// Per-neuron ordered spike times in ms.
struct SpikeTrain {
    std::vector<std::vector<double>> times;
};

using BoundarySet = std::vector<double>;  // ordered times in ms

// ---------------------------------------------------------------------------
// Drive construction

/// Per-frame dot product of the cepstra with the channel weights.
inline std::vector<double> weight_and_reduce(const std::vector<std::vector<double>>& cepstra,
                                             const std::vector<double>& weights) {
    std::vector<double> series(cepstra.size(), 0.0);
    for (size_t t = 0; t < cepstra.size(); ++t) {
        if (cepstra[t].size() != weights.size())
            throw DimensionError("weight_and_reduce: channel count mismatch");
        double acc = 0.0;
        for (size_t c = 0; c < weights.size(); ++c) acc += weights[c] * cepstra[t][c];
        series[t] = acc;
    }
    return series;
}

/// Difference-of-Gaussians (wide minus narrow) sampled at the frame rate.
/// Both lobes are unit-area so the kernel has zero DC response.
inline std::vector<double> build_kernel(const TemporalKernel& k, double frame_shift_ms) {
    int len = std::max(1, static_cast<int>(std::lround(k.length_ms / frame_shift_ms)));
    if (len % 2 == 0) ++len;
    int c = (len - 1) / 2;
    std::vector<double> narrow(static_cast<size_t>(len)), wide(static_cast<size_t>(len));
    double sn = 0.0, sw = 0.0;
    for (int i = 0; i < len; ++i) {
        double t = (i - c) * frame_shift_ms - k.center_offset_ms;
        narrow[static_cast<size_t>(i)] = std::exp(-0.5 * t * t / (k.sigma_narrow_ms * k.sigma_narrow_ms));
        wide[static_cast<size_t>(i)] = std::exp(-0.5 * t * t / (k.sigma_wide_ms * k.sigma_wide_ms));
        sn += narrow[static_cast<size_t>(i)];
        sw += wide[static_cast<size_t>(i)];
    }
    std::vector<double> kernel(static_cast<size_t>(len));
    for (int i = 0; i < len; ++i)
        kernel[static_cast<size_t>(i)] = k.gain * (wide[static_cast<size_t>(i)] / sw -
                                                   narrow[static_cast<size_t>(i)] / sn);
    return kernel;
}

/// Same-length convolution with zero-padded edges.
inline std::vector<double> convolve_drive(const std::vector<double>& series,
                                          const std::vector<double>& kernel) {
    std::vector<double> out(series.size(), 0.0);
    if (series.empty() || kernel.empty()) return out;
    int n = static_cast<int>(series.size());
    int len = static_cast<int>(kernel.size());
    int c = (len - 1) / 2;
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < len; ++j) {
            int src = i + c - j;
            if (src >= 0 && src < n) acc += kernel[static_cast<size_t>(j)] * series[static_cast<size_t>(src)];
        }
        out[static_cast<size_t>(i)] = acc;
    }
    return out;
}

/// Linear interpolation from the frame rate to a 1 ms step.
inline std::vector<double> interpolate_to_millis(const std::vector<double>& series,
                                                 double frame_shift_ms) {
    if (series.empty()) return {};
    size_t n_ms = static_cast<size_t>(std::lround((series.size() - 1) * frame_shift_ms)) + 1;
    std::vector<double> out(n_ms);
    for (size_t t = 0; t < n_ms; ++t) {
        double pos = static_cast<double>(t) / frame_shift_ms;
        size_t i = std::min(static_cast<size_t>(pos), series.size() - 1);
        size_t j = std::min(i + 1, series.size() - 1);
        double frac = pos - static_cast<double>(i);
        out[t] = (1.0 - frac) * series[i] + frac * series[j];
    }
    return out;
}

// ---------------------------------------------------------------------------
// LIF simulation

/// Euler integration at a 1 ms step of tau dV/dt = -(V - V_rest) + I.
/// Excitatory neurons receive the drive plus the inhibitory pool current;
/// inhibitory neurons receive the excitatory pool current. Spikes reset the
/// membrane, hold it for the refractory period and feed the pools at the end
/// of the step. Returns (excitatory, inhibitory) spike trains.
inline std::pair<SpikeTrain, SpikeTrain> run_lif_network(const std::vector<double>& drive,
                                                         const SnnParams& p) {
    for (double d : drive)
        if (!std::isfinite(d)) throw InvalidDrive("non-finite drive sample");
    const double dt = 1.0;
    const auto& lif = p.lif;
    int n_exc = lif.n_exc, n_inh = lif.n_inh;

    SpikeTrain exc, inh;
    exc.times.assign(static_cast<size_t>(n_exc), {});
    inh.times.assign(static_cast<size_t>(n_inh), {});

    auto thr = [&](int i, int n) {
        return lif.threshold * (1.0 + lif.threshold_spread * i / std::max(1, n));
    };

    std::vector<double> v_exc(static_cast<size_t>(n_exc), lif.v_rest);
    std::vector<double> v_inh(static_cast<size_t>(n_inh), lif.v_rest);
    std::vector<double> refr_exc(static_cast<size_t>(n_exc), 0.0);
    std::vector<double> refr_inh(static_cast<size_t>(n_inh), 0.0);
    double s_ei = 0.0;  // excitatory pool current seen by inhibitory neurons
    double s_ie = 0.0;  // inhibitory pool current seen by excitatory neurons
    double decay_ei = std::exp(-dt / p.coupling.syn_tau_ei_ms);
    double decay_ie = std::exp(-dt / p.coupling.syn_tau_ie_ms);

    for (size_t step = 0; step < drive.size(); ++step) {
        double t_spike = static_cast<double>(step + 1) * dt;
        int exc_fired = 0, inh_fired = 0;
        for (int i = 0; i < n_exc; ++i) {
            auto ui = static_cast<size_t>(i);
            if (refr_exc[ui] > 0.0) {
                refr_exc[ui] -= dt;
                v_exc[ui] = lif.reset;
                continue;
            }
            double current = drive[step] + s_ie;
            v_exc[ui] += dt / lif.tau_exc_ms * (-(v_exc[ui] - lif.v_rest) + current);
            if (v_exc[ui] >= thr(i, n_exc)) {
                exc.times[ui].push_back(t_spike);
                v_exc[ui] = lif.reset;
                refr_exc[ui] = lif.refractory_ms;
                ++exc_fired;
            }
        }
        for (int i = 0; i < n_inh; ++i) {
            auto ui = static_cast<size_t>(i);
            if (refr_inh[ui] > 0.0) {
                refr_inh[ui] -= dt;
                v_inh[ui] = lif.reset;
                continue;
            }
            v_inh[ui] += dt / lif.tau_inh_ms * (-(v_inh[ui] - lif.v_rest) + s_ei);
            if (v_inh[ui] >= thr(i, n_inh)) {
                inh.times[ui].push_back(t_spike);
                v_inh[ui] = lif.reset;
                refr_inh[ui] = lif.refractory_ms;
                ++inh_fired;
            }
        }
        // Pool currents decay, then pick up this step's spikes.
        s_ei = s_ei * decay_ei + exc_fired * p.coupling.w_exc_to_inh;
        s_ie = s_ie * decay_ie + inh_fired * p.coupling.w_inh_to_exc;
    }
    return {exc, inh};
}

// ---------------------------------------------------------------------------
// Burst extraction

/// A burst is >= min_spikes from distinct inhibitory neurons inside
/// window_ms; the boundary is the median spike time of the burst. Bursts
/// closer than min_separation_ms to the previous boundary are absorbed.
inline BoundarySet detect_boundaries(const SpikeTrain& inh, const BurstParams& burst) {
    struct Ev {
        double t;
        int neuron;
    };
    std::vector<Ev> evs;
    for (size_t n = 0; n < inh.times.size(); ++n)
        for (double t : inh.times[n]) evs.push_back({t, static_cast<int>(n)});
    std::sort(evs.begin(), evs.end(), [](const Ev& a, const Ev& b) {
        return a.t < b.t || (a.t == b.t && a.neuron < b.neuron);
    });

    BoundarySet bounds;
    size_t i = 0;
    double last = -1e18;
    while (i < evs.size()) {
        size_t j = i;
        std::vector<int> seen;
        std::vector<double> times;
        while (j < evs.size() && evs[j].t <= evs[i].t + burst.window_ms) {
            if (std::find(seen.begin(), seen.end(), evs[j].neuron) == seen.end())
                seen.push_back(evs[j].neuron);
            times.push_back(evs[j].t);
            ++j;
        }
        if (static_cast<int>(seen.size()) >= burst.min_spikes) {
            size_t m = times.size();
            double median = (m % 2 == 1) ? times[m / 2]
                                         : 0.5 * (times[m / 2 - 1] + times[m / 2]);
            if (median >= last + burst.min_separation_ms) {
                bounds.push_back(median);
                last = median;
            }
            // Consume the whole burst window plus the separation gap.
            while (i < evs.size() && evs[i].t <= last + burst.min_separation_ms) ++i;
        } else {
            ++i;
        }
    }
    return bounds;
}

// ---------------------------------------------------------------------------
// Syllabic distance and the full detector

/// Greedy one-to-one matching within the tolerance, closest pairs first.
/// Returns the matched pairs as (detected index, reference index).
inline std::vector<std::pair<size_t, size_t>> match_boundaries(const BoundarySet& detected,
                                                               const BoundarySet& reference,
                                                               double tolerance_ms) {
    struct Cand {
        double dist;
        size_t d, r;
    };
    std::vector<Cand> cands;
    for (size_t d = 0; d < detected.size(); ++d)
        for (size_t r = 0; r < reference.size(); ++r) {
            double dist = std::fabs(detected[d] - reference[r]);
            if (dist <= tolerance_ms) cands.push_back({dist, d, r});
        }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        if (a.r != b.r) return a.r < b.r;
        return a.d < b.d;
    });
    std::vector<bool> d_used(detected.size(), false), r_used(reference.size(), false);
    std::vector<std::pair<size_t, size_t>> matches;
    for (const auto& c : cands) {
        if (d_used[c.d] || r_used[c.r]) continue;
        d_used[c.d] = true;
        r_used[c.r] = true;
        matches.emplace_back(c.d, c.r);
    }
    return matches;
}

constexpr double kSyllabicMatchToleranceMs = 80.0;
constexpr double kSyllabicMissPenaltyMs = 100.0;

/// Sum of matched |dt| plus a 100 ms penalty per unmatched boundary on
/// either side.
inline double syllabic_distance(const BoundarySet& detected, const BoundarySet& reference) {
    auto matches = match_boundaries(detected, reference, kSyllabicMatchToleranceMs);
    double cost = 0.0;
    for (const auto& m : matches) cost += std::fabs(detected[m.first] - reference[m.second]);
    cost += kSyllabicMissPenaltyMs *
            static_cast<double>(detected.size() + reference.size() - 2 * matches.size());
    return cost;
}

/// Boundary detection F-score at the given tolerance (test/eval helper).
inline double boundary_f_score(const BoundarySet& detected, const BoundarySet& reference,
                               double tolerance_ms) {
    if (detected.empty() && reference.empty()) return 1.0;
    if (detected.empty() || reference.empty()) return 0.0;
    auto matches = match_boundaries(detected, reference, tolerance_ms);
    double precision = static_cast<double>(matches.size()) / detected.size();
    double recall = static_cast<double>(matches.size()) / reference.size();
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

/// Full detector: cepstra -> weighted series -> kernel drive -> LIF ->
/// inhibitory bursts. Returned times are utterance times (frame centers).
/// The weighted series is normalized robustly (median / MAD, clamped to
/// +/-8) so that deep silence dips and moderate consonant dips drive the
/// network on a comparable scale.
inline BoundarySet detect_syllables(const std::vector<std::vector<double>>& cepstra,
                                    const FrameGrid& grid, const SnnParams& params) {
    if (cepstra.empty()) return {};
    auto series = weight_and_reduce(cepstra, params.channel_weights);
    if (params.normalize_series) {
        std::vector<double> sorted = series;
        std::sort(sorted.begin(), sorted.end());
        double median = sorted[sorted.size() / 2];
        std::vector<double> dev(series.size());
        for (size_t i = 0; i < series.size(); ++i) dev[i] = std::fabs(series[i] - median);
        std::sort(dev.begin(), dev.end());
        double mad = dev[dev.size() / 2] * 1.4826;
        if (mad < 1e-12) return {};
        for (double& x : series) x = std::clamp((x - median) / mad, -8.0, 8.0);
    }
    auto kernel = build_kernel(params.kernel, grid.shift_ms);
    auto drive_frames = convolve_drive(series, kernel);
    auto drive = interpolate_to_millis(drive_frames, grid.shift_ms);
    auto trains = run_lif_network(drive, params);
    auto bounds = detect_boundaries(trains.second, params.burst);
    for (double& b : bounds) b += grid.window_ms / 2.0;
    return bounds;
}

// ---------------------------------------------------------------------------
// Training

struct SnnTrainUtterance {
    std::vector<std::vector<double>> cepstra;  // 13-dim statics per frame
    FrameGrid grid;
    BoundarySet reference;
};

inline double snn_corpus_cost(const std::vector<SnnTrainUtterance>& corpus,
                              const SnnParams& params) {
    double cost = 0.0;
    for (const auto& utt : corpus)
        cost += syllabic_distance(detect_syllables(utt.cepstra, utt.grid, params), utt.reference);
    return cost;
}

/// Derivative-free search over the channel weights and kernel shape:
/// coordinate descent sweeps alternating with seeded random restarts around
/// the best point. The budget counts cost evaluations; budget 0 returns the
/// initial parameters untouched.
inline SnnParams train_snn(const std::vector<SnnTrainUtterance>& corpus,
                           const SnnParams& init, int budget, uint64_t seed = 1) {
    if (corpus.empty()) throw EmptyCorpus("train_snn: no labeled utterances");
    if (budget <= 0) return init;

    Rng rng(seed);
    SnnParams best = init;
    double best_cost = snn_corpus_cost(corpus, best);
    int evals = 1;

    struct Coord {
        std::function<double&(SnnParams&)> ref;
        double step;
        double lo, hi;
    };
    std::vector<Coord> coords;
    for (int c = 0; c < kSnnChannels; ++c)
        coords.push_back({[c](SnnParams& p) -> double& { return p.channel_weights[static_cast<size_t>(c)]; },
                          0.25, -4.0, 4.0});
    coords.push_back({[](SnnParams& p) -> double& { return p.kernel.sigma_narrow_ms; }, 4.0, 4.0, 80.0});
    coords.push_back({[](SnnParams& p) -> double& { return p.kernel.sigma_wide_ms; }, 8.0, 12.0, 160.0});
    coords.push_back({[](SnnParams& p) -> double& { return p.kernel.center_offset_ms; }, 8.0, -80.0, 80.0});
    coords.push_back({[](SnnParams& p) -> double& { return p.kernel.gain; }, 0.4, 0.2, 8.0});

    auto try_point = [&](const SnnParams& cand) {
        double cost = snn_corpus_cost(corpus, cand);
        ++evals;
        if (cost < best_cost) {
            best_cost = cost;
            best = cand;
            return true;
        }
        return false;
    };

    while (evals < budget) {
        bool improved = false;
        for (auto& coord : coords) {
            if (evals >= budget) break;
            for (double dir : {+1.0, -1.0}) {
                if (evals >= budget) break;
                SnnParams cand = best;
                double& v = coord.ref(cand);
                v = std::clamp(v + dir * coord.step, coord.lo, coord.hi);
                if (cand.kernel.sigma_wide_ms <= cand.kernel.sigma_narrow_ms + 1.0)
                    continue;  // keep the kernel a proper wide-minus-narrow
                if (try_point(cand)) {
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) {
            // Random restart around the best point.
            SnnParams cand = best;
            for (auto& coord : coords) {
                double& v = coord.ref(cand);
                v = std::clamp(v + rng.normal() * coord.step * 2.0, coord.lo, coord.hi);
            }
            if (cand.kernel.sigma_wide_ms <= cand.kernel.sigma_narrow_ms + 1.0)
                cand.kernel.sigma_wide_ms = cand.kernel.sigma_narrow_ms + 8.0;
            if (evals >= budget) break;
            try_point(cand);
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// JSON persistence (all fields explicit)

inline nlohmann::json snn_params_to_json(const SnnParams& p) {
    return nlohmann::json{
        {"format", "pvc-snn-params"},
        {"version", 1},
        {"channel_weights", p.channel_weights},
        {"kernel",
         {{"length_ms", p.kernel.length_ms},
          {"sigma_narrow_ms", p.kernel.sigma_narrow_ms},
          {"sigma_wide_ms", p.kernel.sigma_wide_ms},
          {"center_offset_ms", p.kernel.center_offset_ms},
          {"gain", p.kernel.gain}}},
        {"lif",
         {{"tau_exc_ms", p.lif.tau_exc_ms},
          {"tau_inh_ms", p.lif.tau_inh_ms},
          {"threshold", p.lif.threshold},
          {"threshold_spread", p.lif.threshold_spread},
          {"reset", p.lif.reset},
          {"v_rest", p.lif.v_rest},
          {"refractory_ms", p.lif.refractory_ms},
          {"n_exc", p.lif.n_exc},
          {"n_inh", p.lif.n_inh}}},
        {"coupling",
         {{"w_exc_to_inh", p.coupling.w_exc_to_inh},
          {"w_inh_to_exc", p.coupling.w_inh_to_exc},
          {"syn_tau_ei_ms", p.coupling.syn_tau_ei_ms},
          {"syn_tau_ie_ms", p.coupling.syn_tau_ie_ms}}},
        {"burst",
         {{"min_spikes", p.burst.min_spikes},
          {"window_ms", p.burst.window_ms},
          {"min_separation_ms", p.burst.min_separation_ms}}},
        {"normalize_series", p.normalize_series}};
}

inline SnnParams snn_params_from_json(const nlohmann::json& j) {
    SnnParams p;
    p.channel_weights = j.at("channel_weights").get<std::vector<double>>();
    const auto& k = j.at("kernel");
    p.kernel.length_ms = k.at("length_ms").get<double>();
    p.kernel.sigma_narrow_ms = k.at("sigma_narrow_ms").get<double>();
    p.kernel.sigma_wide_ms = k.at("sigma_wide_ms").get<double>();
    p.kernel.center_offset_ms = k.at("center_offset_ms").get<double>();
    p.kernel.gain = k.at("gain").get<double>();
    const auto& l = j.at("lif");
    p.lif.tau_exc_ms = l.at("tau_exc_ms").get<double>();
    p.lif.tau_inh_ms = l.at("tau_inh_ms").get<double>();
    p.lif.threshold = l.at("threshold").get<double>();
    p.lif.threshold_spread = l.at("threshold_spread").get<double>();
    p.lif.reset = l.at("reset").get<double>();
    p.lif.v_rest = l.at("v_rest").get<double>();
    p.lif.refractory_ms = l.at("refractory_ms").get<double>();
    p.lif.n_exc = l.at("n_exc").get<int>();
    p.lif.n_inh = l.at("n_inh").get<int>();
    const auto& c = j.at("coupling");
    p.coupling.w_exc_to_inh = c.at("w_exc_to_inh").get<double>();
    p.coupling.w_inh_to_exc = c.at("w_inh_to_exc").get<double>();
    p.coupling.syn_tau_ei_ms = c.at("syn_tau_ei_ms").get<double>();
    p.coupling.syn_tau_ie_ms = c.at("syn_tau_ie_ms").get<double>();
    const auto& b = j.at("burst");
    p.burst.min_spikes = b.at("min_spikes").get<int>();
    p.burst.window_ms = b.at("window_ms").get<double>();
    p.burst.min_separation_ms = b.at("min_separation_ms").get<double>();
    p.normalize_series = j.value("normalize_series", true);
    return p;
}

inline void save_snn_params(const std::string& path, const SnnParams& p) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    f << snn_params_to_json(p).dump(2) << "\n";
}

inline SnnParams load_snn_params(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
        return snn_params_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptStream(path + ": " + e.what());
    }
}

}  // namespace pvc
