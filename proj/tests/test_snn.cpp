#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pvc/common.hpp"
#include "pvc/corpus.hpp"
#include "pvc/mfcc.hpp"
#include "pvc/snn.hpp"

using namespace pvc;

namespace {

SnnParams uncoupled() {
    SnnParams p;
    p.coupling.w_exc_to_inh = 0.0;
    p.coupling.w_inh_to_exc = 0.0;
    return p;
}

std::vector<SnnTrainUtterance> toy_snn_corpus(int n_utts, uint64_t seed) {
    Rng rng(seed);
    FrameGrid grid{25, 16};
    std::vector<SnnTrainUtterance> corpus;
    for (int u = 0; u < n_utts; ++u) {
        auto utt = generate_toy_utterance(rng);
        auto feats = compute_mfcc(frame_signal(utt.clip, grid));
        corpus.push_back({feats.statics, grid, utt.boundaries_ms});
    }
    return corpus;
}

}  // namespace

TEST_CASE("weight_and_reduce projects the weighted channel", "[snn]") {
    std::vector<std::vector<double>> cepstra{{1, 2, 3}, {4, 5, 6}, {-1, 0, 1}};
    REQUIRE(weight_and_reduce(cepstra, {1, 0, 0}) == std::vector<double>{1, 4, -1});
    REQUIRE(weight_and_reduce(cepstra, {0, 0, 0}) == std::vector<double>{0, 0, 0});

    Rng rng(3);
    std::vector<std::vector<double>> rc(5, std::vector<double>(13));
    std::vector<double> w(13);
    for (auto& row : rc)
        for (auto& v : row) v = rng.uniform(-2.0, 2.0);
    for (auto& v : w) v = rng.uniform(-1.0, 1.0);
    auto series = weight_and_reduce(rc, w);
    for (size_t t = 0; t < rc.size(); ++t) {
        double dot = 0.0;
        for (int c = 0; c < 13; ++c) dot += w[static_cast<size_t>(c)] * rc[t][static_cast<size_t>(c)];
        REQUIRE(series[t] == Catch::Approx(dot).margin(1e-12));
    }
    REQUIRE_THROWS_AS(weight_and_reduce(cepstra, {1, 0}), DimensionError);
}

TEST_CASE("convolution identities", "[snn]") {
    std::vector<double> series{1, 2, 3, 4, 5};
    REQUIRE(convolve_drive(series, {1.0}) == series);

    std::vector<double> constant(10, 2.0);
    auto avg = convolve_drive(constant, {0.5, 0.5});
    for (size_t i = 1; i + 1 < avg.size(); ++i) REQUIRE(avg[i] == Catch::Approx(2.0));

    std::vector<double> impulse(9, 0.0);
    impulse[4] = 1.0;
    std::vector<double> kernel{0.25, 0.5, 0.25};
    auto out = convolve_drive(impulse, kernel);
    REQUIRE(out[3] == Catch::Approx(0.25));
    REQUIRE(out[4] == Catch::Approx(0.5));
    REQUIRE(out[5] == Catch::Approx(0.25));
}

TEST_CASE("difference-of-gaussians kernel has zero dc and peaks at dips", "[snn]") {
    TemporalKernel k;
    auto kernel = build_kernel(k, 16.0);
    double sum = 0.0;
    for (double v : kernel) sum += v;
    REQUIRE(sum == Catch::Approx(0.0).margin(1e-9));
    // A dip in an otherwise flat series produces a positive drive peak.
    std::vector<double> series(64, 1.0);
    for (int i = 30; i < 34; ++i) series[static_cast<size_t>(i)] = -1.0;
    auto drive = convolve_drive(series, kernel);
    auto peak = std::max_element(drive.begin(), drive.end());
    REQUIRE(*peak > 0.1);
    long at = peak - drive.begin();
    REQUIRE(at >= 29);
    REQUIRE(at <= 35);
}

TEST_CASE("zero drive and zero coupling produce no spikes", "[snn]") {
    auto p = uncoupled();
    auto [exc, inh] = run_lif_network(std::vector<double>(500, 0.0), p);
    for (const auto& n : exc.times) REQUIRE(n.empty());
    for (const auto& n : inh.times) REQUIRE(n.empty());
}

TEST_CASE("non-finite drive is rejected", "[snn]") {
    auto p = uncoupled();
    std::vector<double> drive(10, 1.0);
    drive[5] = std::nan("");
    REQUIRE_THROWS_AS(run_lif_network(drive, p), InvalidDrive);
}

TEST_CASE("constant-drive interspike interval matches the closed form", "[snn]") {
    // ISI = refractory - tau * ln(1 - threshold / I), within one 1 ms step.
    auto p = uncoupled();
    for (double I : {1.5, 2.0, 3.0, 5.0}) {
        std::vector<double> drive(600, I);
        auto [exc, inh] = run_lif_network(drive, p);
        const auto& t0 = exc.times[0];  // neuron 0 carries no threshold spread
        REQUIRE(t0.size() >= 3);
        double isi = t0[1] - t0[0];
        double closed = p.lif.refractory_ms -
                        p.lif.tau_exc_ms * std::log(1.0 - p.lif.threshold / I);
        REQUIRE(std::fabs(isi - closed) <= 1.0);
        // Periodic: every interval identical under constant drive.
        for (size_t i = 2; i < t0.size(); ++i)
            REQUIRE(t0[i] - t0[i - 1] == Catch::Approx(isi));
    }
}

TEST_CASE("spike trains respect the refractory spacing", "[snn]") {
    SnnParams p;  // full coupling
    Rng rng(5);
    std::vector<double> drive(3000);
    for (auto& d : drive) d = rng.uniform(-0.5, 3.0);
    auto [exc, inh] = run_lif_network(drive, p);
    for (const auto& train : {exc, inh})
        for (const auto& n : train.times)
            for (size_t i = 1; i < n.size(); ++i) {
                REQUIRE(n[i] > n[i - 1]);
                REQUIRE(n[i] - n[i - 1] >= p.lif.refractory_ms);
            }
}

TEST_CASE("scaling drive and thresholds together leaves spike times unchanged", "[snn]") {
    // LIF scale invariance with V_rest = 0, checked on a coupling-free
    // configuration (pool currents do not scale with the drive).
    Rng rng(21);
    std::vector<double> drive(1200);
    for (auto& d : drive) d = rng.uniform(0.0, 2.5);
    for (double alpha : {2.0, 4.0, 0.5}) {
        auto p1 = uncoupled();
        auto p2 = uncoupled();
        p2.lif.threshold *= alpha;
        std::vector<double> scaled(drive);
        for (auto& d : scaled) d *= alpha;
        auto r1 = run_lif_network(drive, p1);
        auto r2 = run_lif_network(scaled, p2);
        REQUIRE(r1.first.times == r2.first.times);
        REQUIRE(r1.second.times == r2.second.times);
    }
}

TEST_CASE("amplitude-modulated drive at 4 Hz locks the inhibitory bursts", "[snn]") {
    SnnParams p;
    std::vector<double> drive(3000);
    for (size_t t = 0; t < drive.size(); ++t)
        drive[t] = 1.2 + 0.9 * std::sin(2.0 * M_PI * 4.0 * static_cast<double>(t) / 1000.0);
    auto [exc, inh] = run_lif_network(drive, p);
    auto bounds = detect_boundaries(inh, p.burst);
    REQUIRE(bounds.size() >= 10);
    REQUIRE(bounds.size() <= 14);
    for (size_t i = 1; i < bounds.size(); ++i)
        REQUIRE(bounds[i] - bounds[i - 1] == Catch::Approx(250.0).margin(60.0));
}

TEST_CASE("free-running network oscillates in the syllabic band", "[snn]") {
    SnnParams p;
    auto [exc, inh] = run_lif_network(std::vector<double>(2000, 1.5), p);
    auto bounds = detect_boundaries(inh, p.burst);
    REQUIRE(bounds.size() >= 8);   // 4 Hz over 2 s
    REQUIRE(bounds.size() <= 16);  // 8 Hz over 2 s
}

TEST_CASE("burst extraction needs distinct neurons within the window", "[snn]") {
    BurstParams burst;  // >= 3 distinct / 20 ms / 50 ms separation
    SpikeTrain none;
    none.times.assign(10, {});
    REQUIRE(detect_boundaries(none, burst).empty());

    SpikeTrain one_burst;
    one_burst.times.assign(10, {});
    one_burst.times[0] = {298.0};
    one_burst.times[1] = {299.0};
    one_burst.times[2] = {300.0};
    one_burst.times[3] = {301.0};
    one_burst.times[4] = {302.0};
    auto b1 = detect_boundaries(one_burst, burst);
    REQUIRE(b1.size() == 1);
    REQUIRE(b1[0] == Catch::Approx(300.0));

    SpikeTrain two_bursts = one_burst;
    two_bursts.times[0].push_back(498.0);
    two_bursts.times[1].push_back(499.0);
    two_bursts.times[2].push_back(500.0);
    auto b2 = detect_boundaries(two_bursts, burst);
    REQUIRE(b2.size() == 2);
    REQUIRE(b2[1] == Catch::Approx(499.0));

    // Repeated spikes from a single neuron never form a burst.
    SpikeTrain solo;
    solo.times.assign(10, {});
    solo.times[0] = {100.0, 105.0, 110.0, 115.0};
    REQUIRE(detect_boundaries(solo, burst).empty());
}

TEST_CASE("syllabic distance follows the matching and penalty rules", "[snn]") {
    BoundarySet ref{200, 500, 800};
    REQUIRE(syllabic_distance(ref, ref) == 0.0);

    BoundarySet shifted{210, 510, 810};
    REQUIRE(syllabic_distance(shifted, ref) == Catch::Approx(30.0));

    REQUIRE(syllabic_distance({}, {100, 300}) == Catch::Approx(200.0));
    REQUIRE(syllabic_distance({100, 300}, {}) == Catch::Approx(200.0));

    // Beyond the 80 ms matching tolerance both sides count as unmatched.
    REQUIRE(syllabic_distance({400}, {200}) == Catch::Approx(200.0));
}

TEST_CASE("training returns init untouched on zero budget and is seeded", "[snn]") {
    auto corpus = toy_snn_corpus(2, 31);
    SnnParams init;
    init.kernel.gain = 1.7;
    auto same = train_snn(corpus, init, 0, 1);
    REQUIRE(snn_params_to_json(same) == snn_params_to_json(init));

    auto a = train_snn(corpus, init, 60, 9);
    auto b = train_snn(corpus, init, 60, 9);
    REQUIRE(snn_params_to_json(a) == snn_params_to_json(b));
}

TEST_CASE("training never increases the corpus cost", "[snn]") {
    auto corpus = toy_snn_corpus(3, 77);
    SnnParams init;
    double before = snn_corpus_cost(corpus, init);
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
        auto trained = train_snn(corpus, init, 120, seed);
        REQUIRE(snn_corpus_cost(corpus, trained) <= before);
    }
}

TEST_CASE("trained detector reaches a strong boundary f-score on the toy corpus", "[snn]") {
    auto corpus = toy_snn_corpus(5, 42);
    SnnParams init;
    auto trained = train_snn(corpus, init, 400, 7);
    double f = 0.0;
    for (const auto& utt : corpus)
        f += boundary_f_score(detect_syllables(utt.cepstra, utt.grid, trained),
                              utt.reference, 50.0);
    f /= static_cast<double>(corpus.size());
    REQUIRE(f >= 0.8);
}

TEST_CASE("snn params roundtrip through json", "[snn]") {
    SnnParams p;
    p.channel_weights[3] = -0.75;
    p.kernel.center_offset_ms = -24.0;
    p.burst.min_spikes = 4;
    std::string path = "test_snn_tmp.json";
    save_snn_params(path, p);
    auto back = load_snn_params(path);
    REQUIRE(snn_params_to_json(back) == snn_params_to_json(p));
    std::remove(path.c_str());
}
