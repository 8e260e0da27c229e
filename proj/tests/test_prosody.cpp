#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>

#include "pvc/common.hpp"
#include "pvc/prosody.hpp"

using namespace pvc;

namespace {

// Independent least-squares line oracle: normal equations over times in
// seconds, reported as (value at the center, slope per second).
std::pair<double, double> ls_line_oracle(const std::vector<double>& y, double span_ms) {
    size_t n = y.size();
    double dt = span_ms / 1000.0 / static_cast<double>(n - 1);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        double x = static_cast<double>(i) * dt;
        sx += x;
        sy += y[i];
        sxx += x * x;
        sxy += x * y[i];
    }
    double nn = static_cast<double>(n);
    double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    double intercept = (sy - slope * sx) / nn;
    double center = (span_ms / 1000.0) / 2.0;
    return {intercept + slope * center, slope};
}

ProsodicParamCodebook handmade_levels(std::vector<double> levels) {
    ProsodicParamCodebook cb;
    cb.levels = std::move(levels);
    cb.mu = 0.0;
    cb.sigma = 1.0;
    return cb;
}

F0Track line_track(int n_frames, double mean, double slope_per_s, const FrameGrid& grid) {
    F0Track t;
    t.log_f0.resize(static_cast<size_t>(n_frames));
    t.voicing_mask.assign(static_cast<size_t>(n_frames), 1);
    double center = 0.0;
    for (int f = 0; f < n_frames; ++f) center += grid.frame_center_ms(f);
    center /= n_frames;
    for (int f = 0; f < n_frames; ++f)
        t.log_f0[static_cast<size_t>(f)] =
            mean + slope_per_s * (grid.frame_center_ms(f) - center) / 1000.0;
    return t;
}

}  // namespace

TEST_CASE("constant segment fits as mean c, slope zero", "[prosody]") {
    auto c = fit_dlop(std::vector<double>(8, 4.7), 200.0);
    REQUIRE(c.mean == Catch::Approx(4.7).margin(1e-12));
    REQUIRE(c.slope == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("exact ramp over 200 ms gives slope ln2 / 0.2", "[prosody]") {
    int n = 11;
    std::vector<double> seg(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        seg[static_cast<size_t>(i)] =
            std::log(100.0) + (std::log(200.0) - std::log(100.0)) * i / (n - 1);
    auto c = fit_dlop(seg, 200.0);
    REQUIRE(c.slope == Catch::Approx(std::log(2.0) / 0.2).margin(1e-9));
    REQUIRE(c.mean == Catch::Approx(0.5 * (std::log(100.0) + std::log(200.0))).margin(1e-9));
}

TEST_CASE("fit residual is orthogonal to the constant and linear basis", "[prosody]") {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        size_t n = 2 + rng.uniform_int(30);
        std::vector<double> seg(n);
        for (auto& v : seg) v = rng.uniform(4.0, 6.0);
        double span = 10.0 * static_cast<double>(n - 1);
        auto c = fit_dlop(seg, span);
        auto recon = dlop_reconstruct(c, n);
        double dot_const = 0.0, dot_lin = 0.0;
        double t_bar = 0.5 * (static_cast<double>(n) - 1.0);
        for (size_t i = 0; i < n; ++i) {
            double r = seg[i] - recon[i];
            dot_const += r;
            dot_lin += r * (static_cast<double>(i) - t_bar);
        }
        REQUIRE(dot_const == Catch::Approx(0.0).margin(1e-9));
        REQUIRE(dot_lin == Catch::Approx(0.0).margin(1e-9));
    }
}

TEST_CASE("fit_dlop equals the independent least-squares oracle", "[prosody]") {
    Rng rng(12);
    for (int trial = 0; trial < 1000; ++trial) {
        size_t n = 2 + rng.uniform_int(40);
        double span = 16.0 * static_cast<double>(n - 1);
        std::vector<double> seg(n);
        for (auto& v : seg) v = rng.uniform(3.5, 6.5);
        auto c = fit_dlop(seg, span);
        auto [mean, slope] = ls_line_oracle(seg, span);
        REQUIRE(c.mean == Catch::Approx(mean).margin(1e-9));
        REQUIRE(c.slope == Catch::Approx(slope).margin(1e-9));
    }
}

TEST_CASE("segments shorter than two samples are rejected", "[prosody]") {
    REQUIRE_THROWS_AS(fit_dlop({4.0}, 16.0), SegmentTooShort);
    REQUIRE_THROWS_AS(fit_dlop({}, 16.0), SegmentTooShort);
}

TEST_CASE("codebook levels span mu plus/minus three sigma", "[prosody]") {
    // mu=0, sigma=1 -> levels -3.000, -2.143, ..., 3.000 with step 6/7.
    std::vector<DlopCoeffs> corpus;
    // A two-point corpus with mean 0, population sigma 1: values -1 and 1.
    corpus.push_back({-1.0, -1.0, 100.0});
    corpus.push_back({1.0, 1.0, 100.0});
    auto cb = build_prosodic_codebooks(corpus);
    for (int i = 0; i < 8; ++i) {
        double expect = -3.0 + 6.0 * i / 7.0;
        REQUIRE(cb.mean.levels[static_cast<size_t>(i)] == Catch::Approx(expect).margin(1e-12));
        REQUIRE(cb.slope.levels[static_cast<size_t>(i)] == Catch::Approx(expect).margin(1e-12));
    }
}

TEST_CASE("degenerate corpus (zero variance) is rejected", "[prosody]") {
    std::vector<DlopCoeffs> corpus(5, DlopCoeffs{4.8, 1.0, 150.0});
    // means all equal -> zero sigma
    REQUIRE_THROWS_AS(build_prosodic_codebooks(corpus), DegenerateCorpus);
}

TEST_CASE("affine-shifted corpus shifts the levels by the same map", "[prosody]") {
    Rng rng(9);
    std::vector<DlopCoeffs> corpus, shifted;
    double a = 1.7, b = -0.4;
    for (int i = 0; i < 40; ++i) {
        DlopCoeffs c{rng.uniform(4.0, 6.0), rng.uniform(-3.0, 3.0), 150.0};
        corpus.push_back(c);
        shifted.push_back({a * c.mean + b, a * c.slope + b, 150.0});
    }
    auto cb1 = build_prosodic_codebooks(corpus);
    auto cb2 = build_prosodic_codebooks(shifted);
    for (int i = 0; i < 8; ++i) {
        REQUIRE(cb2.mean.levels[static_cast<size_t>(i)] ==
                Catch::Approx(a * cb1.mean.levels[static_cast<size_t>(i)] + b).margin(1e-9));
        REQUIRE(cb2.slope.levels[static_cast<size_t>(i)] ==
                Catch::Approx(a * cb1.slope.levels[static_cast<size_t>(i)] + b).margin(1e-9));
    }
}

TEST_CASE("quantizer picks the nearest level with lower-index ties and clamps", "[prosody]") {
    auto cb = handmade_levels({-3.0, -2.0, -1.0, -0.4286, 0.4286, 1.0, 2.0, 3.0});
    REQUIRE(quantize_param(-1.0, cb) == 2);      // exactly on a level
    REQUIRE(quantize_param(0.0, cb) == 3);       // tie between 3 and 4: lower wins
    REQUIRE(quantize_param(10.0, cb) == 7);      // clamp high
    REQUIRE(quantize_param(-10.0, cb) == 0);     // clamp low
    // mu=0, sigma=1 built codebook: value 0 ties between -0.4286 and 0.4286.
    std::vector<DlopCoeffs> corpus{{-1.0, -1.0, 100.0}, {1.0, 1.0, 100.0}};
    auto built = build_prosodic_codebooks(corpus);
    REQUIRE(quantize_param(0.0, built.mean) == 3);
}

TEST_CASE("quantization error is at most half a step in range, monotone outside ties", "[prosody]") {
    std::vector<DlopCoeffs> corpus;
    Rng rng(14);
    for (int i = 0; i < 60; ++i)
        corpus.push_back({rng.uniform(4.0, 6.0), rng.uniform(-3.0, 3.0), 150.0});
    auto cb = build_prosodic_codebooks(corpus);
    double step = cb.mean.step();
    int prev_idx = 0;
    for (int i = 0; i <= 400; ++i) {
        double v = cb.mean.levels.front() + (cb.mean.levels.back() - cb.mean.levels.front()) *
                                                i / 400.0;
        int idx = quantize_param(v, cb.mean);
        REQUIRE(std::fabs(dequantize_param(idx, cb.mean) - v) <= step / 2.0 + 1e-12);
        REQUIRE(idx >= prev_idx);  // monotone
        prev_idx = idx;
    }
}

TEST_CASE("three boundaries in one second give four codes", "[prosody]") {
    FrameGrid grid{25, 16};
    auto track = line_track(61, 4.8, 0.5, grid);
    std::vector<DlopCoeffs> corpus;
    Rng rng(3);
    for (int i = 0; i < 30; ++i)
        corpus.push_back({rng.uniform(4.0, 6.0), rng.uniform(-3.0, 3.0), 150.0});
    auto cb = build_prosodic_codebooks(corpus);
    auto codes = encode_prosody(track, {250.0, 500.0, 750.0}, cb, grid);
    REQUIRE(codes.size() == 4);
}

TEST_CASE("flat track quantizes every slope to the same index", "[prosody]") {
    FrameGrid grid{25, 16};
    auto track = line_track(61, std::log(120.0), 0.0, grid);
    std::vector<DlopCoeffs> corpus;
    Rng rng(4);
    for (int i = 0; i < 30; ++i)
        corpus.push_back({rng.uniform(4.0, 6.0), rng.uniform(-3.0, 3.0), 150.0});
    auto cb = build_prosodic_codebooks(corpus);
    auto codes = encode_prosody(track, {250.0, 500.0, 750.0}, cb, grid);
    int expect = quantize_param(0.0, cb.slope);
    for (const auto& c : codes) REQUIRE(c.slope_idx == expect);
}

TEST_CASE("a 600 ms single syllable splits into three codes within the cap", "[prosody]") {
    FrameGrid grid{25, 16};
    auto track = line_track(40, 4.8, 1.0, grid);  // span 624 ms
    std::vector<DlopCoeffs> corpus;
    Rng rng(5);
    for (int i = 0; i < 30; ++i)
        corpus.push_back({rng.uniform(4.0, 6.0), rng.uniform(-3.0, 3.0), 150.0});
    auto cb = build_prosodic_codebooks(corpus);
    auto codes = encode_prosody(track, {}, cb, grid);
    REQUIRE(codes.size() == 3);
    for (const auto& c : codes) REQUIRE(c.dur_steps <= 16);
}

TEST_CASE("slivers merge backward instead of erroring", "[prosody]") {
    FrameGrid grid{25, 16};
    auto track = line_track(30, 4.8, 0.0, grid);
    std::vector<DlopCoeffs> corpus;
    Rng rng(8);
    for (int i = 0; i < 30; ++i)
        corpus.push_back({rng.uniform(4.0, 6.0), rng.uniform(-3.0, 3.0), 150.0});
    auto cb = build_prosodic_codebooks(corpus);
    // A boundary 5 ms before the track end creates a sub-2-frame sliver.
    auto codes = encode_prosody(track, {240.0, grid.frame_center_ms(29) - 5.0}, cb, grid);
    REQUIRE(codes.size() == 2);
}

TEST_CASE("single code with zero slope level decodes to a constant track", "[prosody]") {
    ProsodicCodebook cb;
    cb.mean = handmade_levels({4.0, 4.2, 4.4, 4.6, 4.8, 5.0, 5.2, 5.4});
    cb.slope = handmade_levels({-0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0});
    FrameGrid grid{25, 16};
    auto track = decode_prosody({SyllableCode{2, 3, 10}}, cb, grid);
    REQUIRE(!track.log_f0.empty());
    for (double v : track.log_f0) REQUIRE(v == Catch::Approx(4.4).margin(1e-12));
}

TEST_CASE("decode of an exactly-representable line stays within half a step", "[prosody]") {
    std::vector<DlopCoeffs> corpus;
    Rng rng(16);
    for (int i = 0; i < 50; ++i)
        corpus.push_back({rng.uniform(4.0, 6.0), rng.uniform(-2.5, 2.5), 150.0});
    auto cb = build_prosodic_codebooks(corpus);
    FrameGrid grid{25, 16};
    int n = 14;  // span 208 ms, a single syllable
    double mean = cb.mean.levels[4], slope = cb.slope.levels[5];
    auto track = line_track(n, mean, slope, grid);
    auto codes = encode_prosody(track, {}, cb, grid);
    REQUIRE(codes.size() == 1);
    REQUIRE(codes[0].mean_idx == 4);
    REQUIRE(codes[0].slope_idx == 5);
    auto decoded = decode_prosody(codes, cb, grid, n);
    double bound = std::max(cb.mean.step(), cb.slope.step()) / 2.0;
    for (int f = 0; f < n; ++f)
        REQUIRE(std::fabs(decoded.log_f0[static_cast<size_t>(f)] -
                          track.log_f0[static_cast<size_t>(f)]) <= bound);
}

TEST_CASE("empty code list decodes to an empty track", "[prosody]") {
    ProsodicCodebook cb;
    cb.mean = handmade_levels({1, 2, 3, 4, 5, 6, 7, 8});
    cb.slope = handmade_levels({1, 2, 3, 4, 5, 6, 7, 8});
    FrameGrid grid{25, 16};
    REQUIRE(decode_prosody({}, cb, grid).log_f0.empty());
}

TEST_CASE("out-of-range indices and durations are corrupt", "[prosody]") {
    ProsodicCodebook cb;
    cb.mean = handmade_levels({1, 2, 3, 4, 5, 6, 7, 8});
    cb.slope = handmade_levels({1, 2, 3, 4, 5, 6, 7, 8});
    REQUIRE_THROWS_AS(dequantize_param(8, cb.mean), CorruptStream);
    REQUIRE_THROWS_AS(dequantize_prosody({SyllableCode{0, 0, 17}}, cb), CorruptStream);
}

TEST_CASE("total decoded duration is exactly the sum of duration steps", "[prosody]") {
    ProsodicCodebook cb;
    cb.mean = handmade_levels({1, 2, 3, 4, 5, 6, 7, 8});
    cb.slope = handmade_levels({-1, -0.5, -0.25, 0, 0.25, 0.5, 0.75, 1});
    Rng rng(20);
    std::vector<SyllableCode> codes;
    int total_steps = 0;
    for (int i = 0; i < 12; ++i) {
        SyllableCode c{static_cast<int>(rng.uniform_int(8)),
                       static_cast<int>(rng.uniform_int(8)),
                       1 + static_cast<int>(rng.uniform_int(16))};
        total_steps += c.dur_steps;
        codes.push_back(c);
    }
    auto coeffs = dequantize_prosody(codes, cb);
    double total = 0.0;
    for (const auto& c : coeffs) total += c.span_ms;
    REQUIRE(total == Catch::Approx(total_steps * 16.0).margin(1e-12));
}

TEST_CASE("prosodic codebook roundtrips through json and hashes content", "[prosody]") {
    std::vector<DlopCoeffs> corpus;
    Rng rng(33);
    for (int i = 0; i < 25; ++i)
        corpus.push_back({rng.uniform(4.0, 6.0), rng.uniform(-3.0, 3.0), 150.0});
    auto cb = build_prosodic_codebooks(corpus);
    std::string path = "test_prosody_tmp.json";
    save_prosodic_codebook(path, cb);
    auto back = load_prosodic_codebook(path);
    REQUIRE(back.content_hash() == cb.content_hash());
    REQUIRE(back.mean.levels == cb.mean.levels);
    back.slope.levels[0] += 1e-9;
    REQUIRE(back.content_hash() != cb.content_hash());
    std::remove(path.c_str());
}
