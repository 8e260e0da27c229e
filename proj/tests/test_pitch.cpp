#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pvc/common.hpp"
#include "pvc/pitch.hpp"

using namespace pvc;

namespace {

void add_pulses(AudioClip& c, double f0, size_t from, size_t to) {
    double period = kCanonicalRate / f0;
    double next = static_cast<double>(from);
    while (next < static_cast<double>(to)) {
        c.samples[static_cast<size_t>(next)] = 0.8;
        next += period;
    }
}

}  // namespace

TEST_CASE("pulse train at 100 Hz is tracked within 2 percent", "[pitch]") {
    AudioClip c;
    c.sample_rate = kCanonicalRate;
    c.samples.assign(16000, 0.0);
    add_pulses(c, 100.0, 0, c.samples.size());
    FrameGrid grid{25, 16};
    auto track = extract_continuous_f0(c, grid);
    REQUIRE(track.log_f0.size() == 61);
    int voiced = 0;
    for (size_t f = 2; f + 2 < track.log_f0.size(); ++f) {
        if (!track.voicing_mask[f]) continue;
        ++voiced;
        REQUIRE(std::exp(track.log_f0[f]) == Catch::Approx(100.0).epsilon(0.02));
    }
    REQUIRE(voiced > 40);
}

TEST_CASE("silence between equal voiced stretches interpolates to the endpoints", "[pitch]") {
    AudioClip c;
    c.sample_rate = kCanonicalRate;
    c.samples.assign(24000, 0.0);  // 1.5 s
    add_pulses(c, 120.0, 0, 8000);
    add_pulses(c, 120.0, 16000, 24000);
    FrameGrid grid{25, 16};
    auto track = extract_continuous_f0(c, grid);
    bool saw_gap = false;
    for (size_t f = 0; f < track.log_f0.size(); ++f) {
        REQUIRE(std::isfinite(track.log_f0[f]));
        if (!track.voicing_mask[f]) {
            saw_gap = true;
            REQUIRE(track.log_f0[f] == Catch::Approx(std::log(120.0)).margin(0.03));
        }
    }
    REQUIRE(saw_gap);
}

TEST_CASE("white noise has no voiced frames", "[pitch]") {
    Rng rng(99);
    AudioClip c;
    c.sample_rate = kCanonicalRate;
    c.samples.resize(16000);
    for (auto& s : c.samples) s = 0.3 * rng.normal();
    FrameGrid grid{25, 16};
    REQUIRE_THROWS_AS(extract_continuous_f0(c, grid), NoVoicedSpeech);
}

TEST_CASE("returned track never has gaps or non-finite values", "[pitch]") {
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        AudioClip c;
        c.sample_rate = kCanonicalRate;
        c.samples.assign(9600 + rng.uniform_int(9600), 0.0);
        double f0 = 90.0 + rng.uniform(0.0, 200.0);
        size_t start = rng.uniform_int(3000);
        size_t stop = c.samples.size() - rng.uniform_int(3000);
        add_pulses(c, f0, start, stop);
        FrameGrid grid{25, 16};
        auto track = extract_continuous_f0(c, grid);
        REQUIRE(track.log_f0.size() ==
                static_cast<size_t>(grid.frame_count(c.samples.size())));
        for (double v : track.log_f0) {
            REQUIRE(std::isfinite(v));
            REQUIRE(v >= std::log(50.0) - 1e-9);
            REQUIRE(v <= std::log(500.0) + 1e-9);
        }
    }
}
