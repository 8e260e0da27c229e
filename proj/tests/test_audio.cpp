#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>

#include "pvc/audio.hpp"
#include "pvc/common.hpp"

using namespace pvc;

namespace {

AudioClip tone(double freq_hz, double dur_s, int rate = kCanonicalRate, double amp = 0.5) {
    AudioClip c;
    c.sample_rate = rate;
    c.samples.resize(static_cast<size_t>(dur_s * rate));
    for (size_t i = 0; i < c.samples.size(); ++i)
        c.samples[i] = amp * std::sin(2.0 * M_PI * freq_hz * static_cast<double>(i) / rate);
    return c;
}

}  // namespace

TEST_CASE("frame count: 1 s at 16 ms shift gives 61 frames", "[audio]") {
    // floor((1000 - 25) / 16) + 1 = 61
    auto clip = tone(440.0, 1.0);
    FrameGrid grid{25, 16};
    REQUIRE(grid.frame_count(clip.samples.size()) == 61);
    REQUIRE(frame_signal(clip, grid).size() == 61);
}

TEST_CASE("frame count edges: one window fits exactly, shorter yields none", "[audio]") {
    AudioClip exact;
    exact.samples.assign(400, 0.1);  // 25 ms
    AudioClip shorter;
    shorter.samples.assign(384, 0.1);  // 24 ms
    for (int shift : {10, 16, 20}) {
        FrameGrid grid{25, shift};
        REQUIRE(frame_signal(exact, grid).size() == 1);
        REQUIRE(frame_signal(shorter, grid).empty());
    }
}

TEST_CASE("frame count formula holds over random lengths and shifts", "[audio]") {
    Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        size_t n = rng.uniform_int(40000);
        int shift = std::array{10, 16, 20}[rng.uniform_int(3)];
        FrameGrid grid{25, shift};
        long w = grid.window_samples(), s = grid.shift_samples();
        long expect = (static_cast<long>(n) < w) ? 0 : (static_cast<long>(n) - w) / s + 1;
        REQUIRE(grid.frame_count(n) == expect);
        AudioClip clip;
        clip.samples.assign(n, 0.01);
        REQUIRE(static_cast<long>(frame_signal(clip, grid).size()) == expect);
    }
}

TEST_CASE("frames are Hamming-windowed segments", "[audio]") {
    AudioClip clip;
    clip.samples.assign(800, 1.0);
    FrameGrid grid{25, 16};
    auto frames = frame_signal(clip, grid);
    REQUIRE(frames.size() == 2);
    // Hamming endpoints of a constant signal.
    REQUIRE(frames[0][0] == Catch::Approx(0.08).margin(1e-12));
    REQUIRE(frames[0][200] == Catch::Approx(0.54 - 0.46 * std::cos(2.0 * M_PI * 200 / 399)).margin(1e-12));
}

TEST_CASE("wav roundtrip preserves samples to 16-bit precision", "[audio]") {
    auto clip = tone(300.0, 0.25);
    std::string path = "test_audio_tmp.wav";
    write_wav(path, clip);
    auto back = read_wav(path);
    std::remove(path.c_str());
    REQUIRE(back.sample_rate == clip.sample_rate);
    REQUIRE(back.samples.size() == clip.samples.size());
    for (size_t i = 0; i < clip.samples.size(); i += 17)
        REQUIRE(back.samples[i] == Catch::Approx(clip.samples[i]).margin(1.0 / 32768.0));
}

TEST_CASE("resampler brings 48 kHz input to 16 kHz and keeps the tone", "[audio]") {
    auto clip48 = tone(440.0, 0.5, 48000);
    auto clip16 = to_canonical_rate(clip48);
    REQUIRE(clip16.sample_rate == kCanonicalRate);
    REQUIRE(clip16.samples.size() == clip48.samples.size() / 3);
    // Dominant frequency survives: zero crossings per second stay ~2*440.
    int crossings = 0;
    for (size_t i = 1000; i + 1 < clip16.samples.size() - 1000; ++i)
        if ((clip16.samples[i] <= 0) != (clip16.samples[i + 1] <= 0)) ++crossings;
    double seconds = static_cast<double>(clip16.samples.size() - 2001) / kCanonicalRate;
    double freq = crossings / seconds / 2.0;
    REQUIRE(freq == Catch::Approx(440.0).margin(5.0));
}

TEST_CASE("non-mono and non-pcm wavs are rejected", "[audio]") {
    // Hand-built stereo header.
    std::vector<uint8_t> b;
    auto tag = [&](const char* t) { b.insert(b.end(), t, t + 4); };
    tag("RIFF");
    put_u32(b, 36);
    tag("WAVE");
    tag("fmt ");
    put_u32(b, 16);
    put_u16(b, 1);
    put_u16(b, 2);  // stereo
    put_u32(b, 16000);
    put_u32(b, 64000);
    put_u16(b, 4);
    put_u16(b, 16);
    tag("data");
    put_u32(b, 0);
    std::string path = "test_audio_stereo_tmp.wav";
    {
        std::ofstream f(path, std::ios::binary);
        f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    }
    REQUIRE_THROWS_AS(read_wav(path), ConfigError);
    std::remove(path.c_str());
}
