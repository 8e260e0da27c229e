// Audio front door: mono 16-bit PCM WAV read/write, polyphase resampling to
// the 16 kHz canonical rate, and the 25 ms analysis frame grid.

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "pvc/common.hpp"
#include "pvc/errors.hpp"

namespace pvc {

constexpr int kCanonicalRate = 16000;
constexpr int kWindowMs = 25;

/// Mono audio with normalized samples in [-1, 1].
struct AudioClip {
    std::vector<double> samples;
    int sample_rate = kCanonicalRate;

    double duration_s() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
    double duration_ms() const { return duration_s() * 1000.0; }
};

/// 25 ms analysis windows at one of the supported shifts.
struct FrameGrid {
    int window_ms = kWindowMs;
    int shift_ms = 16;  // one of {10, 16, 20}

    int window_samples() const { return window_ms * kCanonicalRate / 1000; }
    int shift_samples() const { return shift_ms * kCanonicalRate / 1000; }

    // floor((len - window) / shift) + 1, clamped at 0.
    int frame_count(size_t n_samples) const {
        long w = window_samples(), s = shift_samples();
        long n = static_cast<long>(n_samples);
        if (n < w) return 0;
        return static_cast<int>((n - w) / s + 1);
    }

    // Frame center time in ms (frame start + half window).
    double frame_center_ms(int frame) const {
        return frame * static_cast<double>(shift_ms) + window_ms / 2.0;
    }
};

inline bool valid_shift_ms(int shift) { return shift == 10 || shift == 16 || shift == 20; }

// ---------------------------------------------------------------------------
// WAV file IO (mono PCM16 little-endian)

inline AudioClip read_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() < 44) throw ConfigError(path + ": not a WAV file");
    ByteReader r(bytes);
    try {
        if (std::memcmp(r.take(4), "RIFF", 4) != 0) throw ConfigError(path + ": missing RIFF");
        r.u32();  // chunk size
        if (std::memcmp(r.take(4), "WAVE", 4) != 0) throw ConfigError(path + ": missing WAVE");

        int channels = 0, rate = 0, bits = 0;
        std::vector<int16_t> pcm;
        bool have_fmt = false, have_data = false;
        while (r.remaining() >= 8) {
            char id[5] = {0};
            std::memcpy(id, r.take(4), 4);
            uint32_t len = r.u32();
            if (len > r.remaining()) len = static_cast<uint32_t>(r.remaining());
            if (std::strcmp(id, "fmt ") == 0) {
                ByteReader fr(r.take(len), len);
                uint16_t fmt = fr.u16();
                channels = fr.u16();
                rate = static_cast<int>(fr.u32());
                fr.u32();  // byte rate
                fr.u16();  // block align
                bits = fr.u16();
                if (fmt != 1) throw ConfigError(path + ": only PCM WAV supported");
                have_fmt = true;
            } else if (std::strcmp(id, "data") == 0) {
                const uint8_t* p = r.take(len);
                pcm.resize(len / 2);
                std::memcpy(pcm.data(), p, pcm.size() * 2);
                have_data = true;
            } else {
                r.take(len);  // skip
            }
            if (len & 1 && r.remaining() > 0) r.take(1);  // chunk padding
        }
        if (!have_fmt || !have_data) throw ConfigError(path + ": incomplete WAV");
        if (bits != 16) throw ConfigError(path + ": only 16-bit PCM supported");
        if (channels != 1) throw ConfigError(path + ": mono input required");
        AudioClip clip;
        clip.sample_rate = rate;
        clip.samples.resize(pcm.size());
        for (size_t i = 0; i < pcm.size(); ++i) clip.samples[i] = pcm[i] / 32768.0;
        return clip;
    } catch (const std::out_of_range&) {
        throw ConfigError(path + ": truncated WAV");
    }
}

inline void write_wav(const std::string& path, const AudioClip& clip) {
    std::vector<uint8_t> out;
    uint32_t data_len = static_cast<uint32_t>(clip.samples.size() * 2);
    out.reserve(44 + data_len);
    auto tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
    tag("RIFF");
    put_u32(out, 36 + data_len);
    tag("WAVE");
    tag("fmt ");
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, 1);  // mono
    put_u32(out, static_cast<uint32_t>(clip.sample_rate));
    put_u32(out, static_cast<uint32_t>(clip.sample_rate * 2));
    put_u16(out, 2);
    put_u16(out, 16);
    tag("data");
    put_u32(out, data_len);
    for (double s : clip.samples) {
        double c = std::max(-1.0, std::min(1.0, s));
        auto v = static_cast<int16_t>(std::lround(c * 32767.0));
        put_u16(out, static_cast<uint16_t>(v));
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

// ---------------------------------------------------------------------------
// Polyphase rational resampler (windowed-sinc lowpass, Hann window)

inline std::vector<double> resample(const std::vector<double>& x, int from_rate, int to_rate) {
    if (from_rate <= 0 || to_rate <= 0) throw ConfigError("invalid sample rate");
    if (from_rate == to_rate || x.empty()) return x;
    int g = std::gcd(from_rate, to_rate);
    int up = to_rate / g;    // L
    int down = from_rate / g;  // M

    // Lowpass at min(pi/L, pi/M), 24 taps per phase.
    int taps_per_phase = 24;
    int half = taps_per_phase * up / 2;
    double cutoff = 0.5 / std::max(up, down);  // cycles per (upsampled) sample
    std::vector<double> h(2 * half + 1);
    for (int i = -half; i <= half; ++i) {
        double sinc = (i == 0) ? 2.0 * cutoff
                               : std::sin(2.0 * M_PI * cutoff * i) / (M_PI * i);
        double w = 0.5 + 0.5 * std::cos(M_PI * i / (half + 1.0));  // Hann
        h[i + half] = sinc * w * up;
    }

    size_t n_out = (x.size() * static_cast<size_t>(up)) / static_cast<size_t>(down);
    std::vector<double> y(n_out, 0.0);
    for (size_t n = 0; n < n_out; ++n) {
        // Output sample n sits at upsampled index n*down.
        long center = static_cast<long>(n) * down;
        double acc = 0.0;
        for (int k = -half; k <= half; ++k) {
            long idx = center + k;
            if (idx % up != 0) continue;  // zero-stuffed position
            long src = idx / up;
            if (src < 0 || src >= static_cast<long>(x.size())) continue;
            acc += x[static_cast<size_t>(src)] * h[k + half];
        }
        y[n] = acc;
    }
    return y;
}

inline AudioClip to_canonical_rate(const AudioClip& clip) {
    if (clip.sample_rate == kCanonicalRate) return clip;
    AudioClip out;
    out.sample_rate = kCanonicalRate;
    out.samples = resample(clip.samples, clip.sample_rate, kCanonicalRate);
    return out;
}

// ---------------------------------------------------------------------------
// Framing

/// Hamming-windowed 25 ms segments on the grid. A clip shorter than one
/// window yields an empty sequence.
inline std::vector<std::vector<double>> frame_signal(const AudioClip& clip,
                                                     const FrameGrid& grid) {
    if (clip.sample_rate != kCanonicalRate)
        throw ConfigError("frame_signal expects 16 kHz input");
    int w = grid.window_samples();
    int s = grid.shift_samples();
    int n = grid.frame_count(clip.samples.size());
    std::vector<double> win(w);
    for (int i = 0; i < w; ++i)
        win[i] = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / (w - 1));
    std::vector<std::vector<double>> frames;
    frames.reserve(static_cast<size_t>(std::max(0, n)));
    for (int f = 0; f < n; ++f) {
        std::vector<double> frame(w);
        size_t off = static_cast<size_t>(f) * s;
        for (int i = 0; i < w; ++i) frame[i] = clip.samples[off + i] * win[i];
        frames.push_back(std::move(frame));
    }
    return frames;
}

}  // namespace pvc
