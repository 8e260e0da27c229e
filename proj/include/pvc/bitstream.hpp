// The .pvc container: a fixed header followed by two independently decodable
// length-prefixed sections, segmental blocks and syllable codes, bit-packed
// MSB-first and byte-padded at the section end. Codebooks travel out of band
// and are referenced by content hash. Multi-byte header integers are
// little-endian.
//
// See docs/bitstream.md for the bit-level layout and a worked byte dump.

#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "pvc/analyzers.hpp"
#include "pvc/common.hpp"
#include "pvc/errors.hpp"
#include "pvc/prosody.hpp"
#include "pvc/segcodec.hpp"

namespace pvc {

constexpr char kBitstreamMagic[4] = {'P', 'V', 'C', '1'};
constexpr uint16_t kBitstreamVersion = 1;

struct BitstreamHeader {
    uint16_t version = kBitstreamVersion;
    Scheme scheme = Scheme::GP;
    int frame_shift_ms = 16;
    int index_bits = 10;
    uint64_t segmental_hash = 0;
    uint64_t prosodic_hash = 0;
    uint32_t frame_count = 0;
    uint32_t syllable_count = 0;

    bool operator==(const BitstreamHeader&) const = default;
};

// ---------------------------------------------------------------------------
// MSB-first bit packing

class BitWriter {
public:
    void put(uint32_t value, int bits) {
        for (int b = bits - 1; b >= 0; --b) {
            if (bit_pos_ == 0) bytes_.push_back(0);
            if ((value >> b) & 1u)
                bytes_.back() |= static_cast<uint8_t>(0x80u >> bit_pos_);
            bit_pos_ = (bit_pos_ + 1) % 8;
        }
    }

    /// Byte-align (zero padding) and return the buffer.
    std::vector<uint8_t> finish() {
        bit_pos_ = 0;
        return std::move(bytes_);
    }

private:
    std::vector<uint8_t> bytes_;
    int bit_pos_ = 0;
};

class BitReader {
public:
    BitReader(const uint8_t* data, size_t n_bytes) : data_(data), n_bits_(n_bytes * 8) {}

    uint32_t get(int bits) {
        uint32_t v = 0;
        for (int b = 0; b < bits; ++b) {
            if (pos_ >= n_bits_) throw CorruptStream("bit reader underrun");
            uint8_t byte = data_[pos_ / 8];
            v = (v << 1) | ((byte >> (7 - pos_ % 8)) & 1u);
            ++pos_;
        }
        return v;
    }

    size_t bits_left() const { return n_bits_ - pos_; }

private:
    const uint8_t* data_;
    size_t n_bits_;
    size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Pack / unpack

/// Each block is index_bits + 2 bits (run length stored as value-1); each
/// syllable is 3 + 3 + 4 bits (duration stored as steps-1).
inline std::vector<uint8_t> pack(const std::vector<SegmentalBlock>& blocks,
                                 const std::vector<SyllableCode>& codes,
                                 const BitstreamHeader& header) {
    uint32_t frame_total = 0;
    BitWriter seg_writer;
    for (const auto& b : blocks) {
        if (header.index_bits < 1 || header.index_bits > 24)
            throw EncodeOverflow("index_bits out of range");
        if (b.index >= (1u << header.index_bits))
            throw EncodeOverflow("block index " + std::to_string(b.index) +
                                 " needs more than " + std::to_string(header.index_bits) + " bits");
        if (b.run_len < 1 || b.run_len > kMaxRunLength)
            throw EncodeOverflow("run length out of range");
        seg_writer.put(b.index, header.index_bits);
        seg_writer.put(static_cast<uint32_t>(b.run_len - 1), 2);
        frame_total += static_cast<uint32_t>(b.run_len);
    }
    if (frame_total != header.frame_count)
        throw EncodeOverflow("run lengths sum to " + std::to_string(frame_total) +
                             " but header declares " + std::to_string(header.frame_count));

    BitWriter pros_writer;
    for (const auto& c : codes) {
        if (c.mean_idx < 0 || c.mean_idx > 7 || c.slope_idx < 0 || c.slope_idx > 7)
            throw EncodeOverflow("prosodic index out of range");
        if (c.dur_steps < 1 || c.dur_steps > kMaxDurSteps)
            throw EncodeOverflow("syllable duration out of range");
        pros_writer.put(static_cast<uint32_t>(c.mean_idx), 3);
        pros_writer.put(static_cast<uint32_t>(c.slope_idx), 3);
        pros_writer.put(static_cast<uint32_t>(c.dur_steps - 1), 4);
    }
    if (codes.size() != header.syllable_count)
        throw EncodeOverflow("syllable count does not match header");

    auto seg_bytes = seg_writer.finish();
    auto pros_bytes = pros_writer.finish();

    std::vector<uint8_t> out;
    out.insert(out.end(), kBitstreamMagic, kBitstreamMagic + 4);
    put_u16(out, header.version);
    put_u8(out, static_cast<uint8_t>(header.scheme));
    put_u8(out, static_cast<uint8_t>(header.frame_shift_ms));
    put_u8(out, static_cast<uint8_t>(header.index_bits));
    put_u64(out, header.segmental_hash);
    put_u64(out, header.prosodic_hash);
    put_u32(out, header.frame_count);
    put_u32(out, header.syllable_count);
    put_u32(out, static_cast<uint32_t>(seg_bytes.size()));
    out.insert(out.end(), seg_bytes.begin(), seg_bytes.end());
    put_u32(out, static_cast<uint32_t>(pros_bytes.size()));
    out.insert(out.end(), pros_bytes.begin(), pros_bytes.end());
    return out;
}

struct UnpackedStream {
    BitstreamHeader header;
    std::vector<SegmentalBlock> blocks;
    std::vector<SyllableCode> codes;
};

inline UnpackedStream unpack(const std::vector<uint8_t>& bytes) {
    ByteReader r(bytes);
    UnpackedStream out;
    try {
        if (bytes.size() < 4 || std::memcmp(r.take(4), kBitstreamMagic, 4) != 0)
            throw NotABitstream("bad magic");
        auto& h = out.header;
        h.version = r.u16();
        if (h.version != kBitstreamVersion)
            throw NotABitstream("unsupported version " + std::to_string(h.version));
        h.scheme = static_cast<Scheme>(r.u8());
        h.frame_shift_ms = r.u8();
        h.index_bits = r.u8();
        h.segmental_hash = r.u64();
        h.prosodic_hash = r.u64();
        h.frame_count = r.u32();
        h.syllable_count = r.u32();
        if (h.index_bits < 1 || h.index_bits > 24)
            throw CorruptStream("index_bits out of range");

        uint32_t seg_len = r.u32();
        const uint8_t* seg_data = r.take(seg_len);
        BitReader seg_bits(seg_data, seg_len);
        uint32_t frames = 0;
        while (frames < h.frame_count) {
            if (seg_bits.bits_left() < static_cast<size_t>(h.index_bits) + 2)
                throw CorruptStream("segmental section truncated");
            SegmentalBlock b;
            b.index = seg_bits.get(h.index_bits);
            b.run_len = static_cast<int>(seg_bits.get(2)) + 1;
            frames += static_cast<uint32_t>(b.run_len);
            out.blocks.push_back(b);
        }
        if (frames != h.frame_count)
            throw CorruptStream("run lengths overshoot the declared frame count");
        if (seg_bits.bits_left() >= 8)
            throw CorruptStream("trailing bytes in segmental section");

        uint32_t pros_len = r.u32();
        const uint8_t* pros_data = r.take(pros_len);
        BitReader pros_bits(pros_data, pros_len);
        for (uint32_t i = 0; i < h.syllable_count; ++i) {
            if (pros_bits.bits_left() < 10)
                throw CorruptStream("prosodic section truncated");
            SyllableCode c;
            c.mean_idx = static_cast<int>(pros_bits.get(3));
            c.slope_idx = static_cast<int>(pros_bits.get(3));
            c.dur_steps = static_cast<int>(pros_bits.get(4)) + 1;
            out.codes.push_back(c);
        }
        if (pros_bits.bits_left() >= 8)
            throw CorruptStream("trailing bytes in prosodic section");
        if (r.remaining() != 0) throw CorruptStream("trailing bytes after sections");
        return out;
    } catch (const std::out_of_range&) {
        throw CorruptStream("container truncated");
    }
}

/// Hash check against the codebooks the decoder was given.
inline void verify_codebook_hashes(const BitstreamHeader& h, const SegmentalCodebook& seg,
                                   const ProsodicCodebook& pros) {
    if (h.segmental_hash != seg.content_hash())
        throw CodebookMismatch("segmental codebook hash differs from stream header");
    if (h.prosodic_hash != pros.content_hash())
        throw CodebookMismatch("prosodic codebook hash differs from stream header");
}

inline void write_bitstream_file(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::vector<uint8_t> read_bitstream_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + path);
    return std::vector<uint8_t>((std::istreambuf_iterator<char>(f)),
                                std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// Bit-rate accounting

/// Per-row rates in bits per second: block index, block duration, F0 mean,
/// F0 slope, syllable duration.
struct BitRateReport {
    double code_bps = 0.0;
    double code_duration_bps = 0.0;
    double f0_mean_bps = 0.0;
    double f0_slope_bps = 0.0;
    double syllable_duration_bps = 0.0;
    double total_bps = 0.0;
    double blocks_per_s = 0.0;
    double syllables_per_s = 0.0;
};

inline BitRateReport measure_bitrate(size_t n_blocks, size_t n_syllables,
                                     double speech_duration_s, int index_bits) {
    if (speech_duration_s <= 0.0) throw ConfigError("bitrate needs a positive duration");
    BitRateReport r;
    double nb = static_cast<double>(n_blocks), ns = static_cast<double>(n_syllables);
    r.code_bps = nb * index_bits / speech_duration_s;
    r.code_duration_bps = nb * 2.0 / speech_duration_s;
    r.f0_mean_bps = ns * 3.0 / speech_duration_s;
    r.f0_slope_bps = ns * 3.0 / speech_duration_s;
    r.syllable_duration_bps = ns * 4.0 / speech_duration_s;
    r.total_bps = r.code_bps + r.code_duration_bps + r.f0_mean_bps + r.f0_slope_bps +
                  r.syllable_duration_bps;
    r.blocks_per_s = nb / speech_duration_s;
    r.syllables_per_s = ns / speech_duration_s;
    return r;
}

inline BitRateReport measure_bitrate(const std::vector<SegmentalBlock>& blocks,
                                     const std::vector<SyllableCode>& codes,
                                     double speech_duration_s, int index_bits) {
    return measure_bitrate(blocks.size(), codes.size(), speech_duration_s, index_bits);
}

}  // namespace pvc
