// Segmental codec: the codebook of unique binary posterior patterns and
// run-length coding of the per-frame index sequence. Runs are capped at 4
// frames (2-bit duration field); unseen patterns map to the nearest codebook
// entry by Hamming distance, ties to the lowest index.

#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "pvc/analyzers.hpp"
#include "pvc/common.hpp"
#include "pvc/errors.hpp"

namespace pvc {

constexpr int kMaxRunLength = 4;

/// Codebook index plus run length in frames.
struct SegmentalBlock {
    uint32_t index = 0;
    int run_len = 1;  // 1..4

    bool operator==(const SegmentalBlock&) const = default;
};

namespace detail {

// K bits packed MSB-first into ceil(K/8) bytes.
inline std::vector<uint8_t> pack_pattern(const BinaryFrame& bits) {
    std::vector<uint8_t> bytes((bits.size() + 7) / 8, 0);
    for (size_t k = 0; k < bits.size(); ++k)
        if (bits[k]) bytes[k / 8] |= static_cast<uint8_t>(0x80u >> (k % 8));
    return bytes;
}

inline BinaryFrame unpack_pattern(const std::vector<uint8_t>& bytes, int K) {
    BinaryFrame bits(static_cast<size_t>(K), 0);
    for (int k = 0; k < K; ++k)
        bits[static_cast<size_t>(k)] =
            (bytes[static_cast<size_t>(k) / 8] >> (7 - (k % 8))) & 1u;
    return bits;
}

struct PatternHash {
    size_t operator()(const std::vector<uint8_t>& v) const {
        return static_cast<size_t>(fnv1a64(v));
    }
};

}  // namespace detail

class SegmentalCodebook {
public:
    SegmentalCodebook() = default;

    Scheme scheme() const { return scheme_; }
    int k() const { return k_; }
    size_t size() const { return patterns_.size(); }
    uint64_t content_hash() const { return hash_; }

    int index_bits() const {
        size_t n = std::max<size_t>(size(), 2);
        return std::max(1, static_cast<int>(std::bit_width(n - 1)));
    }

    const BinaryFrame& pattern(size_t index) const { return patterns_[index]; }

    /// Dedup by first occurrence over the training frames.
    static SegmentalCodebook build(const std::vector<BinaryFrame>& corpus, Scheme scheme) {
        if (corpus.empty()) throw EmptyCorpus("segmental codebook: empty corpus");
        SegmentalCodebook cb;
        cb.scheme_ = scheme;
        cb.k_ = static_cast<int>(corpus.front().size());
        for (const auto& frame : corpus) {
            if (static_cast<int>(frame.size()) != cb.k_)
                throw DimensionError("segmental codebook: inconsistent pattern width");
            auto key = detail::pack_pattern(frame);
            auto it = cb.lookup_.find(key);
            if (it == cb.lookup_.end()) {
                cb.lookup_.emplace(std::move(key), static_cast<uint32_t>(cb.patterns_.size()));
                cb.patterns_.push_back(frame);
            }
        }
        cb.rehash();
        return cb;
    }

    /// Exact-match index, or the minimal-Hamming-distance entry (lowest index
    /// on ties).
    uint32_t lookup_or_nearest(const BinaryFrame& pattern) const {
        if (static_cast<int>(pattern.size()) != k_)
            throw DimensionError("lookup: pattern width != K");
        auto key = detail::pack_pattern(pattern);
        auto it = lookup_.find(key);
        if (it != lookup_.end()) return it->second;
        uint32_t best = 0;
        int best_dist = k_ + 1;
        for (size_t i = 0; i < patterns_.size(); ++i) {
            int d = 0;
            const auto& p = patterns_[i];
            for (int b = 0; b < k_; ++b) d += p[static_cast<size_t>(b)] != pattern[static_cast<size_t>(b)];
            if (d < best_dist) {
                best_dist = d;
                best = static_cast<uint32_t>(i);
            }
        }
        return best;
    }

    // ---- persistence: "PVCB" | version | scheme | K | size | patterns | hash

    std::vector<uint8_t> serialize() const {
        std::vector<uint8_t> b;
        b.insert(b.end(), {'P', 'V', 'C', 'B'});
        put_u16(b, 1);
        put_u8(b, static_cast<uint8_t>(scheme_));
        put_u8(b, static_cast<uint8_t>(k_));
        put_u32(b, static_cast<uint32_t>(patterns_.size()));
        for (const auto& p : patterns_) {
            auto bytes = detail::pack_pattern(p);
            b.insert(b.end(), bytes.begin(), bytes.end());
        }
        put_u64(b, hash_);
        return b;
    }

    static SegmentalCodebook deserialize(const std::vector<uint8_t>& bytes,
                                         const std::string& origin = "codebook") {
        ByteReader r(bytes);
        try {
            if (std::memcmp(r.take(4), "PVCB", 4) != 0)
                throw CorruptStream(origin + ": bad magic");
            if (r.u16() != 1) throw CorruptStream(origin + ": unsupported version");
            SegmentalCodebook cb;
            cb.scheme_ = static_cast<Scheme>(r.u8());
            cb.k_ = r.u8();
            uint32_t size = r.u32();
            size_t bytes_per = (static_cast<size_t>(cb.k_) + 7) / 8;
            for (uint32_t i = 0; i < size; ++i) {
                const uint8_t* p = r.take(bytes_per);
                std::vector<uint8_t> packed(p, p + bytes_per);
                cb.lookup_.emplace(packed, static_cast<uint32_t>(cb.patterns_.size()));
                cb.patterns_.push_back(detail::unpack_pattern(packed, cb.k_));
            }
            uint64_t stored = r.u64();
            cb.rehash();
            if (stored != cb.hash_) throw CorruptStream(origin + ": content hash mismatch");
            return cb;
        } catch (const std::out_of_range&) {
            throw CorruptStream(origin + ": truncated codebook file");
        }
    }

    void save(const std::string& path) const {
        auto bytes = serialize();
        std::ofstream f(path, std::ios::binary);
        if (!f) throw ConfigError("cannot write " + path);
        f.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
    }

    static SegmentalCodebook load(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw ConfigError("cannot open " + path);
        std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
        return deserialize(bytes, path);
    }

private:
    void rehash() {
        uint64_t h = fnv1a64("PVCB", 4);
        uint8_t head[2] = {static_cast<uint8_t>(scheme_), static_cast<uint8_t>(k_)};
        h = fnv1a64(head, 2, h);
        for (const auto& p : patterns_) h = fnv1a64(detail::pack_pattern(p), h);
        hash_ = h;
    }

    Scheme scheme_ = Scheme::GP;
    int k_ = 0;
    std::vector<BinaryFrame> patterns_;
    std::unordered_map<std::vector<uint8_t>, uint32_t, detail::PatternHash> lookup_;
    uint64_t hash_ = 0;
};

/// RLE over an index sequence, splitting runs at the 4-frame cap.
inline std::vector<SegmentalBlock> encode_indices(const std::vector<uint32_t>& indices) {
    std::vector<SegmentalBlock> blocks;
    size_t t = 0;
    while (t < indices.size()) {
        uint32_t idx = indices[t];
        size_t run = 1;
        while (t + run < indices.size() && run < kMaxRunLength && indices[t + run] == idx)
            ++run;
        blocks.push_back({idx, static_cast<int>(run)});
        t += run;
    }
    return blocks;
}

/// Map frames to codebook indices and emit maximal runs.
inline std::vector<SegmentalBlock> encode_segmental(const std::vector<BinaryFrame>& frames,
                                                    const SegmentalCodebook& cb) {
    std::vector<uint32_t> indices(frames.size());
    for (size_t t = 0; t < frames.size(); ++t) indices[t] = cb.lookup_or_nearest(frames[t]);
    return encode_indices(indices);
}

inline std::vector<BinaryFrame> decode_segmental(const std::vector<SegmentalBlock>& blocks,
                                                 const SegmentalCodebook& cb) {
    std::vector<BinaryFrame> frames;
    for (const auto& b : blocks) {
        if (b.index >= cb.size())
            throw CorruptStream("segmental index " + std::to_string(b.index) +
                                " out of range (codebook size " + std::to_string(cb.size()) + ")");
        if (b.run_len < 1 || b.run_len > kMaxRunLength)
            throw CorruptStream("segmental run length out of range");
        for (int i = 0; i < b.run_len; ++i) frames.push_back(cb.pattern(b.index));
    }
    return frames;
}

/// Index sequence of a block list (the roundtrip identity is on indices).
inline std::vector<uint32_t> expand_indices(const std::vector<SegmentalBlock>& blocks) {
    std::vector<uint32_t> idx;
    for (const auto& b : blocks)
        for (int i = 0; i < b.run_len; ++i) idx.push_back(b.index);
    return idx;
}

}  // namespace pvc
