// Error types used across the codec. Each carries the CLI exit code class:
// 1 config, 2 input signal, 3 stream integrity, 4 training.

#pragma once

#include <stdexcept>
#include <string>

namespace pvc {

class Error : public std::runtime_error {
public:
    Error(std::string msg, int exit_code)
        : std::runtime_error(std::move(msg)), exit_code_(exit_code) {}
    int exit_code() const { return exit_code_; }

private:
    int exit_code_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error("config error: " + m, 1) {}
};

struct DimensionError : Error {
    explicit DimensionError(const std::string& m) : Error("dimension mismatch: " + m, 1) {}
};

struct NoVoicedSpeech : Error {
    explicit NoVoicedSpeech(const std::string& m = "no voiced frames found")
        : Error(m, 2) {}
};

struct InvalidDrive : Error {
    explicit InvalidDrive(const std::string& m) : Error("invalid drive: " + m, 2) {}
};

struct SegmentTooShort : Error {
    explicit SegmentTooShort(const std::string& m) : Error("segment too short: " + m, 2) {}
};

struct TooShort : Error {
    explicit TooShort(const std::string& m) : Error("input too short: " + m, 2) {}
};

struct EmptyCorpus : Error {
    explicit EmptyCorpus(const std::string& m = "corpus is empty") : Error(m, 2) {}
};

struct NoSyllables : Error {
    explicit NoSyllables(const std::string& m = "no syllables") : Error(m, 2) {}
};

struct NotABitstream : Error {
    explicit NotABitstream(const std::string& m) : Error("not a bitstream: " + m, 3) {}
};

struct CorruptStream : Error {
    explicit CorruptStream(const std::string& m) : Error("corrupt stream: " + m, 3) {}
};

struct CodebookMismatch : Error {
    explicit CodebookMismatch(const std::string& m)
        : Error("codebook mismatch: " + m, 3) {}
};

struct EncodeOverflow : Error {
    explicit EncodeOverflow(const std::string& m) : Error("encode overflow: " + m, 3) {}
};

struct TrainingDiverged : Error {
    explicit TrainingDiverged(const std::string& m)
        : Error("training diverged: " + m, 4) {}
};

struct DegenerateCorpus : Error {
    explicit DegenerateCorpus(const std::string& m)
        : Error("degenerate corpus: " + m, 4) {}
};

}  // namespace pvc
