// Codec configuration: a built-in profile set (gp16 is the default) that a
// TOML-like plain-text file can override. Sections are [profile.<name>];
// keys are `key = value` pairs. Paths are resolved relative to the config
// file's directory.

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pvc/analyzers.hpp"
#include "pvc/corpus.hpp"
#include "pvc/errors.hpp"

namespace pvc {

struct CodecConfig {
    std::string profile = "gp16";
    Scheme scheme = Scheme::GP;
    std::vector<std::string> class_names;  // defaults per scheme when empty
    int frame_shift_ms = 16;

    // Model artifact locations.
    std::string model_dir = "models/gp16";
    std::string analyzer_path(const std::string& class_name) const {
        return model_dir + "/analyzer_" + class_name + ".pvcw";
    }
    std::string synthesis_net_path() const { return model_dir + "/synthesis.pvcw"; }
    std::string segmental_codebook_path() const { return model_dir + "/segmental.pvcb"; }
    std::string prosodic_codebook_path() const { return model_dir + "/prosodic.json"; }
    std::string snn_params_path() const { return model_dir + "/snn.json"; }
    std::string training_log_path() const { return model_dir + "/training_log.json"; }

    // Pitch / vocoder tunables.
    double voicing_threshold = 0.3;
    double f0_min_hz = 50.0;
    double f0_max_hz = 500.0;

    // Desk-scale training knobs.
    std::vector<int> analyzer_hidden = {48};
    std::vector<int> synth_hidden = {96};
    int analyzer_epochs = 60;
    int synth_epochs = 80;
    double analyzer_learning_rate = 0.3;
    double synth_learning_rate = 0.1;
    int batch_size = 16;
    int snn_budget = 160;

    uint64_t seed = 17;
    int jobs = 1;

    int class_count() const { return static_cast<int>(effective_class_names().size()); }

    std::vector<std::string> effective_class_names() const {
        return class_names.empty() ? default_class_names(scheme) : class_names;
    }

    void validate() const {
        if (!valid_shift_ms(frame_shift_ms))
            throw ConfigError("frame_shift_ms must be 10, 16 or 20");
        auto names = effective_class_names();
        if (static_cast<int>(names.size()) != scheme_class_count(scheme))
            throw ConfigError("scheme " + scheme_name(scheme) + " needs " +
                              std::to_string(scheme_class_count(scheme)) + " classes, got " +
                              std::to_string(names.size()));
        for (size_t i = 0; i < names.size(); ++i)
            for (size_t j = i + 1; j < names.size(); ++j)
                if (names[i] == names[j]) throw ConfigError("duplicate class name " + names[i]);
    }

    FrameGrid grid() const { return FrameGrid{kWindowMs, frame_shift_ms}; }

    PitchConfig pitch() const {
        PitchConfig p;
        p.voicing_threshold = voicing_threshold;
        p.f0_min_hz = f0_min_hz;
        p.f0_max_hz = f0_max_hz;
        return p;
    }
};

namespace detail {

inline void trim(std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    size_t b = s.find_last_not_of(" \t\r\n");
    s = (a == std::string::npos) ? "" : s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline std::vector<int> split_int_list(const std::string& v, const std::string& key) {
    std::vector<int> out;
    for (const auto& s : split_list(v)) {
        try {
            out.push_back(std::stoi(s));
        } catch (...) {
            throw ConfigError("bad integer in " + key + ": " + s);
        }
    }
    return out;
}

inline void apply_key(CodecConfig& cfg, const std::string& key, const std::string& value,
                      const std::filesystem::path& base_dir) {
    auto as_int = [&](const std::string& v) {
        try {
            return std::stoi(v);
        } catch (...) {
            throw ConfigError("bad integer for " + key + ": " + v);
        }
    };
    auto as_double = [&](const std::string& v) {
        try {
            return std::stod(v);
        } catch (...) {
            throw ConfigError("bad number for " + key + ": " + v);
        }
    };
    auto as_path = [&](const std::string& v) {
        std::filesystem::path p(v);
        return p.is_absolute() ? p.string() : (base_dir / p).string();
    };

    if (key == "scheme") cfg.scheme = scheme_from_name(value);
    else if (key == "class_names") cfg.class_names = split_list(value);
    else if (key == "frame_shift_ms") cfg.frame_shift_ms = as_int(value);
    else if (key == "model_dir") cfg.model_dir = as_path(value);
    else if (key == "voicing_threshold") cfg.voicing_threshold = as_double(value);
    else if (key == "f0_min_hz") cfg.f0_min_hz = as_double(value);
    else if (key == "f0_max_hz") cfg.f0_max_hz = as_double(value);
    else if (key == "analyzer_hidden") cfg.analyzer_hidden = split_int_list(value, key);
    else if (key == "synth_hidden") cfg.synth_hidden = split_int_list(value, key);
    else if (key == "analyzer_epochs") cfg.analyzer_epochs = as_int(value);
    else if (key == "synth_epochs") cfg.synth_epochs = as_int(value);
    else if (key == "analyzer_learning_rate") cfg.analyzer_learning_rate = as_double(value);
    else if (key == "synth_learning_rate") cfg.synth_learning_rate = as_double(value);
    else if (key == "batch_size") cfg.batch_size = as_int(value);
    else if (key == "snn_budget") cfg.snn_budget = as_int(value);
    else if (key == "seed") cfg.seed = static_cast<uint64_t>(std::stoull(value));
    else if (key == "jobs") cfg.jobs = as_int(value);
    else throw ConfigError("unknown config key: " + key);
}

}  // namespace detail

/// Built-in profiles: gp10 / gp16 / gp20 / spe16 / espe16.
inline CodecConfig builtin_profile(const std::string& name) {
    CodecConfig cfg;
    cfg.profile = name;
    cfg.model_dir = "models/" + name;
    if (name == "gp10") {
        cfg.scheme = Scheme::GP;
        cfg.frame_shift_ms = 10;
    } else if (name == "gp16") {
        cfg.scheme = Scheme::GP;
        cfg.frame_shift_ms = 16;
    } else if (name == "gp20") {
        cfg.scheme = Scheme::GP;
        cfg.frame_shift_ms = 20;
    } else if (name == "spe16") {
        cfg.scheme = Scheme::SPE;
        cfg.frame_shift_ms = 16;
    } else if (name == "espe16") {
        cfg.scheme = Scheme::ESPE;
        cfg.frame_shift_ms = 16;
    } else {
        throw ConfigError("unknown profile " + name +
                          " (built-ins: gp10, gp16, gp20, spe16, espe16)");
    }
    return cfg;
}

/// Parse a config file and return the requested profile (or the file's
/// default_profile / gp16). Unknown sections are an error.
inline CodecConfig load_config(const std::string& path, std::string profile = "") {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config " + path);
    auto base_dir = std::filesystem::path(path).parent_path();

    std::string default_profile = "gp16";
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
    std::string current;  // empty = top level
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(path + ":" + std::to_string(lineno) + ": unterminated section");
            std::string sec = line.substr(1, line.size() - 2);
            detail::trim(sec);
            if (sec.rfind("profile.", 0) != 0)
                throw ConfigError(path + ":" + std::to_string(lineno) +
                                  ": sections must be [profile.<name>]");
            current = sec.substr(8);
            sections[current];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        detail::trim(key);
        detail::trim(value);
        if (current.empty() && key == "default_profile") {
            default_profile = value;
            continue;
        }
        sections[current].emplace_back(key, value);
    }

    if (profile.empty()) profile = default_profile;
    CodecConfig cfg;
    try {
        cfg = builtin_profile(profile);
    } catch (const ConfigError&) {
        if (!sections.count(profile)) throw;
        cfg.profile = profile;  // file-defined profile, start from gp16 base
        cfg.model_dir = "models/" + profile;
    }
    // Top-level keys apply first, then the profile section.
    for (const auto& [k, v] : sections[""]) detail::apply_key(cfg, k, v, base_dir);
    if (sections.count(profile))
        for (const auto& [k, v] : sections[profile]) detail::apply_key(cfg, k, v, base_dir);
    cfg.validate();
    return cfg;
}

}  // namespace pvc
