// End-to-end wiring: desk-scale training of the analyzer bank, synthesis net,
// SNN detector and both codebooks; utterance encode to a packed stream; and
// stream decode back to audio. The CLI and the acceptance suite both drive
// these entry points.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pvc/analyzers.hpp"
#include "pvc/audio.hpp"
#include "pvc/bitstream.hpp"
#include "pvc/config.hpp"
#include "pvc/corpus.hpp"
#include "pvc/errors.hpp"
#include "pvc/metrics.hpp"
#include "pvc/mfcc.hpp"
#include "pvc/mlp.hpp"
#include "pvc/pitch.hpp"
#include "pvc/prosody.hpp"
#include "pvc/segcodec.hpp"
#include "pvc/snn.hpp"
#include "pvc/synthesis.hpp"

namespace pvc {

constexpr int kAnalyzerContext = 9;
constexpr int kSynthesisContext = 11;

struct Artifacts {
    AnalyzerBank bank;
    MlpWeights synthesis_net;
    SegmentalCodebook segmental_cb;
    ProsodicCodebook prosodic_cb;
    SnnParams snn;
};

struct TrainingItem {
    AudioClip clip;  // 16 kHz
    std::vector<BinaryFrame> labels;
    BoundarySet boundaries_ms;
};

namespace detail {

struct UtteranceFeatures {
    AcousticFeatures mfcc;
    std::vector<std::vector<double>> stacked9;  // analyzer inputs
    F0Track f0;
    bool has_f0 = false;
};

inline UtteranceFeatures analysis_features(const AudioClip& clip, const CodecConfig& cfg) {
    UtteranceFeatures out;
    auto grid = cfg.grid();
    auto frames = frame_signal(clip, grid);
    out.mfcc = compute_mfcc(frames);
    out.stacked9 = stack_context(out.mfcc.full, kAnalyzerContext);
    try {
        out.f0 = extract_continuous_f0(clip, grid, cfg.pitch());
        out.has_f0 = true;
    } catch (const NoVoicedSpeech&) {
        out.has_f0 = false;
    }
    return out;
}

inline std::vector<std::vector<double>> posteriors_to_rows(
    const std::vector<PosteriorFrame>& posts) {
    std::vector<std::vector<double>> rows(posts.size());
    for (size_t t = 0; t < posts.size(); ++t) rows[t] = posts[t].values;
    return rows;
}

inline std::vector<std::vector<double>> binary_to_rows(const std::vector<BinaryFrame>& frames) {
    std::vector<std::vector<double>> rows(frames.size());
    for (size_t t = 0; t < frames.size(); ++t) {
        rows[t].resize(frames[t].size());
        for (size_t k = 0; k < frames[t].size(); ++k)
            rows[t][k] = frames[t][k] ? 1.0 : 0.0;
    }
    return rows;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Training

inline Artifacts train_pipeline(const std::vector<TrainingItem>& corpus,
                                const CodecConfig& cfg, nlohmann::json* log_out = nullptr) {
    if (corpus.empty()) throw EmptyCorpus("training manifest is empty");
    cfg.validate();
    auto grid = cfg.grid();
    auto class_names = cfg.effective_class_names();
    int K = static_cast<int>(class_names.size());

    // Per-utterance features, in parallel but stored by index.
    std::vector<detail::UtteranceFeatures> feats(corpus.size());
    parallel_for(corpus.size(), cfg.jobs, [&](size_t i) {
        feats[i] = detail::analysis_features(corpus[i].clip, cfg);
    });

    // Flatten analyzer training pairs, clamping label rows to the frame count.
    std::vector<std::vector<double>> all_inputs;
    std::vector<BinaryFrame> all_labels;
    for (size_t i = 0; i < corpus.size(); ++i) {
        size_t n = std::min(feats[i].stacked9.size(), corpus[i].labels.size());
        for (size_t t = 0; t < n; ++t) {
            if (static_cast<int>(corpus[i].labels[t].size()) != K)
                throw DimensionError("label width does not match the class count");
            all_inputs.push_back(feats[i].stacked9[t]);
            all_labels.push_back(corpus[i].labels[t]);
        }
    }
    if (all_inputs.empty()) throw EmptyCorpus("no labeled frames in the corpus");

    Artifacts art;
    art.bank.scheme = cfg.scheme;
    art.bank.class_names = class_names;
    art.bank.nets.resize(static_cast<size_t>(K));

    int in_dim = static_cast<int>(all_inputs.front().size());
    nlohmann::json train_log;
    std::vector<nlohmann::json> class_logs(static_cast<size_t>(K));

    parallel_for(static_cast<size_t>(K), cfg.jobs, [&](size_t k) {
        std::vector<Sample> data;
        data.reserve(all_inputs.size());
        for (size_t t = 0; t < all_inputs.size(); ++t) {
            std::vector<double> target = all_labels[t][k] ? std::vector<double>{1.0, 0.0}
                                                          : std::vector<double>{0.0, 1.0};
            data.emplace_back(all_inputs[t], std::move(target));
        }
        TrainConfig tc;
        tc.layer_dims.push_back(in_dim);
        for (int h : cfg.analyzer_hidden) tc.layer_dims.push_back(h);
        tc.layer_dims.push_back(2);
        tc.output_kind = OutputKind::Softmax;
        tc.learning_rate = cfg.analyzer_learning_rate;
        tc.batch_size = cfg.batch_size;
        tc.max_epochs = cfg.analyzer_epochs;
        tc.seed = cfg.seed * 1000003u + k;
        TrainLog tl;
        art.bank.nets[k] = train_mlp(data, tc, &tl);
        class_logs[k] = {{"class", class_names[k]},
                         {"epochs", tl.epochs_run},
                         {"cv_loss", tl.cv_loss_per_epoch}};
    });
    train_log["analyzers"] = class_logs;

    // Continuous posteriors over the corpus feed both codebook construction
    // and synthesis training.
    std::vector<std::vector<PosteriorFrame>> posts(corpus.size());
    parallel_for(corpus.size(), cfg.jobs, [&](size_t i) {
        posts[i] = analyze(art.bank, feats[i].stacked9);
    });

    std::vector<BinaryFrame> all_binary;
    for (const auto& up : posts)
        for (const auto& p : up) all_binary.push_back(binarize(p));
    art.segmental_cb = SegmentalCodebook::build(all_binary, cfg.scheme);

    // Synthesis net: stacked continuous posteriors -> 84-dim speech params.
    std::vector<Sample> synth_data;
    for (size_t i = 0; i < corpus.size(); ++i) {
        const F0Track* f0 = feats[i].has_f0 ? &feats[i].f0 : nullptr;
        auto params = extract_speech_params(corpus[i].clip, grid, f0);
        auto stacked = stack_context(detail::posteriors_to_rows(posts[i]), kSynthesisContext);
        size_t n = std::min(stacked.size(), params.size());
        for (size_t t = 0; t < n; ++t) synth_data.emplace_back(stacked[t], params[t]);
    }
    {
        TrainConfig tc;
        tc.layer_dims.push_back(K * kSynthesisContext);
        for (int h : cfg.synth_hidden) tc.layer_dims.push_back(h);
        tc.layer_dims.push_back(kFullParams);
        tc.output_kind = OutputKind::Linear;
        tc.normalize_output = true;
        tc.learning_rate = cfg.synth_learning_rate;
        tc.batch_size = cfg.batch_size;
        tc.max_epochs = cfg.synth_epochs;
        tc.seed = cfg.seed * 7777791u + 13;
        TrainLog tl;
        art.synthesis_net = train_mlp(synth_data, tc, &tl);
        train_log["synthesis"] = {{"epochs", tl.epochs_run}, {"cv_loss", tl.cv_loss_per_epoch}};
    }

    // SNN detector on the 13-dim cepstral statics with reference boundaries.
    std::vector<SnnTrainUtterance> snn_corpus;
    for (size_t i = 0; i < corpus.size(); ++i)
        snn_corpus.push_back({feats[i].mfcc.statics, grid, corpus[i].boundaries_ms});
    SnnParams snn_init;
    double cost_before = snn_corpus_cost(snn_corpus, snn_init);
    art.snn = train_snn(snn_corpus, snn_init, cfg.snn_budget, cfg.seed);
    double cost_after = snn_corpus_cost(snn_corpus, art.snn);
    train_log["snn"] = {{"cost_before", cost_before}, {"cost_after", cost_after}};

    // Prosodic codebooks from reference-boundary stylization of training F0.
    std::vector<DlopCoeffs> all_coeffs;
    for (size_t i = 0; i < corpus.size(); ++i) {
        if (!feats[i].has_f0) continue;
        auto coeffs = stylize_prosody(feats[i].f0, corpus[i].boundaries_ms, grid);
        all_coeffs.insert(all_coeffs.end(), coeffs.begin(), coeffs.end());
    }
    art.prosodic_cb = build_prosodic_codebooks(all_coeffs);

    if (log_out) *log_out = std::move(train_log);
    return art;
}

// ---------------------------------------------------------------------------
// Artifact persistence

inline void save_artifacts(const Artifacts& art, const CodecConfig& cfg) {
    std::filesystem::create_directories(cfg.model_dir);
    auto names = cfg.effective_class_names();
    for (size_t k = 0; k < art.bank.nets.size(); ++k)
        save_weights(cfg.analyzer_path(names[k]), art.bank.nets[k],
                     {{"role", "analyzer"}, {"class", names[k]}, {"scheme", scheme_name(cfg.scheme)}});
    save_weights(cfg.synthesis_net_path(), art.synthesis_net,
                 {{"role", "synthesis"}, {"scheme", scheme_name(cfg.scheme)}});
    art.segmental_cb.save(cfg.segmental_codebook_path());
    save_prosodic_codebook(cfg.prosodic_codebook_path(), art.prosodic_cb);
    save_snn_params(cfg.snn_params_path(), art.snn);
}

inline Artifacts load_artifacts(const CodecConfig& cfg) {
    Artifacts art;
    art.bank.scheme = cfg.scheme;
    art.bank.class_names = cfg.effective_class_names();
    for (const auto& name : art.bank.class_names)
        art.bank.nets.push_back(load_weights(cfg.analyzer_path(name)));
    art.synthesis_net = load_weights(cfg.synthesis_net_path());
    art.segmental_cb = SegmentalCodebook::load(cfg.segmental_codebook_path());
    art.prosodic_cb = load_prosodic_codebook(cfg.prosodic_codebook_path());
    art.snn = load_snn_params(cfg.snn_params_path());
    return art;
}

// ---------------------------------------------------------------------------
// Encode / decode

struct EncodeResult {
    std::vector<uint8_t> bytes;
    std::vector<SegmentalBlock> blocks;
    std::vector<SyllableCode> codes;
    BitstreamHeader header;
    BitRateReport bitrate;
};

inline EncodeResult encode_utterance(const Artifacts& art, const CodecConfig& cfg,
                                     const AudioClip& input) {
    auto clip = to_canonical_rate(input);
    auto grid = cfg.grid();
    auto feats = detail::analysis_features(clip, cfg);
    if (!feats.has_f0) throw NoVoicedSpeech();
    if (feats.stacked9.empty()) throw TooShort("input shorter than one analysis window");

    auto posts = analyze(art.bank, feats.stacked9, cfg.jobs);
    std::vector<BinaryFrame> bits;
    bits.reserve(posts.size());
    for (const auto& p : posts) bits.push_back(binarize(p));

    EncodeResult res;
    res.blocks = encode_segmental(bits, art.segmental_cb);

    auto boundaries = detect_syllables(feats.mfcc.statics, grid, art.snn);
    res.codes = encode_prosody(feats.f0, boundaries, art.prosodic_cb, grid);

    res.header.scheme = cfg.scheme;
    res.header.frame_shift_ms = cfg.frame_shift_ms;
    res.header.index_bits = art.segmental_cb.index_bits();
    res.header.segmental_hash = art.segmental_cb.content_hash();
    res.header.prosodic_hash = art.prosodic_cb.content_hash();
    res.header.frame_count = static_cast<uint32_t>(bits.size());
    res.header.syllable_count = static_cast<uint32_t>(res.codes.size());
    res.bytes = pack(res.blocks, res.codes, res.header);
    res.bitrate = measure_bitrate(res.blocks, res.codes, clip.duration_s(),
                                  res.header.index_bits);
    return res;
}

/// Decode straight from container bytes; the stream header supplies the
/// frame shift. Codebook hashes are verified against the loaded artifacts.
inline AudioClip decode_stream(const Artifacts& art, const std::vector<uint8_t>& bytes,
                               uint64_t vocoder_seed = 0x5eed) {
    auto stream = unpack(bytes);
    verify_codebook_hashes(stream.header, art.segmental_cb, art.prosodic_cb);
    if (!valid_shift_ms(stream.header.frame_shift_ms))
        throw CorruptStream("stream frame shift is not one of 10/16/20 ms");
    FrameGrid grid{kWindowMs, stream.header.frame_shift_ms};

    auto patterns = decode_segmental(stream.blocks, art.segmental_cb);
    auto stacked = stack_context(detail::binary_to_rows(patterns), kSynthesisContext);
    auto params = synth_forward(art.synthesis_net, stacked);

    auto f0 = decode_prosody(stream.codes, art.prosodic_cb, grid,
                             static_cast<int>(patterns.size()));
    if (f0.log_f0.empty()) {
        f0.log_f0.assign(patterns.size(), std::log(120.0));
        f0.voicing_mask.assign(patterns.size(), 0);
    }
    return vocode(params, f0, grid, vocoder_seed);
}

}  // namespace pvc
