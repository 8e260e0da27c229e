// pvcodec: command-line front end for the phonological vocoder.
//
//   pvcodec gencorpus --out corpus/ [--utterances N] [--seed S] [--config ...]
//   pvcodec train     --manifest corpus/manifest.tsv [--out models/] [...]
//   pvcodec encode    in.wav out.pvc [--config ...] [--profile gp16]
//   pvcodec decode    in.pvc out.wav [...]
//   pvcodec report    --ref ref.wav --test test.wav [--stream s.pvc] [...]
//
// Exit codes: 0 ok, 1 config, 2 input signal, 3 stream integrity, 4 training.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pvc/pvc.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string profile;
    int64_t seed = -1;
    int jobs = 1;
};

pvc::CodecConfig resolve_config(const CommonOpts& opts) {
    pvc::CodecConfig cfg;
    if (!opts.config_path.empty())
        cfg = pvc::load_config(opts.config_path, opts.profile);
    else if (!opts.profile.empty())
        cfg = pvc::builtin_profile(opts.profile);
    else
        cfg = pvc::builtin_profile("gp16");
    if (opts.seed >= 0) cfg.seed = static_cast<uint64_t>(opts.seed);
    cfg.jobs = std::max(1, opts.jobs);
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Config file (TOML-like, profile sections)");
    cmd->add_option("--profile", opts.profile, "Profile name (gp10/gp16/gp20/spe16/espe16)");
    cmd->add_option("--seed", opts.seed, "RNG seed override");
    cmd->add_option("--jobs", opts.jobs, "Worker pool size")->default_val(1);
}

void print_bitrate_table(const pvc::BitRateReport& r) {
    std::printf("%-18s %8s\n", "parameter", "bit/s");
    std::printf("%-18s %8.1f\n", "code", r.code_bps);
    std::printf("%-18s %8.1f\n", "code duration", r.code_duration_bps);
    std::printf("%-18s %8.1f\n", "f0 mean", r.f0_mean_bps);
    std::printf("%-18s %8.1f\n", "f0 slope", r.f0_slope_bps);
    std::printf("%-18s %8.1f\n", "syllable duration", r.syllable_duration_bps);
    std::printf("%-18s %8.1f\n", "total", r.total_bps);
    std::printf("(%.2f blocks/s, %.2f syllables/s)\n", r.blocks_per_s, r.syllables_per_s);
}

int cmd_gencorpus(const CommonOpts& common, const std::string& out_dir, int n_utterances,
                  double syllable_rate, int n_syllables) {
    auto cfg = resolve_config(common);
    fs::create_directories(out_dir);
    pvc::Rng rng(cfg.seed);
    pvc::ToyCorpusConfig tc;
    tc.syllable_rate_hz = syllable_rate;
    tc.n_syllables = n_syllables;
    std::vector<pvc::ManifestEntry> entries;
    for (int i = 0; i < n_utterances; ++i) {
        auto utt = pvc::generate_toy_utterance(rng, tc);
        auto labels = pvc::toy_labels_for_grid(utt, cfg.grid(), cfg.scheme,
                                               cfg.effective_class_names());
        char stem[32];
        std::snprintf(stem, sizeof stem, "utt_%03d", i);
        pvc::ManifestEntry e;
        e.wav_path = out_dir + "/" + stem + ".wav";
        e.labels_path = out_dir + "/" + stem + ".labels";
        e.boundaries_path = out_dir + "/" + stem + ".bounds";
        pvc::write_wav(e.wav_path, utt.clip);
        pvc::write_labels_file(e.labels_path, labels, cfg.scheme, cfg.frame_shift_ms);
        pvc::write_boundaries_file(e.boundaries_path, utt.boundaries_ms);
        entries.push_back(std::move(e));
    }
    pvc::write_manifest(out_dir + "/manifest.tsv", entries);
    std::printf("wrote %d utterances to %s (scheme %s, %d ms shift)\n", n_utterances,
                out_dir.c_str(), pvc::scheme_name(cfg.scheme).c_str(), cfg.frame_shift_ms);
    return 0;
}

int cmd_train(const CommonOpts& common, const std::string& manifest_path,
              const std::string& out_dir) {
    auto cfg = resolve_config(common);
    if (!out_dir.empty()) cfg.model_dir = out_dir;
    auto entries = pvc::read_manifest(manifest_path);
    if (entries.empty()) throw pvc::EmptyCorpus("manifest lists no utterances");

    std::vector<pvc::TrainingItem> corpus;
    for (const auto& e : entries) {
        pvc::TrainingItem item;
        item.clip = pvc::to_canonical_rate(pvc::read_wav(e.wav_path));
        item.labels = pvc::read_labels_file(e.labels_path);
        item.boundaries_ms = pvc::read_boundaries_file(e.boundaries_path);
        corpus.push_back(std::move(item));
    }

    nlohmann::json log;
    auto artifacts = pvc::train_pipeline(corpus, cfg, &log);
    pvc::save_artifacts(artifacts, cfg);
    std::ofstream lf(cfg.training_log_path());
    lf << log.dump(2) << "\n";
    std::printf("trained %zu analyzers + synthesis net + snn; codebook size %zu "
                "(%d index bits); artifacts in %s\n",
                artifacts.bank.nets.size(), artifacts.segmental_cb.size(),
                artifacts.segmental_cb.index_bits(), cfg.model_dir.c_str());
    return 0;
}

int cmd_encode(const CommonOpts& common, const std::string& in_wav, const std::string& out_pvc) {
    auto cfg = resolve_config(common);
    auto artifacts = pvc::load_artifacts(cfg);
    auto clip = pvc::read_wav(in_wav);
    auto res = pvc::encode_utterance(artifacts, cfg, clip);
    pvc::write_bitstream_file(out_pvc, res.bytes);
    std::printf("%s: %zu frames -> %zu blocks, %zu syllables, %zu bytes\n", out_pvc.c_str(),
                static_cast<size_t>(res.header.frame_count), res.blocks.size(),
                res.codes.size(), res.bytes.size());
    print_bitrate_table(res.bitrate);
    return 0;
}

int cmd_decode(const CommonOpts& common, const std::string& in_pvc, const std::string& out_wav) {
    auto cfg = resolve_config(common);
    auto artifacts = pvc::load_artifacts(cfg);
    auto bytes = pvc::read_bitstream_file(in_pvc);
    auto clip = pvc::decode_stream(artifacts, bytes, cfg.seed);
    pvc::write_wav(out_wav, clip);
    std::printf("%s: %.3f s of audio\n", out_wav.c_str(), clip.duration_s());
    return 0;
}

int cmd_report(const CommonOpts& common, const std::string& ref_path,
               const std::string& test_path, const std::string& stream_path,
               const std::string& json_path) {
    auto cfg = resolve_config(common);
    auto ref = pvc::read_wav(ref_path);
    auto test = pvc::read_wav(test_path);

    pvc::QualityReport q;
    q.mcd_db = pvc::mcd(ref, test);
    q.stoi_score = pvc::stoi(ref, test);
    if (!stream_path.empty()) {
        auto stream = pvc::unpack(pvc::read_bitstream_file(stream_path));
        double dur = pvc::to_canonical_rate(ref).duration_s();
        q.bitrate = pvc::measure_bitrate(stream.blocks, stream.codes, dur,
                                         stream.header.index_bits);
        q.has_bitrate = true;
        if (!stream.codes.empty()) {
            q.mean_syllable_ms = pvc::latency_report(stream.codes);
            q.has_latency = true;
        }
    }

    std::printf("%-18s %8.3f\n", "mcd [dB]", q.mcd_db);
    std::printf("%-18s %8.3f\n", "stoi", q.stoi_score);
    if (q.has_latency) std::printf("%-18s %8.1f\n", "mean syllable [ms]", q.mean_syllable_ms);
    if (q.has_bitrate) print_bitrate_table(q.bitrate);
    if (!json_path.empty()) {
        std::ofstream jf(json_path);
        if (!jf) throw pvc::ConfigError("cannot write " + json_path);
        jf << pvc::quality_report_to_json(q).dump(2) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pvcodec: very low bit rate phonological speech codec"};
    app.require_subcommand(1);

    CommonOpts common;

    auto* gen = app.add_subcommand("gencorpus", "Generate the synthetic CV-syllable corpus");
    std::string gen_out = "corpus";
    int gen_n = 10, gen_syllables = 8;
    double gen_rate = 4.0;
    add_common(gen, common);
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--utterances", gen_n, "Utterance count")->default_val(10);
    gen->add_option("--syllable-rate", gen_rate, "Syllables per second")->default_val(4.0);
    gen->add_option("--syllables", gen_syllables, "Syllables per utterance")->default_val(8);

    auto* train = app.add_subcommand("train", "Train all model artifacts from a manifest");
    std::string train_manifest, train_out;
    add_common(train, common);
    train->add_option("--manifest", train_manifest, "wav<TAB>labels<TAB>boundaries lines")
        ->required();
    train->add_option("--out", train_out, "Artifact directory (defaults to the profile's)");

    auto* enc = app.add_subcommand("encode", "Encode a WAV file to a .pvc stream");
    std::string enc_in, enc_out;
    add_common(enc, common);
    enc->add_option("input", enc_in, "Input WAV")->required();
    enc->add_option("output", enc_out, "Output .pvc")->required();

    auto* dec = app.add_subcommand("decode", "Decode a .pvc stream to a WAV file");
    std::string dec_in, dec_out;
    add_common(dec, common);
    dec->add_option("input", dec_in, "Input .pvc")->required();
    dec->add_option("output", dec_out, "Output WAV")->required();

    auto* rep = app.add_subcommand("report", "Objective quality and bit-rate report");
    std::string rep_ref, rep_test, rep_stream, rep_json;
    add_common(rep, common);
    rep->add_option("--ref", rep_ref, "Reference WAV")->required();
    rep->add_option("--test", rep_test, "Test WAV")->required();
    rep->add_option("--stream", rep_stream, "Matching .pvc stream for bit-rate rows");
    rep->add_option("--json", rep_json, "Also write the report as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gencorpus(common, gen_out, gen_n, gen_rate, gen_syllables);
        if (train->parsed()) return cmd_train(common, train_manifest, train_out);
        if (enc->parsed()) return cmd_encode(common, enc_in, enc_out);
        if (dec->parsed()) return cmd_decode(common, dec_in, dec_out);
        if (rep->parsed()) return cmd_report(common, rep_ref, rep_test, rep_stream, rep_json);
    } catch (const pvc::Error& e) {
        std::cerr << "pvcodec: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "pvcodec: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
