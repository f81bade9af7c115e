// slidar: simulate meetings, decode them with the oracle model, and score.
#include "slidar/io.hpp"
#include "slidar/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace slidar;

namespace {

constexpr const char *kVersion = "0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One layered configuration document: file values first, flag overrides on
// top. Unset optionals keep the file (or default) value.
struct CliConfig {
    json doc = json::object();

    void load_file(const std::string &path) {
        json file;
        try {
            file = json::parse(read_file(path));
        } catch (const json::exception &e) {
            throw ConfigError(std::string("bad config file: ") + e.what());
        }
        file.update(doc); // flags already staged in doc win
        doc = std::move(file);
    }

    template <typename T> T get(const std::string &key, T fallback) const {
        if (!doc.contains(key)) return fallback;
        try {
            return doc.at(key).get<T>();
        } catch (const json::exception &) {
            throw ConfigError("config key '" + key + "' has the wrong type");
        }
    }
    template <typename T> void set(const std::string &key, const T &v) { doc[key] = v; }
};

MeetingSpec meeting_spec_from(const CliConfig &cfg) {
    MeetingSpec spec;
    spec.recording_id = cfg.get<std::string>("recording_id", spec.recording_id);
    spec.num_speakers = cfg.get<int>("speakers", spec.num_speakers);
    spec.duration = cfg.get<double>("duration", spec.duration);
    spec.mean_utterance_length = cfg.get<double>("mean_utterance", spec.mean_utterance_length);
    spec.max_utterance_length = cfg.get<double>("max_utterance", spec.max_utterance_length);
    spec.mean_pause_length = cfg.get<double>("mean_pause", spec.mean_pause_length);
    spec.overlap_probability = cfg.get<double>("overlap_probability", spec.overlap_probability);
    spec.words_per_second = cfg.get<double>("words_per_second", spec.words_per_second);
    spec.embedding_dim = cfg.get<int>("embedding_dim", spec.embedding_dim);
    spec.seed = cfg.get<uint64_t>("seed", spec.seed);
    return spec;
}

PipelineConfig pipeline_config_from(const CliConfig &cfg,
                                    const std::vector<std::string> &lexicon) {
    PipelineConfig pc;
    pc.vocab.lexicon = lexicon;
    pc.vocab.time_resolution = cfg.get<double>("time_resolution", pc.vocab.time_resolution);
    pc.vocab.max_window = cfg.get<double>("max_window", pc.vocab.max_window);
    pc.vocab.max_local_speakers =
        cfg.get<int>("max_local_speakers", pc.vocab.max_local_speakers);
    pc.beam.beam_size = cfg.get<int>("beam_size", pc.beam.beam_size);
    pc.beam.max_tokens = cfg.get<int>("max_tokens", pc.beam.max_tokens);
    pc.beam.length_norm_exponent =
        cfg.get<double>("length_norm", pc.beam.length_norm_exponent);
    pc.clustering.distance_threshold =
        cfg.get<double>("cluster_threshold", pc.clustering.distance_threshold);
    pc.clustering.target_clusters =
        cfg.get<int>("target_clusters", pc.clustering.target_clusters);
    pc.clustering.min_constraint_overlap =
        cfg.get<double>("min_constraint_overlap", pc.clustering.min_constraint_overlap);
    if (cfg.get<std::string>("linkage", "average") == "complete")
        pc.clustering.linkage = Linkage::Complete;
    pc.window_length = cfg.get<double>("window_length", pc.window_length);
    pc.frame_step = cfg.get<double>("frame_step", pc.frame_step);
    pc.od_prompt = cfg.get<bool>("od_prompt", pc.od_prompt);
    return pc;
}

OracleModelConfig oracle_config_from(const CliConfig &cfg, const Meeting &meeting) {
    OracleModelConfig oc;
    oc.word_substitution_prob = cfg.get<double>("word_noise", oc.word_substitution_prob);
    oc.timestamp_jitter_std = cfg.get<double>("time_jitter", oc.timestamp_jitter_std);
    oc.embedding_noise_std = cfg.get<double>("embedding_noise", oc.embedding_noise_std);
    oc.od_noise_factor = cfg.get<double>("od_noise_factor", oc.od_noise_factor);
    oc.seed = cfg.get<uint64_t>("model_seed", cfg.get<uint64_t>("seed", 0));
    oc.centroids = meeting.centroids;
    return oc;
}

RecordingTimeline load_reference(const std::string &path) {
    std::string text = read_file(path);
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".rttm") {
        std::istringstream in(text);
        return read_rttm(in);
    }
    // accept either a bare timeline or a full meeting document
    json doc = json::parse(text);
    if (doc.contains("timeline")) return meeting_from_json(text).timeline;
    return timeline_from_json(text);
}

void write_text(const fs::path &path, const std::string &content) {
    write_file(path.string(), content);
}

std::string config_hash(const json &doc) {
    std::ostringstream ss;
    ss << std::hex << std::hash<std::string>{}(doc.dump());
    return ss.str();
}

void write_manifest(const fs::path &dir, const CliConfig &cfg) {
    json manifest = {{"version", kVersion},
                     {"config", cfg.doc},
                     {"config_hash", config_hash(cfg.doc)},
                     {"seed", cfg.get<uint64_t>("seed", 0)}};
    write_text(dir / "manifest.json", manifest.dump(2));
}

struct RunArtifacts {
    bool plan = false;
    bool tokens = false;
    bool embeddings = false;
    bool transcript = false;
    bool score = false;
};

int run_meeting(const std::string &meeting_path, const std::string &out_dir,
                CliConfig &cfg, const RunArtifacts &want) {
    Meeting meeting = meeting_from_json(read_file(meeting_path));
    PipelineConfig pc = pipeline_config_from(cfg, meeting.lexicon);
    OracleModelConfig oc = oracle_config_from(cfg, meeting);
    Vocab vocab(pc.vocab);
    OracleModel model(vocab, oc, pc.frame_step);

    PipelineOutput out = run_pipeline(meeting.timeline, model, pc, &meeting.timeline);

    fs::path dir(out_dir);
    fs::create_directories(dir);
    write_manifest(dir, cfg);

    if (want.plan) {
        std::ostringstream ss;
        write_plan(ss, out.plan);
        write_text(dir / "plan.txt", ss.str());
    }
    if (want.tokens) {
        fs::create_directories(dir / "windows");
        for (const auto &w : out.windows) {
            char name[32];
            std::snprintf(name, sizeof name, "%04d.tokens", w.window.index);
            write_text(dir / "windows" / name, vocab.to_string(w.tokens) + "\n");
        }
    }
    if (want.embeddings) {
        std::vector<LocalSpeakerEmbedding> all;
        std::ostringstream mapping;
        for (const auto &w : out.windows) {
            all.insert(all.end(), w.embeddings.begin(), w.embeddings.end());
            for (const auto &e : w.annotation.entries)
                mapping << w.window.index << ' ' << e.local_tag << ' ' << e.global_id << '\n';
        }
        std::ofstream bin(dir / "embeddings.bin", std::ios::binary);
        write_embeddings(bin, all);
        write_text(dir / "mapping.txt", mapping.str());
    }
    if (want.transcript) {
        RecordingTimeline hyp = out.transcript.to_timeline();
        std::ostringstream rttm, ctm;
        write_rttm(rttm, hyp);
        write_ctm(ctm, hyp);
        write_text(dir / "hyp.rttm", rttm.str());
        write_text(dir / "hyp.ctm", ctm.str());
        write_text(dir / "hyp.json", timeline_to_json(hyp));
    }
    if (want.score && out.der && out.cpwer) {
        json score = {{"der", json::parse(der_report_to_json(*out.der))},
                      {"cpwer", json::parse(cpwer_report_to_json(*out.cpwer))}};
        write_text(dir / "score.json", score.dump(2));
        std::cout << "DER " << out.der->der << "%  cpWER " << out.cpwer->cpwer << "%\n";
    }
    std::cout << "windows " << out.plan.windows.size() << "  speakers "
              << out.clustering.num_clusters << "  utterances "
              << out.transcript.utterances.size() << "\n";
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"SLIDAR sliding-window diarization + transcription"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    CliConfig cfg;
    std::string config_path;
    app.add_option("--config", config_path, "layered JSON config file")->check(CLI::ExistingFile);

    // staged overrides (applied on top of the config file)
    auto dopt = [&](CLI::App *cmd, const std::string &flag, const std::string &key,
                    const std::string &help) {
        cmd->add_option_function<double>(
            "--" + flag, [&cfg, key](double v) { cfg.set(key, v); }, help);
    };
    auto iopt = [&](CLI::App *cmd, const std::string &flag, const std::string &key,
                    const std::string &help) {
        cmd->add_option_function<int64_t>(
            "--" + flag, [&cfg, key](int64_t v) { cfg.set(key, v); }, help);
    };

    // simulate
    auto *sim = app.add_subcommand("simulate", "generate a synthetic meeting");
    std::string sim_out = "meeting.json";
    sim->add_option("--out", sim_out, "output meeting JSON");
    iopt(sim, "seed", "seed", "rng seed");
    iopt(sim, "speakers", "speakers", "number of speakers");
    dopt(sim, "duration", "duration", "meeting length, seconds");
    dopt(sim, "overlap", "overlap_probability", "overlap probability");
    dopt(sim, "mean-utterance", "mean_utterance", "mean utterance length");
    dopt(sim, "mean-pause", "mean_pause", "mean pause length");

    // shared decode flags
    std::string meeting_path, out_dir = "run";
    bool two_pass = false;
    auto add_decode_flags = [&](CLI::App *cmd) {
        cmd->add_option("--meeting", meeting_path, "meeting JSON")->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", out_dir, "run directory");
        iopt(cmd, "seed", "seed", "rng / model seed");
        iopt(cmd, "beam", "beam_size", "beam size");
        dopt(cmd, "window", "window_length", "window length, seconds");
        dopt(cmd, "word-noise", "word_noise", "oracle word substitution prob");
        dopt(cmd, "time-jitter", "time_jitter", "oracle timestamp jitter std");
        dopt(cmd, "embedding-noise", "embedding_noise", "oracle embedding noise std");
        dopt(cmd, "cluster-threshold", "cluster_threshold", "AHC distance threshold");
        cmd->add_flag_function(
            "--od-prompt", [&cfg](int64_t) { cfg.set("od_prompt", true); },
            "condition decoding on oracle diarization");
    };

    auto *plan = app.add_subcommand("plan", "window plan only");
    add_decode_flags(plan);
    auto *decode = app.add_subcommand("decode", "per-window token dumps");
    add_decode_flags(decode);
    auto *cluster = app.add_subcommand("cluster", "embeddings and global speaker mapping");
    add_decode_flags(cluster);
    auto *run = app.add_subcommand("run", "full pipeline with scoring");
    add_decode_flags(run);
    run->add_flag("--two-pass", two_pass, "second decoding pass with <|prev|> context");

    // score
    auto *score = app.add_subcommand("score", "DER + cpWER of hypothesis vs reference");
    std::string ref_path, hyp_path, score_out;
    score->add_option("--ref", ref_path, "reference (.json or .rttm)")->required();
    score->add_option("--hyp", hyp_path, "hypothesis (.json or .rttm)")->required();
    score->add_option("--out", score_out, "optional score.json path");

    // tokens
    auto *tokens = app.add_subcommand("tokens", "serialize / parse one window");
    std::string tok_parse;
    double tok_onset = 0.0, tok_length = 20.0;
    tokens->add_option("--meeting", meeting_path, "meeting JSON")->required()
        ->check(CLI::ExistingFile);
    tokens->add_option("--onset", tok_onset, "window onset, seconds");
    tokens->add_option("--length", tok_length, "window length, seconds");
    tokens->add_option("--parse", tok_parse, "token string to parse back");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2; // bad flags and missing files are config errors
    }

    try {
        if (!config_path.empty()) cfg.load_file(config_path);

        if (sim->parsed()) {
            MeetingSpec spec = meeting_spec_from(cfg);
            Meeting meeting = simulate(spec);
            write_file(sim_out, meeting_to_json(meeting));
            std::cout << sim_out << ": " << meeting.timeline.utterances.size()
                      << " utterances, " << meeting.timeline.speakers().size()
                      << " speakers\n";
            return 0;
        }
        if (plan->parsed())
            return run_meeting(meeting_path, out_dir, cfg, {.plan = true});
        if (decode->parsed())
            return run_meeting(meeting_path, out_dir, cfg, {.plan = true, .tokens = true});
        if (cluster->parsed())
            return run_meeting(meeting_path, out_dir, cfg,
                               {.plan = true, .tokens = true, .embeddings = true});
        if (run->parsed()) {
            if (two_pass) throw ConfigError("--two-pass is not implemented");
            return run_meeting(meeting_path, out_dir, cfg,
                               {.plan = true, .tokens = true, .embeddings = true,
                                .transcript = true, .score = true});
        }
        if (score->parsed()) {
            RecordingTimeline ref = load_reference(ref_path);
            RecordingTimeline hyp = load_reference(hyp_path);
            DerReport d = der(ref, hyp);
            CpWerReport c = cpwer(ref, hyp);
            json doc = {{"der", json::parse(der_report_to_json(d))},
                        {"cpwer", json::parse(cpwer_report_to_json(c))}};
            if (!score_out.empty()) write_file(score_out, doc.dump(2));
            std::cout << doc.dump(2) << "\n";
            return 0;
        }
        if (tokens->parsed()) {
            Meeting meeting = meeting_from_json(read_file(meeting_path));
            PipelineConfig pc = pipeline_config_from(cfg, meeting.lexicon);
            Vocab vocab(pc.vocab);
            if (!tok_parse.empty()) {
                SotSequence seq = vocab.from_string(tok_parse);
                WindowAnnotation ann = parse_sot(seq, tok_onset, tok_length, vocab);
                for (const auto &e : ann.entries) {
                    std::cout << "spk" << e.local_tag << " ["
                              << (e.onset_truncated() ? std::string("<trunc>")
                                                      : std::to_string(e.onset))
                              << ", "
                              << (e.offset_truncated() ? std::string("<trunc>")
                                                       : std::to_string(e.offset))
                              << ")";
                    for (const auto &w : e.words) std::cout << ' ' << w;
                    std::cout << "\n";
                }
            } else {
                SotTarget target =
                    build_sot_target(meeting.timeline, tok_onset, tok_length, vocab);
                std::cout << vocab.to_string(target.tokens) << "\n";
            }
            return 0;
        }
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
