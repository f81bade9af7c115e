#include "slidar/local_model.hpp"

#include "slidar/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slidar {

namespace {

void admissible_ids(const AdmissibleSet &set, const Vocab &vocab, std::vector<int> &out) {
    out.clear();
    if (set.eos) out.push_back(vocab.id_of(SotToken::eos()));
    if (set.nospeech) out.push_back(vocab.id_of(SotToken::nospeech()));
    if (set.trunc) out.push_back(vocab.id_of(SotToken::trunc()));
    if (set.prompt) {
        out.push_back(vocab.id_of({TokenKind::PromptOd, 0}));
        out.push_back(vocab.id_of({TokenKind::PromptVanillaAsr, 0}));
        out.push_back(vocab.id_of({TokenKind::PromptPrev, 0}));
    }
    for (int k = 0; k <= set.max_speaker_tag; ++k) {
        if (k < static_cast<int>(set.closed_tags.size()) && set.closed_tags[k]) continue;
        out.push_back(vocab.id_of(SotToken::speaker(k)));
    }
    if (set.time_min >= 0)
        for (int idx = set.time_min; idx <= set.time_max; ++idx)
            out.push_back(vocab.id_of(SotToken::time(idx)));
    if (set.subword)
        for (int s = 0; s < static_cast<int>(vocab.config().lexicon.size()); ++s)
            out.push_back(vocab.id_of(SotToken::subword(s)));
}

struct Hypothesis {
    SotSequence tokens;
    GrammarState state;
    double score = 0.0;
};

} // namespace

SotSequence decode_window(ModelInterface &model, const WindowHandle &window,
                          const SotSequence &prompt, const BeamConfig &cfg) {
    if (cfg.beam_size < 1) throw std::invalid_argument("beam size must be >= 1");
    const Vocab &vocab = model.vocab();

    std::vector<Hypothesis> live;
    live.push_back({{}, GrammarState(vocab), 0.0});
    std::vector<Hypothesis> finished;

    struct Candidate {
        size_t parent;
        int token_id;
        double score;
    };
    std::vector<Candidate> candidates;
    std::vector<int> ids;

    const int eos_id = vocab.id_of(SotToken::eos());
    for (int step = 0; step < cfg.max_tokens && !live.empty(); ++step) {
        candidates.clear();
        for (size_t b = 0; b < live.size(); ++b) {
            std::vector<double> lp = model.score_step(window, prompt, live[b].tokens);
            admissible_ids(live[b].state.admissible(), vocab, ids);
            for (int id : ids) candidates.push_back({b, id, live[b].score + lp[id]});
        }
        size_t keep = std::min<size_t>(cfg.beam_size, candidates.size());
        std::partial_sort(candidates.begin(), candidates.begin() + keep, candidates.end(),
                          [](const Candidate &a, const Candidate &b) {
                              if (a.score != b.score) return a.score > b.score;
                              return std::tie(a.parent, a.token_id) <
                                     std::tie(b.parent, b.token_id);
                          });
        std::vector<Hypothesis> next;
        next.reserve(keep);
        for (size_t c = 0; c < keep; ++c) {
            const Candidate &cand = candidates[c];
            Hypothesis hyp = live[cand.parent];
            SotToken tok = vocab.token_of(cand.token_id);
            hyp.state.advance(tok);
            hyp.tokens.push_back(tok);
            hyp.score = cand.score;
            if (cand.token_id == eos_id)
                finished.push_back(std::move(hyp));
            else
                next.push_back(std::move(hyp));
        }
        live = std::move(next);
        // beams can only lose score; stop once nothing live can beat the best
        // finished hypothesis (exact for alpha == 0)
        if (!finished.empty() && cfg.length_norm_exponent == 0.0) {
            double best = -1e300;
            for (const auto &f : finished) best = std::max(best, f.score);
            bool viable = false;
            for (const auto &h : live) viable = viable || h.score > best;
            if (!viable) break;
        }
    }
    if (finished.empty()) throw std::runtime_error("decode budget exhausted");

    auto normalized = [&](const Hypothesis &h) {
        double len = static_cast<double>(h.tokens.size());
        return h.score / std::pow(len, cfg.length_norm_exponent);
    };
    const Hypothesis *best = &finished.front();
    for (const auto &h : finished)
        if (normalized(h) > normalized(*best)) best = &h;
    return best->tokens;
}

double sot_loss(const std::vector<std::vector<double>> &log_probs, const SotSequence &target,
                const Vocab &vocab) {
    if (log_probs.size() != target.size())
        throw std::invalid_argument("log-prob / target length mismatch");
    double loss = 0.0;
    for (size_t i = 0; i < target.size(); ++i) {
        const auto &row = log_probs[i];
        if (static_cast<int>(row.size()) != vocab.size())
            throw std::invalid_argument("log-prob row has wrong vocabulary size");
        loss -= row[vocab.id_of(target[i])];
    }
    return loss;
}

// ─── Oracle model ────────────────────────────────────────────────────────────

OracleModel::OracleModel(const Vocab &vocab, OracleModelConfig cfg, double frame_step)
    : vocab_(&vocab), cfg_(std::move(cfg)), frame_step_(frame_step) {
    for (const auto &[name, c] : cfg_.centroids)
        if (c.size() != cfg_.centroids.begin()->second.size())
            throw std::invalid_argument("centroid dimension mismatch");
}

namespace {

uint64_t string_hash(const std::string &s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
    return h;
}

int64_t to_ms(double t) { return static_cast<int64_t>(std::llround(t * 1000.0)); }

} // namespace

SotSequence OracleModel::build_noisy_target(const WindowHandle &window, bool od_prompted) const {
    if (!window.timeline) throw std::invalid_argument("oracle needs a timeline handle");
    const double factor = od_prompted ? cfg_.od_noise_factor : 1.0;
    const double p_sub = cfg_.word_substitution_prob * factor;
    const double jitter = cfg_.timestamp_jitter_std * factor;

    SotTarget base =
        build_sot_target(*window.timeline, window.window.onset, window.window.length, *vocab_);
    if (p_sub <= 0.0 && jitter <= 0.0) return base.tokens;

    // Re-serialize the annotation with keyed noise, keeping every emission
    // admissible (timestamps clamped to the grammar's monotonicity bounds).
    const auto &lex = vocab_->config().lexicon;
    SotSequence out;
    std::vector<int> tag_last_offset(vocab_->num_speaker_tags(), 0);
    int last_explicit_onset = 0;
    for (const auto &entry : base.annotation.entries) {
        out.push_back(SotToken::speaker(entry.local_tag));
        const uint64_t entry_key = hash_combine(
            hash_combine(cfg_.seed, string_hash(entry.global_speaker.value_or(""))),
            static_cast<uint64_t>(to_ms(entry.onset_truncated() ? -1.0 : entry.onset)));

        int onset_floor = std::max(tag_last_offset[entry.local_tag], last_explicit_onset);
        int onset_idx = -1;
        if (entry.onset_truncated()) {
            out.push_back(SotToken::trunc());
        } else {
            onset_idx = quantize_time(entry.onset, window.window.onset, *vocab_);
            if (jitter > 0.0) {
                double j = keyed_normal(hash_combine(entry_key, 1)) * jitter;
                onset_idx += static_cast<int>(
                    std::llround(j / vocab_->config().time_resolution));
            }
            onset_idx = std::clamp(onset_idx, onset_floor, vocab_->max_time_index());
            out.push_back(SotToken::time(onset_idx));
            last_explicit_onset = onset_idx;
        }

        for (size_t w = 0; w < entry.words.size(); ++w) {
            std::string word = entry.words[w];
            if (p_sub > 0.0) {
                uint64_t word_key = hash_combine(entry_key, 1000 + w);
                if (keyed_uniform(word_key) < p_sub) {
                    // swap for a random word-initial lexicon entry
                    size_t pick = hash_mix(word_key ^ 0x517cc1b727220a95ULL) % lex.size();
                    while (lex[pick].rfind("##", 0) == 0) pick = (pick + 1) % lex.size();
                    word = lex[pick];
                }
            }
            for (int piece : vocab_->encode_word(word)) out.push_back(SotToken::subword(piece));
        }

        if (entry.offset_truncated()) {
            out.push_back(SotToken::trunc());
            tag_last_offset[entry.local_tag] = vocab_->max_time_index();
        } else {
            int offset_idx = quantize_time(entry.offset, window.window.onset, *vocab_);
            if (jitter > 0.0) {
                double j = keyed_normal(hash_combine(entry_key, 2)) * jitter;
                offset_idx += static_cast<int>(
                    std::llround(j / vocab_->config().time_resolution));
            }
            offset_idx = std::clamp(offset_idx, std::max(onset_idx, 0), vocab_->max_time_index());
            out.push_back(SotToken::time(offset_idx));
            tag_last_offset[entry.local_tag] = offset_idx;
        }
    }
    if (out.empty()) out.push_back(SotToken::nospeech());
    out.push_back(SotToken::eos());
    return out;
}

const SotSequence &OracleModel::target_for(const WindowHandle &window, bool od_prompted) {
    CacheKey key{to_ms(window.window.onset), to_ms(window.window.length), od_prompted};
    auto it = cache_.find(key);
    if (it == cache_.end())
        it = cache_.emplace(key, build_noisy_target(window, od_prompted)).first;
    return it->second;
}

std::vector<double> OracleModel::score_step(const WindowHandle &window,
                                            const SotSequence &prompt,
                                            const SotSequence &prefix) {
    bool od = std::any_of(prompt.begin(), prompt.end(),
                          [](const SotToken &t) { return t.kind == TokenKind::PromptOd; });
    const SotSequence &target = target_for(window, od);

    int peak = vocab_->id_of(SotToken::eos());
    if (prefix.size() < target.size() &&
        std::equal(prefix.begin(), prefix.end(), target.begin()))
        peak = vocab_->id_of(target[prefix.size()]);

    const int V = vocab_->size();
    const double eps = 1e-6;
    const double off = std::log(eps / static_cast<double>(V - 1));
    std::vector<double> lp(V, off);
    lp[peak] = std::log1p(-eps);
    return lp;
}

std::vector<Vec> OracleModel::frame_embeddings(const WindowHandle &window) {
    if (!window.timeline) throw std::invalid_argument("oracle needs a timeline handle");
    const size_t dim = cfg_.centroids.empty() ? 0 : cfg_.centroids.begin()->second.size();
    const int frames =
        static_cast<int>(std::ceil(window.window.length / frame_step_ - 1e-9));

    // utterances overlapping the window, with centroid lookup resolved once
    struct Span {
        double onset, offset;
        const Vec *centroid;
    };
    std::vector<Span> spans;
    for (const auto &utt : window.timeline->utterances) {
        if (utt.offset() <= window.window.onset || utt.onset() >= window.window.end()) continue;
        auto it = cfg_.centroids.find(utt.speaker);
        if (it == cfg_.centroids.end())
            throw std::runtime_error("no centroid for speaker: " + utt.speaker);
        spans.push_back({utt.onset(), utt.offset(), &it->second});
    }

    std::vector<Vec> out(frames, Vec(dim, 0.0));
    for (int f = 0; f < frames; ++f) {
        double t = window.window.onset + f * frame_step_;
        Vec &h = out[f];
        int active = 0;
        for (const auto &s : spans) {
            if (t >= s.onset && t < s.offset) {
                ++active;
                for (size_t d = 0; d < dim; ++d) h[d] += (*s.centroid)[d];
            }
        }
        if (active > 1)
            for (double &v : h) v /= static_cast<double>(active);
        if (cfg_.embedding_noise_std > 0.0) {
            // keyed by absolute frame index so overlapping windows agree
            uint64_t fkey = hash_combine(cfg_.seed ^ 0x9d8a7b6c5d4e3f2aULL,
                                         static_cast<uint64_t>(
                                             std::llround(t / frame_step_)));
            for (size_t d = 0; d < dim; ++d)
                h[d] += cfg_.embedding_noise_std * keyed_normal(hash_combine(fkey, d));
        }
    }
    return out;
}

} // namespace slidar
