#include "slidar/token_grammar.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace slidar {

// ─── Vocab ───────────────────────────────────────────────────────────────────

Vocab::Vocab(VocabConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.time_resolution <= 0.0) throw std::invalid_argument("time_resolution must be positive");
    if (cfg_.max_local_speakers < 1) throw std::invalid_argument("need at least one speaker tag");
    max_time_index_ = static_cast<int>(std::floor(cfg_.max_window / cfg_.time_resolution + 1e-9));
    speaker_base_ = 6; // eos, nospeech, trunc, OD, vanillaASR, prev
    time_base_ = speaker_base_ + cfg_.max_local_speakers;
    subword_base_ = time_base_ + max_time_index_ + 1;
    size_ = subword_base_ + static_cast<int>(cfg_.lexicon.size());
    for (size_t i = 0; i < cfg_.lexicon.size(); ++i) {
        if (cfg_.lexicon[i].empty()) throw std::invalid_argument("empty lexicon piece");
        if (!piece_index_.emplace(cfg_.lexicon[i], static_cast<int>(i)).second)
            throw std::invalid_argument("duplicate lexicon piece: " + cfg_.lexicon[i]);
    }
}

int Vocab::id_of(const SotToken &tok) const {
    switch (tok.kind) {
    case TokenKind::Eos: return 0;
    case TokenKind::NoSpeech: return 1;
    case TokenKind::Trunc: return 2;
    case TokenKind::PromptOd: return 3;
    case TokenKind::PromptVanillaAsr: return 4;
    case TokenKind::PromptPrev: return 5;
    case TokenKind::SpeakerTag:
        if (tok.value < 0 || tok.value >= cfg_.max_local_speakers)
            throw std::out_of_range("speaker tag out of range");
        return speaker_base_ + tok.value;
    case TokenKind::Time:
        if (tok.value < 0 || tok.value > max_time_index_)
            throw std::out_of_range("time index out of range");
        return time_base_ + tok.value;
    case TokenKind::Subword:
        if (tok.value < 0 || tok.value >= static_cast<int>(cfg_.lexicon.size()))
            throw std::out_of_range("subword id out of range");
        return subword_base_ + tok.value;
    }
    throw std::logic_error("unreachable");
}

SotToken Vocab::token_of(int id) const {
    if (id < 0 || id >= size_) throw std::out_of_range("token id out of range");
    switch (id) {
    case 0: return SotToken::eos();
    case 1: return SotToken::nospeech();
    case 2: return SotToken::trunc();
    case 3: return {TokenKind::PromptOd, 0};
    case 4: return {TokenKind::PromptVanillaAsr, 0};
    case 5: return {TokenKind::PromptPrev, 0};
    default: break;
    }
    if (id < time_base_) return SotToken::speaker(id - speaker_base_);
    if (id < subword_base_) return SotToken::time(id - time_base_);
    return SotToken::subword(id - subword_base_);
}

std::string Vocab::token_string(const SotToken &tok) const {
    switch (tok.kind) {
    case TokenKind::Eos: return "<|eos|>";
    case TokenKind::NoSpeech: return "<|nospeech|>";
    case TokenKind::Trunc: return "<|trunc|>";
    case TokenKind::PromptOd: return "<|OD|>";
    case TokenKind::PromptVanillaAsr: return "<|vanillaASR|>";
    case TokenKind::PromptPrev: return "<|prev|>";
    case TokenKind::SpeakerTag: return "<|spk" + std::to_string(tok.value) + "|>";
    case TokenKind::Time: return "<|time" + std::to_string(tok.value) + "|>";
    case TokenKind::Subword: return cfg_.lexicon.at(tok.value);
    }
    throw std::logic_error("unreachable");
}

SotToken Vocab::parse_token(const std::string &text) const {
    if (text.size() > 4 && text.substr(0, 2) == "<|" && text.substr(text.size() - 2) == "|>") {
        std::string body = text.substr(2, text.size() - 4);
        if (body == "eos") return SotToken::eos();
        if (body == "nospeech") return SotToken::nospeech();
        if (body == "trunc") return SotToken::trunc();
        if (body == "OD") return {TokenKind::PromptOd, 0};
        if (body == "vanillaASR") return {TokenKind::PromptVanillaAsr, 0};
        if (body == "prev") return {TokenKind::PromptPrev, 0};
        if (body.rfind("spk", 0) == 0) return SotToken::speaker(std::stoi(body.substr(3)));
        if (body.rfind("time", 0) == 0) return SotToken::time(std::stoi(body.substr(4)));
        throw std::invalid_argument("unknown special token: " + text);
    }
    auto it = piece_index_.find(text);
    if (it == piece_index_.end()) throw std::invalid_argument("token not in lexicon: " + text);
    return SotToken::subword(it->second);
}

std::string Vocab::to_string(const SotSequence &seq) const {
    std::string out;
    for (size_t i = 0; i < seq.size(); ++i) {
        if (i) out += ' ';
        out += token_string(seq[i]);
    }
    return out;
}

SotSequence Vocab::from_string(const std::string &text) const {
    SotSequence seq;
    std::istringstream iss(text);
    std::string tok;
    while (iss >> tok) seq.push_back(parse_token(tok));
    return seq;
}

std::vector<int> Vocab::ids(const SotSequence &seq) const {
    std::vector<int> out;
    out.reserve(seq.size());
    for (const auto &t : seq) out.push_back(id_of(t));
    return out;
}

SotSequence Vocab::from_ids(const std::vector<int> &ids) const {
    SotSequence out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(token_of(id));
    return out;
}

std::vector<int> Vocab::encode_word(const std::string &word) const {
    auto whole = piece_index_.find(word);
    if (whole != piece_index_.end()) return {whole->second};
    // greedy longest-match wordpiece cover
    std::vector<int> out;
    size_t pos = 0;
    while (pos < word.size()) {
        int best = -1;
        size_t best_len = 0;
        for (size_t len = word.size() - pos; len >= 1; --len) {
            std::string cand = word.substr(pos, len);
            if (pos > 0) cand = "##" + cand;
            auto it = piece_index_.find(cand);
            if (it != piece_index_.end()) {
                best = it->second;
                best_len = len;
                break;
            }
        }
        if (best < 0) throw std::invalid_argument("word not coverable by lexicon: " + word);
        out.push_back(best);
        pos += best_len;
    }
    return out;
}

std::vector<std::string> Vocab::decode_words(const std::vector<int> &piece_ids) const {
    std::vector<std::string> words;
    for (int id : piece_ids) {
        const std::string &p = cfg_.lexicon.at(id);
        if (p.rfind("##", 0) == 0 && !words.empty())
            words.back() += p.substr(2);
        else if (p.rfind("##", 0) == 0)
            words.push_back(p.substr(2));
        else
            words.push_back(p);
    }
    return words;
}

int WindowAnnotation::num_local_speakers() const {
    int max_tag = -1;
    for (const auto &e : entries) max_tag = std::max(max_tag, e.local_tag);
    return max_tag + 1;
}

// ─── Grammar ─────────────────────────────────────────────────────────────────

bool AdmissibleSet::contains(const SotToken &tok) const {
    switch (tok.kind) {
    case TokenKind::Eos: return eos;
    case TokenKind::NoSpeech: return nospeech;
    case TokenKind::Trunc: return trunc;
    case TokenKind::Subword: return subword;
    case TokenKind::PromptOd:
    case TokenKind::PromptVanillaAsr:
    case TokenKind::PromptPrev: return prompt;
    case TokenKind::Time: return time_min >= 0 && tok.value >= time_min && tok.value <= time_max;
    case TokenKind::SpeakerTag:
        if (tok.value < 0 || tok.value > max_speaker_tag) return false;
        if (tok.value < static_cast<int>(closed_tags.size()) && closed_tags[tok.value]) return false;
        return true;
    }
    return false;
}

GrammarState::GrammarState(const Vocab &vocab)
    : vocab_(&vocab),
      tag_last_offset_(vocab.num_speaker_tags(), 0),
      tag_has_entry_(vocab.num_speaker_tags(), 0),
      tag_closed_(vocab.num_speaker_tags(), 0) {}

int GrammarState::onset_lower_bound(int tag) const {
    return std::max(tag_last_offset_[tag], last_explicit_onset_);
}

AdmissibleSet GrammarState::admissible() const {
    AdmissibleSet set;
    const bool have_lexicon = !vocab_->config().lexicon.empty();
    switch (pos_state_) {
    case Pos::Start:
        set.prompt = true;
        [[fallthrough]];
    case Pos::AfterPrompt:
        set.nospeech = true;
        if (have_lexicon) {
            set.max_speaker_tag = 0;
            set.closed_tags = {0};
        }
        break;
    case Pos::AfterNoSpeech:
        set.eos = true;
        break;
    case Pos::ExpectOnset:
        set.time_min = onset_lower_bound(cur_tag_);
        set.time_max = vocab_->max_time_index();
        // A truncated onset means the utterance started before the window;
        // such entries may only precede explicit-onset ones, and only as the
        // speaker's first entry.
        set.trunc = !any_explicit_entry_ && tag_has_entry_[cur_tag_] == 1;
        break;
    case Pos::ExpectWord:
        set.subword = true;
        break;
    case Pos::InWords:
        set.subword = true;
        set.time_min = std::max(cur_onset_index_, 0);
        set.time_max = vocab_->max_time_index();
        set.trunc = true; // offset truncation: utterance crosses the window end
        break;
    case Pos::ExpectEntryOrEos: {
        set.eos = true;
        if (have_lexicon) {
            set.max_speaker_tag =
                std::min(max_tag_seen_ + 1, vocab_->num_speaker_tags() - 1);
            set.closed_tags.assign(tag_closed_.begin(),
                                   tag_closed_.begin() + set.max_speaker_tag + 1);
        }
        break;
    }
    case Pos::Done:
        break;
    }
    return set;
}

void GrammarState::advance(const SotToken &tok) {
    AdmissibleSet set = admissible();
    if (!set.contains(tok)) {
        std::string rule;
        if (tok.kind == TokenKind::SpeakerTag) {
            if ((pos_state_ == Pos::Start || pos_state_ == Pos::AfterPrompt ||
                 pos_state_ == Pos::ExpectEntryOrEos) &&
                tok.value > set.max_speaker_tag)
                rule = "FIFO order violated";
            else if (tok.value <= set.max_speaker_tag &&
                     tok.value < static_cast<int>(set.closed_tags.size()) &&
                     set.closed_tags[tok.value])
                rule = "speaker tag reused after truncated offset";
            else
                rule = "speaker tag not allowed here";
        } else if (tok.kind == TokenKind::Time) {
            rule = set.time_min >= 0 ? "timestamp not monotone" : "timestamp not allowed here";
        } else if (tok.kind == TokenKind::Trunc) {
            rule = pos_state_ == Pos::ExpectOnset ? "truncated onset after explicit onset"
                                                  : "truncation token not allowed here";
        } else {
            rule = "unexpected " + vocab_->token_string(tok);
        }
        throw GrammarError(position_, rule);
    }

    switch (tok.kind) {
    case TokenKind::PromptOd:
    case TokenKind::PromptVanillaAsr:
    case TokenKind::PromptPrev:
        pos_state_ = Pos::AfterPrompt;
        break;
    case TokenKind::NoSpeech:
        pos_state_ = Pos::AfterNoSpeech;
        break;
    case TokenKind::Eos:
        pos_state_ = Pos::Done;
        break;
    case TokenKind::SpeakerTag:
        cur_tag_ = tok.value;
        max_tag_seen_ = std::max(max_tag_seen_, tok.value);
        tag_has_entry_[cur_tag_] += 1;
        pos_state_ = Pos::ExpectOnset;
        break;
    case TokenKind::Time:
        if (pos_state_ == Pos::ExpectOnset) {
            cur_onset_index_ = tok.value;
            last_explicit_onset_ = tok.value;
            any_explicit_entry_ = true;
            pos_state_ = Pos::ExpectWord;
        } else { // offset
            tag_last_offset_[cur_tag_] = tok.value;
            pos_state_ = Pos::ExpectEntryOrEos;
        }
        break;
    case TokenKind::Trunc:
        if (pos_state_ == Pos::ExpectOnset) {
            cur_onset_index_ = -1;
            pos_state_ = Pos::ExpectWord;
        } else { // truncated offset: the utterance crosses the window end
            tag_closed_[cur_tag_] = 1;
            pos_state_ = Pos::ExpectEntryOrEos;
        }
        break;
    case TokenKind::Subword:
        pos_state_ = Pos::InWords;
        break;
    }
    ++position_;
}

AdmissibleSet admissible_next(const SotSequence &prefix, const Vocab &vocab) {
    GrammarState state(vocab);
    for (const auto &tok : prefix) state.advance(tok);
    return state.admissible();
}

// ─── Time quantization ───────────────────────────────────────────────────────

int quantize_time(double t, double window_onset, const Vocab &vocab) {
    const double res = vocab.config().time_resolution;
    const double rel = t - window_onset;
    if (rel < -1e-9 || rel > vocab.config().max_window + 1e-9)
        throw std::invalid_argument("timestamp out of window");
    // round half up, with a relative epsilon so X.X5 boundaries that are not
    // exactly representable still round upward
    int idx = static_cast<int>(std::floor(rel / res + 0.5 + 1e-9));
    return std::clamp(idx, 0, vocab.max_time_index());
}

double dequantize_time(int index, double window_onset, const Vocab &vocab) {
    return window_onset + index * vocab.config().time_resolution;
}

// ─── Target construction ─────────────────────────────────────────────────────

SotTarget build_sot_target(const RecordingTimeline &timeline, double window_onset,
                           double window_length, const Vocab &vocab) {
    if (window_length > vocab.config().max_window + 1e-9)
        throw std::invalid_argument("window longer than max_window");
    const double ws = window_onset;
    const double we = window_onset + window_length;

    struct Item {
        const Utterance *utt;
        bool onset_trunc, offset_trunc;
        size_t first_word, end_word; // [first, end)
    };
    std::vector<Item> truncated_first, explicit_items;
    for (const auto &utt : timeline.utterances) {
        size_t first = utt.words.size(), end = 0;
        for (size_t i = 0; i < utt.words.size(); ++i) {
            if (utt.words[i].onset >= ws - 1e-9 && utt.words[i].onset < we - 1e-9) {
                first = std::min(first, i);
                end = i + 1;
            }
        }
        if (first >= end) continue; // no word starts inside the window
        Item item{&utt, utt.onset() < ws - 1e-9, utt.offset() > we + 1e-9, first, end};
        (item.onset_trunc ? truncated_first : explicit_items).push_back(item);
    }
    // FIFO: truncated-onset entries first (their true onsets precede the
    // window start), both groups already in timeline onset order.
    std::vector<Item> items = std::move(truncated_first);
    items.insert(items.end(), explicit_items.begin(), explicit_items.end());

    std::vector<std::string> tag_order; // speaker -> tag by first appearance
    auto tag_of = [&](const std::string &speaker) {
        auto it = std::find(tag_order.begin(), tag_order.end(), speaker);
        if (it == tag_order.end()) {
            tag_order.push_back(speaker);
            return static_cast<int>(tag_order.size()) - 1;
        }
        return static_cast<int>(it - tag_order.begin());
    };

    SotTarget target;
    target.annotation.window_onset = ws;
    target.annotation.window_length = window_length;

    for (const auto &item : items) {
        int tag = tag_of(item.utt->speaker);
        if (tag >= vocab.num_speaker_tags())
            throw std::runtime_error("speaker capacity exceeded");
        target.tokens.push_back(SotToken::speaker(tag));
        target.tokens.push_back(item.onset_trunc
                                    ? SotToken::trunc()
                                    : SotToken::time(quantize_time(item.utt->onset(), ws, vocab)));
        WindowEntry entry;
        entry.local_tag = tag;
        entry.onset = item.onset_trunc ? kTruncated : item.utt->onset();
        entry.offset = item.offset_trunc ? kTruncated : item.utt->offset();
        entry.global_speaker = item.utt->speaker;
        for (size_t i = item.first_word; i < item.end_word; ++i) {
            const std::string &text = item.utt->words[i].text;
            entry.words.push_back(text);
            for (int piece : vocab.encode_word(text))
                target.tokens.push_back(SotToken::subword(piece));
        }
        target.tokens.push_back(item.offset_trunc
                                    ? SotToken::trunc()
                                    : SotToken::time(quantize_time(item.utt->offset(), ws, vocab)));
        target.annotation.entries.push_back(std::move(entry));
    }

    if (target.tokens.empty()) target.tokens.push_back(SotToken::nospeech());
    target.tokens.push_back(SotToken::eos());
    return target;
}

// ─── Parsing ─────────────────────────────────────────────────────────────────

WindowAnnotation parse_sot(const SotSequence &seq, double window_onset, double window_length,
                           const Vocab &vocab) {
    WindowAnnotation ann;
    ann.window_onset = window_onset;
    ann.window_length = window_length;

    GrammarState state(vocab);
    WindowEntry entry;
    std::vector<int> pieces;
    bool in_entry = false, onset_pending = false;

    for (const auto &tok : seq) {
        state.advance(tok); // throws GrammarError on any violation
        switch (tok.kind) {
        case TokenKind::PromptOd: ann.mode = PromptMode::Od; break;
        case TokenKind::PromptVanillaAsr: ann.mode = PromptMode::VanillaAsr; break;
        case TokenKind::PromptPrev: ann.mode = PromptMode::Prev; break;
        case TokenKind::SpeakerTag:
            entry = WindowEntry{};
            entry.local_tag = tok.value;
            pieces.clear();
            in_entry = true;
            onset_pending = true;
            break;
        case TokenKind::Time:
            if (onset_pending) {
                entry.onset = dequantize_time(tok.value, window_onset, vocab);
                onset_pending = false;
            } else {
                entry.offset = dequantize_time(tok.value, window_onset, vocab);
                entry.words = vocab.decode_words(pieces);
                ann.entries.push_back(entry);
                in_entry = false;
            }
            break;
        case TokenKind::Trunc:
            if (onset_pending) {
                entry.onset = kTruncated;
                onset_pending = false;
            } else {
                entry.offset = kTruncated;
                entry.words = vocab.decode_words(pieces);
                ann.entries.push_back(entry);
                in_entry = false;
            }
            break;
        case TokenKind::Subword: pieces.push_back(tok.value); break;
        case TokenKind::NoSpeech:
        case TokenKind::Eos: break;
        }
    }
    if (!state.complete())
        throw GrammarError(static_cast<int>(seq.size()), "sequence not terminated by <|eos|>");
    (void)in_entry;
    return ann;
}

} // namespace slidar
