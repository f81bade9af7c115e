#pragma once

#include "slidar/timeline.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace slidar {

// ─── Vocabulary ──────────────────────────────────────────────────────────────

enum class TokenKind {
    Eos,
    NoSpeech,
    Trunc,
    PromptOd,         // <|OD|>
    PromptVanillaAsr, // <|vanillaASR|>
    PromptPrev,       // <|prev|>
    SpeakerTag,       // value = local tag k
    Time,             // value = timestamp index
    Subword,          // value = piece index into the lexicon
};

struct SotToken {
    TokenKind kind = TokenKind::Eos;
    int value = 0;

    bool operator==(const SotToken &) const = default;

    static SotToken eos() { return {TokenKind::Eos, 0}; }
    static SotToken nospeech() { return {TokenKind::NoSpeech, 0}; }
    static SotToken trunc() { return {TokenKind::Trunc, 0}; }
    static SotToken speaker(int k) { return {TokenKind::SpeakerTag, k}; }
    static SotToken time(int idx) { return {TokenKind::Time, idx}; }
    static SotToken subword(int id) { return {TokenKind::Subword, id}; }
};

using SotSequence = std::vector<SotToken>;

struct VocabConfig {
    double time_resolution = 0.1; // seconds per timestamp step
    double max_window = 20.0;     // seconds
    int max_local_speakers = 5;   // N speaker tag tokens
    // Word pieces. A piece prefixed "##" continues the previous word,
    // otherwise it starts a new one (plain whole-word lexicons need no
    // prefixes at all).
    std::vector<std::string> lexicon;
};

// Integer-id layout and string forms for the SOT vocabulary.
class Vocab {
  public:
    explicit Vocab(VocabConfig cfg);

    const VocabConfig &config() const { return cfg_; }
    int max_time_index() const { return max_time_index_; } // inclusive
    int num_speaker_tags() const { return cfg_.max_local_speakers; }
    int size() const { return size_; }

    int id_of(const SotToken &tok) const;
    SotToken token_of(int id) const;

    std::string token_string(const SotToken &tok) const;
    SotToken parse_token(const std::string &text) const;

    // whitespace-separated readable form, e.g. "<|spk0|> <|time10|> hello"
    std::string to_string(const SotSequence &seq) const;
    SotSequence from_string(const std::string &text) const;

    std::vector<int> ids(const SotSequence &seq) const;
    SotSequence from_ids(const std::vector<int> &ids) const;

    const std::string &piece(int id) const { return cfg_.lexicon.at(id); }
    // Splits a word into lexicon pieces (greedy longest match). Throws if the
    // word cannot be covered.
    std::vector<int> encode_word(const std::string &word) const;
    // Joins subword piece ids back into words.
    std::vector<std::string> decode_words(const std::vector<int> &piece_ids) const;

  private:
    VocabConfig cfg_;
    int max_time_index_ = 0;
    int speaker_base_ = 0, time_base_ = 0, subword_base_ = 0, size_ = 0;
    std::unordered_map<std::string, int> piece_index_;
};

// ─── Window annotations ──────────────────────────────────────────────────────

enum class PromptMode { Plain, Od, VanillaAsr, Prev };

// Sentinel for truncated onsets/offsets in WindowAnnotation entries.
inline constexpr double kTruncated = -1.0;

struct WindowEntry {
    int local_tag = 0;
    double onset = 0.0;  // absolute seconds, or kTruncated
    double offset = 0.0; // absolute seconds, or kTruncated
    std::vector<std::string> words;
    std::optional<std::string> global_speaker; // training targets only
    int global_id = -1;                        // filled by clustering relabel

    bool onset_truncated() const { return onset == kTruncated; }
    bool offset_truncated() const { return offset == kTruncated; }
};

struct WindowAnnotation {
    double window_onset = 0.0;
    double window_length = 0.0;
    PromptMode mode = PromptMode::Plain;
    // FIFO order: truncated-onset entries first (by true pre-window onset when
    // known), then explicit-onset entries by onset. Tags are 0,1,2,... in
    // order of first appearance.
    std::vector<WindowEntry> entries;

    double window_end() const { return window_onset + window_length; }
    int num_local_speakers() const;
    // entry onset with truncation resolved to the window boundary
    double effective_onset(const WindowEntry &e) const {
        return e.onset_truncated() ? window_onset : e.onset;
    }
    double effective_offset(const WindowEntry &e) const {
        return e.offset_truncated() ? window_end() : e.offset;
    }
};

// ─── Grammar ─────────────────────────────────────────────────────────────────

struct GrammarError : std::runtime_error {
    int position; // token index within the sequence
    std::string rule;

    GrammarError(int pos, std::string rule_name)
        : std::runtime_error("grammar violation at token " + std::to_string(pos) + ": " +
                             rule_name),
          position(pos), rule(std::move(rule_name)) {}
};

// The set of tokens that may extend an admissible prefix.
struct AdmissibleSet {
    bool eos = false;
    bool nospeech = false;
    bool trunc = false;
    bool subword = false;
    bool prompt = false;
    int time_min = -1, time_max = -1; // inclusive; -1/-1 when no Time admissible
    int max_speaker_tag = -1;         // tags 0..max admissible unless closed
    std::vector<uint8_t> closed_tags;

    bool contains(const SotToken &tok) const;
};

// Incremental recognizer for the SOT grammar. Tracks FIFO tag assignment,
// per-speaker timestamp monotonicity and truncation placement.
class GrammarState {
  public:
    explicit GrammarState(const Vocab &vocab);

    AdmissibleSet admissible() const;
    bool is_admissible(const SotToken &tok) const { return admissible().contains(tok); }
    void advance(const SotToken &tok); // throws GrammarError
    bool complete() const { return pos_state_ == Pos::Done; }
    int position() const { return position_; }

  private:
    enum class Pos { Start, AfterPrompt, AfterNoSpeech, ExpectOnset, ExpectWord, InWords, ExpectEntryOrEos, Done };

    const Vocab *vocab_;
    Pos pos_state_ = Pos::Start;
    int position_ = 0;
    int max_tag_seen_ = -1;
    int last_explicit_onset_ = 0; // FIFO: explicit onsets non-decreasing
    bool any_explicit_entry_ = false;
    int cur_tag_ = -1;
    int cur_onset_index_ = -1; // -1 for truncated onset
    std::vector<int> tag_last_offset_;  // per tag, last explicit offset index
    std::vector<uint8_t> tag_has_entry_;
    std::vector<uint8_t> tag_closed_; // closed by a truncated offset

    int onset_lower_bound(int tag) const;
};

AdmissibleSet admissible_next(const SotSequence &prefix, const Vocab &vocab);

// ─── Serialization and parsing ───────────────────────────────────────────────

// round((t - window_onset) / time_resolution), half-up, clamped to the token
// range. Throws "timestamp out of window" if t is outside the window.
int quantize_time(double t, double window_onset, const Vocab &vocab);
double dequantize_time(int index, double window_onset, const Vocab &vocab);

// Serializes the part of a timeline visible in [window_onset, window_onset +
// window_length) as a FIFO SOT target. A word belongs to the window iff its
// onset lies inside it; an utterance whose onset (offset) falls outside the
// window gets a truncation token in place of that timestamp.
struct SotTarget {
    SotSequence tokens;
    WindowAnnotation annotation;
};
SotTarget build_sot_target(const RecordingTimeline &timeline, double window_onset,
                           double window_length, const Vocab &vocab);

// Inverse of build_sot_target on well-formed sequences; rejects anything the
// grammar rejects, reporting position and rule.
WindowAnnotation parse_sot(const SotSequence &seq, double window_onset, double window_length,
                           const Vocab &vocab);

} // namespace slidar
