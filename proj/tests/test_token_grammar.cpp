#include "slidar/token_grammar.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>

using namespace slidar;
using namespace slidar::test;

namespace {

Vocab small_vocab(std::vector<std::string> lexicon = {"hello", "world"}) {
    VocabConfig cfg;
    cfg.lexicon = std::move(lexicon);
    return Vocab(cfg);
}

bool entries_equal(const WindowEntry &a, const WindowEntry &b, double tol) {
    if (a.local_tag != b.local_tag || a.words != b.words) return false;
    if (a.onset_truncated() != b.onset_truncated()) return false;
    if (a.offset_truncated() != b.offset_truncated()) return false;
    if (!a.onset_truncated() && std::abs(a.onset - b.onset) > tol) return false;
    if (!a.offset_truncated() && std::abs(a.offset - b.offset) > tol) return false;
    return true;
}

} // namespace

TEST_SUITE("token_grammar") {

TEST_CASE("vocab id layout round-trips") {
    VocabConfig cfg;
    cfg.lexicon = {"hello", "world", "##ld"};
    Vocab vocab(cfg);
    CHECK(vocab.max_time_index() == 200); // 20 s at 100 ms resolution
    CHECK(vocab.size() == 6 + 5 + 201 + 3);
    for (int id = 0; id < vocab.size(); ++id) CHECK(vocab.id_of(vocab.token_of(id)) == id);
    CHECK(vocab.token_string(SotToken::speaker(0)) == "<|spk0|>");
    CHECK(vocab.token_string(SotToken::time(10)) == "<|time10|>");
    CHECK(vocab.parse_token("<|trunc|>") == SotToken::trunc());
    CHECK(vocab.parse_token("hello") == SotToken::subword(0));
    CHECK_THROWS(vocab.parse_token("<|bogus|>"));
    SotSequence seq = {SotToken::speaker(0), SotToken::time(10), SotToken::subword(0),
                       SotToken::subword(1), SotToken::time(200), SotToken::eos()};
    CHECK(vocab.to_string(seq) == "<|spk0|> <|time10|> hello world <|time200|> <|eos|>");
    CHECK(vocab.from_string(vocab.to_string(seq)) == seq);
    CHECK(vocab.from_ids(vocab.ids(seq)) == seq);
}

TEST_CASE("wordpiece encoding with continuation pieces") {
    Vocab vocab = small_vocab({"he", "##llo", "##l", "hello"});
    CHECK(vocab.encode_word("hello") == std::vector<int>{3}); // whole-word match first
    Vocab pieces = small_vocab({"he", "##llo", "##l"});
    CHECK(pieces.encode_word("hello") == std::vector<int>{0, 1}); // greedy longest
    CHECK(pieces.decode_words({0, 1}) == std::vector<std::string>{"hello"});
    CHECK(pieces.decode_words({0, 2, 0}) == std::vector<std::string>{"hel", "he"});
    CHECK_THROWS(pieces.encode_word("xyz"));
}

TEST_CASE("time quantization") {
    Vocab vocab = small_vocab();
    CHECK(quantize_time(1.0, 0.0, vocab) == 10); // <|time10|>
    CHECK(quantize_time(5.0, 5.0, vocab) == 0);
    CHECK(quantize_time(5.0 + 0.04999, 5.0, vocab) == 0); // round half up
    CHECK(quantize_time(5.0 + 0.05, 5.0, vocab) == 1);
    CHECK(dequantize_time(10, 2.0, vocab) == doctest::Approx(3.0));
    CHECK_THROWS_WITH(quantize_time(1.0, 2.0, vocab), "timestamp out of window");
    CHECK_THROWS_WITH(quantize_time(25.0, 2.0, vocab), "timestamp out of window");
}

TEST_CASE("serializes a full utterance") {
    Vocab vocab = small_vocab();
    auto t = make_timeline(30.0, {make_utt("A", "hello world", 1.0, 20.0)});
    auto target = build_sot_target(t, 0.0, 20.0, vocab);
    CHECK(vocab.to_string(target.tokens) ==
          "<|spk0|> <|time10|> hello world <|time200|> <|eos|>");
    REQUIRE(target.annotation.entries.size() == 1);
    CHECK(target.annotation.entries[0].onset == 1.0);
    CHECK(target.annotation.entries[0].offset == 20.0);
    CHECK(target.annotation.entries[0].global_speaker == "A");
}

TEST_CASE("empty window serializes to nospeech") {
    Vocab vocab = small_vocab();
    auto t = make_timeline(100.0, {make_utt("A", "hello", 50.0, 52.0)});
    auto target = build_sot_target(t, 0.0, 20.0, vocab);
    CHECK(vocab.to_string(target.tokens) == "<|nospeech|> <|eos|>");
    CHECK(target.annotation.entries.empty());
}

TEST_CASE("offset truncation at the window end") {
    Vocab vocab = small_vocab();
    // speaker B's last utterance crosses the window end at 20.0
    auto t = make_timeline(40.0, {make_utt("A", "hello", 1.0, 3.0),
                                  make_utt("B", "world hello", 15.0, 25.0)});
    auto target = build_sot_target(t, 0.0, 20.0, vocab);
    // hand-built expectation: B keeps only the word starting inside the window
    // ("world" spans [15, 21) so "hello" starts at 21, outside)
    CHECK(vocab.to_string(target.tokens) ==
          "<|spk0|> <|time10|> hello <|time30|> <|spk1|> <|time150|> world <|trunc|> <|eos|>");
    REQUIRE(target.annotation.entries.size() == 2);
    CHECK(target.annotation.entries[1].offset_truncated());
    CHECK_FALSE(target.annotation.entries[1].onset_truncated());

    // parse-then-rebuild is idempotent on the token sequence
    auto ann = parse_sot(target.tokens, 0.0, 20.0, vocab);
    REQUIRE(ann.entries.size() == 2);
    CHECK(ann.entries[1].words == std::vector<std::string>{"world"});
    CHECK(ann.entries[1].offset_truncated());
    CHECK(ann.entries[1].onset == doctest::Approx(15.0));
}

TEST_CASE("onset truncation sorts first") {
    Vocab vocab = small_vocab();
    auto t = make_timeline(60.0, {make_utt("A", "hello hello", 18.0, 24.0),
                                  make_utt("B", "world", 21.0, 23.0)});
    // window [20, 40): A started before the window -> trunc onset, FIFO first
    auto target = build_sot_target(t, 20.0, 20.0, vocab);
    CHECK(vocab.to_string(target.tokens) ==
          "<|spk0|> <|trunc|> hello <|time40|> <|spk1|> <|time10|> world <|time30|> <|eos|>");
    CHECK(target.annotation.entries[0].onset_truncated());
    CHECK(target.annotation.entries[0].global_speaker == "A");
}

TEST_CASE("speaker capacity exceeded") {
    VocabConfig cfg;
    cfg.lexicon = {"hello"};
    cfg.max_local_speakers = 2;
    Vocab vocab(cfg);
    auto t = make_timeline(20.0, {make_utt("A", "hello", 1.0, 2.0),
                                  make_utt("B", "hello", 3.0, 4.0),
                                  make_utt("C", "hello", 5.0, 6.0)});
    CHECK_THROWS_WITH(build_sot_target(t, 0.0, 20.0, vocab), "speaker capacity exceeded");
}

TEST_CASE("parse rejects malformed input") {
    Vocab vocab = small_vocab();
    auto empty = parse_sot({SotToken::nospeech(), SotToken::eos()}, 0.0, 20.0, vocab);
    CHECK(empty.entries.empty());

    try {
        parse_sot({SotToken::speaker(1)}, 0.0, 20.0, vocab);
        FAIL("expected grammar error");
    } catch (const GrammarError &e) {
        CHECK(e.rule == "FIFO order violated");
        CHECK(e.position == 0);
    }

    // unterminated sequence
    CHECK_THROWS_AS(parse_sot({SotToken::speaker(0), SotToken::time(0), SotToken::subword(0)},
                              0.0, 20.0, vocab),
                    GrammarError);
    // timestamp monotonicity within an entry
    CHECK_THROWS_AS(parse_sot({SotToken::speaker(0), SotToken::time(10), SotToken::subword(0),
                               SotToken::time(5), SotToken::eos()},
                              0.0, 20.0, vocab),
                    GrammarError);
    // truncated onset after an explicit entry
    CHECK_THROWS_AS(
        parse_sot({SotToken::speaker(0), SotToken::time(0), SotToken::subword(0),
                   SotToken::time(5), SotToken::speaker(1), SotToken::trunc(),
                   SotToken::subword(0), SotToken::time(8), SotToken::eos()},
                   0.0, 20.0, vocab),
        GrammarError);
    // speaker tag reuse after a truncated offset
    CHECK_THROWS_AS(
        parse_sot({SotToken::speaker(0), SotToken::time(0), SotToken::subword(0),
                   SotToken::trunc(), SotToken::speaker(0), SotToken::time(8),
                   SotToken::subword(0), SotToken::time(9), SotToken::eos()},
                   0.0, 20.0, vocab),
        GrammarError);
}

TEST_CASE("prompt mode tokens are prefix-only") {
    Vocab vocab = small_vocab();
    auto ann = parse_sot({{TokenKind::PromptOd, 0}, SotToken::nospeech(), SotToken::eos()},
                         0.0, 20.0, vocab);
    CHECK(ann.mode == PromptMode::Od);
    CHECK_THROWS_AS(parse_sot({SotToken::nospeech(), {TokenKind::PromptPrev, 0}}, 0.0, 20.0,
                              vocab),
                    GrammarError);
}

TEST_CASE("admissible sets at key prefixes") {
    Vocab vocab = small_vocab();
    auto start = admissible_next({}, vocab);
    CHECK(start.nospeech);
    CHECK(start.prompt);
    CHECK(start.max_speaker_tag == 0);
    CHECK_FALSE(start.eos);
    CHECK(start.time_min == -1);

    auto mid = admissible_next(
        {SotToken::speaker(0), SotToken::time(10), SotToken::subword(0)}, vocab);
    CHECK(mid.subword);
    CHECK(mid.trunc);
    CHECK(mid.time_min == 10); // offset must not precede the onset
    CHECK(mid.time_max == vocab.max_time_index());
    CHECK(mid.max_speaker_tag == -1);
    CHECK_FALSE(mid.eos);

    auto after = admissible_next({SotToken::speaker(0), SotToken::time(10),
                                  SotToken::subword(0), SotToken::time(20)},
                                 vocab);
    CHECK(after.eos);
    CHECK(after.max_speaker_tag == 1); // spk0 again or the next fresh tag
    CHECK_FALSE(after.subword);
}

TEST_CASE("round trip over random grid-aligned timelines") {
    std::vector<std::string> lex = {"alpha", "beta", "gamma", "delta"};
    Vocab vocab = small_vocab(lex);
    Rng rng(23);
    for (int it = 0; it < 300; ++it) {
        auto t = random_timeline(rng, 40.0, 3, lex, 0.1);
        double onset = std::floor(rng.uniform(0.0, 20.0) * 10.0) / 10.0;
        auto target = build_sot_target(t, onset, 20.0, vocab);
        auto ann = parse_sot(target.tokens, onset, 20.0, vocab);
        REQUIRE(ann.entries.size() == target.annotation.entries.size());
        for (size_t i = 0; i < ann.entries.size(); ++i)
            CHECK(entries_equal(ann.entries[i], target.annotation.entries[i], 0.05 + 1e-9));

        // FIFO invariance: first occurrences of tags are 0,1,2,... gap-free
        int next_expected = 0;
        std::vector<bool> seen(8, false);
        bool explicit_seen = false;
        int last_onset_idx = 0;
        for (const auto &e : target.annotation.entries) {
            if (!seen[e.local_tag]) {
                CHECK(e.local_tag == next_expected);
                seen[e.local_tag] = true;
                ++next_expected;
            }
            // truncated onsets precede all explicit entries
            if (e.onset_truncated())
                CHECK_FALSE(explicit_seen);
            else {
                explicit_seen = true;
                int idx = quantize_time(e.onset, onset, vocab);
                CHECK(idx >= last_onset_idx); // monotone explicit onsets
                last_onset_idx = idx;
            }
        }
    }
}

TEST_CASE("grammar soundness and completeness at tiny vocab") {
    VocabConfig cfg;
    cfg.lexicon = {"a"};
    cfg.max_local_speakers = 2;
    cfg.max_window = 0.2; // time indices 0..2
    Vocab vocab(cfg);

    std::vector<SotToken> alphabet;
    for (int id = 0; id < vocab.size(); ++id) alphabet.push_back(vocab.token_of(id));

    // can this state reach Done within `depth` more tokens?
    std::function<bool(const GrammarState &, int)> completable =
        [&](const GrammarState &state, int depth) -> bool {
        if (state.complete()) return true;
        if (depth == 0) return false;
        auto set = state.admissible();
        for (const auto &tok : alphabet) {
            if (!set.contains(tok)) continue;
            GrammarState next = state;
            next.advance(tok);
            if (completable(next, depth - 1)) return true;
        }
        return false;
    };

    int prefixes = 0;
    std::function<void(const GrammarState &, int)> visit = [&](const GrammarState &state,
                                                               int depth) {
        ++prefixes;
        auto set = state.admissible();
        for (const auto &tok : alphabet) {
            GrammarState next = state;
            if (set.contains(tok)) {
                CHECK_NOTHROW(next.advance(tok));
                // completeness: every admissible token has a completion
                CHECK(completable(next, 12));
                if (depth > 0 && !next.complete()) visit(next, depth - 1);
            } else {
                CHECK_THROWS_AS(next.advance(tok), GrammarError); // soundness
            }
        }
    };
    visit(GrammarState(vocab), 7);
    CHECK(prefixes > 500); // the walk actually explored the space
}

} // TEST_SUITE
