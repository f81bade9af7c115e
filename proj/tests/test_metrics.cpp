#include "slidar/metrics.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace slidar;
using namespace slidar::test;

namespace {

// exhaustive-mapping frame-count DER oracle: try every one-to-one speaker
// mapping, count frames directly
DerReport brute_force_der(const RecordingTimeline &reference,
                          const RecordingTimeline &hypothesis, double frame_step) {
    RecordingTimeline rp = reference, hp = hypothesis;
    double span = std::max(reference.duration, hypothesis.duration);
    rp.duration = hp.duration = span;
    auto ref = rasterize(rp, frame_step);
    auto hyp = rasterize(hp, frame_step);
    int frames = std::max(ref.num_frames(), hyp.num_frames());
    int nr = static_cast<int>(ref.speakers.size());
    int nh = static_cast<int>(hyp.speakers.size());
    auto active = [&](const ActivityMap &m, int s, int f) {
        return s >= 0 && f < static_cast<int>(m.active[s].size()) && m.active[s][f];
    };
    long long total_ref = 0;
    for (int s = 0; s < nr; ++s)
        for (int f = 0; f < frames; ++f)
            if (active(ref, s, f)) ++total_ref;

    // enumerate injections ref -> hyp (padded with -1 for unmapped)
    int side = std::max(nr, nh);
    std::vector<int> perm(side);
    std::iota(perm.begin(), perm.end(), 0);
    long long best_err = -1;
    long long best_ms = 0, best_fa = 0, best_sc = 0;
    do {
        long long ms = 0, fa = 0, sc = 0;
        for (int f = 0; f < frames; ++f) {
            int n_ref = 0, n_hyp = 0, n_correct = 0;
            for (int s = 0; s < nr; ++s)
                if (active(ref, s, f)) ++n_ref;
            for (int s = 0; s < nh; ++s)
                if (active(hyp, s, f)) ++n_hyp;
            for (int r = 0; r < nr; ++r) {
                int h = perm[r] < nh ? perm[r] : -1;
                if (active(ref, r, f) && active(hyp, h, f)) ++n_correct;
            }
            ms += std::max(0, n_ref - n_hyp);
            fa += std::max(0, n_hyp - n_ref);
            sc += std::min(n_ref, n_hyp) - n_correct;
        }
        if (best_err < 0 || ms + fa + sc < best_err) {
            best_err = ms + fa + sc;
            best_ms = ms;
            best_fa = fa;
            best_sc = sc;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    DerReport rep;
    double denom = static_cast<double>(total_ref);
    rep.missed_speech = 100.0 * best_ms / denom;
    rep.false_alarm = 100.0 * best_fa / denom;
    rep.speaker_confusion = 100.0 * best_sc / denom;
    rep.der = 100.0 * best_err / denom;
    rep.scored_time = total_ref * frame_step;
    return rep;
}

// factorial cpWER oracle
double brute_force_cpwer(const RecordingTimeline &reference,
                         const RecordingTimeline &hypothesis) {
    auto streams = [](const RecordingTimeline &t) {
        std::vector<std::vector<std::string>> out;
        for (const auto &speaker : t.speakers()) {
            std::vector<std::string> words;
            for (const auto &utt : t.utterances)
                if (utt.speaker == speaker)
                    for (const auto &w : utt.words) words.push_back(w.text);
            out.push_back(normalize_words(words, {}));
        }
        return out;
    };
    auto ref = streams(reference);
    auto hyp = streams(hypothesis);
    int side = static_cast<int>(std::max(ref.size(), hyp.size()));
    ref.resize(side);
    hyp.resize(side);
    int total_ref = 0;
    for (const auto &s : ref) total_ref += static_cast<int>(s.size());

    std::vector<int> perm(side);
    std::iota(perm.begin(), perm.end(), 0);
    int best = -1;
    do {
        int cost = 0;
        for (int i = 0; i < side; ++i) cost += edit_distance(ref[i], hyp[perm[i]]);
        if (best < 0 || cost < best) best = cost;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return 100.0 * best / static_cast<double>(total_ref);
}

RecordingTimeline relabeled(const RecordingTimeline &t, const std::string &prefix) {
    RecordingTimeline out = t;
    for (auto &utt : out.utterances) utt.speaker = prefix + utt.speaker;
    out.normalize();
    return out;
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("perfect hypothesis scores zero") {
    auto t = make_timeline(10.0, {make_utt("A", "hello world", 1.0, 3.0),
                                  make_utt("B", "foo", 2.0, 4.0)});
    auto rep = der(t, relabeled(t, "hyp_"));
    CHECK(rep.der == 0.0);
    CHECK(rep.missed_speech == 0.0);
    CHECK(rep.false_alarm == 0.0);
    CHECK(rep.speaker_confusion == 0.0);
    CHECK(rep.scored_time == doctest::Approx(4.0));
}

TEST_CASE("empty hypothesis is all missed speech") {
    auto t = make_timeline(10.0, {make_utt("A", "hello", 1.0, 3.0)});
    RecordingTimeline empty;
    empty.duration = 10.0;
    auto rep = der(t, empty);
    CHECK(rep.missed_speech == doctest::Approx(100.0));
    CHECK(rep.false_alarm == 0.0);
    CHECK(rep.speaker_confusion == 0.0);
    CHECK(rep.der == doctest::Approx(100.0));

    CHECK_THROWS_WITH(der(empty, t), "empty reference");
}

TEST_CASE("der matches the exhaustive-mapping oracle on random cases") {
    Rng rng(73);
    std::vector<std::string> lex = {"a", "b", "c"};
    int checked = 0;
    for (int it = 0; it < 120; ++it) {
        auto ref = random_timeline(rng, 8.0, 2 + static_cast<int>(rng.uniform_int(2)), lex);
        auto hyp = random_timeline(rng, 8.0, 2 + static_cast<int>(rng.uniform_int(2)), lex);
        if (ref.utterances.empty()) continue;
        auto fast = der(ref, hyp, 0.1);
        auto slow = brute_force_der(ref, hyp, 0.1);
        CHECK(fast.der == doctest::Approx(slow.der).epsilon(1e-9));
        CHECK(fast.missed_speech == doctest::Approx(slow.missed_speech).epsilon(1e-9));
        CHECK(fast.false_alarm == doctest::Approx(slow.false_alarm).epsilon(1e-9));
        CHECK(fast.speaker_confusion ==
              doctest::Approx(slow.speaker_confusion).epsilon(1e-9));
        // decomposition identity
        CHECK(fast.der == doctest::Approx(fast.speaker_confusion + fast.missed_speech +
                                          fast.false_alarm));
        ++checked;
    }
    CHECK(checked > 80);
}

TEST_CASE("der is invariant under speaker relabeling") {
    auto ref = make_timeline(10.0, {make_utt("A", "x", 0.0, 2.0), make_utt("B", "y", 1.0, 4.0)});
    auto hyp = make_timeline(10.0, {make_utt("0", "x", 0.0, 2.5), make_utt("1", "y", 1.5, 4.0)});
    auto a = der(ref, hyp);
    auto b = der(relabeled(ref, "r"), relabeled(hyp, "h"));
    CHECK(a.der == doctest::Approx(b.der));
    CHECK(a.speaker_confusion == doctest::Approx(b.speaker_confusion));
}

TEST_CASE("spurious speech in silence increases false alarm") {
    auto ref = make_timeline(10.0, {make_utt("A", "x", 0.0, 2.0)});
    auto hyp = make_timeline(10.0, {make_utt("A", "x", 0.0, 2.0)});
    auto base = der(ref, hyp);
    auto noisy_t = make_timeline(10.0, {make_utt("A", "x", 0.0, 2.0),
                                        make_utt("B", "zz", 5.0, 6.0)});
    auto noisy = der(ref, noisy_t);
    CHECK(noisy.false_alarm > base.false_alarm);
    CHECK(noisy.der > base.der);
}

TEST_CASE("word edit distance") {
    CHECK(edit_distance({}, {}) == 0);
    CHECK(edit_distance({"a", "b"}, {"a", "b"}) == 0);
    CHECK(edit_distance({"a", "b", "c"}, {"a", "x", "c"}) == 1);
    CHECK(edit_distance({"a"}, {"a", "b", "c"}) == 2);
    CHECK(edit_distance({"a", "b", "c"}, {}) == 3);
}

TEST_CASE("text normalization") {
    TextNormalization norm;
    CHECK(normalize_words({"Hello,", "WORLD!"}, norm) ==
          std::vector<std::string>{"hello", "world"});
    CHECK(normalize_words({"..."}, norm).empty());
    TextNormalization off{false, false};
    CHECK(normalize_words({"Hello,"}, off) == std::vector<std::string>{"Hello,"});
}

TEST_CASE("cpwer is zero under speaker permutation") {
    auto ref = make_timeline(10.0, {make_utt("A", "hello world", 0.0, 2.0),
                                    make_utt("B", "foo bar", 3.0, 5.0)});
    auto hyp = make_timeline(10.0, {make_utt("B", "hello world", 0.0, 2.0),
                                    make_utt("A", "foo bar", 3.0, 5.0)});
    auto rep = cpwer(ref, hyp);
    CHECK(rep.cpwer == 0.0);
    CHECK(rep.total_reference_words == 4);
}

TEST_CASE("dropped speaker counts as deletions") {
    auto ref = make_timeline(10.0, {make_utt("A", "hello world", 0.0, 2.0),
                                    make_utt("B", "foo bar baz", 3.0, 5.0)});
    auto hyp = make_timeline(10.0, {make_utt("X", "hello world", 0.0, 2.0)});
    auto rep = cpwer(ref, hyp);
    CHECK(rep.total_errors == 3);
    CHECK(rep.cpwer == doctest::Approx(60.0));
    // the padded pair appears in the assignment with an empty hypothesis side
    bool padded = false;
    for (const auto &p : rep.assignment)
        padded = padded || (p.reference_speaker == "B" && p.hypothesis_speaker.empty());
    CHECK(padded);
}

TEST_CASE("cpwer matches the factorial oracle on random cases") {
    Rng rng(79);
    std::vector<std::string> lex = {"aa", "bb", "cc", "dd", "ee"};
    int checked = 0;
    for (int it = 0; it < 150; ++it) {
        auto ref = random_timeline(rng, 10.0, 1 + static_cast<int>(rng.uniform_int(4)), lex);
        auto hyp = random_timeline(rng, 10.0, 1 + static_cast<int>(rng.uniform_int(4)), lex);
        if (ref.utterances.empty()) continue;
        CHECK(cpwer(ref, hyp).cpwer == doctest::Approx(brute_force_cpwer(ref, hyp)));
        ++checked;
    }
    CHECK(checked > 100);
}

TEST_CASE("cpwer concatenates per speaker in time order") {
    // same words, but one hypothesis utterance order is swapped in time
    auto ref = make_timeline(10.0, {make_utt("A", "one", 0.0, 1.0),
                                    make_utt("A", "two", 2.0, 3.0)});
    auto good = make_timeline(10.0, {make_utt("H", "one", 0.5, 1.5),
                                     make_utt("H", "two", 2.0, 3.0)});
    auto swapped = make_timeline(10.0, {make_utt("H", "two", 0.0, 1.0),
                                        make_utt("H", "one", 2.0, 3.0)});
    CHECK(cpwer(ref, good).cpwer == 0.0);
    CHECK(cpwer(ref, swapped).cpwer > 0.0);
}

} // TEST_SUITE
