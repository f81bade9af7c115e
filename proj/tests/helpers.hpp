#pragma once

#include "slidar/rng.hpp"
#include "slidar/timeline.hpp"
#include "slidar/token_grammar.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <vector>

namespace slidar::test {

inline Utterance make_utt(const std::string &speaker, const std::string &text, double onset,
                          double offset) {
    Utterance utt;
    utt.speaker = speaker;
    utt.words = approximate_word_boundaries(text, onset, offset);
    return utt;
}

inline RecordingTimeline make_timeline(double duration, std::vector<Utterance> utts,
                                       const std::string &id = "rec") {
    RecordingTimeline t;
    t.recording_id = id;
    t.duration = duration;
    t.utterances = std::move(utts);
    t.normalize();
    return t;
}

// every distinct word of a timeline, usable as a whole-word lexicon
inline std::vector<std::string> words_of(const RecordingTimeline &timeline) {
    std::set<std::string> seen;
    std::vector<std::string> out;
    for (const auto &utt : timeline.utterances)
        for (const auto &w : utt.words)
            if (seen.insert(w.text).second) out.push_back(w.text);
    return out;
}

// independent oracle: per-frame scan at `step`, then merge equal-valued runs
template <typename Pred>
std::vector<Interval> frame_scan_regions(const RecordingTimeline &timeline, double from,
                                         double to, double step, Pred pred) {
    std::vector<Interval> out;
    int frames = static_cast<int>(std::llround((to - from) / step));
    bool open = false;
    for (int f = 0; f < frames; ++f) {
        double t = from + (f + 0.5) * step; // midpoint avoids boundary ambiguity
        std::set<std::string> active;
        for (const auto &utt : timeline.utterances)
            if (utt.onset() <= t && t < utt.offset()) active.insert(utt.speaker);
        bool in = pred(static_cast<int>(active.size()));
        if (in && !open) {
            out.push_back({from + f * step, from + (f + 1) * step});
            open = true;
        } else if (in) {
            out.back().offset = from + (f + 1) * step;
        } else {
            open = false;
        }
    }
    return out;
}

inline bool regions_equal(const std::vector<Interval> &a, const std::vector<Interval> &b,
                          double tol = 1e-9) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i].onset - b[i].onset) > tol || std::abs(a[i].offset - b[i].offset) > tol)
            return false;
    return true;
}

// random grid-aligned timeline over a small lexicon, for property tests
inline RecordingTimeline random_timeline(Rng &rng, double duration, int num_speakers,
                                         const std::vector<std::string> &lexicon,
                                         double grid = 0.1) {
    RecordingTimeline t;
    t.recording_id = "rand";
    t.duration = duration;
    std::vector<double> free_at(num_speakers, 0.0);
    int steps = static_cast<int>(std::llround(duration / grid));
    int utts = 1 + static_cast<int>(rng.uniform_int(6));
    for (int u = 0; u < utts; ++u) {
        int spk = static_cast<int>(rng.uniform_int(num_speakers));
        int start = static_cast<int>(rng.uniform_int(steps));
        double onset = std::max(start * grid, free_at[spk]);
        int len = 2 + static_cast<int>(rng.uniform_int(30));
        double offset = std::min(onset + len * grid, duration);
        if (offset - onset < grid - 1e-9) continue;
        int n_words = 1 + static_cast<int>(rng.uniform_int(4));
        std::string text;
        for (int w = 0; w < n_words; ++w) {
            if (w) text += ' ';
            text += lexicon[rng.uniform_int(lexicon.size())];
        }
        Utterance utt;
        utt.speaker = "S" + std::to_string(spk);
        utt.words = approximate_word_boundaries(text, onset, offset);
        t.utterances.push_back(std::move(utt));
        free_at[spk] = offset;
    }
    t.normalize();
    return t;
}

} // namespace slidar::test
