#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace slidar {

// All time intervals are half-open [onset, offset), in seconds.

struct Word {
    std::string text;
    double onset = 0.0;
    double offset = 0.0;
};

struct Utterance {
    std::string speaker;
    std::vector<Word> words; // non-empty, ordered, non-overlapping

    double onset() const { return words.front().onset; }
    double offset() const { return words.back().offset; }
    std::string text() const;
};

struct Interval {
    double onset = 0.0;
    double offset = 0.0;

    bool operator==(const Interval &) const = default;
};

struct RecordingTimeline {
    std::string recording_id;
    double duration = 0.0;
    // Sorted by onset, ties broken by (speaker, offset).
    std::vector<Utterance> utterances;

    // Sorts utterances and checks the structural invariants (word ordering,
    // per-speaker non-overlap, offsets within duration). Throws on violation.
    void normalize();

    std::vector<std::string> speakers() const; // distinct, by first activity
};

struct ActivityMap {
    double frame_step = 0.01;
    std::vector<std::string> speakers;
    // active[s][f] is true iff some utterance of speaker s covers f*frame_step
    std::vector<std::vector<uint8_t>> active;

    int num_frames() const { return active.empty() ? 0 : static_cast<int>(active[0].size()); }
};

// Splits an utterance's text into words with isochronal character timing:
// each word weighs its character count plus one for the following separator
// (the last word carries no separator). The final span absorbs rounding so
// the words exactly partition [onset, offset).
std::vector<Word> approximate_word_boundaries(const std::string &text, double onset,
                                              double offset);

// Maximal intervals within [from, to) where no speaker is active.
std::vector<Interval> silence_segments(const RecordingTimeline &timeline, double from,
                                       double to);

// Maximal intervals within [from, to) where at least two speakers are active.
std::vector<Interval> overlap_regions(const RecordingTimeline &timeline, double from,
                                      double to);

ActivityMap rasterize(const RecordingTimeline &timeline, double frame_step = 0.01);

} // namespace slidar
