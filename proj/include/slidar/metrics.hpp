#pragma once

#include "slidar/timeline.hpp"

#include <string>
#include <utility>
#include <vector>

namespace slidar {

// Percentages of total reference speech time (overlap counted per speaker);
// DER = SC + MS + FA.
struct DerReport {
    double speaker_confusion = 0.0; // SC %
    double missed_speech = 0.0;     // MS %
    double false_alarm = 0.0;       // FA %
    double der = 0.0;
    double scored_time = 0.0; // seconds of reference speech
};

// Frame-level collar-free DER with the reference/hypothesis speaker mapping
// chosen to maximize correctly attributed speech time (exact assignment).
DerReport der(const RecordingTimeline &reference, const RecordingTimeline &hypothesis,
              double frame_step = 0.01);

struct CpWerPair {
    std::string reference_speaker;  // empty when padding
    std::string hypothesis_speaker; // empty when padding
    int errors = 0;
    int reference_words = 0;
};

struct CpWerReport {
    double cpwer = 0.0; // percent
    int total_errors = 0;
    int total_reference_words = 0;
    std::vector<CpWerPair> assignment;
};

struct TextNormalization {
    bool lowercase = true;
    bool strip_punctuation = true;
};

// Concatenated minimum-permutation WER: per-speaker transcripts concatenated
// in time order, word-level Levenshtein between every (reference, hypothesis)
// speaker pair, optimal one-to-one assignment minimizing total errors.
CpWerReport cpwer(const RecordingTimeline &reference, const RecordingTimeline &hypothesis,
                  const TextNormalization &norm = {});

// word-level edit distance (substitution/insertion/deletion all cost 1)
int edit_distance(const std::vector<std::string> &a, const std::vector<std::string> &b);

std::vector<std::string> normalize_words(const std::vector<std::string> &words,
                                         const TextNormalization &norm);

} // namespace slidar
