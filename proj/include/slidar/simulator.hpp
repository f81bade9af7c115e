#pragma once

#include "slidar/speaker_embeddings.hpp"
#include "slidar/timeline.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace slidar {

// Symbolic meeting generator: turn-taking with exponential utterance and
// pause lengths, optional overlapped onsets, words drawn from a lexicon.
// No acoustics; the output is a timeline plus per-speaker embedding
// centroids for the oracle model.
struct MeetingSpec {
    std::string recording_id = "meeting";
    int num_speakers = 4;
    double duration = 600.0;
    double mean_utterance_length = 2.5; // seconds
    double max_utterance_length = 12.0; // cap, must stay under the window
    double mean_pause_length = 0.8;     // seconds
    double overlap_probability = 0.15;
    double words_per_second = 2.5;
    std::vector<std::string> lexicon;
    int embedding_dim = 16;
    double max_centroid_cosine_similarity = 0.4;
    int centroid_retries = 1000;
    uint64_t seed = 0;
    // Utterance boundaries snap to this grid (the token time resolution), so
    // an exact oracle decode reproduces them bit-for-bit.
    double time_grid = 0.1;
};

struct Meeting {
    RecordingTimeline timeline;
    std::map<std::string, Vec> centroids; // unit-norm, per speaker
    std::vector<std::string> lexicon;
};

Meeting simulate(const MeetingSpec &spec);

// The default word list used when a spec carries no lexicon.
std::vector<std::string> default_lexicon();

} // namespace slidar
