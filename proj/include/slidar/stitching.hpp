#pragma once

#include "slidar/windowing.hpp"

#include <string>
#include <vector>

namespace slidar {

struct GlobalUtterance {
    int speaker = 0; // global speaker id from clustering
    std::vector<std::string> words;
    double onset = 0.0;
    double offset = 0.0;
    int window_index = 0;
};

// The stitched, globally speaker-labeled transcript: the pipeline's product.
struct GlobalDast {
    std::string recording_id;
    double duration = 0.0;
    std::vector<GlobalUtterance> utterances; // ordered by onset

    // View as a timeline (word times synthesized isochronally) for scoring
    // and RTTM export; speakers are named "spk<id>".
    RecordingTimeline to_timeline() const;
};

struct StitchStats {
    int dropped_truncated = 0;  // re-decoded by a later window
    int dropped_duplicates = 0; // overlapped-region copies, earlier window loses
    int onset_truncation_warnings = 0;
};

// Merges relabeled per-window results. Offset-truncated entries are dropped
// when the next window re-covers their span (the advancement rule guarantees
// they are re-decoded in full); duplicates of the same global speaker from
// overlapping windows keep the later window's version. Onset-truncated
// entries should not occur at inference and only raise a warning counter.
GlobalDast stitch(const std::vector<LocalDastResult> &results, const std::string &recording_id,
                  double duration, StitchStats *stats = nullptr);

} // namespace slidar
