#pragma once

#include "slidar/local_model.hpp"
#include "slidar/rng.hpp"
#include "slidar/token_grammar.hpp"

#include <optional>
#include <vector>

namespace slidar {

struct WindowPlan {
    std::vector<Window> windows;
    std::vector<double> overlap_with_previous; // seconds, 0 for the first

    bool covers(double duration) const;
};

// Parsed per-window result: local annotation plus the per-local-speaker
// embeddings extracted for it.
struct LocalDastResult {
    Window window;
    SotSequence tokens;
    WindowAnnotation annotation;
    std::vector<LocalSpeakerEmbedding> embeddings;
    // overlap-residual estimates for tags with no single-speaker support;
    // excluded from clustering, used only as a relabeling fallback
    std::vector<LocalSpeakerEmbedding> residual_embeddings;
};

struct TrainingWindowConfig {
    double window_length = 20.0;
    double prev_prob = 0.5; // <|prev|>
    double od_prob = 0.1;   // <|OD|>
    int max_resample = 100; // retries when a window exceeds speaker capacity
};

struct TrainingSample {
    Window window;
    SotSequence tokens; // prompt-mode token (if any) followed by the target
    WindowAnnotation annotation;
    PromptMode mode = PromptMode::Plain;
};

// Uniformly samples a training window and builds its FIFO SOT target. Prompt
// modes are drawn mutually exclusively: Prev with prev_prob, Od with od_prob,
// plain otherwise. Windows with more speakers than the tag vocabulary are
// resampled, bounded by max_resample.
TrainingSample sample_training_window(const RecordingTimeline &timeline, const Vocab &vocab,
                                      const TrainingWindowConfig &cfg, Rng &rng);

// Advancement rule. With no truncated offsets the next window starts at the
// end of the current one. Otherwise, with t0 the hypothesized onset of the
// leftmost offset-truncated entry, the next window starts at the onset of the
// rightmost hypothesized silence segment at or before t0 (so the truncated
// utterance is re-decoded from its start); with no such silence it starts at
// the onset of the speech run containing t0, falling back to t0 itself.
// Progress of at least one time-resolution step is always enforced. Returns
// nullopt once the current window reaches the end of the recording.
std::optional<Window> next_window(const Window &current, const LocalDastResult &result,
                                  double duration, const Vocab &vocab);

} // namespace slidar
