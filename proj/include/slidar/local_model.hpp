#pragma once

#include "slidar/speaker_embeddings.hpp"
#include "slidar/token_grammar.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace slidar {

// One decoding window over a recording.
struct Window {
    int index = 0;
    double onset = 0.0;
    double length = 0.0;

    double end() const { return onset + length; }
};

// Opaque handle the decoder passes through to the model. A neural backend
// would resolve it to audio; the oracle resolves it to the reference
// timeline.
struct WindowHandle {
    Window window;
    const RecordingTimeline *timeline = nullptr;
};

// Contract for the local window model: next-token scoring over the SOT
// vocabulary plus a frame-level speaker-embedding head.
class ModelInterface {
  public:
    virtual ~ModelInterface() = default;

    // Log-probabilities over the full vocabulary for the next token given the
    // decoded prefix. Must be finite and normalized (logsumexp == 0 +- 1e-6).
    virtual std::vector<double> score_step(const WindowHandle &window,
                                           const SotSequence &prompt,
                                           const SotSequence &prefix) = 0;

    // One embedding vector per frame, ceil(window length / frame_step) frames.
    virtual std::vector<Vec> frame_embeddings(const WindowHandle &window) = 0;

    virtual const Vocab &vocab() const = 0;
    virtual double frame_step() const = 0;

    // Models that cannot be scored concurrently return false; the decoder
    // then keeps all scoring on one thread.
    virtual bool thread_safe() const { return false; }
};

struct BeamConfig {
    int beam_size = 10;
    int max_tokens = 512;
    double length_norm_exponent = 0.0; // score = logprob sum / len^alpha
};

// Grammar-constrained beam search: every expansion is restricted to
// admissible_next of the hypothesis, so any returned sequence parses.
// Throws "decode budget exhausted" if no hypothesis reaches <|eos|>.
SotSequence decode_window(ModelInterface &model, const WindowHandle &window,
                          const SotSequence &prompt, const BeamConfig &cfg);

// Teacher-forced SOT objective: sum_i -log_probs[i][target_i].
double sot_loss(const std::vector<std::vector<double>> &log_probs, const SotSequence &target,
                const Vocab &vocab);

// ─── Oracle model ────────────────────────────────────────────────────────────

struct OracleModelConfig {
    double word_substitution_prob = 0.0;
    double timestamp_jitter_std = 0.0; // seconds
    double embedding_noise_std = 0.0;
    // Conditioning on oracle diarization (<|OD|> in the prompt) scales the
    // noise levels by this factor.
    double od_noise_factor = 0.5;
    std::map<std::string, Vec> centroids; // per global speaker, unit-norm
    uint64_t seed = 0;
};

// Test substrate implementing the model contract from ground truth: emits a
// near-one-hot distribution along a (noise-perturbed) serialization of the
// reference window, and frame embeddings built from per-speaker centroids.
// All noise is drawn from stable per-word / per-timestamp keys, so outputs do
// not depend on beam exploration order and substitutions under reduced noise
// are a subset of those under full noise.
class OracleModel : public ModelInterface {
  public:
    OracleModel(const Vocab &vocab, OracleModelConfig cfg, double frame_step = 0.01);

    std::vector<double> score_step(const WindowHandle &window, const SotSequence &prompt,
                                   const SotSequence &prefix) override;
    std::vector<Vec> frame_embeddings(const WindowHandle &window) override;
    const Vocab &vocab() const override { return *vocab_; }
    double frame_step() const override { return frame_step_; }

    // The (noisy) sequence the oracle steers decoding toward.
    const SotSequence &target_for(const WindowHandle &window, bool od_prompted);

  private:
    struct CacheKey {
        int64_t onset_ms;
        int64_t length_ms;
        bool od;
        bool operator<(const CacheKey &o) const {
            return std::tie(onset_ms, length_ms, od) < std::tie(o.onset_ms, o.length_ms, o.od);
        }
    };

    SotSequence build_noisy_target(const WindowHandle &window, bool od_prompted) const;

    const Vocab *vocab_;
    OracleModelConfig cfg_;
    double frame_step_;
    std::map<CacheKey, SotSequence> cache_;
};

} // namespace slidar
