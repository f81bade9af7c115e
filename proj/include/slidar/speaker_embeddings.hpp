#pragma once

#include "slidar/token_grammar.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace slidar {

using Vec = std::vector<double>;

struct LocalSpeakerEmbedding {
    int window_index = 0;
    int local_tag = 0;
    Vec vector;
    int support = 0; // n(Theta): frames averaged

    // earliest absolute activity onset of this tag in its window; used when
    // ordering global speaker ids after clustering
    double activity_onset = 0.0;
};

// Frame indices (relative to the window start) where local speaker `tag` is
// the only active one; overlapped frames are excluded.
std::vector<int> single_speaker_frames(const WindowAnnotation &annotation, int tag,
                                       double frame_step);

// Arithmetic mean of the frame vectors over the support set. Throws
// "no single-speaker support" when the set is empty.
Vec time_average(const std::vector<Vec> &frames, const std::vector<int> &support);

// Residual estimate for a tag with no single-speaker frames: on a frame with
// k active tags the embedding head outputs the mean of their vectors, so
// k * h minus the known co-active embeddings recovers the missing one.
// Frames with co-active tags absent from `known` are skipped; returns an
// empty vector when no frame is usable.
Vec residual_embedding(const WindowAnnotation &annotation, int tag,
                       const std::vector<Vec> &frames, double frame_step,
                       const std::map<int, Vec> &known);

struct SpeakerDictionary {
    std::vector<std::string> names;
    std::vector<Vec> embeddings;
    double scale = 1.0; // positive similarity temperature

    int index_of(const std::string &name) const;
    int dim() const { return embeddings.empty() ? 0 : static_cast<int>(embeddings[0].size()); }
};

// Softmax cross-entropy over similarity logits, logit(k) = -scale *
// ||e - dict[k]||^2, averaged over local speakers. The FIFO tag convention
// removes any permutation ambiguity between embeddings and targets.
double speaker_loss(const std::vector<Vec> &local_embeddings,
                    const std::vector<std::string> &targets, const SpeakerDictionary &dict);

struct SpeakerLossGradient {
    double loss = 0.0;
    std::vector<Vec> d_embeddings;
    double d_scale = 0.0;
};

SpeakerLossGradient speaker_loss_with_grad(const std::vector<Vec> &local_embeddings,
                                           const std::vector<std::string> &targets,
                                           const SpeakerDictionary &dict);

// Binary dump: per record one text header line "window tag dim support\n"
// followed by dim little-endian float32 values.
void write_embeddings(std::ostream &out, const std::vector<LocalSpeakerEmbedding> &embeddings);
std::vector<LocalSpeakerEmbedding> read_embeddings(std::istream &in);

// small vector helpers shared across modules
double dot(const Vec &a, const Vec &b);
double norm(const Vec &a);
double cosine_distance(const Vec &a, const Vec &b);
double squared_distance(const Vec &a, const Vec &b);

} // namespace slidar
