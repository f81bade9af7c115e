#pragma once

#include "slidar/windowing.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <utility>
#include <vector>

namespace slidar {

// Identifies one local-speaker embedding: (window index, local tag).
using EmbeddingId = std::pair<int, int>;

// Unordered, irreflexive pair set over embedding ids (stored ordered).
using CannotLinkSet = std::set<std::pair<EmbeddingId, EmbeddingId>>;

void add_cannot_link(CannotLinkSet &set, EmbeddingId a, EmbeddingId b);

enum class Linkage { Average, Complete };

struct ClusteringConfig {
    Linkage linkage = Linkage::Average;
    // Stopping rule: merge while the best feasible linkage distance is below
    // the threshold, unless a target cluster count is given.
    double distance_threshold = 0.3; // cosine distance
    int target_clusters = 0;         // 0 = use threshold
    double min_constraint_overlap = 5.0; // seconds of window overlap
};

// Decides whether two local speakers from consecutive overlapping windows may
// not be the same person, given their window annotations and the shared
// region. Pluggable because the constraint recipe for overlapped windows is a
// policy choice, not settled machinery.
using CrossWindowPolicy = std::function<bool(const WindowAnnotation &earlier, int tag_a,
                                             const WindowAnnotation &later, int tag_b,
                                             double shared_onset, double shared_offset,
                                             double frame_step)>;

// Default policy: cannot-link when both tags have single-speaker activity in
// the shared region but are never co-active there (the same person would be
// observed at the same times by both windows).
bool disjoint_activity_policy(const WindowAnnotation &earlier, int tag_a,
                              const WindowAnnotation &later, int tag_b, double shared_onset,
                              double shared_offset, double frame_step);

// Within one window, all distinct local tags are cannot-linked. Across
// consecutive windows whose overlap exceeds min_constraint_overlap, the
// cross-window policy decides.
CannotLinkSet derive_constraints(const std::vector<LocalDastResult> &results,
                                 const ClusteringConfig &cfg, double frame_step = 0.01,
                                 const CrossWindowPolicy &policy = disjoint_activity_policy);

struct ClusteringResult {
    std::map<EmbeddingId, int> labels; // (window, tag) -> global speaker id
    int num_clusters = 0;
    // set when a target cluster count could not be reached because the
    // constraints force more clusters
    bool constraint_limited = false;
};

// Bottom-up agglomeration over cosine distances that never merges two
// clusters containing a cannot-linked pair. Deterministic: ties break on the
// smallest member indices. Global ids are dense and ordered by each
// cluster's earliest activity time.
ClusteringResult constrained_ahc(const std::vector<LocalSpeakerEmbedding> &embeddings,
                                 const CannotLinkSet &constraints, const ClusteringConfig &cfg);

// Writes global ids back into the per-window entries. Tags without an
// embedding (no single-speaker support anywhere in their window) inherit the
// label of the same tag in the nearest window that has one.
void relabel(std::vector<LocalDastResult> &results, const ClusteringResult &clustering);

} // namespace slidar
