#pragma once

#include "slidar/clustering.hpp"
#include "slidar/local_model.hpp"
#include "slidar/metrics.hpp"
#include "slidar/stitching.hpp"
#include "slidar/windowing.hpp"

#include <optional>
#include <string>
#include <vector>

namespace slidar {

struct PipelineConfig {
    VocabConfig vocab;
    BeamConfig beam;
    ClusteringConfig clustering;
    double window_length = 20.0; // must not exceed vocab.max_window
    double frame_step = 0.01;
    bool od_prompt = false; // condition every window on <|OD|>
    TextNormalization text_norm;

    void validate() const;
};

struct PipelineOutput {
    WindowPlan plan;
    std::vector<LocalDastResult> windows; // relabeled
    ClusteringResult clustering;
    GlobalDast transcript;
    StitchStats stitch_stats;
    std::optional<DerReport> der;
    std::optional<CpWerReport> cpwer;
    int skipped_embeddings = 0; // local speakers without single-speaker support
};

// Full SLIDAR loop over one recording: sliding-window decode with the
// truncation-driven advancement rule, per-window speaker embeddings,
// constrained clustering, relabeling, stitching, and (when a reference is
// given) scoring.
PipelineOutput run_pipeline(const RecordingTimeline &recording, ModelInterface &model,
                            const PipelineConfig &config,
                            const RecordingTimeline *reference = nullptr);

} // namespace slidar
