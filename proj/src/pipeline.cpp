#include "slidar/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slidar {

void PipelineConfig::validate() const {
    if (window_length <= 0.0) throw std::invalid_argument("window length must be positive");
    if (window_length > vocab.max_window + 1e-9)
        throw std::invalid_argument("window length exceeds vocab max_window");
    if (frame_step <= 0.0) throw std::invalid_argument("frame_step must be positive");
    if (beam.beam_size < 1) throw std::invalid_argument("beam size must be >= 1");
}

PipelineOutput run_pipeline(const RecordingTimeline &recording, ModelInterface &model,
                            const PipelineConfig &config,
                            const RecordingTimeline *reference) {
    config.validate();
    const Vocab &vocab = model.vocab();
    const double frame_step = model.frame_step();
    const double duration = recording.duration;

    SotSequence prompt;
    if (config.od_prompt) prompt.push_back({TokenKind::PromptOd, 0});

    PipelineOutput out;
    std::vector<LocalSpeakerEmbedding> all_embeddings;

    if (duration > 1e-9) {
        Window window{0, 0.0, std::min(config.window_length, duration)};
        while (true) {
            WindowHandle handle{window, &recording};
            LocalDastResult result;
            result.window = window;
            try {
                result.tokens = decode_window(model, handle, prompt, config.beam);
                result.annotation =
                    parse_sot(result.tokens, window.onset, window.length, vocab);

                std::vector<Vec> frames = model.frame_embeddings(handle);
                auto activity_onset_of = [&](int tag) {
                    double onset = duration;
                    for (const auto &e : result.annotation.entries)
                        if (e.local_tag == tag)
                            onset = std::min(onset, result.annotation.effective_onset(e));
                    return onset;
                };
                std::map<int, Vec> supported;
                std::vector<int> unsupported;
                for (int tag = 0; tag < result.annotation.num_local_speakers(); ++tag) {
                    auto support = single_speaker_frames(result.annotation, tag, frame_step);
                    if (support.empty()) {
                        unsupported.push_back(tag);
                        continue;
                    }
                    LocalSpeakerEmbedding emb;
                    emb.window_index = window.index;
                    emb.local_tag = tag;
                    emb.vector = time_average(frames, support);
                    emb.support = static_cast<int>(support.size());
                    emb.activity_onset = activity_onset_of(tag);
                    supported[tag] = emb.vector;
                    result.embeddings.push_back(emb);
                    all_embeddings.push_back(std::move(emb));
                }
                for (int tag : unsupported) {
                    ++out.skipped_embeddings; // fully overlapped local speaker
                    Vec residual = residual_embedding(result.annotation, tag, frames,
                                                      frame_step, supported);
                    if (residual.empty()) continue;
                    LocalSpeakerEmbedding emb;
                    emb.window_index = window.index;
                    emb.local_tag = tag;
                    emb.vector = std::move(residual);
                    emb.support = 0;
                    emb.activity_onset = activity_onset_of(tag);
                    result.residual_embeddings.push_back(std::move(emb));
                }
            } catch (const std::exception &e) {
                throw std::runtime_error("window " + std::to_string(window.index) + " [" +
                                         std::to_string(window.onset) + "s]: " + e.what());
            }

            double overlap = 0.0;
            if (!out.plan.windows.empty())
                overlap = std::max(0.0, out.plan.windows.back().end() - window.onset);
            out.plan.windows.push_back(window);
            out.plan.overlap_with_previous.push_back(overlap);
            out.windows.push_back(std::move(result));

            auto next = next_window(window, out.windows.back(), duration, vocab);
            if (!next) break;
            window = *next;
        }
    }

    if (!all_embeddings.empty()) {
        CannotLinkSet constraints =
            derive_constraints(out.windows, config.clustering, frame_step);
        out.clustering = constrained_ahc(all_embeddings, constraints, config.clustering);
    }
    relabel(out.windows, out.clustering);
    out.transcript = stitch(out.windows, recording.recording_id, duration, &out.stitch_stats);

    if (reference && !reference->utterances.empty()) {
        RecordingTimeline hyp = out.transcript.to_timeline();
        out.der = der(*reference, hyp, frame_step);
        out.cpwer = cpwer(*reference, hyp, config.text_norm);
    }
    return out;
}

} // namespace slidar
