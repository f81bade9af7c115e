#include "slidar/windowing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slidar {

bool WindowPlan::covers(double duration) const {
    double reach = 0.0;
    for (const auto &w : windows) {
        if (w.onset > reach + 1e-9) return false;
        reach = std::max(reach, w.end());
    }
    return reach >= duration - 1e-9;
}

TrainingSample sample_training_window(const RecordingTimeline &timeline, const Vocab &vocab,
                                      const TrainingWindowConfig &cfg, Rng &rng) {
    if (timeline.duration < cfg.window_length)
        throw std::invalid_argument("recording shorter than training window");

    for (int attempt = 0; attempt < cfg.max_resample; ++attempt) {
        double onset = rng.uniform() * (timeline.duration - cfg.window_length);
        SotTarget target;
        try {
            target = build_sot_target(timeline, onset, cfg.window_length, vocab);
        } catch (const std::runtime_error &) {
            continue; // speaker capacity exceeded; resample
        }

        TrainingSample sample;
        sample.window = {attempt, onset, cfg.window_length};
        sample.annotation = std::move(target.annotation);

        double u = rng.uniform();
        if (u < cfg.prev_prob)
            sample.mode = PromptMode::Prev;
        else if (u < cfg.prev_prob + cfg.od_prob)
            sample.mode = PromptMode::Od;
        sample.annotation.mode = sample.mode;

        switch (sample.mode) {
        case PromptMode::Prev: sample.tokens.push_back({TokenKind::PromptPrev, 0}); break;
        case PromptMode::Od: sample.tokens.push_back({TokenKind::PromptOd, 0}); break;
        default: break;
        }
        sample.tokens.insert(sample.tokens.end(), target.tokens.begin(), target.tokens.end());
        return sample;
    }
    throw std::runtime_error("speaker capacity exceeded in every sampled window");
}

namespace {

// Merged hypothesized speech runs within the window, any speaker.
std::vector<Interval> speech_runs(const WindowAnnotation &ann) {
    std::vector<Interval> spans;
    for (const auto &e : ann.entries)
        spans.push_back({ann.effective_onset(e), ann.effective_offset(e)});
    std::sort(spans.begin(), spans.end(),
              [](const Interval &a, const Interval &b) { return a.onset < b.onset; });
    std::vector<Interval> runs;
    for (const auto &s : spans) {
        if (!runs.empty() && s.onset <= runs.back().offset + 1e-9)
            runs.back().offset = std::max(runs.back().offset, s.offset);
        else
            runs.push_back(s);
    }
    return runs;
}

} // namespace

std::optional<Window> next_window(const Window &current, const LocalDastResult &result,
                                  double duration, const Vocab &vocab) {
    if (current.end() >= duration - 1e-9) return std::nullopt;

    const WindowAnnotation &ann = result.annotation;
    double t0 = -1.0;
    for (const auto &e : ann.entries) {
        if (!e.offset_truncated()) continue;
        double onset = ann.effective_onset(e);
        if (t0 < 0.0 || onset < t0) t0 = onset;
    }

    double next_onset;
    if (t0 < 0.0) {
        next_onset = current.end(); // no truncation: no overlap
    } else {
        auto runs = speech_runs(ann);
        // silence onsets are run offsets (plus the window start edge)
        double best = -1.0;
        double edge = current.onset;
        for (const auto &r : runs) {
            // silence [edge, r.onset) precedes this run
            if (edge > current.onset + 1e-9 && edge <= t0 + 1e-9 && r.onset > edge + 1e-9)
                best = std::max(best, edge);
            edge = r.offset;
        }
        if (edge > current.onset + 1e-9 && edge <= t0 + 1e-9 && edge < current.end() - 1e-9)
            best = std::max(best, edge); // trailing silence before the window end
        if (best < 0.0) {
            // no usable silence: restart at the speech run containing t0
            double run_start = t0;
            for (const auto &r : runs)
                if (t0 >= r.onset - 1e-9 && t0 < r.offset + 1e-9) run_start = r.onset;
            best = run_start > current.onset + 1e-9 ? run_start : t0;
        }
        next_onset = best;
    }

    // forced progress of at least one timestamp step
    next_onset = std::max(next_onset, current.onset + vocab.config().time_resolution);
    if (next_onset >= duration - 1e-9) return std::nullopt;

    Window next;
    next.index = current.index + 1;
    next.onset = next_onset;
    next.length = std::min(vocab.config().max_window, duration - next_onset);
    return next;
}

} // namespace slidar
