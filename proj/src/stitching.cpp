#include "slidar/stitching.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace slidar {

RecordingTimeline GlobalDast::to_timeline() const {
    RecordingTimeline timeline;
    timeline.recording_id = recording_id;
    timeline.duration = duration;
    for (const auto &utt : utterances) {
        Utterance out;
        out.speaker = "spk" + std::to_string(utt.speaker);
        std::string text;
        for (size_t i = 0; i < utt.words.size(); ++i) {
            if (i) text += ' ';
            text += utt.words[i];
        }
        out.words = approximate_word_boundaries(text, utt.onset, utt.offset);
        timeline.utterances.push_back(std::move(out));
    }
    timeline.normalize();
    return timeline;
}

GlobalDast stitch(const std::vector<LocalDastResult> &results, const std::string &recording_id,
                  double duration, StitchStats *stats) {
    StitchStats local_stats;
    StitchStats &st = stats ? *stats : local_stats;

    std::vector<GlobalUtterance> candidates;
    for (size_t i = 0; i < results.size(); ++i) {
        const auto &r = results[i];
        const auto &ann = r.annotation;
        for (const auto &entry : ann.entries) {
            if (entry.onset_truncated()) {
                // should not occur at inference (advancement rule); cannot be
                // placed on the global timeline without an onset
                ++st.onset_truncation_warnings;
                continue;
            }
            if (entry.offset_truncated()) {
                bool recovered = i + 1 < results.size() &&
                                 results[i + 1].window.onset <= entry.onset + 1e-9;
                if (recovered) {
                    ++st.dropped_truncated;
                    continue;
                }
            }
            if (entry.global_id < 0)
                throw std::runtime_error("stitch requires globally relabeled entries");
            GlobalUtterance utt;
            utt.speaker = entry.global_id;
            utt.words = entry.words;
            utt.onset = entry.onset;
            utt.offset = entry.offset_truncated() ? ann.window_end() : entry.offset;
            utt.offset = std::min(utt.offset, duration);
            utt.window_index = static_cast<int>(i);
            if (utt.offset > utt.onset) candidates.push_back(std::move(utt));
        }
    }

    // Resolve same-speaker duplicates from overlapped windows: the later
    // window saw the utterance untruncated, so its version wins.
    std::sort(candidates.begin(), candidates.end(),
              [](const GlobalUtterance &a, const GlobalUtterance &b) {
                  return std::tie(a.speaker, a.onset, a.window_index) <
                         std::tie(b.speaker, b.onset, b.window_index);
              });
    std::vector<bool> drop(candidates.size(), false);
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (drop[i]) continue;
        for (size_t j = i + 1; j < candidates.size(); ++j) {
            if (drop[j]) continue;
            const auto &a = candidates[i];
            const auto &b = candidates[j];
            if (a.speaker != b.speaker) break;
            if (b.onset >= a.offset - 1e-9) break; // sorted by onset: no overlap further on
            if (a.window_index == b.window_index) {
                std::ostringstream msg;
                msg << "unresolvable same-speaker overlap: speaker " << a.speaker << " ["
                    << a.onset << ", " << a.offset << ") vs [" << b.onset << ", " << b.offset
                    << ") both from window " << a.window_index;
                throw std::runtime_error(msg.str());
            }
            ++st.dropped_duplicates;
            drop[a.window_index < b.window_index ? i : j] = true;
            if (drop[i]) break;
        }
    }

    GlobalDast out;
    out.recording_id = recording_id;
    out.duration = duration;
    for (size_t i = 0; i < candidates.size(); ++i)
        if (!drop[i]) out.utterances.push_back(std::move(candidates[i]));
    std::sort(out.utterances.begin(), out.utterances.end(),
              [](const GlobalUtterance &a, const GlobalUtterance &b) {
                  return std::tie(a.onset, a.speaker, a.offset) <
                         std::tie(b.onset, b.speaker, b.offset);
              });
    return out;
}

} // namespace slidar
