#include "slidar/metrics.hpp"

#include "slidar/hungarian.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <stdexcept>

namespace slidar {

DerReport der(const RecordingTimeline &reference, const RecordingTimeline &hypothesis,
              double frame_step) {
    RecordingTimeline ref_padded = reference;
    RecordingTimeline hyp_padded = hypothesis;
    double span = std::max(reference.duration, hypothesis.duration);
    ref_padded.duration = hyp_padded.duration = span;
    ActivityMap ref = rasterize(ref_padded, frame_step);
    ActivityMap hyp = rasterize(hyp_padded, frame_step);
    const int frames = std::max(ref.num_frames(), hyp.num_frames());
    const int nr = static_cast<int>(ref.speakers.size());
    const int nh = static_cast<int>(hyp.speakers.size());

    auto active = [&](const ActivityMap &map, int s, int f) {
        return f < static_cast<int>(map.active[s].size()) && map.active[s][f];
    };

    long long total_ref = 0;
    for (int s = 0; s < nr; ++s)
        for (int f = 0; f < frames; ++f)
            if (active(ref, s, f)) ++total_ref;
    if (total_ref == 0) throw std::invalid_argument("empty reference");

    // one-to-one mapping maximizing co-active frames, solved exactly
    std::vector<int> hyp_of_ref(nr, -1);
    if (nr > 0 && nh > 0) {
        int side = std::max(nr, nh);
        std::vector<std::vector<double>> cost(side, std::vector<double>(side, 0.0));
        for (int r = 0; r < nr; ++r)
            for (int h = 0; h < nh; ++h) {
                long long co = 0;
                for (int f = 0; f < frames; ++f)
                    if (active(ref, r, f) && active(hyp, h, f)) ++co;
                cost[r][h] = -static_cast<double>(co);
            }
        auto assignment = min_cost_assignment(cost);
        for (int r = 0; r < nr; ++r)
            if (assignment[r] < nh) hyp_of_ref[r] = assignment[r];
    }

    long long ms = 0, fa = 0, sc = 0;
    for (int f = 0; f < frames; ++f) {
        int n_ref = 0, n_hyp = 0, n_correct = 0;
        for (int s = 0; s < nr; ++s)
            if (active(ref, s, f)) ++n_ref;
        for (int s = 0; s < nh; ++s)
            if (active(hyp, s, f)) ++n_hyp;
        for (int r = 0; r < nr; ++r)
            if (hyp_of_ref[r] >= 0 && active(ref, r, f) && active(hyp, hyp_of_ref[r], f))
                ++n_correct;
        ms += std::max(0, n_ref - n_hyp);
        fa += std::max(0, n_hyp - n_ref);
        sc += std::min(n_ref, n_hyp) - n_correct;
    }

    DerReport report;
    double denom = static_cast<double>(total_ref);
    report.missed_speech = 100.0 * ms / denom;
    report.false_alarm = 100.0 * fa / denom;
    report.speaker_confusion = 100.0 * sc / denom;
    report.der = 100.0 * (ms + fa + sc) / denom;
    report.scored_time = total_ref * frame_step;
    return report;
}

std::vector<std::string> normalize_words(const std::vector<std::string> &words,
                                         const TextNormalization &norm) {
    std::vector<std::string> out;
    for (const auto &w : words) {
        std::string t;
        for (char c : w) {
            if (norm.strip_punctuation && std::ispunct(static_cast<unsigned char>(c))) continue;
            t += norm.lowercase ? static_cast<char>(std::tolower(static_cast<unsigned char>(c)))
                                : c;
        }
        if (!t.empty()) out.push_back(std::move(t));
    }
    return out;
}

int edit_distance(const std::vector<std::string> &a, const std::vector<std::string> &b) {
    const size_t n = a.size(), m = b.size();
    std::vector<int> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = static_cast<int>(i);
        for (size_t j = 1; j <= m; ++j) {
            int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

CpWerReport cpwer(const RecordingTimeline &reference, const RecordingTimeline &hypothesis,
                  const TextNormalization &norm) {
    // per speaker, utterance words concatenated in time order
    auto streams = [&](const RecordingTimeline &timeline) {
        std::vector<std::pair<std::string, std::vector<std::string>>> out;
        for (const auto &speaker : timeline.speakers()) {
            std::vector<std::string> words;
            for (const auto &utt : timeline.utterances) {
                if (utt.speaker != speaker) continue;
                for (const auto &w : utt.words) words.push_back(w.text);
            }
            out.push_back({speaker, normalize_words(words, norm)});
        }
        return out;
    };
    auto ref_streams = streams(reference);
    auto hyp_streams = streams(hypothesis);
    if (ref_streams.empty()) throw std::invalid_argument("empty reference");

    int total_ref_words = 0;
    for (const auto &[name, words] : ref_streams)
        total_ref_words += static_cast<int>(words.size());
    if (total_ref_words == 0) throw std::invalid_argument("empty reference");

    // pad the smaller side with empty streams
    const int side = static_cast<int>(std::max(ref_streams.size(), hyp_streams.size()));
    const std::vector<std::string> empty;
    auto ref_at = [&](int i) -> const std::vector<std::string> & {
        return i < static_cast<int>(ref_streams.size()) ? ref_streams[i].second : empty;
    };
    auto hyp_at = [&](int j) -> const std::vector<std::string> & {
        return j < static_cast<int>(hyp_streams.size()) ? hyp_streams[j].second : empty;
    };

    std::vector<std::vector<double>> cost(side, std::vector<double>(side));
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j)
            cost[i][j] = edit_distance(ref_at(i), hyp_at(j));
    auto assignment = min_cost_assignment(cost);

    CpWerReport report;
    report.total_reference_words = total_ref_words;
    for (int i = 0; i < side; ++i) {
        int j = assignment[i];
        CpWerPair pair;
        if (i < static_cast<int>(ref_streams.size())) pair.reference_speaker = ref_streams[i].first;
        if (j < static_cast<int>(hyp_streams.size())) pair.hypothesis_speaker = hyp_streams[j].first;
        pair.errors = static_cast<int>(cost[i][j]);
        pair.reference_words = static_cast<int>(ref_at(i).size());
        report.total_errors += pair.errors;
        if (!pair.reference_speaker.empty() || !pair.hypothesis_speaker.empty())
            report.assignment.push_back(std::move(pair));
    }
    report.cpwer = 100.0 * report.total_errors / static_cast<double>(total_ref_words);
    return report;
}

} // namespace slidar
