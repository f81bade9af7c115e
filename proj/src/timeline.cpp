#include "slidar/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace slidar {

std::string Utterance::text() const {
    std::string out;
    for (size_t i = 0; i < words.size(); ++i) {
        if (i) out += ' ';
        out += words[i].text;
    }
    return out;
}

void RecordingTimeline::normalize() {
    for (auto &utt : utterances) {
        if (utt.words.empty()) throw std::invalid_argument("empty utterance");
        for (size_t i = 0; i < utt.words.size(); ++i) {
            const Word &w = utt.words[i];
            if (w.text.empty()) throw std::invalid_argument("empty word text");
            if (!(w.offset > w.onset)) throw std::invalid_argument("degenerate span");
            if (i > 0 && w.onset < utt.words[i - 1].offset)
                throw std::invalid_argument("overlapping words within utterance");
        }
        if (utt.offset() > duration + 1e-9)
            throw std::invalid_argument("utterance exceeds recording duration");
    }
    std::stable_sort(utterances.begin(), utterances.end(),
                     [](const Utterance &a, const Utterance &b) {
                         if (a.onset() != b.onset()) return a.onset() < b.onset();
                         if (a.speaker != b.speaker) return a.speaker < b.speaker;
                         return a.offset() < b.offset();
                     });
    // per-speaker non-overlap
    std::vector<std::pair<std::string, Interval>> spans;
    for (const auto &utt : utterances) spans.push_back({utt.speaker, {utt.onset(), utt.offset()}});
    std::stable_sort(spans.begin(), spans.end(), [](const auto &a, const auto &b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second.onset < b.second.onset;
    });
    for (size_t i = 1; i < spans.size(); ++i) {
        if (spans[i].first == spans[i - 1].first &&
            spans[i].second.onset < spans[i - 1].second.offset - 1e-9)
            throw std::invalid_argument("overlapping utterances for speaker " + spans[i].first);
    }
}

std::vector<std::string> RecordingTimeline::speakers() const {
    std::vector<std::string> out;
    for (const auto &utt : utterances)
        if (std::find(out.begin(), out.end(), utt.speaker) == out.end())
            out.push_back(utt.speaker);
    return out;
}

std::vector<Word> approximate_word_boundaries(const std::string &text, double onset,
                                              double offset) {
    if (!(offset > onset)) throw std::invalid_argument("degenerate span");
    std::vector<std::string> tokens;
    std::istringstream iss(text);
    std::string tok;
    while (iss >> tok) tokens.push_back(tok);
    if (tokens.empty()) throw std::invalid_argument("empty utterance");

    // Word weight = character count + 1 trailing separator, last word bare.
    std::vector<double> weights(tokens.size());
    double total = 0.0;
    for (size_t i = 0; i < tokens.size(); ++i) {
        weights[i] = static_cast<double>(tokens[i].size()) + (i + 1 < tokens.size() ? 1.0 : 0.0);
        total += weights[i];
    }

    std::vector<Word> words;
    words.reserve(tokens.size());
    double span = offset - onset;
    double acc = 0.0;
    double prev = onset;
    for (size_t i = 0; i < tokens.size(); ++i) {
        acc += weights[i];
        double end = (i + 1 == tokens.size()) ? offset : onset + span * (acc / total);
        words.push_back({tokens[i], prev, end});
        prev = end;
    }
    return words;
}

namespace {

// Sweep over clipped utterance spans; reports maximal intervals whose active
// speaker count satisfies pred.
template <typename Pred>
std::vector<Interval> count_regions(const RecordingTimeline &timeline, double from, double to,
                                    Pred pred) {
    if (!(from >= 0.0 && from < to && to <= timeline.duration + 1e-9))
        throw std::invalid_argument("query range outside recording");

    // A speaker is "active" where the union of their utterance spans covers the
    // point; count speakers, not utterances.
    std::vector<std::pair<double, int>> events; // (time, +1/-1)
    std::vector<std::pair<std::string, Interval>> spans;
    for (const auto &utt : timeline.utterances) {
        double a = std::max(utt.onset(), from);
        double b = std::min(utt.offset(), to);
        if (a < b) spans.push_back({utt.speaker, {a, b}});
    }
    // merge per-speaker spans so back-to-back utterances do not double count
    std::stable_sort(spans.begin(), spans.end(), [](const auto &x, const auto &y) {
        if (x.first != y.first) return x.first < y.first;
        return x.second.onset < y.second.onset;
    });
    for (size_t i = 0; i < spans.size();) {
        size_t j = i;
        Interval cur = spans[i].second;
        while (j + 1 < spans.size() && spans[j + 1].first == spans[i].first &&
               spans[j + 1].second.onset <= cur.offset + 1e-12) {
            cur.offset = std::max(cur.offset, spans[j + 1].second.offset);
            ++j;
        }
        events.push_back({cur.onset, +1});
        events.push_back({cur.offset, -1});
        i = j + 1;
    }
    events.push_back({from, 0});
    events.push_back({to, 0});
    std::sort(events.begin(), events.end());

    std::vector<Interval> out;
    int count = 0;
    double cursor = from;
    size_t k = 0;
    while (k < events.size()) {
        double t = events[k].first;
        if (t > to) break;
        if (t > cursor + 1e-9 && pred(count)) { // ignore fp-sliver regions
            if (!out.empty() && std::abs(out.back().offset - cursor) < 1e-12)
                out.back().offset = t;
            else
                out.push_back({cursor, t});
        }
        while (k < events.size() && events[k].first == t) count += events[k++].second;
        cursor = t;
    }
    return out;
}

} // namespace

std::vector<Interval> silence_segments(const RecordingTimeline &timeline, double from,
                                       double to) {
    return count_regions(timeline, from, to, [](int c) { return c == 0; });
}

std::vector<Interval> overlap_regions(const RecordingTimeline &timeline, double from,
                                      double to) {
    return count_regions(timeline, from, to, [](int c) { return c >= 2; });
}

ActivityMap rasterize(const RecordingTimeline &timeline, double frame_step) {
    if (!(frame_step > 0.0)) throw std::invalid_argument("frame_step must be positive");
    ActivityMap map;
    map.frame_step = frame_step;
    map.speakers = timeline.speakers();
    int frames = static_cast<int>(std::ceil(timeline.duration / frame_step - 1e-9));
    map.active.assign(map.speakers.size(), std::vector<uint8_t>(frames, 0));
    for (const auto &utt : timeline.utterances) {
        size_t s = std::find(map.speakers.begin(), map.speakers.end(), utt.speaker) -
                   map.speakers.begin();
        // frame f covered iff onset <= f*step < offset
        int first = static_cast<int>(std::ceil(utt.onset() / frame_step - 1e-9));
        int last = static_cast<int>(std::ceil(utt.offset() / frame_step - 1e-9)); // exclusive
        for (int f = std::max(first, 0); f < std::min(last, frames); ++f)
            map.active[s][f] = 1;
    }
    return map;
}

} // namespace slidar
