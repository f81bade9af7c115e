#include "slidar/simulator.hpp"

#include "slidar/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slidar {

std::vector<std::string> default_lexicon() {
    return {
        "the",    "a",      "and",     "to",      "of",      "in",     "we",      "is",
        "that",   "it",     "for",     "on",      "this",    "with",   "you",     "i",
        "have",   "be",     "at",      "so",      "but",     "they",   "not",     "what",
        "all",    "can",    "had",     "her",     "was",     "one",    "our",     "out",
        "day",    "get",    "has",     "him",     "his",     "how",    "man",     "new",
        "now",    "old",    "see",     "two",     "way",     "who",    "did",     "its",
        "let",    "say",    "she",     "too",     "use",     "think",  "meeting", "project",
        "design", "issue",  "point",   "right",   "okay",    "maybe",  "agree",   "budget",
        "report", "action", "item",    "week",    "next",    "first",  "second",  "third",
        "start",  "finish", "done",    "plan",    "idea",    "good",   "great",   "sure",
        "yes",    "no",     "well",    "just",    "really",  "about",  "there",   "here",
        "when",   "where",  "why",     "because", "should",  "could",  "would",   "might",
        "team",   "work",   "time",    "people",  "need",    "make",   "know",    "like",
        "going",  "want",   "look",    "come",    "take",    "year",   "back",    "only",
        "over",   "also",   "after",   "most",    "other",   "then",   "some",    "these",
    };
}

namespace {

double snap(double t, double grid) { return std::round(t / grid) * grid; }

} // namespace

Meeting simulate(const MeetingSpec &spec) {
    if (spec.duration <= 0.0) throw std::invalid_argument("duration must be positive");
    if (spec.num_speakers < 1) throw std::invalid_argument("need at least one speaker");
    if (spec.overlap_probability < 0.0 || spec.overlap_probability > 1.0)
        throw std::invalid_argument("overlap probability outside [0, 1]");

    Meeting meeting;
    meeting.lexicon = spec.lexicon.empty() ? default_lexicon() : spec.lexicon;
    Rng rng(hash_combine(spec.seed, 0x51dab));

    // centroids: unit-norm with bounded pairwise cosine similarity
    std::vector<std::string> names;
    for (int s = 0; s < spec.num_speakers; ++s)
        names.push_back(std::string(1, static_cast<char>('A' + s)));
    std::vector<Vec> centroids;
    for (int s = 0; s < spec.num_speakers; ++s) {
        bool placed = false;
        for (int attempt = 0; attempt < spec.centroid_retries && !placed; ++attempt) {
            Vec c(spec.embedding_dim);
            for (double &v : c) v = rng.normal();
            double len = norm(c);
            if (len == 0.0) continue;
            for (double &v : c) v /= len;
            placed = true;
            for (const auto &other : centroids)
                if (dot(c, other) > spec.max_centroid_cosine_similarity) placed = false;
            if (placed) centroids.push_back(std::move(c));
        }
        if (!placed) throw std::runtime_error("unsatisfiable centroid separation");
    }
    for (int s = 0; s < spec.num_speakers; ++s) meeting.centroids[names[s]] = centroids[s];

    // turn taking
    const double grid = spec.time_grid;
    RecordingTimeline &timeline = meeting.timeline;
    timeline.recording_id = spec.recording_id;
    timeline.duration = spec.duration;

    std::vector<double> speaker_free_at(spec.num_speakers, 0.0);
    double frontier = snap(rng.exponential(spec.mean_pause_length), grid);
    double prev_duration = 0.0;
    int last_speaker = -1;

    while (frontier < spec.duration - grid) {
        int spk = static_cast<int>(rng.uniform_int(spec.num_speakers));
        double dur = std::clamp(rng.exponential(spec.mean_utterance_length), grid,
                                spec.max_utterance_length);
        dur = std::max(snap(dur, grid), grid);

        double onset;
        if (last_speaker >= 0 && spk != last_speaker &&
            rng.uniform() < spec.overlap_probability) {
            // pull the onset before the previous offset
            double overlap = rng.uniform() * 0.8 * std::min(prev_duration, dur);
            onset = frontier - overlap;
        } else {
            onset = frontier + rng.exponential(spec.mean_pause_length);
        }
        onset = snap(std::max(onset, 0.0), grid);
        onset = std::max(onset, speaker_free_at[spk]); // per-speaker non-overlap
        if (onset + dur > spec.duration) dur = snap(spec.duration - onset, grid);
        if (dur < grid || onset >= spec.duration) break;

        int word_count = std::max<int>(1, static_cast<int>(std::llround(
                                              dur * spec.words_per_second)));
        std::string text;
        for (int w = 0; w < word_count; ++w) {
            if (w) text += ' ';
            text += meeting.lexicon[rng.uniform_int(meeting.lexicon.size())];
        }

        Utterance utt;
        utt.speaker = names[spk];
        utt.words = approximate_word_boundaries(text, onset, onset + dur);
        timeline.utterances.push_back(std::move(utt));

        speaker_free_at[spk] = onset + dur;
        frontier = std::max(frontier, onset + dur);
        prev_duration = dur;
        last_speaker = spk;
    }

    timeline.normalize();
    return meeting;
}

} // namespace slidar
