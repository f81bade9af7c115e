#include "slidar/simulator.hpp"

#include "slidar/io.hpp"
#include "slidar/speaker_embeddings.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace slidar;

TEST_SUITE("simulator") {

TEST_CASE("fixed seed reproduces byte-identical output") {
    MeetingSpec spec;
    spec.duration = 120.0;
    spec.seed = 99;
    auto a = simulate(spec);
    auto b = simulate(spec);
    CHECK(meeting_to_json(a) == meeting_to_json(b));
    spec.seed = 100;
    CHECK(meeting_to_json(simulate(spec)) != meeting_to_json(a));
}

TEST_CASE("zero overlap probability yields no overlapped speech") {
    MeetingSpec spec;
    spec.duration = 300.0;
    spec.overlap_probability = 0.0;
    spec.seed = 5;
    auto meeting = simulate(spec);
    CHECK(overlap_regions(meeting.timeline, 0.0, spec.duration).empty());
}

TEST_CASE("overlap fraction grows with overlap probability") {
    auto measured = [](double p, uint64_t seed) {
        MeetingSpec spec;
        spec.duration = 300.0;
        spec.overlap_probability = p;
        spec.seed = seed;
        auto meeting = simulate(spec);
        double total = 0.0;
        for (const auto &r : overlap_regions(meeting.timeline, 0.0, spec.duration))
            total += r.offset - r.onset;
        return total / spec.duration;
    };
    double lo = 0.0, mid = 0.0, hi = 0.0;
    for (uint64_t s = 0; s < 10; ++s) {
        lo += measured(0.0, s);
        mid += measured(0.3, s);
        hi += measured(0.7, s);
    }
    CHECK(lo < mid);
    CHECK(mid < hi);
}

TEST_CASE("centroids are unit norm and separated") {
    MeetingSpec spec;
    spec.duration = 60.0;
    spec.num_speakers = 5;
    spec.seed = 12;
    auto meeting = simulate(spec);
    REQUIRE(meeting.centroids.size() == 5);
    std::vector<Vec> cents;
    for (const auto &[name, c] : meeting.centroids) {
        CHECK(norm(c) == doctest::Approx(1.0));
        cents.push_back(c);
    }
    for (size_t i = 0; i < cents.size(); ++i)
        for (size_t j = i + 1; j < cents.size(); ++j)
            CHECK(dot(cents[i], cents[j]) <= spec.max_centroid_cosine_similarity + 1e-12);
}

TEST_CASE("unsatisfiable centroid separation errors out") {
    MeetingSpec spec;
    spec.duration = 60.0;
    spec.num_speakers = 6;
    spec.embedding_dim = 2;
    spec.max_centroid_cosine_similarity = -0.9; // impossible for 6 vectors in 2-D
    spec.centroid_retries = 50;
    CHECK_THROWS_WITH(simulate(spec), "unsatisfiable centroid separation");
}

TEST_CASE("structural invariants of simulated meetings") {
    MeetingSpec spec;
    spec.duration = 240.0;
    spec.seed = 21;
    auto meeting = simulate(spec);
    const auto &t = meeting.timeline;
    CHECK(t.duration == spec.duration);
    CHECK(!t.utterances.empty());
    CHECK(t.speakers().size() <= static_cast<size_t>(spec.num_speakers));
    for (const auto &utt : t.utterances) {
        double len = utt.offset() - utt.onset();
        CHECK(len <= spec.max_utterance_length + 1e-9);
        CHECK(len >= spec.time_grid - 1e-9);
        // utterance boundaries snap to the token time grid
        CHECK(std::abs(utt.onset() / spec.time_grid -
                       std::round(utt.onset() / spec.time_grid)) < 1e-6);
        CHECK(std::abs(utt.offset() / spec.time_grid -
                       std::round(utt.offset() / spec.time_grid)) < 1e-6);
        for (const auto &w : utt.words) {
            CHECK(!w.text.empty());
            bool in_lexicon = std::find(meeting.lexicon.begin(), meeting.lexicon.end(),
                                        w.text) != meeting.lexicon.end();
            CHECK(in_lexicon);
        }
    }
}

TEST_CASE("invalid specs are rejected") {
    MeetingSpec bad;
    bad.duration = 0.0;
    CHECK_THROWS(simulate(bad));
    MeetingSpec bad2;
    bad2.overlap_probability = 1.5;
    CHECK_THROWS(simulate(bad2));
    MeetingSpec bad3;
    bad3.num_speakers = 0;
    CHECK_THROWS(simulate(bad3));
}

TEST_CASE("meeting json round trips") {
    MeetingSpec spec;
    spec.duration = 60.0;
    spec.seed = 8;
    auto meeting = simulate(spec);
    auto back = meeting_from_json(meeting_to_json(meeting));
    CHECK(meeting_to_json(back) == meeting_to_json(meeting));
}

} // TEST_SUITE
