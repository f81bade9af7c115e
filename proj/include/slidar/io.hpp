#pragma once

#include "slidar/metrics.hpp"
#include "slidar/simulator.hpp"
#include "slidar/stitching.hpp"
#include "slidar/timeline.hpp"
#include "slidar/windowing.hpp"

#include <iosfwd>
#include <string>

namespace slidar {

// RTTM speaker segments:
// "SPEAKER <rec> 1 <tbeg> <tdur> <NA> <NA> <spk> <NA> <NA>", 2 decimals.
void write_rttm(std::ostream &out, const RecordingTimeline &timeline);
// Segments become single-word utterances ("<unk>") so the result can feed
// DER scoring; duration is inferred from the last segment unless given.
RecordingTimeline read_rttm(std::istream &in, double duration = 0.0);

// Canonical ground-truth annotation document (JSON):
// {recording_id, duration, utterances: [{speaker, words: [{text, onset, offset}]}]}
std::string timeline_to_json(const RecordingTimeline &timeline);
RecordingTimeline timeline_from_json(const std::string &text);

// Meeting document: canonical timeline plus oracle centroids and lexicon.
std::string meeting_to_json(const Meeting &meeting);
Meeting meeting_from_json(const std::string &text);

// CTM-style word list: "rec 1 tbeg tdur word speaker"
void write_ctm(std::ostream &out, const RecordingTimeline &timeline);

// WindowPlan dump, one line per window: "idx onset length overlap"
void write_plan(std::ostream &out, const WindowPlan &plan);

std::string der_report_to_json(const DerReport &report);
std::string cpwer_report_to_json(const CpWerReport &report);

std::string read_file(const std::string &path);
void write_file(const std::string &path, const std::string &content);

} // namespace slidar
