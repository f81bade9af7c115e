#include "slidar/io.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

namespace slidar {

using nlohmann::json;

void write_rttm(std::ostream &out, const RecordingTimeline &timeline) {
    out << std::fixed << std::setprecision(2);
    for (const auto &utt : timeline.utterances) {
        out << "SPEAKER " << timeline.recording_id << " 1 " << utt.onset() << ' '
            << (utt.offset() - utt.onset()) << " <NA> <NA> " << utt.speaker << " <NA> <NA>\n";
    }
}

RecordingTimeline read_rttm(std::istream &in, double duration) {
    RecordingTimeline timeline;
    std::string line;
    double max_offset = 0.0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == ';') continue;
        std::istringstream ls(line);
        std::string type, rec, chan, na;
        double tbeg = 0.0, tdur = 0.0;
        std::string speaker;
        if (!(ls >> type >> rec >> chan >> tbeg >> tdur >> na >> na >> speaker))
            throw std::runtime_error("malformed RTTM line: " + line);
        if (type != "SPEAKER") continue;
        if (timeline.recording_id.empty()) timeline.recording_id = rec;
        Utterance utt;
        utt.speaker = speaker;
        utt.words.push_back({"<unk>", tbeg, tbeg + tdur});
        timeline.utterances.push_back(std::move(utt));
        max_offset = std::max(max_offset, tbeg + tdur);
    }
    timeline.duration = duration > 0.0 ? duration : max_offset;
    timeline.normalize();
    return timeline;
}

static json timeline_json(const RecordingTimeline &timeline) {
    json utts = json::array();
    for (const auto &utt : timeline.utterances) {
        json words = json::array();
        for (const auto &w : utt.words)
            words.push_back({{"text", w.text}, {"onset", w.onset}, {"offset", w.offset}});
        utts.push_back({{"speaker", utt.speaker}, {"words", words}});
    }
    return {{"recording_id", timeline.recording_id},
            {"duration", timeline.duration},
            {"utterances", utts}};
}

static RecordingTimeline timeline_from(const json &doc) {
    RecordingTimeline timeline;
    timeline.recording_id = doc.at("recording_id").get<std::string>();
    timeline.duration = doc.at("duration").get<double>();
    for (const auto &u : doc.at("utterances")) {
        Utterance utt;
        utt.speaker = u.at("speaker").get<std::string>();
        for (const auto &w : u.at("words"))
            utt.words.push_back({w.at("text").get<std::string>(), w.at("onset").get<double>(),
                                 w.at("offset").get<double>()});
        timeline.utterances.push_back(std::move(utt));
    }
    timeline.normalize();
    return timeline;
}

std::string timeline_to_json(const RecordingTimeline &timeline) {
    return timeline_json(timeline).dump(2);
}

RecordingTimeline timeline_from_json(const std::string &text) {
    return timeline_from(json::parse(text));
}

std::string meeting_to_json(const Meeting &meeting) {
    json centroids = json::object();
    for (const auto &[name, vec] : meeting.centroids) centroids[name] = vec;
    json doc = {{"timeline", timeline_json(meeting.timeline)},
                {"centroids", centroids},
                {"lexicon", meeting.lexicon}};
    return doc.dump(2);
}

Meeting meeting_from_json(const std::string &text) {
    json doc = json::parse(text);
    Meeting meeting;
    meeting.timeline = timeline_from(doc.at("timeline"));
    for (const auto &[name, vec] : doc.at("centroids").items())
        meeting.centroids[name] = vec.get<Vec>();
    meeting.lexicon = doc.at("lexicon").get<std::vector<std::string>>();
    return meeting;
}

void write_ctm(std::ostream &out, const RecordingTimeline &timeline) {
    out << std::fixed << std::setprecision(2);
    for (const auto &utt : timeline.utterances)
        for (const auto &w : utt.words)
            out << timeline.recording_id << " 1 " << w.onset << ' ' << (w.offset - w.onset)
                << ' ' << w.text << ' ' << utt.speaker << '\n';
}

void write_plan(std::ostream &out, const WindowPlan &plan) {
    out << std::fixed << std::setprecision(2);
    for (size_t i = 0; i < plan.windows.size(); ++i) {
        const auto &w = plan.windows[i];
        out << w.index << ' ' << w.onset << ' ' << w.length << ' '
            << plan.overlap_with_previous[i] << '\n';
    }
}

std::string der_report_to_json(const DerReport &report) {
    json doc = {{"SC", report.speaker_confusion},
                {"MS", report.missed_speech},
                {"FA", report.false_alarm},
                {"DER", report.der},
                {"scored_time", report.scored_time}};
    return doc.dump(2);
}

std::string cpwer_report_to_json(const CpWerReport &report) {
    json pairs = json::array();
    for (const auto &p : report.assignment)
        pairs.push_back({{"reference", p.reference_speaker},
                         {"hypothesis", p.hypothesis_speaker},
                         {"errors", p.errors},
                         {"reference_words", p.reference_words}});
    json doc = {{"cpWER", report.cpwer},
                {"total_errors", report.total_errors},
                {"total_reference_words", report.total_reference_words},
                {"assignment", pairs}};
    return doc.dump(2);
}

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string &path, const std::string &content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

} // namespace slidar
