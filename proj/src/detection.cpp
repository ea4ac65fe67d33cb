#include "mathpii/detection.hpp"

#include "mathpii/errors.hpp"
#include "mathpii/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace mathpii {

std::string_view to_string(ParseStatus s) {
    switch (s) {
        case ParseStatus::Ok: return "OK";
        case ParseStatus::Malformed: return "MALFORMED";
        case ParseStatus::Empty: return "EMPTY";
    }
    return "OK";
}

ParseStatus parse_parse_status(std::string_view text) {
    if (text == "OK") return ParseStatus::Ok;
    if (text == "MALFORMED") return ParseStatus::Malformed;
    if (text == "EMPTY") return ParseStatus::Empty;
    throw ValidationError("unknown parse status '" + std::string(text) + "'");
}

const MessageDetections* DetectionResult::find(std::size_t message_index) const {
    auto it = std::lower_bound(messages.begin(), messages.end(), message_index,
                               [](const MessageDetections& m, std::size_t i) { return m.index < i; });
    if (it != messages.end() && it->index == message_index) return &*it;
    // Unsorted input still resolves.
    for (const auto& m : messages)
        if (m.index == message_index) return &m;
    return nullptr;
}

void write_results(const std::vector<DetectionResult>& results, std::ostream& out) {
    for (const auto& r : results) {
        nlohmann::ordered_json j;
        j["session_id"] = r.session_id;
        j["engine"] = r.engine;
        auto& msgs = j["messages"] = nlohmann::ordered_json::array();
        for (const auto& m : r.messages) {
            nlohmann::ordered_json jm;
            jm["index"] = m.index;
            jm["status"] = to_string(m.status);
            jm["attempts"] = m.attempts;
            auto& dets = jm["detections"] = nlohmann::ordered_json::array();
            for (const auto& d : m.detections) {
                nlohmann::ordered_json jd;
                jd["text"] = d.text;
                jd["type"] = to_string(d.type);
                if (d.start && d.end) {
                    jd["start"] = *d.start;
                    jd["end"] = *d.end;
                }
                dets.push_back(std::move(jd));
            }
            if (!m.warnings.empty()) jm["warnings"] = m.warnings;
            msgs.push_back(std::move(jm));
        }
        out << j.dump() << '\n';
    }
}

void write_results(const std::vector<DetectionResult>& results, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write detection results '" + path.string() + "'");
    write_results(results, out);
}

std::vector<DetectionResult> read_results(std::istream& in, std::string_view source) {
    std::vector<DetectionResult> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_whitespace(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            DetectionResult r;
            r.session_id = j.at("session_id").get<std::string>();
            r.engine = j.value("engine", std::string());
            for (const auto& jm : j.at("messages")) {
                MessageDetections m;
                m.index = jm.at("index").get<std::size_t>();
                m.status = parse_parse_status(jm.value("status", std::string("OK")));
                m.attempts = jm.value("attempts", 0);
                for (const auto& jd : jm.value("detections", nlohmann::json::array())) {
                    Detection d;
                    d.text = jd.at("text").get<std::string>();
                    d.type = parse_pii_type(jd.at("type").get<std::string>());
                    if (jd.contains("start") && jd.contains("end")) {
                        d.start = jd["start"].get<std::size_t>();
                        d.end = jd["end"].get<std::size_t>();
                    }
                    m.detections.push_back(std::move(d));
                }
                m.warnings = jm.value("warnings", std::vector<std::string>{});
                r.messages.push_back(std::move(m));
            }
            std::sort(r.messages.begin(), r.messages.end(),
                      [](const MessageDetections& a, const MessageDetections& b) { return a.index < b.index; });
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw ValidationError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<DetectionResult> load_results(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open detection results '" + path.string() + "'");
    return read_results(in, path.string());
}

}  // namespace mathpii
