#include "mathpii/corpus.hpp"

#include "mathpii/errors.hpp"
#include "mathpii/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace mathpii {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::Upstream: return "UPSTREAM";
        case Provenance::LlmAudit: return "LLM_AUDIT";
        case Provenance::Surrogate: return "SURROGATE";
        case Provenance::Detected: return "DETECTED";
    }
    return "UPSTREAM";
}

Provenance parse_provenance(std::string_view text) {
    if (text == "UPSTREAM") return Provenance::Upstream;
    if (text == "LLM_AUDIT") return Provenance::LlmAudit;
    if (text == "SURROGATE") return Provenance::Surrogate;
    if (text == "DETECTED") return Provenance::Detected;
    throw ValidationError("unknown provenance '" + std::string(text) + "'");
}

CorpusStats corpus_stats(const Corpus& corpus) {
    CorpusStats stats;
    stats.transcripts = corpus.size();
    for (const auto& t : corpus) {
        stats.messages += t.messages.size();
        for (const auto& m : t.messages) {
            stats.labels += m.labels.size();
            for (const auto& span : m.labels) ++stats.labels_by_type[span.type];
        }
    }
    return stats;
}

namespace {

std::string where(const Transcript& t, const Message& m) {
    return "session '" + t.session_id + "' message " + std::to_string(m.index);
}

}  // namespace

void validate_transcript(Transcript& transcript) {
    if (transcript.session_id.empty()) throw ValidationError("transcript with empty session_id");
    if (transcript.messages.empty())
        throw ValidationError("session '" + transcript.session_id + "' has no messages");

    for (std::size_t i = 0; i < transcript.messages.size(); ++i) {
        auto& m = transcript.messages[i];
        if (m.index != i)
            throw ValidationError("session '" + transcript.session_id + "': message index " +
                                  std::to_string(m.index) + " at position " + std::to_string(i) +
                                  " (indices must be contiguous from 0)");
        if (!is_valid_utf8(m.text)) throw ValidationError(where(transcript, m) + ": text is not valid UTF-8");

        const OffsetMap map(m.text);
        for (const auto& span : m.labels) {
            if (span.start >= span.end || span.end > map.size())
                throw ValidationError(where(transcript, m) + ": span [" + std::to_string(span.start) + ", " +
                                      std::to_string(span.end) + ") out of bounds for text of length " +
                                      std::to_string(map.size()));
        }

        std::sort(m.labels.begin(), m.labels.end(), [](const PiiSpan& a, const PiiSpan& b) {
            if (a.start != b.start) return a.start < b.start;
            if (a.end != b.end) return a.end < b.end;
            return index_of(a.type) < index_of(b.type);
        });

        // Same-type overlaps collapse to their union; the first span's
        // provenance wins.
        std::vector<PiiSpan> merged;
        for (auto& span : m.labels) {
            auto hit = std::find_if(merged.rbegin(), merged.rend(), [&](const PiiSpan& prev) {
                return prev.type == span.type && span.start < prev.end;
            });
            if (hit != merged.rend()) {
                hit->end = std::max(hit->end, span.end);
                continue;
            }
            merged.push_back(std::move(span));
        }
        for (auto& span : merged) {
            const auto b = map.to_byte(span.start);
            span.surface = m.text.substr(b, map.to_byte(span.end) - b);
        }
        m.labels = std::move(merged);
    }
}

void validate_corpus(Corpus& corpus) {
    std::unordered_set<std::string> seen;
    for (auto& t : corpus) {
        validate_transcript(t);
        if (!seen.insert(t.session_id).second)
            throw ValidationError("duplicate session_id '" + t.session_id + "'");
    }
}

namespace {

Transcript transcript_from_json(const nlohmann::json& j) {
    Transcript t;
    t.session_id = j.at("session_id").get<std::string>();
    for (const auto& jm : j.at("messages")) {
        Message m;
        m.index = jm.at("index").get<std::size_t>();
        m.role = jm.value("role", std::string());
        m.text = jm.at("text").get<std::string>();
        if (auto it = jm.find("labels"); it != jm.end()) {
            for (const auto& jl : *it) {
                PiiSpan span;
                span.start = jl.at("start").get<std::size_t>();
                span.end = jl.at("end").get<std::size_t>();
                span.type = parse_pii_type(jl.at("type").get<std::string>());
                span.provenance = jl.contains("provenance")
                                      ? parse_provenance(jl.at("provenance").get<std::string>())
                                      : Provenance::Upstream;
                m.labels.push_back(std::move(span));
            }
        }
        t.messages.push_back(std::move(m));
    }
    return t;
}

}  // namespace

Corpus read_corpus(std::istream& in, std::string_view source) {
    Corpus corpus;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_whitespace(line).empty()) continue;
        const auto prefix = std::string(source) + ":" + std::to_string(line_no) + ": ";
        try {
            auto t = transcript_from_json(nlohmann::json::parse(line));
            validate_transcript(t);
            if (!seen.insert(t.session_id).second)
                throw ValidationError("duplicate session_id '" + t.session_id + "'");
            corpus.push_back(std::move(t));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(prefix + "malformed line: " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(prefix + e.what());
        }
    }
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open corpus '" + path.string() + "'");
    return read_corpus(in, path.string());
}

std::string transcript_to_json_line(const Transcript& transcript) {
    ordered_json j;
    j["session_id"] = transcript.session_id;
    j["messages"] = ordered_json::array();
    for (const auto& m : transcript.messages) {
        ordered_json jm;
        jm["index"] = m.index;
        jm["role"] = m.role;
        jm["text"] = m.text;
        jm["labels"] = ordered_json::array();
        for (const auto& span : m.labels) {
            jm["labels"].push_back({{"start", span.start},
                                    {"end", span.end},
                                    {"type", to_string(span.type)},
                                    {"provenance", to_string(span.provenance)}});
        }
        j["messages"].push_back(std::move(jm));
    }
    return j.dump();
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
    for (const auto& t : corpus) out << transcript_to_json_line(t) << '\n';
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write corpus '" + path.string() + "'");
    write_corpus(corpus, out);
    out.flush();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

const Transcript* find_transcript(const Corpus& corpus, std::string_view session_id) {
    for (const auto& t : corpus)
        if (t.session_id == session_id) return &t;
    return nullptr;
}

}  // namespace mathpii
