#pragma once

#include "mathpii/pii_type.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mathpii {

enum class Provenance { Upstream, LlmAudit, Surrogate, Detected };

std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view text);

// A labeled character range of a message. Offsets count Unicode scalar values;
// `surface` always equals text[start, end).
struct PiiSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string surface;
    PiiType type = PiiType::Person;
    Provenance provenance = Provenance::Upstream;

    bool operator==(const PiiSpan&) const = default;
};

struct Message {
    std::size_t index = 0;
    std::string role;
    std::string text;
    std::vector<PiiSpan> labels;

    bool operator==(const Message&) const = default;
};

struct Transcript {
    std::string session_id;
    std::vector<Message> messages;

    bool operator==(const Transcript&) const = default;
};

using Corpus = std::vector<Transcript>;

struct CorpusStats {
    std::size_t transcripts = 0;
    std::size_t messages = 0;
    std::size_t labels = 0;
    std::map<PiiType, std::size_t> labels_by_type;
};

CorpusStats corpus_stats(const Corpus& corpus);

// Checks every invariant of one transcript and normalizes it in place: spans
// are sorted, surfaces are recomputed from the text, and overlapping spans of
// the same type are merged to their union. Throws ValidationError naming the
// session and message.
void validate_transcript(Transcript& transcript);

// Full corpus check (per-transcript rules plus session_id uniqueness).
void validate_corpus(Corpus& corpus);

// JSONL, one transcript per line. Blank lines are skipped. Errors carry the
// 1-based line number; `source` names the input in messages.
Corpus read_corpus(std::istream& in, std::string_view source = "<stream>");
Corpus load_corpus(const std::filesystem::path& path);

void write_corpus(const Corpus& corpus, std::ostream& out);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

std::string transcript_to_json_line(const Transcript& transcript);

// Lookup helpers used by the evaluation and surrogation modules.
const Transcript* find_transcript(const Corpus& corpus, std::string_view session_id);

}  // namespace mathpii
