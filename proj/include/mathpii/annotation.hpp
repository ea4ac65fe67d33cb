#pragma once

#include "mathpii/pii_type.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mathpii {

enum class Verdict { Pii, NotPii, Uncertain };
enum class VoteDirection { Up, Down };
enum class ItemStatus { Pending, Approved, Rejected, Overridden };

std::string_view to_string(Verdict v);
std::string_view to_string(VoteDirection d);
std::string_view to_string(ItemStatus s);

// Accepts "PII" / "NOT_PII" / "UNCERTAIN" and the audit table spellings
// ("Not PII", "Uncertain", ...), case-insensitively.
std::optional<Verdict> try_parse_verdict(std::string_view text);
Verdict parse_verdict(std::string_view text);
VoteDirection parse_vote_direction(std::string_view text);
ItemStatus parse_item_status(std::string_view text);

struct Vote {
    std::string reviewer_id;
    VoteDirection direction = VoteDirection::Up;
    std::int64_t timestamp_ms = 0;
    std::optional<std::string> note;
    int iteration = 1;

    bool operator==(const Vote&) const = default;
};

// One audit judgment over either an existing redaction (span_start/span_end
// locate the placeholder label) or a newly discovered PII mention
// (`discovered`, with ai_redacted_content and the detected text).
struct AnnotationItem {
    std::string id;
    std::string session_id;
    std::size_t message_index = 0;
    PiiType pii_type = PiiType::Person;
    std::optional<std::string> ai_redacted_content;
    Verdict evaluation = Verdict::Uncertain;
    // Surrogate for PII/UNCERTAIN, context replacement for NOT_PII.
    std::optional<std::string> surrogate;
    int iteration = 1;
    std::vector<Vote> votes;
    ItemStatus status = ItemStatus::Pending;

    bool discovered = false;
    std::optional<std::size_t> span_start;
    std::optional<std::size_t> span_end;
    // Placeholder literal or detected text expected at the span.
    std::optional<std::string> target_text;
    bool needs_review = false;
    std::string review_note;

    bool has_vote(std::string_view reviewer, int iter) const;
    bool has_down_vote(int iter) const;
    bool has_up_vote(int iter) const;
    bool operator==(const AnnotationItem&) const = default;
};

// The verdict/surrogate invariant: PII and UNCERTAIN need a surrogate,
// existing NOT_PII redactions need replacement content.
bool item_is_complete(const AnnotationItem& item);

nlohmann::ordered_json to_json(const Vote& vote);
Vote vote_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const AnnotationItem& item);
AnnotationItem item_from_json(const nlohmann::json& j);

// Annotation store: JSONL, one AnnotationItem per line.
std::vector<AnnotationItem> read_items(std::istream& in, std::string_view source = "<stream>");
std::vector<AnnotationItem> load_items(const std::filesystem::path& path);
void write_items(const std::vector<AnnotationItem>& items, std::ostream& out);
void write_items(const std::vector<AnnotationItem>& items, const std::filesystem::path& path, bool append = false);

// Latest iteration of each item id, in first-seen order.
std::vector<AnnotationItem> latest_items(const std::vector<AnnotationItem>& items);

}  // namespace mathpii
