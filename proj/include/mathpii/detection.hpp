#pragma once

#include "mathpii/pii_type.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mathpii {

// One predicted PII mention. Offsets (scalar values) are present when the
// engine produced them or when the text could be grounded in the message.
struct Detection {
    std::string text;
    PiiType type = PiiType::Person;
    std::optional<std::size_t> start;
    std::optional<std::size_t> end;

    bool operator==(const Detection&) const = default;
};

enum class ParseStatus { Ok, Malformed, Empty };

std::string_view to_string(ParseStatus s);
ParseStatus parse_parse_status(std::string_view text);

struct MessageDetections {
    std::size_t index = 0;
    std::vector<Detection> detections;
    ParseStatus status = ParseStatus::Ok;
    int attempts = 0;
    std::vector<std::string> warnings;

    bool operator==(const MessageDetections&) const = default;
};

struct DetectionResult {
    std::string session_id;
    std::string engine;
    std::vector<MessageDetections> messages;  // ascending index

    const MessageDetections* find(std::size_t message_index) const;
    bool operator==(const DetectionResult&) const = default;
};

// JSONL, one result per transcript:
// {"session_id", "engine", "messages": [{"index", "status", "attempts",
//   "detections": [{"text", "type", "start"?, "end"?}], "warnings": [...]}]}
void write_results(const std::vector<DetectionResult>& results, std::ostream& out);
void write_results(const std::vector<DetectionResult>& results, const std::filesystem::path& path);
std::vector<DetectionResult> read_results(std::istream& in, std::string_view source = "<stream>");
std::vector<DetectionResult> load_results(const std::filesystem::path& path);

}  // namespace mathpii
