#pragma once

#include "mathpii/corpus.hpp"
#include "mathpii/detection.hpp"
#include "mathpii/gateway.hpp"
#include "mathpii/prompts.hpp"
#include "mathpii/segmentation.hpp"

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mathpii {

inline constexpr std::size_t kDefaultContextRadius = 3;

// User payload for one target message: JSON (2-space indent) with
// "context_before", "message", "context_after". Each entry holds index, role,
// and text; the target additionally holds "math_label" when one is given.
std::string build_user_payload(const Transcript& transcript, std::size_t message_index, std::size_t radius,
                               std::optional<SegmentLabel> math_label);

// Throws ConfigError for SEGMENT_AWARE without a math label.
GatewayRequest build_prompt(PromptVariant variant, const Transcript& transcript, std::size_t message_index,
                            std::optional<SegmentLabel> math_label, std::string model_id,
                            std::size_t radius = kDefaultContextRadius);

struct LlmDetection {
    std::size_t message_index = 0;
    std::vector<Detection> detections;  // text and type only; offsets come from grounding
    ParseStatus status = ParseStatus::Ok;
};

// Total: never throws. Takes the first balanced JSON array in the text that
// parses and is either empty or holds at least one usable element: an object
// with a non-empty string "text" and a "type" under the taxonomy (alias
// COURSE accepted). Unusable elements are dropped. Whitespace-only input is
// EMPTY; input without such an array is MALFORMED. Only the first 64 '['
// positions outside already parsed arrays are tried.
LlmDetection parse_detections(std::string_view raw_text);

// Adds scalar offsets for the first exact occurrence of each detection text,
// falling back to an ASCII case-insensitive search. Unlocatable detections
// keep no offsets.
void ground_detections(std::string_view message_text, std::vector<Detection>& detections);

struct LlmRunOptions {
    PromptVariant variant = PromptVariant::Basic;
    const SegmentLabeling* labeling = nullptr;
    std::string model_id;
    std::size_t concurrency = 8;
    std::size_t context_radius = kDefaultContextRadius;
    RetryPolicy retry;
};

struct LlmRunSummary {
    std::size_t requests_total = 0;
    std::size_t requests_completed = 0;
    std::size_t malformed = 0;
    std::size_t empty = 0;
    std::size_t failed = 0;  // MALFORMED because every attempt failed
};

// Carries what was finished before an auth or config failure stopped the run.
class RunAborted : public std::runtime_error {
public:
    RunAborted(const std::string& what, LlmRunSummary summary)
        : std::runtime_error(what), summary_(summary) {}
    const LlmRunSummary& summary() const { return summary_; }

private:
    LlmRunSummary summary_;
};

std::string engine_id(PromptVariant variant, std::string_view model_id);

// One request per message with non-blank text; blank messages are EMPTY with
// zero attempts. Results keep transcript and message order regardless of the
// worker count.
std::vector<DetectionResult> detect_llm_corpus(const Corpus& corpus, ChatClient& client, const LlmRunOptions& options,
                                               LlmRunSummary* summary = nullptr);

}  // namespace mathpii
