#include "mathpii/llm_detection.hpp"

#include "mathpii/errors.hpp"
#include "mathpii/parallel.hpp"
#include "mathpii/text.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <mutex>

namespace mathpii {

namespace {

nlohmann::ordered_json message_json(const Message& m) {
    nlohmann::ordered_json j;
    j["index"] = m.index;
    j["role"] = m.role;
    j["text"] = m.text;
    return j;
}

}  // namespace

std::string build_user_payload(const Transcript& transcript, std::size_t message_index, std::size_t radius,
                               std::optional<SegmentLabel> math_label) {
    const auto& msgs = transcript.messages;
    if (message_index >= msgs.size())
        throw ValidationError("message " + std::to_string(message_index) + " out of range in session " +
                              transcript.session_id);
    nlohmann::ordered_json j;
    auto& before = j["context_before"] = nlohmann::ordered_json::array();
    for (std::size_t i = message_index > radius ? message_index - radius : 0; i < message_index; ++i)
        before.push_back(message_json(msgs[i]));
    auto target = message_json(msgs[message_index]);
    if (math_label) target["math_label"] = to_string(*math_label);
    j["message"] = std::move(target);
    auto& after = j["context_after"] = nlohmann::ordered_json::array();
    for (std::size_t i = message_index + 1; i < msgs.size() && i <= message_index + radius; ++i)
        after.push_back(message_json(msgs[i]));
    return j.dump(2);
}

GatewayRequest build_prompt(PromptVariant variant, const Transcript& transcript, std::size_t message_index,
                            std::optional<SegmentLabel> math_label, std::string model_id, std::size_t radius) {
    if (variant == PromptVariant::SegmentAware && !math_label)
        throw ConfigError("SEGMENT_AWARE prompt requires a math label for session " + transcript.session_id +
                          " message " + std::to_string(message_index));
    if (variant != PromptVariant::SegmentAware) math_label.reset();
    GatewayRequest req;
    req.model_id = std::move(model_id);
    req.system_text = std::string(detection_prompt(variant));
    req.user_text = build_user_payload(transcript, message_index, radius, math_label);
    return req;
}

namespace {

// End of the balanced bracket group opening at `open`, honoring JSON string
// escapes; npos when unbalanced.
std::size_t matching_close(std::string_view s, std::size_t open) {
    std::size_t depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (c == '\\')
                ++i;
            else if (c == '"')
                in_string = false;
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '[' || c == '{') {
            ++depth;
        } else if (c == ']' || c == '}') {
            if (depth == 0) return std::string_view::npos;
            if (--depth == 0) return c == ']' ? i : std::string_view::npos;
        }
    }
    return std::string_view::npos;
}

// Bracket positions tried before the output is declared MALFORMED; keeps the
// scan linear in the output length.
constexpr std::size_t kMaxArrayCandidates = 64;

}  // namespace

LlmDetection parse_detections(std::string_view raw_text) {
    LlmDetection out;
    if (trim_whitespace(raw_text).empty()) {
        out.status = ParseStatus::Empty;
        return out;
    }
    out.status = ParseStatus::Malformed;
    try {
        std::size_t candidates = 0;
        std::size_t next = raw_text.find('[');
        while (next != std::string_view::npos && candidates++ < kMaxArrayCandidates) {
            const auto pos = next;
            next = raw_text.find('[', pos + 1);
            const auto close = matching_close(raw_text, pos);
            if (close == std::string_view::npos) continue;
            auto parsed = nlohmann::json::parse(raw_text.substr(pos, close - pos + 1), nullptr, false);
            if (parsed.is_discarded() || !parsed.is_array()) continue;
            // Arrays nested in a well-formed one are not candidates of their own.
            next = raw_text.find('[', close + 1);
            std::size_t usable = 0;
            for (const auto& el : parsed) {
                if (!el.is_object()) continue;
                auto t = el.find("text");
                auto ty = el.find("type");
                if (t == el.end() || ty == el.end() || !t->is_string() || !ty->is_string()) continue;
                const auto text = t->get<std::string>();
                const auto type = try_parse_pii_type(ty->get<std::string>());
                if (!type || trim_whitespace(text).empty() || !is_valid_utf8(text)) continue;
                out.detections.push_back(Detection{text, *type, std::nullopt, std::nullopt});
                ++usable;
            }
            // An array with no usable element (e.g. a "[1]" footnote in prose)
            // does not end the search.
            if (parsed.empty() || usable > 0) {
                out.status = ParseStatus::Ok;
                return out;
            }
        }
    } catch (...) {
        out.detections.clear();
        out.status = ParseStatus::Malformed;
    }
    return out;
}

void ground_detections(std::string_view message_text, std::vector<Detection>& detections) {
    const OffsetMap map(message_text);
    std::string lowered;
    for (auto& d : detections) {
        auto b = message_text.find(d.text);
        if (b == std::string_view::npos) {
            if (lowered.empty()) lowered = ascii_lower(message_text);
            b = lowered.find(ascii_lower(d.text));
        }
        if (b == std::string_view::npos || d.text.empty()) {
            d.start.reset();
            d.end.reset();
            continue;
        }
        d.start = map.to_codepoint(b);
        d.end = map.to_codepoint(b + d.text.size());
    }
}

std::string engine_id(PromptVariant variant, std::string_view model_id) {
    std::string id = "llm:";
    id += to_string(variant);
    if (!model_id.empty()) {
        id += ':';
        id += model_id;
    }
    return id;
}

std::vector<DetectionResult> detect_llm_corpus(const Corpus& corpus, ChatClient& client, const LlmRunOptions& options,
                                               LlmRunSummary* summary_out) {
    if (options.variant == PromptVariant::SegmentAware) {
        if (!options.labeling) throw ConfigError("SEGMENT_AWARE detection requires a segment labeling");
        if (!options.labeling->covers(corpus))
            throw ConfigError("segment labeling does not cover every transcript of the corpus");
    }

    std::vector<DetectionResult> results(corpus.size());
    struct Job {
        std::size_t t, m;
    };
    std::vector<Job> jobs;
    for (std::size_t t = 0; t < corpus.size(); ++t) {
        results[t].session_id = corpus[t].session_id;
        results[t].engine = engine_id(options.variant, options.model_id);
        results[t].messages.resize(corpus[t].messages.size());
        for (std::size_t m = 0; m < corpus[t].messages.size(); ++m) {
            auto& slot = results[t].messages[m];
            slot.index = corpus[t].messages[m].index;
            if (trim_whitespace(corpus[t].messages[m].text).empty()) {
                slot.status = ParseStatus::Empty;
                slot.attempts = 0;
            } else {
                jobs.push_back({t, m});
            }
        }
    }

    LlmRunSummary summary;
    summary.requests_total = jobs.size();
    std::atomic<std::size_t> completed{0}, malformed{0}, empty{0}, failed{0};
    std::atomic<bool> abort{false};
    std::string abort_reason;
    std::mutex abort_mutex;

    const unsigned workers = static_cast<unsigned>(std::max<std::size_t>(1, options.concurrency));
    parallel_for(jobs.size(), workers, [&](std::size_t j) {
        if (abort.load()) return;
        const auto [t, m] = jobs[j];
        const auto& tr = corpus[t];
        std::optional<SegmentLabel> label;
        if (options.variant == PromptVariant::SegmentAware)
            label = options.labeling->label(tr.session_id, tr.messages[m].index);
        auto request = build_prompt(options.variant, tr, m, label, options.model_id, options.context_radius);
        request.max_attempts = options.retry.max_attempts;
        auto& slot = results[t].messages[m];
        try {
            const auto resp = complete_with_retry(client, request, options.retry);
            auto parsed = parse_detections(resp.raw_text);
            ground_detections(tr.messages[m].text, parsed.detections);
            slot.detections = std::move(parsed.detections);
            slot.status = parsed.status;
            slot.attempts = resp.attempts;
            if (parsed.status == ParseStatus::Malformed) ++malformed;
            if (parsed.status == ParseStatus::Empty) ++empty;
            ++completed;
        } catch (const GatewayError& e) {
            if (e.fatal()) {
                std::lock_guard lock(abort_mutex);
                if (!abort.exchange(true)) abort_reason = e.what();
                return;
            }
            slot.status = ParseStatus::Malformed;
            slot.attempts = e.kind() == GatewayErrorKind::Transient ? std::max(1, std::min(options.retry.max_attempts, request.max_attempts)) : 1;
            slot.warnings.push_back(std::string("request failed: ") + e.what());
            ++failed;
            ++malformed;
            ++completed;
        }
    });

    summary.requests_completed = completed;
    summary.malformed = malformed;
    summary.empty = empty;
    summary.failed = failed;
    if (summary_out) *summary_out = summary;
    if (abort)
        throw RunAborted("LLM run aborted after " + std::to_string(summary.requests_completed) + " of " +
                             std::to_string(summary.requests_total) + " requests: " + abort_reason,
                         summary);
    return results;
}

}  // namespace mathpii
