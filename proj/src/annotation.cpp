#include "mathpii/annotation.hpp"

#include "mathpii/errors.hpp"
#include "mathpii/text.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

namespace mathpii {

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Pii: return "PII";
        case Verdict::NotPii: return "NOT_PII";
        case Verdict::Uncertain: return "UNCERTAIN";
    }
    return "UNCERTAIN";
}

std::string_view to_string(VoteDirection d) { return d == VoteDirection::Up ? "UP" : "DOWN"; }

std::string_view to_string(ItemStatus s) {
    switch (s) {
        case ItemStatus::Pending: return "PENDING";
        case ItemStatus::Approved: return "APPROVED";
        case ItemStatus::Rejected: return "REJECTED";
        case ItemStatus::Overridden: return "OVERRIDDEN";
    }
    return "PENDING";
}

std::optional<Verdict> try_parse_verdict(std::string_view text) {
    auto key = ascii_lower(trim_whitespace(text));
    key.erase(std::remove_if(key.begin(), key.end(), [](char c) { return c == '"' || c == '\'' || c == '*'; }),
              key.end());
    for (auto& c : key)
        if (c == '_' || c == '-') c = ' ';
    key = collapse_whitespace(key);
    if (key == "pii") return Verdict::Pii;
    if (key == "not pii") return Verdict::NotPii;
    if (key == "uncertain") return Verdict::Uncertain;
    return std::nullopt;
}

Verdict parse_verdict(std::string_view text) {
    if (auto v = try_parse_verdict(text)) return *v;
    throw ValidationError("unknown evaluation '" + std::string(text) + "'");
}

VoteDirection parse_vote_direction(std::string_view text) {
    const auto key = ascii_lower(trim_whitespace(text));
    if (key == "up") return VoteDirection::Up;
    if (key == "down") return VoteDirection::Down;
    throw ValidationError("unknown vote direction '" + std::string(text) + "'");
}

ItemStatus parse_item_status(std::string_view text) {
    if (text == "PENDING") return ItemStatus::Pending;
    if (text == "APPROVED") return ItemStatus::Approved;
    if (text == "REJECTED") return ItemStatus::Rejected;
    if (text == "OVERRIDDEN") return ItemStatus::Overridden;
    throw ValidationError("unknown item status '" + std::string(text) + "'");
}

bool AnnotationItem::has_vote(std::string_view reviewer, int iter) const {
    return std::any_of(votes.begin(), votes.end(),
                       [&](const Vote& v) { return v.iteration == iter && v.reviewer_id == reviewer; });
}

bool AnnotationItem::has_down_vote(int iter) const {
    return std::any_of(votes.begin(), votes.end(), [&](const Vote& v) {
        return v.iteration == iter && v.direction == VoteDirection::Down;
    });
}

bool AnnotationItem::has_up_vote(int iter) const {
    return std::any_of(votes.begin(), votes.end(),
                       [&](const Vote& v) { return v.iteration == iter && v.direction == VoteDirection::Up; });
}

bool item_is_complete(const AnnotationItem& item) {
    switch (item.evaluation) {
        case Verdict::Pii:
        case Verdict::Uncertain:
            return item.surrogate.has_value() && !trim_whitespace(*item.surrogate).empty();
        case Verdict::NotPii:
            return item.discovered || item.surrogate.has_value();
    }
    return false;
}

nlohmann::ordered_json to_json(const Vote& vote) {
    nlohmann::ordered_json j;
    j["reviewer_id"] = vote.reviewer_id;
    j["direction"] = to_string(vote.direction);
    j["timestamp"] = vote.timestamp_ms;
    j["iteration"] = vote.iteration;
    if (vote.note) j["note"] = *vote.note;
    return j;
}

Vote vote_from_json(const nlohmann::json& j) {
    Vote v;
    v.reviewer_id = j.at("reviewer_id").get<std::string>();
    v.direction = parse_vote_direction(j.at("direction").get<std::string>());
    v.timestamp_ms = j.value("timestamp", std::int64_t{0});
    v.iteration = j.value("iteration", 1);
    if (j.contains("note") && j["note"].is_string()) v.note = j["note"].get<std::string>();
    return v;
}

nlohmann::ordered_json to_json(const AnnotationItem& item) {
    nlohmann::ordered_json j;
    j["id"] = item.id;
    j["session_id"] = item.session_id;
    j["message_index"] = item.message_index;
    j["pii_type"] = to_string(item.pii_type);
    j["ai_redacted_content"] = item.ai_redacted_content ? nlohmann::ordered_json(*item.ai_redacted_content)
                                                        : nlohmann::ordered_json(nullptr);
    j["evaluation"] = to_string(item.evaluation);
    j["surrogate"] = item.surrogate ? nlohmann::ordered_json(*item.surrogate) : nlohmann::ordered_json(nullptr);
    j["iteration"] = item.iteration;
    auto& votes = j["votes"] = nlohmann::ordered_json::array();
    for (const auto& v : item.votes) votes.push_back(to_json(v));
    j["status"] = to_string(item.status);
    j["discovered"] = item.discovered;
    if (item.span_start) j["span_start"] = *item.span_start;
    if (item.span_end) j["span_end"] = *item.span_end;
    if (item.target_text) j["target_text"] = *item.target_text;
    j["needs_review"] = item.needs_review;
    if (!item.review_note.empty()) j["review_note"] = item.review_note;
    return j;
}

namespace {

std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

}  // namespace

AnnotationItem item_from_json(const nlohmann::json& j) {
    AnnotationItem item;
    item.id = j.at("id").get<std::string>();
    item.session_id = j.at("session_id").get<std::string>();
    item.message_index = j.at("message_index").get<std::size_t>();
    item.pii_type = parse_pii_type(j.at("pii_type").get<std::string>());
    item.ai_redacted_content = optional_string(j, "ai_redacted_content");
    item.evaluation = parse_verdict(j.at("evaluation").get<std::string>());
    item.surrogate = optional_string(j, "surrogate");
    item.iteration = j.value("iteration", 1);
    if (item.iteration < 1) throw ValidationError("item '" + item.id + "': iteration must be >= 1");
    for (const auto& v : j.value("votes", nlohmann::json::array())) item.votes.push_back(vote_from_json(v));
    item.status = parse_item_status(j.value("status", std::string("PENDING")));
    item.discovered = j.value("discovered", false);
    if (j.contains("span_start") && !j["span_start"].is_null()) item.span_start = j["span_start"].get<std::size_t>();
    if (j.contains("span_end") && !j["span_end"].is_null()) item.span_end = j["span_end"].get<std::size_t>();
    item.target_text = optional_string(j, "target_text");
    item.needs_review = j.value("needs_review", false);
    item.review_note = j.value("review_note", std::string());
    return item;
}

std::vector<AnnotationItem> read_items(std::istream& in, std::string_view source) {
    std::vector<AnnotationItem> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_whitespace(line).empty()) continue;
        try {
            items.push_back(item_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw ValidationError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return items;
}

std::vector<AnnotationItem> load_items(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open annotation store '" + path.string() + "'");
    return read_items(in, path.string());
}

void write_items(const std::vector<AnnotationItem>& items, std::ostream& out) {
    for (const auto& item : items) out << to_json(item).dump() << '\n';
}

void write_items(const std::vector<AnnotationItem>& items, const std::filesystem::path& path, bool append) {
    std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
    if (!out) throw IoError("cannot write annotation store '" + path.string() + "'");
    write_items(items, out);
}

std::vector<AnnotationItem> latest_items(const std::vector<AnnotationItem>& items) {
    std::vector<AnnotationItem> out;
    std::unordered_map<std::string, std::size_t> pos;
    for (const auto& item : items) {
        auto it = pos.find(item.id);
        if (it == pos.end()) {
            pos.emplace(item.id, out.size());
            out.push_back(item);
        } else if (item.iteration >= out[it->second].iteration) {
            out[it->second] = item;
        }
    }
    return out;
}

}  // namespace mathpii
