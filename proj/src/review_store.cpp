#include "mathpii/review_store.hpp"

#include "mathpii/errors.hpp"
#include "mathpii/text.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <mutex>
#include <set>

#include <unistd.h>

namespace mathpii {

namespace {

std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

}  // namespace

AnnotationStore::AnnotationStore(std::filesystem::path items_path, std::filesystem::path events_path, Clock clock)
    : events_path_(std::move(events_path)), clock_(clock ? std::move(clock) : Clock(now_ms)) {
    records_ = load_items(items_path);
    for (std::size_t i = 0; i < records_.size(); ++i) {
        auto& list = by_id_[records_[i].id];
        if (list.empty()) id_order_.push_back(records_[i].id);
        for (auto r : list)
            if (records_[r].iteration == records_[i].iteration)
                throw ValidationError("item " + records_[i].id + " appears twice at iteration " +
                                      std::to_string(records_[i].iteration));
        list.push_back(i);
        std::sort(list.begin(), list.end(),
                  [&](std::size_t a, std::size_t b) { return records_[a].iteration < records_[b].iteration; });
    }
    if (std::filesystem::exists(events_path_)) {
        std::ifstream in(events_path_);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim_whitespace(line).empty()) continue;
            try {
                apply_event(nlohmann::json::parse(line), true);
            } catch (const std::exception& e) {
                throw ValidationError(events_path_.string() + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
    }
    events_ = std::fopen(events_path_.c_str(), "a");
    if (!events_) throw IoError("cannot open event log '" + events_path_.string() + "' for append");
}

AnnotationStore::~AnnotationStore() {
    if (events_) std::fclose(events_);
}

AnnotationItem* AnnotationStore::latest_record(const std::string& id) {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &records_[it->second.back()];
}

const AnnotationItem* AnnotationStore::latest_record(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &records_[it->second.back()];
}

void AnnotationStore::append_event(const nlohmann::json& event) {
    const auto line = event.dump() + "\n";
    if (std::fwrite(line.data(), 1, line.size(), events_) != line.size() || std::fflush(events_) != 0 ||
        ::fsync(::fileno(events_)) != 0)
        throw IoError("failed to persist event to '" + events_path_.string() + "'");
}

void AnnotationStore::apply_event(const nlohmann::json& event, bool replaying) {
    const auto kind = event.at("kind").get<std::string>();
    if (kind == "vote") {
        auto* item = latest_record(event.at("item_id").get<std::string>());
        if (!item) throw ValidationError("vote for unknown item");
        Vote v;
        v.reviewer_id = event.at("reviewer_id").get<std::string>();
        v.direction = parse_vote_direction(event.at("direction").get<std::string>());
        v.timestamp_ms = event.value("timestamp_ms", std::int64_t{0});
        if (event.contains("note") && event["note"].is_string()) v.note = event["note"].get<std::string>();
        v.iteration = event.value("iteration", item->iteration);
        if (replaying && item->has_vote(v.reviewer_id, v.iteration))
            throw ValidationError("duplicate vote in event log");
        item->votes.push_back(std::move(v));
    } else if (kind == "override") {
        auto* item = latest_record(event.at("item_id").get<std::string>());
        if (!item) throw ValidationError("override for unknown item");
        item->evaluation = parse_verdict(event.at("evaluation").get<std::string>());
        if (event.contains("surrogate") && event["surrogate"].is_string())
            item->surrogate = event["surrogate"].get<std::string>();
        item->status = ItemStatus::Overridden;
        item->needs_review = false;
    } else if (kind == "close") {
        const int k = event.at("iteration").get<int>();
        for (auto& item : records_) {
            if (item.iteration != k || item.status != ItemStatus::Pending) continue;
            if (item.has_down_vote(k))
                item.status = ItemStatus::Rejected;
            else if (!item.discovered || item.has_up_vote(k))
                item.status = ItemStatus::Approved;
        }
    } else {
        throw ValidationError("unknown event kind '" + kind + "'");
    }
}

ItemPage AnnotationStore::list(const ItemFilter& filter, std::size_t page, std::size_t page_size) const {
    std::shared_lock lock(mutex_);
    ItemPage out;
    out.page = std::max<std::size_t>(1, page);
    out.page_size = std::clamp<std::size_t>(page_size, 1, 500);
    std::vector<const AnnotationItem*> matches;
    auto keep = [&](const AnnotationItem& item) {
        return (!filter.status || item.status == *filter.status) && (!filter.type || item.pii_type == *filter.type);
    };
    for (const auto& id : id_order_) {
        const auto& list = by_id_.at(id);
        if (filter.iteration) {
            for (auto r : list)
                if (records_[r].iteration == *filter.iteration && keep(records_[r])) matches.push_back(&records_[r]);
        } else if (keep(records_[list.back()])) {
            matches.push_back(&records_[list.back()]);
        }
    }
    out.total = matches.size();
    const auto first = (out.page - 1) * out.page_size;
    for (std::size_t i = first; i < matches.size() && i < first + out.page_size; ++i) out.items.push_back(*matches[i]);
    return out;
}

std::optional<AnnotationItem> AnnotationStore::get(const std::string& id) const {
    std::shared_lock lock(mutex_);
    const auto* item = latest_record(id);
    if (!item) return std::nullopt;
    return *item;
}

WriteResult AnnotationStore::vote(const std::string& id, const std::string& reviewer_id, VoteDirection direction,
                                  std::optional<std::string> note) {
    if (trim_whitespace(reviewer_id).empty()) return {WriteOutcome::Invalid, "reviewer_id must be non-empty", {}};
    std::unique_lock lock(mutex_);
    auto* item = latest_record(id);
    if (!item) return {WriteOutcome::NotFound, "unknown item " + id, {}};
    if (item->has_vote(reviewer_id, item->iteration))
        return {WriteOutcome::Conflict,
                "reviewer " + reviewer_id + " already voted on " + id + " in iteration " +
                    std::to_string(item->iteration),
                {}};
    nlohmann::json event = {{"kind", "vote"},
                            {"item_id", id},
                            {"reviewer_id", reviewer_id},
                            {"direction", to_string(direction)},
                            {"iteration", item->iteration},
                            {"timestamp_ms", clock_()}};
    if (note) event["note"] = *note;
    append_event(event);
    apply_event(event, false);
    return {WriteOutcome::Ok, "", *item};
}

WriteResult AnnotationStore::override_item(const std::string& id, Verdict evaluation,
                                           std::optional<std::string> surrogate,
                                           std::optional<std::string> reviewer_id) {
    std::unique_lock lock(mutex_);
    auto* item = latest_record(id);
    if (!item) return {WriteOutcome::NotFound, "unknown item " + id, {}};
    AnnotationItem preview = *item;
    preview.evaluation = evaluation;
    if (surrogate) preview.surrogate = surrogate;
    if (!item_is_complete(preview))
        return {WriteOutcome::Invalid, "verdict " + std::string(to_string(evaluation)) + " requires a surrogate", {}};
    nlohmann::json event = {
        {"kind", "override"}, {"item_id", id}, {"evaluation", to_string(evaluation)}, {"timestamp_ms", clock_()}};
    if (surrogate) event["surrogate"] = *surrogate;
    if (reviewer_id) event["reviewer_id"] = *reviewer_id;
    append_event(event);
    apply_event(event, false);
    return {WriteOutcome::Ok, "", *item};
}

CloseSummary AnnotationStore::close_iteration(int iteration) {
    std::unique_lock lock(mutex_);
    const nlohmann::json event = {{"kind", "close"}, {"iteration", iteration}, {"timestamp_ms", clock_()}};
    append_event(event);
    apply_event(event, false);
    CloseSummary s;
    s.iteration = iteration;
    for (const auto& item : records_) {
        if (item.iteration != iteration) continue;
        if (item.status == ItemStatus::Approved) ++s.approved;
        if (item.status == ItemStatus::Rejected) ++s.rejected;
        if (item.status == ItemStatus::Pending) ++s.pending;
    }
    return s;
}

Resolution AnnotationStore::resolution(int iteration) const {
    std::shared_lock lock(mutex_);
    std::vector<AnnotationItem> current;
    for (const auto& item : records_)
        if (item.iteration == iteration) current.push_back(item);
    return resolution_rate(downvoted_ids(records_, iteration - 1), current);
}

nlohmann::json AnnotationStore::stats() const {
    std::shared_lock lock(mutex_);
    nlohmann::ordered_json by_type = nlohmann::ordered_json::object();
    std::map<std::string, std::size_t> statuses;
    std::set<std::pair<std::string, std::size_t>> redacted, not_pii;
    std::size_t total = 0;
    for (const auto& id : id_order_) {
        const auto& item = records_[by_id_.at(id).back()];
        ++total;
        auto& slot = by_type[std::string(to_string(item.pii_type))];
        if (slot.is_null()) slot = {{"PII", 0}, {"NOT_PII", 0}, {"UNCERTAIN", 0}};
        slot[std::string(to_string(item.evaluation))] = slot[std::string(to_string(item.evaluation))].get<int>() + 1;
        ++statuses[std::string(to_string(item.status))];
        if (!item.discovered) {
            redacted.emplace(item.session_id, item.message_index);
            if (item.evaluation == Verdict::NotPii) not_pii.emplace(item.session_id, item.message_index);
        }
    }
    nlohmann::ordered_json j;
    j["items"] = total;
    j["by_type"] = by_type;
    j["by_status"] = statuses;
    j["redacted_messages"] = redacted.size();
    j["not_pii_messages"] = not_pii.size();
    j["not_pii_share"] =
        redacted.empty() ? 0.0 : static_cast<double>(not_pii.size()) / static_cast<double>(redacted.size());
    return nlohmann::json::parse(j.dump());
}

std::vector<AnnotationItem> AnnotationStore::latest() const {
    std::shared_lock lock(mutex_);
    std::vector<AnnotationItem> out;
    for (const auto& id : id_order_) out.push_back(records_[by_id_.at(id).back()]);
    return out;
}

std::vector<AnnotationItem> AnnotationStore::all_records() const {
    std::shared_lock lock(mutex_);
    return records_;
}

}  // namespace mathpii
