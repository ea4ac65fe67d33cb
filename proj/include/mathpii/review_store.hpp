#pragma once

// File-backed review state: the audit items plus an append-only JSONL event
// log of votes, overrides, and iteration closes. Current state is the items
// file with every event replayed in order. Each write is flushed and fsynced
// before the call returns.

#include "mathpii/annotation.hpp"
#include "mathpii/surrogation.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace mathpii {

struct ItemFilter {
    std::optional<ItemStatus> status;
    std::optional<int> iteration;
    std::optional<PiiType> type;
};

struct ItemPage {
    std::vector<AnnotationItem> items;
    std::size_t total = 0;
    std::size_t page = 1;
    std::size_t page_size = 50;
};

enum class WriteOutcome { Ok, NotFound, Conflict, Invalid };

struct WriteResult {
    WriteOutcome outcome = WriteOutcome::Ok;
    std::string message;
    std::optional<AnnotationItem> item;
};

struct CloseSummary {
    int iteration = 0;
    std::size_t approved = 0;
    std::size_t rejected = 0;
    std::size_t pending = 0;
};

class AnnotationStore {
public:
    using Clock = std::function<std::int64_t()>;

    // Loads items (every iteration of every id) and replays the event log if
    // it exists. Throws ValidationError on an event that does not apply.
    AnnotationStore(std::filesystem::path items_path, std::filesystem::path events_path, Clock clock = {});
    ~AnnotationStore();
    AnnotationStore(const AnnotationStore&) = delete;
    AnnotationStore& operator=(const AnnotationStore&) = delete;

    // Without an iteration filter, each id appears once at its latest iteration.
    ItemPage list(const ItemFilter& filter, std::size_t page, std::size_t page_size) const;
    std::optional<AnnotationItem> get(const std::string& id) const;

    // Votes land on the latest iteration of the item.
    WriteResult vote(const std::string& id, const std::string& reviewer_id, VoteDirection direction,
                     std::optional<std::string> note);
    WriteResult override_item(const std::string& id, Verdict evaluation, std::optional<std::string> surrogate,
                              std::optional<std::string> reviewer_id);
    // Pending items of iteration k: any DOWN vote -> REJECTED; otherwise
    // APPROVED, except discovered items, which need an UP vote.
    CloseSummary close_iteration(int iteration);

    // Down-voted ids of iteration k-1 against the items reissued at k.
    Resolution resolution(int iteration) const;

    // Verdict distribution by type over latest items, plus the share of
    // redacted messages carrying at least one NOT_PII verdict.
    nlohmann::json stats() const;

    std::vector<AnnotationItem> latest() const;
    std::vector<AnnotationItem> all_records() const;

private:
    void append_event(const nlohmann::json& event);
    void apply_event(const nlohmann::json& event, bool replaying);
    AnnotationItem* latest_record(const std::string& id);
    const AnnotationItem* latest_record(const std::string& id) const;

    std::filesystem::path events_path_;
    Clock clock_;
    std::FILE* events_ = nullptr;
    mutable std::shared_mutex mutex_;
    std::vector<AnnotationItem> records_;
    // id -> record indices ordered by iteration
    std::map<std::string, std::vector<std::size_t>> by_id_;
    std::vector<std::string> id_order_;
};

}  // namespace mathpii
