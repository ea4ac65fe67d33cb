#pragma once

// Redaction audit, surrogate substitution, and the iteration stopping rule.

#include "mathpii/annotation.hpp"
#include "mathpii/corpus.hpp"
#include "mathpii/gateway.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mathpii {

// Adds an UPSTREAM span for every `<TYPE>` literal (TYPE under the taxonomy,
// COURSE alias included) not already covered by a label of that type.
// Returns the number of spans added; surfaces stay the placeholder literal.
std::size_t attach_placeholder_spans(Corpus& corpus);

struct AuditRow {
    PiiType type = PiiType::Person;
    std::string ai_redacted_content;  // empty for existing redactions
    Verdict evaluation = Verdict::Uncertain;
    std::string surrogate;
};

struct AuditParse {
    bool ok = false;
    std::vector<AuditRow> rows;
    std::vector<std::string> warnings;  // one per dropped row
};

// Accepts a markdown table whose header names the four columns (any order,
// extra columns ignored) or a JSON array of objects with the same keys.
// Blank input is ok with zero rows. Never throws.
AuditParse parse_audit_response(std::string_view raw_text);

// System + user text for auditing one message. The payload lists the target
// message with its existing redactions and the surrounding window.
GatewayRequest build_audit_request(const Transcript& transcript, std::size_t message_index, std::string model_id,
                                   std::size_t radius = 3);

struct AuditOptions {
    std::string model_id;
    std::size_t context_radius = 3;
    std::size_t concurrency = 8;
    int iteration = 1;
    // Audit every non-blank message; when false only messages that carry an
    // UPSTREAM label are sent.
    bool all_messages = true;
    RetryPolicy retry;
};

// Turns one audit response into items for message `message_index`. Rows with
// blank ai_redacted_content are assigned to the message's UPSTREAM spans
// (same type first, then any unassigned span); rows with content become
// discovered items whose detected text is recovered by aligning the content
// with the message. Spans left without a row, and every span of an
// unparseable response, become UNCERTAIN items flagged for review.
std::vector<AnnotationItem> items_from_audit(const Transcript& transcript, std::size_t message_index,
                                             const AuditParse& parse, int iteration);

// Throws RunAborted (see llm_detection.hpp) on auth/config failures.
std::vector<AnnotationItem> audit_corpus(const Corpus& corpus, ChatClient& client, const AuditOptions& options);

std::string existing_item_id(std::string_view session_id, std::size_t message_index, std::size_t span_start);
std::string discovered_item_id(std::string_view session_id, std::size_t message_index, PiiType type, std::size_t k);

class SurrogateRegistry {
public:
    // Surrogate already bound to (session, entity key), if any.
    std::optional<std::string> lookup(const std::string& session_id, const std::string& entity_key) const;
    // Session that first used `surrogate` (case-folded), if any.
    std::optional<std::string> owner(const std::string& surrogate) const;
    void bind(const std::string& session_id, const std::string& entity_key, const std::string& surrogate);

    // Same-key consistency and cross-transcript non-reuse.
    void check_invariants() const;

    std::size_t size() const;
    const std::map<std::string, std::map<std::string, std::string>>& bindings() const { return by_transcript_; }

    static SurrogateRegistry load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

private:
    std::map<std::string, std::map<std::string, std::string>> by_transcript_;
    std::map<std::string, std::string> used_;  // normalized surrogate -> session
};

// Entity key of a PII/UNCERTAIN item: the type plus the normalized detected
// text for discovered items, or a digest of the normalized text around the
// placeholder for existing redactions.
std::string entity_key(const AnnotationItem& item, const Message& message);

enum class LedgerAction { Retain, Remove, Add, Dismiss, Untouched };
std::string_view to_string(LedgerAction action);

struct LedgerRow {
    std::string session_id;
    std::size_t message_index = 0;
    PiiType type = PiiType::Person;
    std::optional<Verdict> verdict;  // empty for untouched labels
    LedgerAction action = LedgerAction::Untouched;
};

struct ApplyResult {
    Corpus benchmark;
    std::vector<LedgerRow> ledger;
    std::size_t input_labels = 0;
    std::size_t discovered = 0;
    std::size_t retained = 0;  // retain + add + untouched
    std::size_t removed = 0;   // remove + dismiss
    std::map<PiiType, std::size_t> output_labels_by_type;
};

// Validates everything before touching the corpus or the registry: statuses,
// votes on discovered items, the verdict/surrogate invariant, that every
// target is still present, edit overlap, and that no surrogate is demanded by
// two transcripts. An entity key already bound in its transcript keeps the
// bound surrogate, whatever the item proposes. On success the registry gains
// the new bindings.
ApplyResult apply_surrogates(const Corpus& corpus, const std::vector<AnnotationItem>& items,
                             SurrogateRegistry& registry);

void write_ledger_csv(const std::vector<LedgerRow>& ledger, std::ostream& out);

struct Resolution {
    std::size_t previous = 0;
    std::size_t resolved = 0;
    double rate = 1.0;
    bool stop = true;
};

inline constexpr double kStopResolutionRate = 0.95;

// `current` holds the reissued items of the iteration being judged; a
// previously down-voted id is resolved when it is present there with no DOWN
// vote in that item's iteration.
Resolution resolution_rate(const std::set<std::string>& previous_downvoted,
                           const std::vector<AnnotationItem>& current);

std::set<std::string> downvoted_ids(const std::vector<AnnotationItem>& items, int iteration);

}  // namespace mathpii
