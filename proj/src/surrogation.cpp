#include "mathpii/surrogation.hpp"

#include "mathpii/errors.hpp"
#include "mathpii/llm_detection.hpp"
#include "mathpii/parallel.hpp"
#include "mathpii/prompts.hpp"
#include "mathpii/text.hpp"

#include <boost/regex.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <ostream>
#include <unordered_map>

namespace mathpii {

namespace {

const boost::regex& tag_regex() {
    static const boost::regex re(R"(<([A-Za-z_]+)>)", boost::regex::perl);
    return re;
}

bool is_placeholder_literal(std::string_view s) {
    boost::cmatch m;
    return boost::regex_match(s.data(), s.data() + s.size(), m, tag_regex()) &&
           try_parse_pii_type(m.str(1)).has_value();
}

}  // namespace

std::size_t attach_placeholder_spans(Corpus& corpus) {
    std::size_t added = 0;
    for (auto& tr : corpus) {
        for (auto& msg : tr.messages) {
            const OffsetMap map(msg.text);
            bool changed = false;
            boost::cregex_iterator it(msg.text.data(), msg.text.data() + msg.text.size(), tag_regex()), end;
            for (; it != end; ++it) {
                const auto type = try_parse_pii_type((*it).str(1));
                if (!type) continue;
                const auto b = static_cast<std::size_t>((*it)[0].first - msg.text.data());
                const auto start = map.to_codepoint(b);
                const auto stop = map.to_codepoint(b + static_cast<std::size_t>((*it)[0].length()));
                const bool covered = std::any_of(msg.labels.begin(), msg.labels.end(), [&](const PiiSpan& s) {
                    return s.type == *type && s.start <= start && s.end >= stop;
                });
                if (covered) continue;
                msg.labels.push_back(PiiSpan{start, stop, (*it).str(0), *type, Provenance::Upstream});
                changed = true;
                ++added;
            }
            if (changed)
                std::sort(msg.labels.begin(), msg.labels.end(), [](const PiiSpan& a, const PiiSpan& b) {
                    return std::tie(a.start, a.end, a.type) < std::tie(b.start, b.end, b.type);
                });
        }
    }
    return added;
}

namespace {

// Cells keep their padding when trim is false so that a content cell split by
// a stray pipe can be rejoined byte-exactly.
std::vector<std::string> split_table_row(std::string_view line, bool trim = true) {
    std::vector<std::string> cells;
    std::string cur;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '\\' && i + 1 < line.size() && line[i + 1] == '|') {
            cur += '|';
            ++i;
        } else if (c == '|') {
            cells.emplace_back(trim ? std::string(trim_whitespace(cur)) : cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.emplace_back(trim ? std::string(trim_whitespace(cur)) : cur);
    // Border pipes produce empty first/last cells.
    const auto trimmed_line = trim_whitespace(line);
    if (!cells.empty() && trim_whitespace(cells.front()).empty() && !trimmed_line.empty() && trimmed_line.front() == '|')
        cells.erase(cells.begin());
    if (!cells.empty() && trim_whitespace(cells.back()).empty() && !trimmed_line.empty() && trimmed_line.back() == '|')
        cells.pop_back();
    return cells;
}

bool is_separator_row(const std::vector<std::string>& cells) {
    if (cells.empty()) return false;
    for (const auto& c : cells) {
        if (c.empty()) return false;
        for (char ch : c)
            if (ch != '-' && ch != ':' && ch != ' ') return false;
    }
    return true;
}

std::string strip_cell(std::string s) {
    s = std::string(trim_whitespace(s));
    for (std::string_view wrap : {"**", "`", "\"", "'"}) {
        if (s.size() >= 2 * wrap.size() && s.starts_with(wrap) && s.ends_with(wrap))
            s = std::string(trim_whitespace(std::string_view(s).substr(wrap.size(), s.size() - 2 * wrap.size())));
    }
    return s;
}

bool is_blank_marker(std::string_view s) {
    const auto t = ascii_lower(trim_whitespace(s));
    return t.empty() || t == "-" || t == "n/a" || t == "none" || t == "(blank)" || t == "blank" || t == "null";
}

void add_row(AuditParse& out, std::string_view type, std::string_view content, std::string_view verdict,
             std::string_view surrogate) {
    const auto t = try_parse_pii_type(strip_cell(std::string(type)));
    const auto v = try_parse_verdict(strip_cell(std::string(verdict)));
    if (!t || !v) {
        out.warnings.push_back("dropped audit row with type '" + std::string(type) + "' and evaluation '" +
                               std::string(verdict) + "'");
        return;
    }
    AuditRow row;
    row.type = *t;
    row.evaluation = *v;
    const auto c = strip_cell(std::string(content));
    row.ai_redacted_content = is_blank_marker(c) ? std::string() : c;
    const auto s = strip_cell(std::string(surrogate));
    row.surrogate = is_blank_marker(s) ? std::string() : s;
    out.rows.push_back(std::move(row));
}

// Bracket positions tried on each side before giving up on JSON rows.
constexpr std::size_t kMaxJsonCandidates = 64;

bool parse_json_rows(std::string_view raw, AuditParse& out) {
    std::size_t opens = 0;
    for (std::size_t pos = raw.find('['); pos != std::string_view::npos && opens++ < kMaxJsonCandidates;
         pos = raw.find('[', pos + 1)) {
        auto parsed = nlohmann::json::parse(raw.substr(pos), nullptr, false);
        if (parsed.is_discarded()) {
            // Retry on the shortest prefix ending at a ']' that parses.
            std::size_t closes = 0;
            for (auto close = raw.find(']', pos); close != std::string_view::npos && closes++ < kMaxJsonCandidates;
                 close = raw.find(']', close + 1)) {
                parsed = nlohmann::json::parse(raw.substr(pos, close - pos + 1), nullptr, false);
                if (!parsed.is_discarded()) break;
            }
        }
        if (parsed.is_discarded() || !parsed.is_array()) continue;
        if (!parsed.empty() && !(parsed[0].is_object() && parsed[0].contains("pii_type"))) continue;
        for (const auto& el : parsed) {
            if (!el.is_object()) continue;
            auto str = [&](const char* key) {
                auto it = el.find(key);
                return it != el.end() && it->is_string() ? it->get<std::string>() : std::string();
            };
            add_row(out, str("pii_type"), str("ai_redacted_content"), str("pii_evaluation"), str("surrogate"));
        }
        return true;
    }
    return false;
}

bool parse_table_rows(std::string_view raw, AuditParse& out) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= raw.size()) {
        auto nl = raw.find('\n', start);
        if (nl == std::string_view::npos) nl = raw.size();
        lines.push_back(raw.substr(start, nl - start));
        start = nl + 1;
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].find('|') == std::string_view::npos) continue;
        const auto header = split_table_row(lines[i]);
        std::unordered_map<std::string, std::size_t> col;
        for (std::size_t c = 0; c < header.size(); ++c) col[ascii_lower(strip_cell(header[c]))] = c;
        if (!col.contains("pii_type") || !col.contains("pii_evaluation")) continue;
        const auto content_col = col.contains("ai_redacted_content") ? col["ai_redacted_content"] : header.size();
        for (std::size_t r = i + 1; r < lines.size(); ++r) {
            if (lines[r].find('|') == std::string_view::npos) break;
            auto cells = split_table_row(lines[r], false);
            // Unescaped pipes inside the content column shift later cells.
            if (cells.size() > header.size() && content_col < header.size()) {
                const auto extra = cells.size() - header.size();
                for (std::size_t k = 0; k < extra; ++k) cells[content_col] += "|" + cells[content_col + 1 + k];
                cells.erase(cells.begin() + static_cast<std::ptrdiff_t>(content_col) + 1,
                            cells.begin() + static_cast<std::ptrdiff_t>(content_col + 1 + extra));
            }
            for (auto& c : cells) c = std::string(trim_whitespace(c));
            if (is_separator_row(cells)) continue;
            auto cell = [&](const char* name) {
                auto it = col.find(name);
                return it != col.end() && it->second < cells.size() ? cells[it->second] : std::string();
            };
            add_row(out, cell("pii_type"), cell("ai_redacted_content"), cell("pii_evaluation"), cell("surrogate"));
        }
        return true;
    }
    return false;
}

}  // namespace

AuditParse parse_audit_response(std::string_view raw_text) {
    AuditParse out;
    try {
        if (trim_whitespace(raw_text).empty()) {
            out.ok = true;
            return out;
        }
        if (parse_json_rows(raw_text, out) || parse_table_rows(raw_text, out)) {
            out.ok = !out.rows.empty() || out.warnings.empty();
            return out;
        }
    } catch (...) {
        out.rows.clear();
    }
    out.ok = false;
    return out;
}

GatewayRequest build_audit_request(const Transcript& transcript, std::size_t message_index, std::string model_id,
                                   std::size_t radius) {
    auto payload = nlohmann::ordered_json::parse(build_user_payload(transcript, message_index, radius, std::nullopt));
    auto& redactions = payload["message"]["redactions"] = nlohmann::ordered_json::array();
    for (const auto& s : transcript.messages[message_index].labels) {
        if (s.provenance != Provenance::Upstream) continue;
        redactions.push_back({{"type", to_string(s.type)}, {"text", s.surface}});
    }
    GatewayRequest req;
    req.model_id = std::move(model_id);
    req.system_text = std::string(audit_prompt());
    req.user_text = payload.dump(2);
    return req;
}

std::string existing_item_id(std::string_view session_id, std::size_t message_index, std::size_t span_start) {
    return std::string(session_id) + "/" + std::to_string(message_index) + "/" + std::to_string(span_start);
}

std::string discovered_item_id(std::string_view session_id, std::size_t message_index, PiiType type, std::size_t k) {
    return std::string(session_id) + "/" + std::to_string(message_index) + "/new/" + std::string(to_string(type)) +
           "/" + std::to_string(k);
}

namespace {

struct Capture {
    std::size_t byte_start, byte_end;
    std::string text;
    std::optional<PiiType> tag_type;
};

// Aligns `content` (message text with tags in place of PII) to `text`; each
// tag becomes a lazy capture. Returns captures in tag order, or nothing when
// the content does not align.
std::optional<std::vector<Capture>> align_redacted(std::string_view content, std::string_view text) {
    std::string pattern = "^\\s*";
    std::vector<std::optional<PiiType>> tag_types;
    auto append_literal = [&](std::string_view lit) {
        bool in_space = false;
        for (char c : lit) {
            if (is_ascii_space(c)) {
                if (!in_space) pattern += "\\s+";
                in_space = true;
                continue;
            }
            in_space = false;
            if (std::string_view(R"(\^$.|?*+()[]{}/)").find(c) != std::string_view::npos) pattern += '\\';
            pattern += c;
        }
    };
    std::size_t last = 0;
    boost::cregex_iterator it(content.data(), content.data() + content.size(), tag_regex()), end;
    for (; it != end; ++it) {
        const auto b = static_cast<std::size_t>((*it)[0].first - content.data());
        append_literal(content.substr(last, b - last));
        pattern += "(.+?)";
        tag_types.push_back(try_parse_pii_type((*it).str(1)));
        last = b + static_cast<std::size_t>((*it)[0].length());
    }
    if (tag_types.empty()) return std::nullopt;
    append_literal(content.substr(last));
    pattern += "\\s*$";
    try {
        const boost::regex re(pattern, boost::regex::perl);
        boost::cmatch m;
        if (!boost::regex_match(text.data(), text.data() + text.size(), m, re)) return std::nullopt;
        std::vector<Capture> caps;
        for (std::size_t g = 1; g < m.size(); ++g) {
            const auto b = static_cast<std::size_t>(m[g].first - text.data());
            caps.push_back({b, b + static_cast<std::size_t>(m[g].length()), m.str(g), tag_types[g - 1]});
        }
        return caps;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

AnnotationItem base_item(const Transcript& tr, const Message& msg, int iteration) {
    AnnotationItem item;
    item.session_id = tr.session_id;
    item.message_index = msg.index;
    item.iteration = iteration;
    return item;
}

void flag_if_incomplete(AnnotationItem& item) {
    if (!item_is_complete(item)) {
        item.needs_review = true;
        if (!item.review_note.empty()) item.review_note += "; ";
        item.review_note += "audit row lacks a surrogate or replacement";
    }
}

}  // namespace

std::vector<AnnotationItem> items_from_audit(const Transcript& transcript, std::size_t message_index,
                                             const AuditParse& parse, int iteration) {
    const auto& msg = transcript.messages.at(message_index);
    std::vector<const PiiSpan*> upstream;
    for (const auto& s : msg.labels)
        if (s.provenance == Provenance::Upstream) upstream.push_back(&s);

    std::vector<AnnotationItem> items;
    auto existing = [&](const PiiSpan& s) {
        auto item = base_item(transcript, msg, iteration);
        item.id = existing_item_id(transcript.session_id, msg.index, s.start);
        item.pii_type = s.type;
        item.span_start = s.start;
        item.span_end = s.end;
        item.target_text = s.surface;
        return item;
    };

    if (!parse.ok) {
        for (const auto* s : upstream) {
            auto item = existing(*s);
            item.evaluation = Verdict::Uncertain;
            item.needs_review = true;
            item.review_note = "audit response could not be parsed";
            items.push_back(std::move(item));
        }
        return items;
    }

    std::vector<char> assigned(upstream.size(), 0);
    std::map<PiiType, std::size_t> discovered_count;
    std::vector<std::pair<std::size_t, std::size_t>> used_captures;
    const OffsetMap map(msg.text);

    for (const auto& row : parse.rows) {
        if (row.ai_redacted_content.empty()) {
            std::size_t pick = upstream.size();
            for (std::size_t i = 0; i < upstream.size() && pick == upstream.size(); ++i)
                if (!assigned[i] && upstream[i]->type == row.type) pick = i;
            for (std::size_t i = 0; i < upstream.size() && pick == upstream.size(); ++i)
                if (!assigned[i]) pick = i;
            if (pick < upstream.size()) {
                assigned[pick] = 1;
                auto item = existing(*upstream[pick]);
                item.pii_type = row.type;
                item.evaluation = row.evaluation;
                if (!row.surrogate.empty()) item.surrogate = row.surrogate;
                if (row.type != upstream[pick]->type)
                    item.review_note = "audit type differs from upstream type " +
                                       std::string(to_string(upstream[pick]->type));
                flag_if_incomplete(item);
                items.push_back(std::move(item));
                continue;
            }
        }
        auto item = base_item(transcript, msg, iteration);
        item.discovered = true;
        item.pii_type = row.type;
        item.evaluation = row.evaluation;
        if (!row.surrogate.empty()) item.surrogate = row.surrogate;
        item.id = discovered_item_id(transcript.session_id, msg.index, row.type, discovered_count[row.type]++);
        if (!row.ai_redacted_content.empty()) item.ai_redacted_content = row.ai_redacted_content;

        std::optional<Capture> chosen;
        if (!row.ai_redacted_content.empty()) {
            if (auto caps = align_redacted(row.ai_redacted_content, msg.text)) {
                auto usable = [&](const Capture& c) {
                    return !is_placeholder_literal(c.text) &&
                           std::find(used_captures.begin(), used_captures.end(),
                                     std::pair{c.byte_start, c.byte_end}) == used_captures.end();
                };
                for (const auto& c : *caps)
                    if (!chosen && c.tag_type == row.type && usable(c)) chosen = c;
                for (const auto& c : *caps)
                    if (!chosen && usable(c)) chosen = c;
            }
        }
        if (chosen) {
            used_captures.emplace_back(chosen->byte_start, chosen->byte_end);
            item.span_start = map.to_codepoint(chosen->byte_start);
            item.span_end = map.to_codepoint(chosen->byte_end);
            item.target_text = chosen->text;
        } else {
            item.needs_review = true;
            item.review_note = row.ai_redacted_content.empty()
                                   ? "row names no redacted content and no redaction is left to assign"
                                   : "ai_redacted_content does not align with the message";
        }
        if (item.evaluation != Verdict::NotPii) flag_if_incomplete(item);
        items.push_back(std::move(item));
    }

    for (std::size_t i = 0; i < upstream.size(); ++i) {
        if (assigned[i]) continue;
        auto item = existing(*upstream[i]);
        item.evaluation = Verdict::Uncertain;
        item.needs_review = true;
        item.review_note = "no audit row for this redaction";
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<AnnotationItem> audit_corpus(const Corpus& corpus, ChatClient& client, const AuditOptions& options) {
    struct Job {
        std::size_t t, m;
    };
    std::vector<Job> jobs;
    for (std::size_t t = 0; t < corpus.size(); ++t) {
        for (std::size_t m = 0; m < corpus[t].messages.size(); ++m) {
            const auto& msg = corpus[t].messages[m];
            const bool redacted = std::any_of(msg.labels.begin(), msg.labels.end(),
                                              [](const PiiSpan& s) { return s.provenance == Provenance::Upstream; });
            if (redacted || (options.all_messages && !trim_whitespace(msg.text).empty())) jobs.push_back({t, m});
        }
    }

    std::vector<std::vector<AnnotationItem>> per_job(jobs.size());
    LlmRunSummary summary;
    summary.requests_total = jobs.size();
    std::atomic<std::size_t> completed{0}, malformed{0}, failed{0};
    std::atomic<bool> abort{false};
    std::string abort_reason;
    std::mutex abort_mutex;

    parallel_for(jobs.size(), static_cast<unsigned>(std::max<std::size_t>(1, options.concurrency)), [&](std::size_t j) {
        if (abort.load()) return;
        const auto [t, m] = jobs[j];
        auto request = build_audit_request(corpus[t], m, options.model_id, options.context_radius);
        request.max_attempts = options.retry.max_attempts;
        AuditParse parse;
        std::string failure;
        try {
            const auto resp = complete_with_retry(client, request, options.retry);
            parse = parse_audit_response(resp.raw_text);
        } catch (const GatewayError& e) {
            if (e.fatal()) {
                std::lock_guard lock(abort_mutex);
                if (!abort.exchange(true)) abort_reason = e.what();
                return;
            }
            parse.ok = false;
            failure = e.what();
            ++failed;
        }
        if (!parse.ok) ++malformed;
        per_job[j] = items_from_audit(corpus[t], m, parse, options.iteration);
        if (!failure.empty())
            for (auto& item : per_job[j]) item.review_note = "audit request failed: " + failure;
        ++completed;
    });

    summary.requests_completed = completed;
    summary.malformed = malformed;
    summary.failed = failed;
    if (abort)
        throw RunAborted("audit aborted after " + std::to_string(summary.requests_completed) + " of " +
                             std::to_string(summary.requests_total) + " requests: " + abort_reason,
                         summary);
    std::vector<AnnotationItem> out;
    for (auto& v : per_job)
        for (auto& item : v) out.push_back(std::move(item));
    return out;
}

std::optional<std::string> SurrogateRegistry::lookup(const std::string& session_id,
                                                     const std::string& entity_key) const {
    auto t = by_transcript_.find(session_id);
    if (t == by_transcript_.end()) return std::nullopt;
    auto k = t->second.find(entity_key);
    if (k == t->second.end()) return std::nullopt;
    return k->second;
}

std::optional<std::string> SurrogateRegistry::owner(const std::string& surrogate) const {
    auto it = used_.find(normalize_span_text(surrogate));
    if (it == used_.end()) return std::nullopt;
    return it->second;
}

void SurrogateRegistry::bind(const std::string& session_id, const std::string& entity_key,
                             const std::string& surrogate) {
    if (auto prev = lookup(session_id, entity_key); prev && normalize_span_text(*prev) != normalize_span_text(surrogate))
        throw ValidationError("registry conflict in session " + session_id + ": entity already bound to '" + *prev +
                              "', not '" + surrogate + "'");
    if (auto who = owner(surrogate); who && *who != session_id)
        throw ValidationError("surrogate '" + surrogate + "' already used in session " + *who);
    by_transcript_[session_id].emplace(entity_key, surrogate);
    used_.emplace(normalize_span_text(surrogate), session_id);
}

void SurrogateRegistry::check_invariants() const {
    std::map<std::string, std::string> seen;
    for (const auto& [session, keys] : by_transcript_) {
        for (const auto& [key, surrogate] : keys) {
            const auto norm = normalize_span_text(surrogate);
            auto [it, fresh] = seen.emplace(norm, session);
            if (!fresh && it->second != session)
                throw ValidationError("surrogate '" + surrogate + "' is bound in sessions " + it->second + " and " +
                                      session);
        }
    }
}

std::size_t SurrogateRegistry::size() const {
    std::size_t n = 0;
    for (const auto& [_, keys] : by_transcript_) n += keys.size();
    return n;
}

SurrogateRegistry SurrogateRegistry::load(const std::filesystem::path& path) {
    SurrogateRegistry reg;
    if (!std::filesystem::exists(path)) return reg;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open surrogate registry '" + path.string() + "'");
    try {
        const auto j = nlohmann::json::parse(in);
        for (const auto& [session, keys] : j.at("transcripts").items())
            for (const auto& [key, surrogate] : keys.items()) reg.bind(session, key, surrogate.get<std::string>());
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return reg;
}

void SurrogateRegistry::save(const std::filesystem::path& path) const {
    nlohmann::ordered_json j;
    j["transcripts"] = nlohmann::ordered_json::object();
    for (const auto& [session, keys] : by_transcript_)
        for (const auto& [key, surrogate] : keys) j["transcripts"][session][key] = surrogate;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write surrogate registry '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

std::string entity_key(const AnnotationItem& item, const Message& message) {
    std::string key(to_string(item.pii_type));
    if (item.discovered) {
        key += "|text:";
        key += normalize_span_text(item.target_text.value_or(""));
        return key;
    }
    constexpr std::size_t kRadius = 24;
    const auto start = item.span_start.value_or(0);
    const auto end = item.span_end.value_or(start);
    const auto n = codepoint_length(message.text);
    const auto neighbourhood =
        codepoint_slice(message.text, start > kRadius ? start - kRadius : 0, std::min(n, end + kRadius));
    key += "|ctx:";
    key += sha256_hex(collapse_whitespace(ascii_lower(neighbourhood))).substr(0, 16);
    return key;
}

std::string_view to_string(LedgerAction action) {
    switch (action) {
        case LedgerAction::Retain: return "retain";
        case LedgerAction::Remove: return "remove";
        case LedgerAction::Add: return "add";
        case LedgerAction::Dismiss: return "dismiss";
        case LedgerAction::Untouched: return "untouched";
    }
    return "untouched";
}

namespace {

struct Edit {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string replacement;
    bool keep_label = false;
    const AnnotationItem* item = nullptr;
    std::optional<std::size_t> label_index;  // set for existing redactions
};

[[noreturn]] void fail(const AnnotationItem& item, const std::string& what) {
    throw ValidationError("item " + item.id + ": " + what);
}

bool keeps_label(Verdict v) { return v == Verdict::Pii || v == Verdict::Uncertain; }

}  // namespace

ApplyResult apply_surrogates(const Corpus& corpus, const std::vector<AnnotationItem>& items,
                             SurrogateRegistry& registry) {
    std::unordered_map<std::string, std::size_t> session_index;
    for (std::size_t t = 0; t < corpus.size(); ++t) session_index.emplace(corpus[t].session_id, t);

    // (transcript, message) -> edits; plus discovered NOT_PII dismissals.
    std::map<std::pair<std::size_t, std::size_t>, std::vector<Edit>> edits;
    std::map<std::pair<std::size_t, std::size_t>, std::vector<const AnnotationItem*>> dismissed;
    std::set<std::string> ids;
    std::size_t discovered = 0;

    // Staged registry bindings: (session, key) -> surrogate, surrogate -> session.
    std::map<std::pair<std::string, std::string>, std::string> staged;
    std::map<std::string, std::string> staged_owner;

    for (const auto& item : items) {
        if (!ids.insert(item.id).second) fail(item, "duplicate item id");
        if (item.status != ItemStatus::Approved && item.status != ItemStatus::Overridden)
            fail(item, "status " + std::string(to_string(item.status)) + " is not APPROVED or OVERRIDDEN");
        auto sit = session_index.find(item.session_id);
        if (sit == session_index.end()) fail(item, "unknown session " + item.session_id);
        const auto t = sit->second;
        const auto& tr = corpus[t];
        if (item.message_index >= tr.messages.size()) fail(item, "message index out of range");
        const auto m = item.message_index;
        const auto& msg = tr.messages[m];
        if (!item_is_complete(item)) fail(item, "verdict " + std::string(to_string(item.evaluation)) + " lacks a surrogate");

        if (item.discovered) {
            ++discovered;
            if (keeps_label(item.evaluation) && item.status != ItemStatus::Overridden &&
                !item.has_up_vote(item.iteration))
                fail(item, "newly discovered PII needs an UP vote or an override before apply");
            if (!keeps_label(item.evaluation)) {
                dismissed[{t, m}].push_back(&item);
                continue;
            }
            if (!item.span_start || !item.span_end || !item.target_text)
                fail(item, "discovered item has no located text");
            if (codepoint_slice(msg.text, *item.span_start, *item.span_end) != *item.target_text)
                fail(item, "detected text '" + *item.target_text + "' no longer present (already applied?)");
            for (const auto& s : msg.labels)
                if (s.start < *item.span_end && *item.span_start < s.end)
                    fail(item, "detected text overlaps an existing label (already applied?)");
            edits[{t, m}].push_back(Edit{*item.span_start, *item.span_end, *item.surrogate, true, &item, std::nullopt});
        } else {
            if (!item.span_start || !item.span_end) fail(item, "item does not locate a redaction");
            std::optional<std::size_t> found;
            for (std::size_t i = 0; i < msg.labels.size(); ++i) {
                const auto& s = msg.labels[i];
                if (s.start == *item.span_start && s.end == *item.span_end && s.provenance == Provenance::Upstream &&
                    (!item.target_text || s.surface == *item.target_text))
                    found = i;
            }
            if (!found) fail(item, "no upstream redaction at the item's span (already applied?)");
            edits[{t, m}].push_back(Edit{*item.span_start, *item.span_end, item.surrogate.value_or(""),
                                         keeps_label(item.evaluation), &item, found});
        }

        if (keeps_label(item.evaluation)) {
            const auto key = entity_key(item, msg);
            const auto& surrogate = *item.surrogate;
            const auto norm = normalize_span_text(surrogate);
            std::optional<std::string> bound = registry.lookup(item.session_id, key);
            if (auto it = staged.find({item.session_id, key}); it != staged.end()) bound = it->second;
            // The first binding of an entity wins; a later item for the same
            // key is rewritten with the bound surrogate.
            if (bound) {
                edits[{t, m}].back().replacement = *bound;
                continue;
            }
            std::optional<std::string> owner = registry.owner(surrogate);
            if (auto it = staged_owner.find(norm); it != staged_owner.end()) owner = it->second;
            if (owner && *owner != item.session_id)
                fail(item, "surrogate '" + surrogate + "' is already used in session " + *owner);
            staged.emplace(std::pair{item.session_id, key}, surrogate);
            staged_owner.emplace(norm, item.session_id);
        }
    }

    // Edits within a message must be disjoint and must not cut an untouched label.
    for (auto& [where, list] : edits) {
        std::sort(list.begin(), list.end(), [](const Edit& a, const Edit& b) { return a.start < b.start; });
        for (std::size_t i = 1; i < list.size(); ++i)
            if (list[i].start < list[i - 1].end)
                fail(*list[i].item, "overlaps the edit of item " + list[i - 1].item->id);
        const auto& msg = corpus[where.first].messages[where.second];
        for (std::size_t li = 0; li < msg.labels.size(); ++li) {
            const auto& s = msg.labels[li];
            for (const auto& e : list) {
                if (e.label_index == li) continue;
                if (s.start < e.end && e.start < s.end)
                    fail(*e.item, "edit cuts through another label at [" + std::to_string(s.start) + ", " +
                                      std::to_string(s.end) + ")");
            }
        }
    }

    ApplyResult result;
    result.benchmark = corpus;
    result.discovered = discovered;
    for (std::size_t t = 0; t < corpus.size(); ++t) {
        for (std::size_t m = 0; m < corpus[t].messages.size(); ++m) {
            const auto& src = corpus[t].messages[m];
            auto& dst = result.benchmark[t].messages[m];
            result.input_labels += src.labels.size();
            const auto eit = edits.find({t, m});
            const std::vector<Edit> none;
            const auto& list = eit == edits.end() ? none : eit->second;

            std::vector<LedgerRow> rows;
            std::vector<PiiSpan> labels;
            if (!list.empty()) {
                const OffsetMap map(src.text);
                std::string text;
                std::size_t cursor = 0;        // scalar offset in src
                std::ptrdiff_t shift = 0;      // running length delta
                std::vector<std::ptrdiff_t> shift_at_edit;
                for (const auto& e : list) {
                    text.append(src.text, map.to_byte(cursor), map.to_byte(e.start) - map.to_byte(cursor));
                    shift_at_edit.push_back(shift);
                    text += e.replacement;
                    shift += static_cast<std::ptrdiff_t>(codepoint_length(e.replacement)) -
                             static_cast<std::ptrdiff_t>(e.end - e.start);
                    cursor = e.end;
                }
                text.append(src.text, map.to_byte(cursor), std::string::npos);
                dst.text = std::move(text);

                auto shift_before = [&](std::size_t pos) {
                    std::ptrdiff_t s = 0;
                    for (const auto& e : list)
                        if (e.end <= pos) s += static_cast<std::ptrdiff_t>(codepoint_length(e.replacement)) -
                                               static_cast<std::ptrdiff_t>(e.end - e.start);
                    return s;
                };
                for (std::size_t li = 0; li < src.labels.size(); ++li) {
                    const auto edit = std::find_if(list.begin(), list.end(), [&](const Edit& e) { return e.label_index == li; });
                    if (edit != list.end()) continue;
                    auto s = src.labels[li];
                    const auto d = shift_before(s.start);
                    s.start = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(s.start) + d);
                    s.end = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(s.end) + d);
                    labels.push_back(std::move(s));
                }
                for (std::size_t k = 0; k < list.size(); ++k) {
                    const auto& e = list[k];
                    if (!e.keep_label) continue;
                    const auto start = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(e.start) + shift_at_edit[k]);
                    labels.push_back(PiiSpan{start, start + codepoint_length(e.replacement), e.replacement,
                                             e.item->pii_type, Provenance::Surrogate});
                }
            } else {
                labels = src.labels;
            }

            // Ledger: original labels in order, then discoveries.
            for (std::size_t li = 0; li < src.labels.size(); ++li) {
                const auto edit = std::find_if(list.begin(), list.end(), [&](const Edit& e) { return e.label_index == li; });
                LedgerRow row{corpus[t].session_id, src.index, src.labels[li].type, std::nullopt, LedgerAction::Untouched};
                if (edit != list.end()) {
                    row.type = edit->item->pii_type;
                    row.verdict = edit->item->evaluation;
                    row.action = edit->keep_label ? LedgerAction::Retain : LedgerAction::Remove;
                }
                rows.push_back(row);
            }
            for (const auto& e : list)
                if (!e.label_index)
                    rows.push_back({corpus[t].session_id, src.index, e.item->pii_type, e.item->evaluation, LedgerAction::Add});
            if (auto dit = dismissed.find({t, m}); dit != dismissed.end())
                for (const auto* item : dit->second)
                    rows.push_back({corpus[t].session_id, src.index, item->pii_type, item->evaluation, LedgerAction::Dismiss});

            std::sort(labels.begin(), labels.end(), [](const PiiSpan& a, const PiiSpan& b) {
                return std::tie(a.start, a.end, a.type) < std::tie(b.start, b.end, b.type);
            });
            for (const auto& s : labels)
                if (codepoint_slice(dst.text, s.start, s.end) != s.surface)
                    throw std::logic_error("offset integrity violated in session " + corpus[t].session_id);
            dst.labels = std::move(labels);

            for (const auto& r : rows) {
                switch (r.action) {
                    case LedgerAction::Retain:
                    case LedgerAction::Add:
                    case LedgerAction::Untouched: ++result.retained; break;
                    case LedgerAction::Remove:
                    case LedgerAction::Dismiss: ++result.removed; break;
                }
                result.ledger.push_back(r);
            }
        }
    }
    for (const auto& tr : result.benchmark)
        for (const auto& msg : tr.messages)
            for (const auto& s : msg.labels) ++result.output_labels_by_type[s.type];

    if (result.retained + result.removed != result.input_labels + result.discovered)
        throw std::logic_error("label conservation violated");

    for (const auto& [where, surrogate] : staged) registry.bind(where.first, where.second, surrogate);
    registry.check_invariants();
    return result;
}

void write_ledger_csv(const std::vector<LedgerRow>& ledger, std::ostream& out) {
    out << "session_id,message_index,type,verdict,action\n";
    auto quote = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        return q + "\"";
    };
    for (const auto& r : ledger)
        out << quote(r.session_id) << ',' << r.message_index << ',' << to_string(r.type) << ','
            << (r.verdict ? std::string(to_string(*r.verdict)) : std::string()) << ',' << to_string(r.action) << '\n';
}

Resolution resolution_rate(const std::set<std::string>& previous_downvoted,
                           const std::vector<AnnotationItem>& current) {
    Resolution r;
    r.previous = previous_downvoted.size();
    if (r.previous == 0) return r;
    std::unordered_map<std::string, const AnnotationItem*> by_id;
    for (const auto& item : current) by_id[item.id] = &item;
    for (const auto& id : previous_downvoted) {
        auto it = by_id.find(id);
        if (it != by_id.end() && !it->second->has_down_vote(it->second->iteration)) ++r.resolved;
    }
    r.rate = static_cast<double>(r.resolved) / static_cast<double>(r.previous);
    // Integer form of rate >= 0.95.
    r.stop = r.resolved * 100 >= r.previous * 95;
    return r;
}

std::set<std::string> downvoted_ids(const std::vector<AnnotationItem>& items, int iteration) {
    std::set<std::string> out;
    for (const auto& item : items)
        if (item.iteration == iteration && item.has_down_vote(iteration)) out.insert(item.id);
    return out;
}

}  // namespace mathpii
