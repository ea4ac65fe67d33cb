#include "mathpii/recognizers.hpp"

#include "mathpii/errors.hpp"
#include "mathpii/parallel.hpp"
#include "mathpii/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <tuple>

namespace mathpii {

namespace {

boost::regex compile_or_throw(const std::string& source, std::string_view owner) {
    try {
        return boost::regex(source, boost::regex::perl);
    } catch (const boost::regex_error& e) {
        throw ValidationError("recognizer '" + std::string(owner) + "': pattern '" + source +
                              "' does not compile: " + e.what());
    }
}

constexpr std::string_view kMonthNames =
    "(?:jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|june?|july?|aug(?:ust)?"
    "|sep(?:t(?:ember)?)?|oct(?:ober)?|nov(?:ember)?|dec(?:ember)?)";

}  // namespace

Recognizer::Recognizer(std::string name, PiiType target, std::vector<std::string> patterns,
                       std::vector<std::string> context_words)
    : name_(std::move(name)), target_(target), patterns_(std::move(patterns)), context_(std::move(context_words)) {
    if (patterns_.empty()) throw ValidationError("recognizer '" + name_ + "' has no patterns");
    compiled_.reserve(patterns_.size());
    for (const auto& p : patterns_) compiled_.push_back(compile_or_throw(p, name_));
}

std::vector<std::pair<std::size_t, std::size_t>> Recognizer::find_all(std::string_view text) const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& re : compiled_) {
        boost::cregex_iterator it(text.data(), text.data() + text.size(), re), end;
        for (; it != end; ++it) {
            const auto& m = (*it)[0];
            if (m.length() == 0) continue;
            const auto b = static_cast<std::size_t>(m.first - text.data());
            out.emplace_back(b, b + static_cast<std::size_t>(m.length()));
        }
    }
    return out;
}

std::vector<Recognizer> default_recognizers() {
    const std::string months(kMonthNames);
    std::vector<Recognizer> r;
    r.emplace_back("email", PiiType::EmailAddress,
                   std::vector<std::string>{R"(\b[A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,}\b)"},
                   std::vector<std::string>{"email", "mail", "contact"});
    r.emplace_back("url", PiiType::Url,
                   std::vector<std::string>{
                       R"((?i)\b(?:https?://|www\.)[^\s<>"']*[^\s<>"'.,;:!?)\]])",
                       R"((?i)(?<![@\w.\-/])[a-z0-9][a-z0-9\-]*(?:\.[a-z0-9\-]+)*\.(?:com|org|net|edu|gov|io|us|co|info|ly|me|app)\b(?:/[^\s<>"']*[^\s<>"'.,;:!?)\]])?)"},
                   std::vector<std::string>{"link", "website", "site", "url"});
    r.emplace_back("ip_address", PiiType::IpAddress,
                   std::vector<std::string>{
                       R"(\b(?:(?:25[0-5]|2[0-4]\d|1\d\d|[1-9]?\d)\.){3}(?:25[0-5]|2[0-4]\d|1\d\d|[1-9]?\d)\b)"},
                   std::vector<std::string>{"ip", "address"});
    r.emplace_back("phone", PiiType::PhoneNumber,
                   std::vector<std::string>{
                       R"((?<![\w+])(?:\+?1[\s.\-]?)?\(?\d{3}\)?[\s.\-]?\d{3}[\s.\-]?\d{4}\b)"},
                   std::vector<std::string>{"phone", "call", "text", "number", "cell"});
    r.emplace_back("us_ssn", PiiType::UsSsn,
                   std::vector<std::string>{R"(\b\d{3}-\d{2}-\d{4}\b)", R"(\b\d{3} \d{2} \d{4}\b)", R"(\b\d{9}\b)"},
                   std::vector<std::string>{"ssn", "social", "security"});
    r.emplace_back("us_passport", PiiType::UsPassport,
                   std::vector<std::string>{R"(\b[A-Z]\d{8}\b)", R"(\b\d{9}\b)"},
                   std::vector<std::string>{"passport"});
    r.emplace_back("us_bank_number", PiiType::UsBankNumber,
                   std::vector<std::string>{R"(\b\d{8,17}\b)"},
                   std::vector<std::string>{"bank", "account", "routing"});
    r.emplace_back("us_driver_license", PiiType::UsDriverLicense,
                   std::vector<std::string>{R"(\b[A-Z]{1,2}\d{4,12}\b)", R"(\b\d{6,14}\b)"},
                   std::vector<std::string>{"license", "driver", "dl"});
    r.emplace_back("date", PiiType::Date,
                   std::vector<std::string>{
                       R"(\b(?:0?[1-9]|1[0-2])/(?:0?[1-9]|[12]\d|3[01])(?:/(?:\d{4}|\d{2}))?\b)",
                       R"(\b(?:0?[1-9]|1[0-2])-(?:0?[1-9]|[12]\d|3[01])-(?:\d{4}|\d{2})\b)",
                       R"(\b\d{4}-(?:0?[1-9]|1[0-2])-(?:0?[1-9]|[12]\d|3[01])\b)",
                       R"(\b(?:0?[1-9]|[12]\d|3[01])\.(?:0?[1-9]|1[0-2])\.(?:\d{4}|\d{2})\b)",
                       "(?i)\\b" + months + "\\.?\\s+\\d{1,2}(?:st|nd|rd|th)?(?:,?\\s+\\d{4})?\\b",
                       "(?i)\\b\\d{1,2}(?:st|nd|rd|th)?\\s+(?:of\\s+)?" + months + "\\b(?:,?\\s+\\d{4}\\b)?"},
                   std::vector<std::string>{"date", "birthday", "born", "dob"});
    r.emplace_back("social_handle", PiiType::SocialHandle,
                   std::vector<std::string>{R"((?<![\w.@])@[A-Za-z0-9_]{2,30}\b)"},
                   std::vector<std::string>{"instagram", "twitter", "tiktok", "snap", "follow"});
    r.emplace_back("school", PiiType::School,
                   std::vector<std::string>{R"(\bPS\s?\d{1,4}\b)", R"(\b\d{2}[A-Z]\d{3}\b)",
                                            R"(\b[A-Z][a-z]+ (?:High|Middle|Elementary|Academy)\b)"},
                   std::vector<std::string>{"school", "attend", "go to"});
    r.emplace_back("grade_level", PiiType::GradeLevel,
                   std::vector<std::string>{
                       R"((?i)\b\d{1,2}(?:st|nd|rd|th)\s+grade\b)", R"((?i)\bgrade\s+\d{1,2}\b)",
                       R"((?i)\b(?:first|second|third|fourth|fifth|sixth|seventh|eighth|ninth|tenth|eleventh|twelfth)\s+grade\b)"},
                   std::vector<std::string>{"grade", "year"});
    r.emplace_back("course_number", PiiType::CourseNumber,
                   std::vector<std::string>{
                       R"((?i)\b(?:algebra|geometry|calculus|calc|precalculus|precalc|trigonometry|trig|statistics|stats|math|maths|biology|bio|chemistry|chem|physics|english|history|economics|ap)\s?\d{2,4}\b)"},
                   std::vector<std::string>{"class", "course", "taking"});
    return r;
}

std::vector<Recognizer> parse_recognizers(const nlohmann::json& config) {
    if (!config.is_object() || !config.contains("recognizers") || !config["recognizers"].is_array())
        throw ValidationError("recognizer config must be an object with a 'recognizers' array");
    std::vector<Recognizer> out;
    std::size_t i = 0;
    for (const auto& jr : config["recognizers"]) {
        try {
            auto name = jr.at("name").get<std::string>();
            const auto type = parse_pii_type(jr.at("type").get<std::string>());
            auto patterns = jr.at("patterns").get<std::vector<std::string>>();
            auto context = jr.value("context", std::vector<std::string>{});
            out.emplace_back(std::move(name), type, std::move(patterns), std::move(context));
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception& e) {
            throw ValidationError("recognizer #" + std::to_string(i) + ": " + e.what());
        }
        ++i;
    }
    return out;
}

std::vector<Recognizer> load_recognizers(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open recognizer config '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return parse_recognizers(j);
}

nlohmann::json recognizers_to_json(std::span<const Recognizer> recognizers) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : recognizers) {
        nlohmann::ordered_json jr;
        jr["name"] = r.name();
        jr["type"] = to_string(r.target_type());
        jr["patterns"] = r.patterns();
        jr["context"] = r.context_words();
        arr.push_back(std::move(jr));
    }
    nlohmann::ordered_json root;
    root["recognizers"] = std::move(arr);
    return nlohmann::json::parse(root.dump());
}

GazetteerNer::GazetteerNer(std::map<std::string, std::vector<std::string>> entries) {
    for (auto& [label, terms] : entries) {
        for (const auto& term : terms) {
            if (trim_whitespace(term).empty()) continue;
            std::string escaped;
            for (char c : term) {
                if (std::string_view(R"(\^$.|?*+()[]{}/)").find(c) != std::string_view::npos) escaped += '\\';
                escaped += c;
            }
            matchers_.emplace_back(label, boost::regex("(?<![\\w])" + escaped + "(?![\\w])", boost::regex::perl));
        }
    }
}

GazetteerNer GazetteerNer::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open gazetteer '" + path.string() + "'");
    try {
        return GazetteerNer(nlohmann::json::parse(in).get<std::map<std::string, std::vector<std::string>>>());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::vector<NerEntity> GazetteerNer::analyze(std::string_view text) const {
    std::vector<NerEntity> out;
    const OffsetMap map(text);
    for (const auto& [label, re] : matchers_) {
        boost::cregex_iterator it(text.data(), text.data() + text.size(), re), end;
        for (; it != end; ++it) {
            const auto b = static_cast<std::size_t>((*it)[0].first - text.data());
            const auto e = b + static_cast<std::size_t>((*it)[0].length());
            out.push_back({map.to_codepoint(b), map.to_codepoint(e), label});
        }
    }
    return out;
}

std::map<std::string, PiiType> default_ner_mapping() {
    return {{"GPE", PiiType::Location},
            {"LOC", PiiType::Location},
            {"PERSON", PiiType::Person},
            {"NORP", PiiType::Nrp},
            {"DATE", PiiType::Date}};
}

void validate_ner_adapter(const NerAdapter& adapter) {
    for (PiiType needed : {PiiType::Person, PiiType::Location, PiiType::Nrp, PiiType::Date}) {
        const bool covered = std::any_of(adapter.type_mapping.begin(), adapter.type_mapping.end(),
                                         [&](const auto& kv) { return kv.second == needed; });
        if (!covered)
            throw ValidationError("NER type mapping does not cover " + std::string(to_string(needed)));
    }
}

std::optional<NerAdapter> make_ner_adapter(std::string_view provider_id, const std::filesystem::path& config) {
    if (provider_id.empty() || provider_id == "none") return std::nullopt;
    if (provider_id == "gazetteer") {
        if (config.empty()) throw ConfigError("gazetteer NER provider requires a config file");
        NerAdapter adapter;
        adapter.provider = std::make_shared<GazetteerNer>(GazetteerNer::load(config));
        return adapter;
    }
    throw ConfigError("unknown NER provider '" + std::string(provider_id) + "'");
}

namespace {

void merge_same_type(std::vector<PiiSpan>& spans, std::string_view text) {
    std::sort(spans.begin(), spans.end(), [](const PiiSpan& a, const PiiSpan& b) {
        return std::tie(a.type, a.start, a.end) < std::tie(b.type, b.start, b.end);
    });
    std::vector<PiiSpan> merged;
    for (auto& s : spans) {
        if (!merged.empty() && merged.back().type == s.type && s.start < merged.back().end) {
            merged.back().end = std::max(merged.back().end, s.end);
        } else {
            merged.push_back(std::move(s));
        }
    }
    for (auto& s : merged) s.surface = codepoint_slice(text, s.start, s.end);
    std::sort(merged.begin(), merged.end(), [](const PiiSpan& a, const PiiSpan& b) {
        return std::tie(a.start, a.end, a.type) < std::tie(b.start, b.end, b.type);
    });
    spans = std::move(merged);
}

}  // namespace

BaselineOutput detect_baseline(std::string_view text, std::span<const Recognizer> recognizers, const NerAdapter* ner) {
    BaselineOutput out;
    const OffsetMap map(text);
    for (const auto& rec : recognizers) {
        for (const auto& [b, e] : rec.find_all(text)) {
            PiiSpan s;
            s.start = map.to_codepoint(b);
            s.end = map.to_codepoint(e);
            s.type = rec.target_type();
            s.provenance = Provenance::Detected;
            out.spans.push_back(std::move(s));
        }
    }
    if (ner && ner->provider) {
        try {
            for (const auto& ent : ner->provider->analyze(text)) {
                auto it = ner->type_mapping.find(ent.label);
                if (it == ner->type_mapping.end()) continue;
                if (ent.start >= ent.end || ent.end > map.size()) continue;
                PiiSpan s;
                s.start = ent.start;
                s.end = ent.end;
                s.type = it->second;
                s.provenance = Provenance::Detected;
                out.spans.push_back(std::move(s));
            }
        } catch (const std::exception& e) {
            out.warnings.push_back("NER provider '" + ner->provider_id() + "' unavailable (" + e.what() +
                                   "); pattern-only detection");
        }
    }
    merge_same_type(out.spans, text);
    return out;
}

Detection to_detection(const PiiSpan& span) {
    return Detection{span.surface, span.type, span.start, span.end};
}

std::vector<DetectionResult> detect_baseline_corpus(const Corpus& corpus, const BaselineConfig& config) {
    if (config.ner) validate_ner_adapter(*config.ner);
    const NerAdapter* ner = config.ner ? &*config.ner : nullptr;

    // Flatten to (transcript, message) so parallel work is balanced.
    std::vector<std::pair<std::size_t, std::size_t>> work;
    std::vector<DetectionResult> results(corpus.size());
    for (std::size_t t = 0; t < corpus.size(); ++t) {
        results[t].session_id = corpus[t].session_id;
        results[t].engine = std::string(kBaselineEngineId);
        results[t].messages.resize(corpus[t].messages.size());
        for (std::size_t m = 0; m < corpus[t].messages.size(); ++m) work.emplace_back(t, m);
    }
    parallel_for(work.size(), config.threads, [&](std::size_t w) {
        const auto [t, m] = work[w];
        const auto& msg = corpus[t].messages[m];
        auto found = detect_baseline(msg.text, config.recognizers, ner);
        auto& slot = results[t].messages[m];
        slot.index = msg.index;
        slot.status = ParseStatus::Ok;
        slot.attempts = 1;
        slot.warnings = std::move(found.warnings);
        for (const auto& s : found.spans) slot.detections.push_back(to_detection(s));
    });
    return results;
}

}  // namespace mathpii
