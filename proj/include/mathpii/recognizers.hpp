#pragma once

// Baseline detection engine: regex recognizers for structured identifiers and
// education-specific types, plus an adapter over a named-entity provider for
// context-dependent types. Outputs are always expressed in the 17-type
// taxonomy with provenance DETECTED.

#include "mathpii/corpus.hpp"
#include "mathpii/detection.hpp"
#include "mathpii/pii_type.hpp"

#include <boost/regex.hpp>
#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mathpii {

class Recognizer {
public:
    // Throws ValidationError if any pattern fails to compile or the list is empty.
    Recognizer(std::string name, PiiType target, std::vector<std::string> patterns,
               std::vector<std::string> context_words = {});

    const std::string& name() const { return name_; }
    PiiType target_type() const { return target_; }
    const std::vector<std::string>& patterns() const { return patterns_; }
    const std::vector<std::string>& context_words() const { return context_; }

    // Byte ranges of every non-overlapping match of every pattern, pattern by
    // pattern. Empty matches are skipped.
    std::vector<std::pair<std::size_t, std::size_t>> find_all(std::string_view text) const;

private:
    std::string name_;
    PiiType target_;
    std::vector<std::string> patterns_;
    std::vector<std::string> context_;
    std::vector<boost::regex> compiled_;
};

std::vector<Recognizer> default_recognizers();
std::vector<Recognizer> parse_recognizers(const nlohmann::json& config);
std::vector<Recognizer> load_recognizers(const std::filesystem::path& path);
nlohmann::json recognizers_to_json(std::span<const Recognizer> recognizers);

// Entity reported by a named-entity provider. Offsets are scalar-value offsets
// into the analyzed text, end exclusive.
struct NerEntity {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string label;
};

// Raised by a provider that cannot serve requests (model missing, process
// crashed). The baseline engine catches it and degrades to patterns only.
class NerUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NerProvider {
public:
    virtual ~NerProvider() = default;
    virtual std::string provider_id() const = 0;
    virtual std::vector<NerEntity> analyze(std::string_view text) const = 0;
};

// Dictionary-backed provider: each configured term is found as a whole word,
// case-sensitively. Config JSON maps provider labels to term lists, e.g.
// {"PERSON": ["Priya"], "GPE": ["Brooklyn"]}.
class GazetteerNer final : public NerProvider {
public:
    explicit GazetteerNer(std::map<std::string, std::vector<std::string>> entries);
    static GazetteerNer load(const std::filesystem::path& path);

    std::string provider_id() const override { return "gazetteer"; }
    std::vector<NerEntity> analyze(std::string_view text) const override;

private:
    std::vector<std::pair<std::string, boost::regex>> matchers_;
};

std::map<std::string, PiiType> default_ner_mapping();

struct NerAdapter {
    std::shared_ptr<const NerProvider> provider;
    std::map<std::string, PiiType> type_mapping = default_ner_mapping();

    std::string provider_id() const { return provider ? provider->provider_id() : std::string(); }
};

// Throws ValidationError unless the mapping reaches PERSON, LOCATION, NRP, DATE.
void validate_ner_adapter(const NerAdapter& adapter);

// "" or "none" yields no adapter; "gazetteer" loads `config` as a gazetteer.
std::optional<NerAdapter> make_ner_adapter(std::string_view provider_id,
                                           const std::filesystem::path& config = {});

struct BaselineOutput {
    std::vector<PiiSpan> spans;  // sorted by (start, end, type)
    std::vector<std::string> warnings;
};

// Same-type overlapping hits are merged to their union; different types may
// overlap.
BaselineOutput detect_baseline(std::string_view text, std::span<const Recognizer> recognizers,
                               const NerAdapter* ner = nullptr);

struct BaselineConfig {
    std::vector<Recognizer> recognizers = default_recognizers();
    std::optional<NerAdapter> ner;
    unsigned threads = 0;
};

inline constexpr std::string_view kBaselineEngineId = "baseline";

std::vector<DetectionResult> detect_baseline_corpus(const Corpus& corpus, const BaselineConfig& config);

Detection to_detection(const PiiSpan& span);

}  // namespace mathpii
