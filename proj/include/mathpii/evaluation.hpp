#pragma once

#include "mathpii/corpus.hpp"
#include "mathpii/detection.hpp"
#include "mathpii/segmentation.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mathpii {

enum class MatchMode { TextAndType, OverlapAndType };

std::string_view to_string(MatchMode mode);
MatchMode parse_match_mode(std::string_view text);

// Normalization (ASCII case-fold plus whitespace trim) is fixed for both modes.
struct MatchPolicy {
    MatchMode mode = MatchMode::TextAndType;
};

struct Counts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    Counts& operator+=(const Counts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    bool operator==(const Counts&) const = default;
};

// Undefined ratios are 0.
struct MetricSet {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    static MetricSet from(const Counts& c);
};

struct MessageMatch {
    std::vector<PiiSpan> gold;         // after dedup
    std::vector<Detection> predicted;  // after dedup
    // (predicted index, gold index) pairs into the deduplicated lists.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    Counts counts;
};

// Dedups each side by (type, normalized text), then finds a maximum one-to-one
// assignment between predictions and gold spans of equal type. Text mode pairs
// equal normalized texts; overlap mode pairs intersecting scalar ranges, and a
// prediction without offsets falls back to text equality.
MessageMatch match_spans(std::span<const PiiSpan> gold, std::span<const Detection> predicted,
                         const MatchPolicy& policy);

// Per-transcript tallies that every report statistic is built from.
struct TranscriptTally {
    Counts overall;
    std::array<Counts, 17> by_type{};
    std::array<Counts, 2> by_segment{};  // indexed by SegmentLabel
};

std::vector<TranscriptTally> tally_corpus(const Corpus& gold, const std::vector<DetectionResult>& predicted,
                                          const MatchPolicy& policy, const SegmentLabeling* labeling);

struct BootstrapCI {
    std::size_t iterations = 0;
    std::uint64_t seed = 0;
    double lower = 0.0;
    double upper = 0.0;
};

struct MetricCIs {
    BootstrapCI precision;
    BootstrapCI recall;
    BootstrapCI f1;
};

struct BootstrapOptions {
    std::size_t iterations = 1000;
    std::uint64_t seed = 20240601;
    unsigned threads = 0;
};

// Nearest-rank percentile with `per_mille` in (0, 1000): the value at rank
// ceil(per_mille * n / 1000) of the sorted sample.
double nearest_rank(std::vector<double> values, unsigned per_mille);

// Transcript index drawn for resample `iteration`, position `k`. Exposed so
// tests can rebuild any resample independently.
std::vector<std::size_t> bootstrap_sample(std::uint64_t seed, std::size_t iteration, std::size_t n);

// Resamples transcripts with replacement and recomputes pooled metrics for
// the statistic produced by `pick` on each tally.
MetricCIs bootstrap_ci(std::span<const TranscriptTally> tallies, const BootstrapOptions& options,
                       Counts (*pick)(const TranscriptTally&, std::size_t), std::size_t pick_arg = 0);

struct StratumReport {
    MetricSet metrics;
    std::optional<MetricCIs> ci;
};

struct EvalReport {
    std::string engine;
    MatchPolicy policy;
    std::size_t transcripts = 0;
    std::size_t messages = 0;
    StratumReport overall;
    std::map<PiiType, StratumReport> by_type;  // only types with any count
    std::optional<std::map<SegmentLabel, StratumReport>> by_segment;
    std::optional<BootstrapOptions> bootstrap;
};

struct EvaluateOptions {
    MatchPolicy policy;
    const SegmentLabeling* segments = nullptr;  // required for segment strata
    bool segment_strata = false;
    std::optional<BootstrapOptions> bootstrap;  // omit to skip CIs
};

// Transcripts of `predicted` are joined to `gold` by session id; a missing
// result counts every gold label as FN. Throws ValidationError when segment
// strata are requested without a labeling covering the corpus.
EvalReport evaluate(const Corpus& gold, const std::vector<DetectionResult>& predicted, const EvaluateOptions& options);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

// CSV: stratum,key,tp,fp,fn,precision,recall,f1,p_lo,p_hi,r_lo,r_hi,f1_lo,f1_hi
void write_strata_csv(const EvalReport& report, std::ostream& out);

}  // namespace mathpii
