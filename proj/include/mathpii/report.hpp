#pragma once

#include "mathpii/corpus.hpp"
#include "mathpii/evaluation.hpp"
#include "mathpii/segmentation.hpp"
#include "mathpii/threshold_optimizer.hpp"

#include <array>
#include <map>
#include <string>
#include <vector>

namespace mathpii {

// Pads each column to its widest cell; the first row is the header and is
// followed by a dashed rule.
std::string render_aligned(const std::vector<std::vector<std::string>>& rows);

// "0.254 [0.225, 0.285]", or just "0.254" without an interval.
std::string format_metric(double value, const std::optional<BootstrapCI>& ci);

// Source vs benchmark label counts per type, ordered by benchmark count
// (descending), then source count, then type code.
std::string render_label_comparison(const CorpusStats& source, const CorpusStats& benchmark);

struct NamedReport {
    std::string name;  // row label, e.g. engine id
    EvalReport report;
};

// One row per report: Precision, Recall, F1 with bracketed CIs.
std::string render_metric_table(const std::vector<NamedReport>& reports);

// Per type: gold total, then FP and precision for each report. "-" marks a
// type with no predictions. Ordered by the last report's precision, highest
// first.
std::string render_fp_by_category(const std::vector<NamedReport>& reports, const CorpusStats& gold);

// NON-MATH and MATH precision / recall / F1 per report. Reports without
// segment strata are rejected with ValidationError.
std::string render_segment_table(const std::vector<NamedReport>& reports);

// Upstream labels by type, segment, and audit verdict.
struct SegmentCaptureRow {
    std::size_t math_pii = 0;
    std::size_t math_not_pii = 0;
    std::size_t non_math_pii = 0;
    std::size_t non_math_not_pii = 0;
    std::size_t uncertain = 0;
};

struct SegmentCapture {
    std::map<PiiType, SegmentCaptureRow> by_type;
    SegmentCaptureRow total;
};

SegmentCapture segment_capture(const Corpus& corpus, const LabelVerdicts& verdicts, const SegmentLabeling& labeling);
// Types ordered by NOT_PII count in MATH segments, highest first.
std::string render_segment_capture(const SegmentCapture& capture);

}  // namespace mathpii
