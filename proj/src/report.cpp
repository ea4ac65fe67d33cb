#include "mathpii/report.hpp"

#include "mathpii/errors.hpp"
#include "mathpii/text.hpp"

#include <algorithm>
#include <cstdio>

namespace mathpii {

std::string render_aligned(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& row : rows) {
        if (width.size() < row.size()) width.resize(row.size(), 0);
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], codepoint_length(row[c]));
    }
    std::string out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::string line;
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            if (c) line += "  ";
            line += rows[r][c];
            if (c + 1 < rows[r].size()) line.append(width[c] - codepoint_length(rows[r][c]), ' ');
        }
        out += line + '\n';
        if (r == 0) {
            std::size_t total = 0;
            for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c ? 2 : 0);
            out += std::string(total, '-') + '\n';
        }
    }
    return out;
}

namespace {

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string grouped(std::size_t n) {
    std::string digits = std::to_string(n), out;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i && (digits.size() - i) % 3 == 0) out += ',';
        out += digits[i];
    }
    return out;
}

}  // namespace

std::string format_metric(double value, const std::optional<BootstrapCI>& ci) {
    std::string s = fixed3(value);
    if (ci) s += " [" + fixed3(ci->lower) + ", " + fixed3(ci->upper) + "]";
    return s;
}

std::string render_label_comparison(const CorpusStats& source, const CorpusStats& benchmark) {
    std::vector<std::vector<std::string>> rows{{"Category", "Source Corpus", "Benchmark"}};
    rows.push_back({"Transcripts", grouped(source.transcripts), grouped(benchmark.transcripts)});
    rows.push_back({"Messages", grouped(source.messages), grouped(benchmark.messages)});
    rows.push_back({"PII Labels (Total)", grouped(source.labels), grouped(benchmark.labels)});
    auto count = [](const CorpusStats& s, PiiType t) {
        auto it = s.labels_by_type.find(t);
        return it == s.labels_by_type.end() ? std::size_t{0} : it->second;
    };
    std::vector<PiiType> types(kAllPiiTypes.begin(), kAllPiiTypes.end());
    std::stable_sort(types.begin(), types.end(), [&](PiiType a, PiiType b) {
        const auto ba = count(benchmark, a), bb = count(benchmark, b);
        if (ba != bb) return ba > bb;
        return count(source, a) > count(source, b);
    });
    for (auto t : types) {
        if (count(source, t) == 0 && count(benchmark, t) == 0) continue;
        rows.push_back({std::string(to_string(t)), grouped(count(source, t)), grouped(count(benchmark, t))});
    }
    return render_aligned(rows);
}

std::string render_metric_table(const std::vector<NamedReport>& reports) {
    std::vector<std::vector<std::string>> rows{{"Model", "Precision", "Recall", "F1"}};
    for (const auto& [name, r] : reports) {
        const auto& m = r.overall.metrics;
        const auto& ci = r.overall.ci;
        rows.push_back({name, format_metric(m.precision, ci ? std::optional(ci->precision) : std::nullopt),
                        format_metric(m.recall, ci ? std::optional(ci->recall) : std::nullopt),
                        format_metric(m.f1, ci ? std::optional(ci->f1) : std::nullopt)});
    }
    return render_aligned(rows);
}

std::string render_fp_by_category(const std::vector<NamedReport>& reports, const CorpusStats& gold) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"PII Type", "Total"};
    for (const auto& nr : reports) {
        header.push_back(nr.name + " FP");
        header.push_back(nr.name + " Prec");
    }
    rows.push_back(header);

    auto stratum = [](const EvalReport& r, PiiType t) -> const StratumReport* {
        auto it = r.by_type.find(t);
        return it == r.by_type.end() ? nullptr : &it->second;
    };
    auto has_predictions = [&](const EvalReport& r, PiiType t) {
        const auto* s = stratum(r, t);
        return s && s->metrics.tp + s->metrics.fp > 0;
    };
    std::vector<PiiType> types;
    for (auto t : kAllPiiTypes) {
        const bool any = gold.labels_by_type.contains(t) ||
                         std::any_of(reports.begin(), reports.end(),
                                     [&](const NamedReport& nr) { return stratum(nr.report, t) != nullptr; });
        if (any) types.push_back(t);
    }
    if (!reports.empty()) {
        const auto& last = reports.back().report;
        std::stable_sort(types.begin(), types.end(), [&](PiiType a, PiiType b) {
            const bool ha = has_predictions(last, a), hb = has_predictions(last, b);
            if (ha != hb) return ha;
            if (!ha) return false;
            return stratum(last, a)->metrics.precision > stratum(last, b)->metrics.precision;
        });
    }
    for (auto t : types) {
        auto git = gold.labels_by_type.find(t);
        std::vector<std::string> row{std::string(to_string(t)),
                                     std::to_string(git == gold.labels_by_type.end() ? 0 : git->second)};
        for (const auto& nr : reports) {
            if (!has_predictions(nr.report, t)) {
                row.push_back("-");
                row.push_back("-");
                continue;
            }
            const auto* s = stratum(nr.report, t);
            row.push_back(std::to_string(s->metrics.fp));
            row.push_back(fixed3(s->metrics.precision));
        }
        rows.push_back(std::move(row));
    }
    return render_aligned(rows);
}

std::string render_segment_table(const std::vector<NamedReport>& reports) {
    std::vector<std::vector<std::string>> rows{
        {"Model", "NON-MATH Prec", "NON-MATH Rec", "NON-MATH F1", "MATH Prec", "MATH Rec", "MATH F1"}};
    for (const auto& [name, r] : reports) {
        if (!r.by_segment) throw ValidationError("report '" + name + "' has no segment strata");
        const auto& nm = r.by_segment->at(SegmentLabel::NonMath).metrics;
        const auto& m = r.by_segment->at(SegmentLabel::Math).metrics;
        rows.push_back({name, fixed3(nm.precision), fixed3(nm.recall), fixed3(nm.f1), fixed3(m.precision),
                        fixed3(m.recall), fixed3(m.f1)});
    }
    return render_aligned(rows);
}

SegmentCapture segment_capture(const Corpus& corpus, const LabelVerdicts& verdicts, const SegmentLabeling& labeling) {
    SegmentCapture out;
    for (const auto& tr : corpus) {
        for (const auto& msg : tr.messages) {
            for (const auto& s : msg.labels) {
                if (s.provenance != Provenance::Upstream) continue;
                auto it = verdicts.find(LabelKey{tr.session_id, msg.index, s.start});
                if (it == verdicts.end()) continue;
                auto& row = out.by_type[s.type];
                const bool math = labeling.label(tr.session_id, msg.index) == SegmentLabel::Math;
                for (auto* r : {&row, &out.total}) {
                    switch (it->second) {
                        case Verdict::Pii: ++(math ? r->math_pii : r->non_math_pii); break;
                        case Verdict::NotPii: ++(math ? r->math_not_pii : r->non_math_not_pii); break;
                        case Verdict::Uncertain: ++r->uncertain; break;
                    }
                }
            }
        }
    }
    return out;
}

std::string render_segment_capture(const SegmentCapture& capture) {
    std::vector<std::pair<PiiType, SegmentCaptureRow>> rows(capture.by_type.begin(), capture.by_type.end());
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.second.math_not_pii > b.second.math_not_pii; });
    std::vector<std::vector<std::string>> table{
        {"PII Type", "MATH Not PII", "MATH PII", "NON-MATH Not PII", "NON-MATH PII", "Uncertain"}};
    auto add = [&](const std::string& name, const SegmentCaptureRow& r) {
        table.push_back({name, std::to_string(r.math_not_pii), std::to_string(r.math_pii),
                         std::to_string(r.non_math_not_pii), std::to_string(r.non_math_pii),
                         std::to_string(r.uncertain)});
    };
    for (const auto& [t, r] : rows) add(std::string(to_string(t)), r);
    add("TOTAL", capture.total);
    return render_aligned(table);
}

}  // namespace mathpii
