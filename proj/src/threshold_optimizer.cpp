#include "mathpii/threshold_optimizer.hpp"

#include "mathpii/errors.hpp"
#include "mathpii/parallel.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

namespace mathpii {

UncertainPolicy parse_uncertain_policy(std::string_view text) {
    if (text == "exclude") return UncertainPolicy::Exclude;
    if (text == "pii") return UncertainPolicy::AsPii;
    if (text == "not-pii") return UncertainPolicy::AsNotPii;
    throw ValidationError("unknown uncertain policy '" + std::string(text) + "' (exclude|pii|not-pii)");
}

LabelVerdicts verdicts_from_items(const std::vector<AnnotationItem>& items) {
    LabelVerdicts out;
    for (const auto& item : latest_items(items)) {
        if (item.discovered || !item.span_start) continue;
        out[LabelKey{item.session_id, item.message_index, *item.span_start}] = item.evaluation;
    }
    return out;
}

GridSpec GridSpec::reference() {
    GridSpec g;
    for (int i = 5; i <= 10; ++i) g.anchor_values.push_back(i / 100.0);
    for (int i = 0; i <= 5; ++i) g.similarity_values.push_back(i / 10.0);
    return g;
}

double harmonic_objective(double fp_prop, double tp_prop) {
    const double keep = 1.0 - tp_prop;
    const double denom = fp_prop + keep;
    if (denom <= 0.0) return 0.0;
    return 2.0 * fp_prop * keep / denom;
}

namespace {

enum class LabelClass { FalsePositive, TruePositive, Ignored };

struct ClassifiedLabel {
    std::size_t transcript = 0;
    std::size_t message = 0;
    LabelClass cls = LabelClass::Ignored;
};

LabelClass classify(Verdict v, UncertainPolicy policy) {
    switch (v) {
        case Verdict::Pii: return LabelClass::TruePositive;
        case Verdict::NotPii: return LabelClass::FalsePositive;
        case Verdict::Uncertain:
            switch (policy) {
                case UncertainPolicy::Exclude: return LabelClass::Ignored;
                case UncertainPolicy::AsPii: return LabelClass::TruePositive;
                case UncertainPolicy::AsNotPii: return LabelClass::FalsePositive;
            }
    }
    return LabelClass::Ignored;
}

}  // namespace

std::vector<GridPoint> evaluate_grid(const Corpus& corpus, const LabelVerdicts& verdicts,
                                     const MathVocabulary& vocab, const EmbeddingProvider& embedder,
                                     const GridSpec& grid, UncertainPolicy uncertain, unsigned threads) {
    if (grid.anchor_values.empty() || grid.similarity_values.empty())
        throw ValidationError("threshold grid ranges must be non-empty");

    std::vector<ClassifiedLabel> labels;
    for (std::size_t ti = 0; ti < corpus.size(); ++ti) {
        const auto& t = corpus[ti];
        for (const auto& m : t.messages) {
            for (const auto& span : m.labels) {
                if (span.provenance != Provenance::Upstream) continue;
                auto it = verdicts.find(LabelKey{t.session_id, m.index, span.start});
                if (it == verdicts.end())
                    throw ValidationError("unaudited label: session '" + t.session_id + "' message " +
                                          std::to_string(m.index) + " span [" + std::to_string(span.start) + ", " +
                                          std::to_string(span.end) + ") " + std::string(to_string(span.type)));
                labels.push_back({ti, m.index, classify(it->second, uncertain)});
            }
        }
    }

    std::vector<TranscriptFeatures> features(corpus.size());
    parallel_for(corpus.size(), threads,
                 [&](std::size_t i) { features[i] = compute_features(corpus[i], vocab, embedder); });

    auto anchors = grid.anchor_values;
    auto sims = grid.similarity_values;
    std::sort(anchors.begin(), anchors.end());
    std::sort(sims.begin(), sims.end());

    std::vector<GridPoint> points(anchors.size() * sims.size());
    parallel_for(points.size(), threads, [&](std::size_t p) {
        GridPoint& gp = points[p];
        gp.thresholds = Thresholds{anchors[p / sims.size()], sims[p % sims.size()]};

        std::vector<std::vector<SegmentLabel>> labeling(corpus.size());
        for (std::size_t ti = 0; ti < corpus.size(); ++ti) {
            const auto& f = features[ti];
            EmbeddingLookup lookup = [&f](std::size_t i) -> const Embedding& { return f.embeddings.at(i); };
            labeling[ti] = label_transcript(corpus[ti], f.densities, gp.thresholds, lookup).labels;
        }
        for (const auto& l : labels) {
            const bool captured = labeling[l.transcript][l.message] == SegmentLabel::Math;
            if (l.cls == LabelClass::FalsePositive) {
                ++gp.fp_total;
                gp.fp_captured += captured;
            } else if (l.cls == LabelClass::TruePositive) {
                ++gp.tp_total;
                gp.tp_captured += captured;
            }
        }
        gp.fp_prop = gp.fp_total ? static_cast<double>(gp.fp_captured) / gp.fp_total : 0.0;
        gp.tp_prop = gp.tp_total ? static_cast<double>(gp.tp_captured) / gp.tp_total : 0.0;
        gp.objective = harmonic_objective(gp.fp_prop, gp.tp_prop);
    });
    return points;
}

Thresholds select_thresholds(std::span<const GridPoint> grid) {
    if (grid.empty()) throw ValidationError("cannot select thresholds from an empty grid");
    const GridPoint* best = &grid.front();
    for (const auto& gp : grid) {
        const bool better =
            gp.objective > best->objective ||
            (gp.objective == best->objective &&
             (gp.thresholds.anchor < best->thresholds.anchor ||
              (gp.thresholds.anchor == best->thresholds.anchor &&
               gp.thresholds.similarity < best->thresholds.similarity)));
        if (better) best = &gp;
    }
    return best->thresholds;
}

void write_heatmap_csv(std::span<const GridPoint> grid, std::ostream& out) {
    out << "t_anchor,t_sim,fp_prop,tp_prop,objective\n";
    char buf[160];
    for (const auto& gp : grid) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f,%.6f,%.6f,%.6f\n", gp.thresholds.anchor,
                      gp.thresholds.similarity, gp.fp_prop, gp.tp_prop, gp.objective);
        out << buf;
    }
}

}  // namespace mathpii
