#pragma once

#include "mathpii/annotation.hpp"
#include "mathpii/corpus.hpp"
#include "mathpii/segmentation.hpp"

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mathpii {

// How UNCERTAIN audit verdicts enter the capture proportions.
enum class UncertainPolicy { Exclude, AsPii, AsNotPii };

UncertainPolicy parse_uncertain_policy(std::string_view text);

// Identifies one upstream label: (session, message, start offset).
struct LabelKey {
    std::string session_id;
    std::size_t message_index = 0;
    std::size_t start = 0;

    auto operator<=>(const LabelKey&) const = default;
};

using LabelVerdicts = std::map<LabelKey, Verdict>;

// Verdicts of the non-discovered items, keyed by the label they judge.
LabelVerdicts verdicts_from_items(const std::vector<AnnotationItem>& items);

struct GridSpec {
    std::vector<double> anchor_values;
    std::vector<double> similarity_values;

    // T_anchor 0.05..0.10 step 0.01, T_sim 0.0..0.5 step 0.1 (36 points).
    static GridSpec reference();
};

struct GridPoint {
    Thresholds thresholds;
    std::size_t fp_captured = 0;
    std::size_t fp_total = 0;
    std::size_t tp_captured = 0;
    std::size_t tp_total = 0;
    double fp_prop = 0.0;  // a
    double tp_prop = 0.0;  // t
    double objective = 0.0;
};

// Harmonic mean of a and (1 - t); 0 when both terms are 0.
double harmonic_objective(double fp_prop, double tp_prop);

// One point per (anchor, similarity) pair, ordered by anchor then similarity.
// A label is captured when its message is MATH at that setting. Densities and
// embeddings are computed once and shared by every point. Throws
// ValidationError naming the first upstream label without a verdict.
std::vector<GridPoint> evaluate_grid(const Corpus& corpus, const LabelVerdicts& verdicts,
                                     const MathVocabulary& vocab, const EmbeddingProvider& embedder,
                                     const GridSpec& grid, UncertainPolicy uncertain = UncertainPolicy::Exclude,
                                     unsigned threads = 0);

// Argmax of the objective; ties go to the smaller anchor threshold, then the
// smaller similarity threshold. Throws ValidationError on an empty grid.
Thresholds select_thresholds(std::span<const GridPoint> grid);

// t_anchor,t_sim,fp_prop,tp_prop,objective
void write_heatmap_csv(std::span<const GridPoint> grid, std::ostream& out);

}  // namespace mathpii
