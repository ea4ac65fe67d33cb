#pragma once

#include "mathpii/corpus.hpp"
#include "mathpii/density.hpp"
#include "mathpii/embedding.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mathpii {

enum class SegmentLabel { Math, NonMath };

std::string_view to_string(SegmentLabel label);
SegmentLabel parse_segment_label(std::string_view text);

// Inclusive comparisons: a message is an anchor when density >= anchor, and a
// neighbour joins when cosine >= similarity.
struct Thresholds {
    double anchor = 0.05;
    double similarity = 0.3;
};

struct Segment {
    std::string transcript_id;
    std::size_t anchor_index = 0;
    std::size_t start_index = 0;  // inclusive
    std::size_t end_index = 0;    // inclusive
    Embedding centroid;
    std::vector<std::size_t> anchors;  // every anchor inside the range

    bool contains(std::size_t i) const { return i >= start_index && i <= end_index; }
};

struct TranscriptLabeling {
    std::string session_id;
    std::vector<SegmentLabel> labels;
    std::vector<Segment> segments;  // disjoint, non-abutting, ascending
};

class SegmentLabeling {
public:
    void add(TranscriptLabeling labeling);
    const TranscriptLabeling* find(std::string_view session_id) const;
    // Throws ValidationError when the session or index is not covered.
    SegmentLabel label(std::string_view session_id, std::size_t message_index) const;
    const std::vector<TranscriptLabeling>& transcripts() const { return transcripts_; }
    // Every transcript of the corpus is present with a matching message count.
    bool covers(const Corpus& corpus) const;

private:
    std::vector<TranscriptLabeling> transcripts_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Returns the embedding of message i; may throw.
using EmbeddingLookup = std::function<const Embedding&(std::size_t)>;

std::vector<double> message_densities(const Transcript& transcript, const MathVocabulary& vocab);

// Ascending indices whose density reaches the anchor threshold.
std::vector<std::size_t> anchors_from_densities(std::span<const double> densities, double anchor_threshold);
std::vector<std::size_t> find_anchors(const Transcript& transcript, const MathVocabulary& vocab,
                                      const Thresholds& thresholds);

// Grows a segment from `anchor_index`, alternating forward then backward one
// neighbour at a time. The centroid starts as the anchor embedding and becomes
// the mean of member embeddings after each join; a direction closes at its
// first rejection or at the transcript boundary.
Segment expand_segment(std::string_view transcript_id, std::size_t message_count, std::size_t anchor_index,
                       double similarity_threshold, const EmbeddingLookup& embedding_at);
Segment expand_segment(const Transcript& transcript, std::size_t anchor_index, const Thresholds& thresholds,
                       const EmbeddingProvider& embedder);

// Seeds segments from anchors in ascending order (anchors already covered do
// not seed), merges overlapping or abutting segments, and labels members MATH.
TranscriptLabeling label_transcript(const Transcript& transcript, std::span<const double> densities,
                                    const Thresholds& thresholds, const EmbeddingLookup& embedding_at);
TranscriptLabeling label_transcript(const Transcript& transcript, const MathVocabulary& vocab,
                                    const Thresholds& thresholds, const EmbeddingProvider& embedder);

// Transcripts are independent and are processed on up to `threads` workers
// (0 = hardware concurrency); output order follows the corpus.
SegmentLabeling label_corpus(const Corpus& corpus, const MathVocabulary& vocab, const Thresholds& thresholds,
                             const EmbeddingProvider& embedder, unsigned threads = 0);

// Densities and embeddings of every message, computed once so that many
// threshold settings can be evaluated without re-embedding.
struct TranscriptFeatures {
    std::vector<double> densities;
    std::vector<Embedding> embeddings;
};

TranscriptFeatures compute_features(const Transcript& transcript, const MathVocabulary& vocab,
                                    const EmbeddingProvider& embedder);

// JSONL: {"session_id": str, "labels": ["MATH"|"NON-MATH", ...]}
void write_labeling(const SegmentLabeling& labeling, const std::filesystem::path& path);
void write_labeling(const SegmentLabeling& labeling, std::ostream& out);
SegmentLabeling load_labeling(const std::filesystem::path& path);

}  // namespace mathpii
