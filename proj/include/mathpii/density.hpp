#pragma once

#include "mathpii/vocabulary.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mathpii {

struct DensityScore {
    double value = 0.0;
    std::size_t token_count = 0;
    std::size_t word_hits = 0;
    std::size_t phrase_hits = 0;
    std::size_t pattern_hits = 0;
};

// Lowercase, split on whitespace, trim leading/trailing ASCII punctuation from
// each token. Tokens that trim to nothing are kept as empty strings so the
// token count matches the whitespace split.
std::vector<std::string> tokenize(std::string_view text);

// Weighted, token-normalized count of vocabulary words, phrases and pattern
// matches:
//   value = (word_hits + w_phrase * phrase_hits + w_pattern * pattern_hits) / token_count
// Phrases count non-overlapping, word-bounded occurrences in the lowercased,
// whitespace-collapsed text; patterns count non-overlapping matches against the
// original text. A phrase's constituent words still count as word hits.
DensityScore math_density(std::string_view text, const MathVocabulary& vocab);

}  // namespace mathpii
