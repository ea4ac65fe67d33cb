#pragma once

#include <boost/regex.hpp>

#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace mathpii {

struct MathPattern {
    std::string source;
    boost::regex compiled;
};

// Single words (no spaces), multi-word phrases, and structural regex patterns
// with their density weights.
struct MathVocabulary {
    std::set<std::string> single_words;
    std::vector<std::string> phrases;  // sorted, unique
    std::vector<MathPattern> patterns;
    double weight_word = 1.0;
    double weight_phrase = 1.5;
    double weight_pattern = 2.0;
};

// Builds a vocabulary from raw term lists: entries containing a space become
// phrases, the rest single words; everything is lowercased and deduplicated.
// Patterns compile case-insensitively (Perl syntax); a leading "(?-i)" opts a
// pattern back into case-sensitive matching. Throws ValidationError on a bad
// pattern.
MathVocabulary make_vocabulary(const std::vector<std::string>& terms,
                               const std::vector<std::string>& pattern_sources,
                               double weight_word = 1.0, double weight_phrase = 1.5,
                               double weight_pattern = 2.0);

// The reference vocabulary: domain term lists and the ten pattern families.
const MathVocabulary& default_vocabulary();

// Raw data behind default_vocabulary(), in list order.
const std::vector<std::string>& default_vocabulary_terms();
const std::vector<std::string>& default_pattern_sources();

// {"single_words": [...], "phrases": [...], "patterns": [...],
//  "weights": {"word": 1.0, "phrase": 1.5, "pattern": 2.0}}
MathVocabulary load_vocabulary(const std::filesystem::path& path);
std::string vocabulary_to_json(const MathVocabulary& vocab);

}  // namespace mathpii
