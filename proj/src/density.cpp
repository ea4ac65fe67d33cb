#include "mathpii/density.hpp"

#include "mathpii/text.hpp"

namespace mathpii {

namespace {

bool is_ascii_punct(char c) {
    const auto u = static_cast<unsigned char>(c);
    return u < 0x80 && ((u >= 0x21 && u <= 0x2F) || (u >= 0x3A && u <= 0x40) || (u >= 0x5B && u <= 0x60) ||
                        (u >= 0x7B && u <= 0x7E));
}

bool is_word_char(char c) {
    const auto u = static_cast<unsigned char>(c);
    return (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || c == '_' || u >= 0x80;
}

std::size_t count_phrase(std::string_view haystack, std::string_view phrase) {
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = haystack.find(phrase, pos)) != std::string_view::npos) {
        const auto end = pos + phrase.size();
        const bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]);
        const bool right_ok = end == haystack.size() || !is_word_char(haystack[end]);
        if (left_ok && right_ok) {
            ++count;
            pos = end;
        } else {
            ++pos;
        }
    }
    return count;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    const auto lowered = ascii_lower(text);
    std::string_view rest(lowered);
    while (true) {
        while (!rest.empty() && is_ascii_space(rest.front())) rest.remove_prefix(1);
        if (rest.empty()) break;
        std::size_t n = 0;
        while (n < rest.size() && !is_ascii_space(rest[n])) ++n;
        auto token = rest.substr(0, n);
        rest.remove_prefix(n);
        while (!token.empty() && is_ascii_punct(token.front())) token.remove_prefix(1);
        while (!token.empty() && is_ascii_punct(token.back())) token.remove_suffix(1);
        tokens.emplace_back(token);
    }
    return tokens;
}

DensityScore math_density(std::string_view text, const MathVocabulary& vocab) {
    DensityScore score;
    const auto tokens = tokenize(text);
    score.token_count = tokens.size();
    if (score.token_count == 0) return score;

    for (const auto& tok : tokens)
        if (!tok.empty() && vocab.single_words.count(tok)) ++score.word_hits;

    const auto normalized = collapse_whitespace(ascii_lower(text));
    for (const auto& phrase : vocab.phrases) score.phrase_hits += count_phrase(normalized, phrase);

    const std::string original(text);
    for (const auto& pattern : vocab.patterns) {
        for (boost::sregex_iterator it(original.begin(), original.end(), pattern.compiled), end; it != end; ++it)
            if (it->length(0) > 0) ++score.pattern_hits;
    }

    score.value = (vocab.weight_word * static_cast<double>(score.word_hits) +
                   vocab.weight_phrase * static_cast<double>(score.phrase_hits) +
                   vocab.weight_pattern * static_cast<double>(score.pattern_hits)) /
                  static_cast<double>(score.token_count);
    return score;
}

}  // namespace mathpii
