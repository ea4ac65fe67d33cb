#include "mathpii/vocabulary.hpp"

#include "mathpii/errors.hpp"
#include "mathpii/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace mathpii {

namespace {

// Grouped as in the source lists; duplicates across groups are intentional and
// disappear when the sets are built.
const std::vector<std::string> kTerms = {
    // Operations
    "operation", "add", "addition", "adding", "sum", "total", "plus", "subtract", "subtraction",
    "subtracting", "minus", "difference", "multiply", "multiplication", "multiplying", "times",
    "product", "divide", "division", "dividing", "quotient", "remainder", "calculate", "computation",
    "compute", "simplify", "evaluate",
    // Algebra
    "algebra", "variable", "equation", "expression", "solve", "solving", "coefficient", "constant",
    "term", "polynomial", "monomial", "binomial", "trinomial", "exponent", "power", "base", "linear",
    "quadratic", "cubic", "slope", "intercept", "inequality", "system", "substitution", "elimination",
    "factor", "factoring", "expand", "distribute", "combine",
    // Geometry
    "geometry", "angle", "degree", "triangle", "square", "rectangle", "circle", "perimeter", "area",
    "volume", "surface", "diameter", "radius", "circumference", "polygon", "quadrilateral", "parallel",
    "perpendicular", "congruent", "similar", "theorem", "pythagorean", "hypotenuse", "leg", "vertex",
    "coordinate", "plane", "axis", "origin", "graph",
    // Fractions & Decimals
    "fraction", "numerator", "denominator", "decimal", "improper", "mixed", "percent", "percentage",
    "ratio", "proportion", "proportional", "equivalent", "simplest", "reduce", "common", "least",
    "greatest",
    // Statistics
    "statistics", "mean", "median", "mode", "range", "average", "data", "graph", "chart", "histogram",
    "frequency", "probability", "sample", "population", "distribution", "scatter", "plot",
    "scatterplot", "correlation", "correlate", "trend", "outlier",
    // Grade 6
    "ratio", "rate", "unit rate", "tape diagram", "double number line", "greatest common factor", "gcf",
    "least common multiple", "lcm", "absolute value", "coordinate plane", "ordered pair", "quadrant",
    "statistical question", "dot plot", "box plot",
    // Grade 7
    "proportional relationship", "constant of proportionality", "unit rate", "scale drawing",
    "scale factor", "increase", "increasing", "decrease", "decreasing", "markup", "markdown",
    "simple interest", "tax", "tip", "commission", "supplementary angles", "complementary angles",
    "vertical angles", "cross section", "sample space", "compound event",
    // Grade 8
    "slope-intercept form", "y-intercept", "rate of change", "linear relationship", "function", "input",
    "output", "scientific notation", "irrational number", "cube root", "pythagorean theorem",
    "distance formula", "converse", "dilation", "transformation", "rotation", "reflection",
    "translation", "bivariate data", "scatter plot", "line of best fit",
    // HS Algebra
    "domain", "range", "function notation", "piecewise", "absolute value function", "quadratic formula",
    "completing the square", "vertex form", "standard form", "factored form", "discriminant",
    "complex number", "imaginary", "radical", "rational expression", "exponential function", "logarithm",
    "asymptote", "polynomial division", "remainder theorem", "synthetic division", "calculus",
    // HS Geometry
    "postulate", "axiom", "proof", "two-column proof", "paragraph proof", "indirect proof",
    "contradiction", "bisector", "midpoint", "segment", "ray", "inscribed angle", "central angle", "arc",
    "chord", "tangent", "secant", "sector", "radian", "trigonometry", "sine", "sin", "cosine", "cos",
    "tan", "soh-cah-toa", "unit circle", "special right triangle",
    // HS Statistics
    "normal distribution", "standard deviation", "z-score", "percentile", "quartile",
    "interquartile range", "iqr", "margin of error", "confidence interval", "significance",
    "hypothesis", "null hypothesis", "alternative hypothesis", "regression", "residual",
    "least squares", "r-squared", "correlation coefficient", "causation", "lurking variable",
    // General Math Discourse
    "solution", "answer", "response", "correct", "incorrect", "method", "strategy", "approach", "step",
    "process", "show work", "explain", "reasoning", "justify", "check", "verify", "example", "practice",
    "homework", "assignment", "worksheet", "textbook", "page", "number", "how much", "result", "try",
    // Mathematical Symbols & Words
    "equals", "equal", "greater than", "less than", "greater than or equal", "less than or equal",
    "not equal", "approximately", "infinity", "pi", "squared", "cubed", "root", "square root",
    "parentheses", "brackets", "braces", "absolute value", "negative", "positive",
};

const std::vector<std::string> kPatterns = {
    // Arithmetic/Variables (2x+5)
    R"(\b\d*\.?\d*[a-z]\d*\s*[+\-*/=]\s*[+-]?\d*\.?\d*[a-z\d]*\b)",
    // Coefficients (5y)
    R"(\b[+-]?\d*\.?\d+[a-z]\b)",
    // Exponents (x^2)
    R"([a-z\d]+\^[+-]?\d*\.?\d+)",
    // Functions (f(x))
    R"(\b[a-z]\s*\(\s*[+-]?\d*\.?\d*[a-z\d]*\s*\))",
    // Inequalities (x<10)
    R"(\b[a-z]\s*(?:[=<>]=?|[<>])\s*[+-]?\d*\.?\d*[a-z\d]*\b)",
    // Fractions (x/2)
    R"(\b[a-z\d\.]+/([a-z\d\.]*[a-z][a-z\d\.]*)\b|\b([a-z][a-z\d\.]*)/[a-z\d\.]+\b)",
    // Coordinates ((1,2))
    R"(\(\s*[+-]?\d*\.?\d+\s*,\s*[+-]?\d*\.?\d+\s*\))",
    // Indexed vars (x_1)
    R"(\b[a-z][\d_]\b|\b[a-z]+[1-9]\b)",
    // Probability (P(A|B)), case-sensitive
    R"((?-i)\bP\s*\(\s*[A-Z](?:\s*\|\s*[A-Z])?\s*\))",
    // Decimals (0.34)
    R"(\b\d+\.\d+\b)",
};

boost::regex compile_pattern(const std::string& source) {
    try {
        return boost::regex(source, boost::regex::perl | boost::regex::icase);
    } catch (const boost::regex_error& e) {
        throw ValidationError("invalid math pattern '" + source + "': " + e.what());
    }
}

}  // namespace

MathVocabulary make_vocabulary(const std::vector<std::string>& terms,
                               const std::vector<std::string>& pattern_sources, double weight_word,
                               double weight_phrase, double weight_pattern) {
    MathVocabulary vocab;
    std::set<std::string> phrases;
    for (const auto& raw : terms) {
        auto term = collapse_whitespace(ascii_lower(raw));
        if (term.empty()) continue;
        if (term.find(' ') != std::string::npos)
            phrases.insert(std::move(term));
        else
            vocab.single_words.insert(std::move(term));
    }
    vocab.phrases.assign(phrases.begin(), phrases.end());
    for (const auto& src : pattern_sources) vocab.patterns.push_back({src, compile_pattern(src)});
    vocab.weight_word = weight_word;
    vocab.weight_phrase = weight_phrase;
    vocab.weight_pattern = weight_pattern;
    return vocab;
}

const std::vector<std::string>& default_vocabulary_terms() { return kTerms; }
const std::vector<std::string>& default_pattern_sources() { return kPatterns; }

const MathVocabulary& default_vocabulary() {
    static const MathVocabulary vocab = make_vocabulary(kTerms, kPatterns);
    return vocab;
}

MathVocabulary load_vocabulary(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open vocabulary '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("vocabulary '" + path.string() + "': " + e.what());
    }
    try {
        std::vector<std::string> terms;
        for (const auto& w : j.value("single_words", nlohmann::json::array())) {
            auto s = w.get<std::string>();
            if (s.find(' ') != std::string::npos)
                throw ValidationError("single word '" + s + "' contains a space");
            terms.push_back(std::move(s));
        }
        for (const auto& p : j.value("phrases", nlohmann::json::array())) {
            auto s = p.get<std::string>();
            if (collapse_whitespace(s).find(' ') == std::string::npos)
                throw ValidationError("phrase '" + s + "' contains no space");
            terms.push_back(std::move(s));
        }
        auto patterns = j.value("patterns", std::vector<std::string>{});
        const auto weights = j.value("weights", nlohmann::json::object());
        return make_vocabulary(terms, patterns, weights.value("word", 1.0), weights.value("phrase", 1.5),
                               weights.value("pattern", 2.0));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("vocabulary '" + path.string() + "': " + e.what());
    }
}

std::string vocabulary_to_json(const MathVocabulary& vocab) {
    nlohmann::ordered_json j;
    j["single_words"] = std::vector<std::string>(vocab.single_words.begin(), vocab.single_words.end());
    j["phrases"] = vocab.phrases;
    auto& pats = j["patterns"] = nlohmann::ordered_json::array();
    for (const auto& p : vocab.patterns) pats.push_back(p.source);
    j["weights"] = {{"word", vocab.weight_word}, {"phrase", vocab.weight_phrase}, {"pattern", vocab.weight_pattern}};
    return j.dump(2);
}

}  // namespace mathpii
