#include "mathpii/vocabulary.hpp"

#include "pattern_families.hpp"

#include <doctest.h>

#include <boost/regex.hpp>

#include <array>
#include <string>

using namespace mathpii;

using testsupport::kPatternFamilies;

TEST_CASE("each pattern family agrees with the hand-run table") {
    const auto& vocab = default_vocabulary();
    REQUIRE(vocab.patterns.size() == kPatternFamilies.size());
    for (std::size_t i = 0; i < kPatternFamilies.size(); ++i) {
        const auto& fam = kPatternFamilies[i];
        const auto& re = vocab.patterns[i].compiled;
        CAPTURE(fam.name);
        for (const char* s : fam.positive) {
            CAPTURE(s);
            CHECK(boost::regex_search(std::string(s), re));
        }
        for (const char* s : fam.negative) {
            CAPTURE(s);
            CHECK_FALSE(boost::regex_search(std::string(s), re));
        }
    }
}

TEST_CASE("decimal family is the documented expression") {
    CHECK(default_pattern_sources().back() == "\\b\\d+\\.\\d+\\b");
}

TEST_CASE("only the probability family is case-sensitive") {
    const auto& vocab = default_vocabulary();
    CHECK(boost::regex_search(std::string("X + 3"), vocab.patterns[0].compiled));
    CHECK(boost::regex_search(std::string("F(X)"), vocab.patterns[3].compiled));
    CHECK_FALSE(boost::regex_search(std::string("p(a)"), vocab.patterns[8].compiled));
}
