#include "mathpii/errors.hpp"
#include "mathpii/recognizers.hpp"
#include "mathpii/text.hpp"

#include "support.hpp"
#include "synthetic.hpp"

#include <doctest.h>

#include <boost/regex.hpp>
#include <nlohmann/json.hpp>

#include <map>
#include <random>
#include <set>

using namespace mathpii;

namespace {

std::vector<std::pair<PiiType, std::string>> typed(const BaselineOutput& out) {
    std::vector<std::pair<PiiType, std::string>> v;
    for (const auto& s : out.spans) v.emplace_back(s.type, s.surface);
    return v;
}

bool has(const BaselineOutput& out, PiiType type, const std::string& surface) {
    for (const auto& s : out.spans)
        if (s.type == type && s.surface == surface) return true;
    return false;
}

// Per-type set of covered scalar positions.
std::map<PiiType, std::set<std::size_t>> coverage(const std::vector<PiiSpan>& spans) {
    std::map<PiiType, std::set<std::size_t>> c;
    for (const auto& s : spans)
        for (auto i = s.start; i < s.end; ++i) c[s.type].insert(i);
    return c;
}

// Independent run: search every pattern of every recognizer with its own
// regex object, then merge same-type overlapping byte ranges.
std::vector<PiiSpan> hand_run(const std::string& text, const std::vector<Recognizer>& recs) {
    std::map<PiiType, std::vector<std::pair<std::size_t, std::size_t>>> hits;
    for (const auto& r : recs) {
        for (const auto& src : r.patterns()) {
            const boost::regex re(src, boost::regex::perl);
            for (boost::sregex_iterator it(text.begin(), text.end(), re), end; it != end; ++it) {
                const auto& m = (*it)[0];
                if (m.length() == 0) continue;
                const auto b = static_cast<std::size_t>(m.first - text.begin());
                hits[r.target_type()].emplace_back(b, b + static_cast<std::size_t>(m.length()));
            }
        }
    }
    std::vector<PiiSpan> out;
    OffsetMap map(text);
    for (auto& [type, ranges] : hits) {
        std::sort(ranges.begin(), ranges.end());
        std::vector<std::pair<std::size_t, std::size_t>> merged;
        for (const auto& r : ranges) {
            if (!merged.empty() && r.first < merged.back().second)
                merged.back().second = std::max(merged.back().second, r.second);
            else
                merged.push_back(r);
        }
        for (const auto& [b, e] : merged)
            out.push_back(PiiSpan{map.to_codepoint(b), map.to_codepoint(e), text.substr(b, e - b), type,
                                  Provenance::Detected});
    }
    std::sort(out.begin(), out.end(), [](const PiiSpan& a, const PiiSpan& b) {
        return std::tie(a.start, a.end, a.type) < std::tie(b.start, b.end, b.type);
    });
    return out;
}

class DownNer final : public NerProvider {
public:
    std::string provider_id() const override { return "down"; }
    std::vector<NerEntity> analyze(std::string_view) const override { throw NerUnavailable("model not loaded"); }
};

}  // namespace

TEST_CASE("canonical examples") {
    const auto recs = default_recognizers();
    auto out = detect_baseline("email me at jdoe@example.com", recs);
    REQUIRE(out.spans.size() == 1);
    CHECK(out.spans[0].type == PiiType::EmailAddress);
    CHECK(out.spans[0].surface == "jdoe@example.com");
    CHECK(out.spans[0].provenance == Provenance::Detected);

    out = detect_baseline("I go to PS 123", recs);
    REQUIRE(out.spans.size() == 1);
    CHECK(typed(out)[0] == std::pair{PiiType::School, std::string("PS 123")});

    out = detect_baseline("I'm taking algebra 300", recs);
    REQUIRE(out.spans.size() == 1);
    CHECK(typed(out)[0] == std::pair{PiiType::CourseNumber, std::string("algebra 300")});
}

TEST_CASE("education-specific recognizers") {
    const auto recs = default_recognizers();
    CHECK(has(detect_baseline("my school code is 22K014", recs), PiiType::School, "22K014"));
    CHECK(has(detect_baseline("I go to Lincoln High now", recs), PiiType::School, "Lincoln High"));
    CHECK(has(detect_baseline("I'm in 8th grade", recs), PiiType::GradeLevel, "8th grade"));
    CHECK(has(detect_baseline("she is in grade 7", recs), PiiType::GradeLevel, "grade 7"));
    CHECK(has(detect_baseline("geometry 101 is hard", recs), PiiType::CourseNumber, "geometry 101"));
    CHECK(detect_baseline("I like geometry a lot", recs).spans.empty());
}

TEST_CASE("structured identifiers") {
    const auto recs = default_recognizers();
    CHECK(has(detect_baseline("call 555-123-4567 later", recs), PiiType::PhoneNumber, "555-123-4567"));
    CHECK(has(detect_baseline("server at 192.168.1.20 is down", recs), PiiType::IpAddress, "192.168.1.20"));
    CHECK(has(detect_baseline("go to https://example.org/page", recs), PiiType::Url, "https://example.org/page"));
    CHECK(has(detect_baseline("ssn 123-45-6789", recs), PiiType::UsSsn, "123-45-6789"));
    CHECK(has(detect_baseline("follow @mathwiz_22", recs), PiiType::SocialHandle, "@mathwiz_22"));
    CHECK(has(detect_baseline("passport C12345678", recs), PiiType::UsPassport, "C12345678"));
    CHECK(has(detect_baseline("born on March 3, 2010", recs), PiiType::Date, "March 3, 2010"));
}

TEST_CASE("numeric text over-triggers by design") {
    const auto recs = default_recognizers();
    CHECK(has(detect_baseline("reduce 4/12 first", recs), PiiType::Date, "4/12"));
    const auto out = detect_baseline("123456789", recs);
    std::set<PiiType> types;
    for (const auto& s : out.spans) types.insert(s.type);
    CHECK(types.count(PiiType::UsSsn));
    CHECK(types.count(PiiType::UsBankNumber));
    CHECK(types.count(PiiType::UsDriverLicense));
    CHECK(types.count(PiiType::UsPassport));
}

TEST_CASE("offsets are scalar offsets and same-type hits merge") {
    const auto recs = default_recognizers();
    const std::string text = "Zo\xC3\xAB: zoe@example.com";
    const auto out = detect_baseline(text, recs);
    REQUIRE(out.spans.size() == 1);
    CHECK(out.spans[0].start == 5);
    CHECK(codepoint_slice(text, out.spans[0].start, out.spans[0].end) == "zoe@example.com");

    const std::vector<Recognizer> two = {Recognizer("a", PiiType::Person, {"Mary Jane"}),
                                         Recognizer("b", PiiType::Person, {"Jane Smith"})};
    const auto merged = detect_baseline("hi Mary Jane Smith", two);
    REQUIRE(merged.spans.size() == 1);
    CHECK(merged.spans[0].surface == "Mary Jane Smith");
}

TEST_CASE("pure math messages equal the hand-run of every pattern") {
    const auto recs = default_recognizers();
    for (const char* text : {"x^2 + 3 = 12", "3/4 of 12 is 9", "the answer is 1234567", "(2, 3) and 10/15/2020",
                             "2x + 5 = 17 so x = 6", "area = 12.5 cm", "555 1234", "4.5 + 6.25"}) {
        CAPTURE(text);
        CHECK(detect_baseline(text, recs).spans == hand_run(text, recs));
    }
    std::mt19937_64 rng(3);
    for (int i = 0; i < 300; ++i) {
        std::string s;
        const auto n = 1 + rng() % 8;
        for (std::size_t k = 0; k < n; ++k) {
            switch (rng() % 5) {
                case 0: s += std::to_string(rng() % 100000000000ULL); break;
                case 1: s += std::to_string(rng() % 13) + "/" + std::to_string(rng() % 32); break;
                case 2: s += "x^" + std::to_string(rng() % 5); break;
                case 3: s += std::to_string(rng() % 1000) + "-" + std::to_string(rng() % 10000); break;
                default: s += "+"; break;
            }
            s += ' ';
        }
        CAPTURE(s);
        CHECK(detect_baseline(s, recs).spans == hand_run(s, recs));
    }
}

TEST_CASE("corpus-level detection") {
    Corpus c;
    c.push_back(Transcript{"a",
                           {testsupport::message(0, "S", "mail a@b.com"), testsupport::message(1, "V", "x + 1"),
                            testsupport::message(2, "S", "and c@d.org too")}});
    c.push_back(Transcript{"b", {testsupport::message(0, "S", "last: e@f.net")}});
    BaselineConfig cfg;
    cfg.threads = 3;
    const auto r = detect_baseline_corpus(c, cfg);
    REQUIRE(r.size() == 2);
    std::size_t emails = 0;
    for (const auto& t : r) {
        CHECK(t.engine == "baseline");
        for (const auto& m : t.messages)
            for (const auto& d : m.detections) emails += d.type == PiiType::EmailAddress;
    }
    CHECK(emails == 3);
    CHECK(r[0].messages.size() == 3);
    CHECK(r[0].messages[2].index == 2);
    CHECK(detect_baseline_corpus({}, cfg).empty());
}

TEST_CASE("determinism and type closure on synthetic text") {
    const auto corpus = testsupport::synthetic_corpus(11, 30);
    BaselineConfig serial;
    serial.threads = 1;
    BaselineConfig parallel;
    parallel.threads = 4;
    const auto a = detect_baseline_corpus(corpus, serial);
    const auto b = detect_baseline_corpus(corpus, parallel);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].messages.size() == b[i].messages.size());
        for (std::size_t m = 0; m < a[i].messages.size(); ++m) {
            const auto& x = a[i].messages[m].detections;
            const auto& y = b[i].messages[m].detections;
            REQUIRE(x.size() == y.size());
            for (std::size_t k = 0; k < x.size(); ++k) {
                CHECK(x[k].text == y[k].text);
                CHECK(x[k].type == y[k].type);
                CHECK(x[k].start == y[k].start);
                CHECK(try_parse_pii_type(to_string(x[k].type)).has_value());
            }
        }
    }
}

TEST_CASE("removing a recognizer never adds coverage") {
    const auto all = default_recognizers();
    const std::vector<std::string> texts = {
        "email me at jdoe@example.com or call 555-123-4567", "PS 123 and 22K014 in 8th grade",
        "algebra 300 on 4/12/2023 at 10.0.0.1", "123456789 987654321 12345678901234",
        "see https://school.org/x and @handle_1", "x^2 + 3 = 12 and 3/4 = 0.75"};
    for (std::size_t drop = 0; drop < all.size(); ++drop) {
        std::vector<Recognizer> fewer;
        for (std::size_t i = 0; i < all.size(); ++i)
            if (i != drop) fewer.push_back(all[i]);
        for (const auto& t : texts) {
            const auto full = coverage(detect_baseline(t, all).spans);
            const auto part = coverage(detect_baseline(t, fewer).spans);
            for (const auto& [type, pos] : part) {
                CAPTURE(t);
                REQUIRE(full.count(type));
                CHECK(std::includes(full.at(type).begin(), full.at(type).end(), pos.begin(), pos.end()));
            }
        }
    }
}

TEST_CASE("NER adapter maps labels and degrades with a warning") {
    auto gaz = std::make_shared<GazetteerNer>(std::map<std::string, std::vector<std::string>>{
        {"PERSON", {"Priya"}}, {"GPE", {"Brooklyn"}}, {"ORG", {"NASA"}}, {"NORP", {"Haitian"}}});
    NerAdapter adapter{gaz, default_ner_mapping()};
    validate_ner_adapter(adapter);
    const auto recs = default_recognizers();
    const auto out = detect_baseline("Priya from Brooklyn works at NASA, she is Haitian", recs, &adapter);
    CHECK(has(out, PiiType::Person, "Priya"));
    CHECK(has(out, PiiType::Location, "Brooklyn"));
    CHECK(has(out, PiiType::Nrp, "Haitian"));
    for (const auto& s : out.spans) CHECK(s.surface != "NASA");
    CHECK(detect_baseline("Priyanka", recs, &adapter).spans.empty());

    NerAdapter down{std::make_shared<DownNer>(), default_ner_mapping()};
    const auto degraded = detect_baseline("Priya mailed p@x.org", recs, &down);
    REQUIRE(degraded.warnings.size() == 1);
    CHECK(degraded.warnings[0].find("down") != std::string::npos);
    REQUIRE(degraded.spans.size() == 1);
    CHECK(degraded.spans[0].type == PiiType::EmailAddress);

    NerAdapter partial{gaz, {{"PERSON", PiiType::Person}}};
    CHECK_THROWS_AS(validate_ner_adapter(partial), ValidationError);
    CHECK_FALSE(make_ner_adapter("none").has_value());
    CHECK_FALSE(make_ner_adapter("").has_value());
    CHECK_THROWS_AS(make_ner_adapter("spacy"), ConfigError);
}

TEST_CASE("recognizer config") {
    const auto from_file = load_recognizers(std::string(MATHPII_DATA) + "/recognizers.json");
    const auto builtin = default_recognizers();
    CHECK(recognizers_to_json(from_file) == recognizers_to_json(builtin));
    CHECK_THROWS_AS(parse_recognizers(nlohmann::json::parse(
                        R"({"recognizers":[{"name":"x","type":"PERSON","patterns":["(unclosed"]}]})")),
                    ValidationError);
    CHECK_THROWS_AS(parse_recognizers(nlohmann::json::parse(
                        R"({"recognizers":[{"name":"x","type":"NAME","patterns":["a"]}]})")),
                    ValidationError);
    CHECK_THROWS_AS(Recognizer("empty", PiiType::Person, {}), ValidationError);
}
