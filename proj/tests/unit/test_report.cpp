#include <doctest.h>

#include "mathpii/errors.hpp"
#include "mathpii/report.hpp"
#include "mathpii/text.hpp"
#include "support.hpp"

#include <boost/regex.hpp>

#include <sstream>

using namespace mathpii;
using testsupport::label_at;
using testsupport::message;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

// Splits on runs of two or more spaces, the column gap of the aligned layout.
std::vector<std::string> columns_of(const std::string& line) {
    std::vector<std::string> out;
    const boost::regex gap(" {2,}");
    boost::sregex_token_iterator it(line.begin(), line.end(), gap, -1), end;
    for (; it != end; ++it)
        if (!it->str().empty()) out.push_back(it->str());
    return out;
}

StratumReport stratum(std::size_t tp, std::size_t fp, std::size_t fn, std::optional<MetricCIs> ci = std::nullopt) {
    return StratumReport{MetricSet::from(Counts{tp, fp, fn}), ci};
}

EvalReport report_with(std::map<PiiType, StratumReport> by_type) {
    EvalReport r;
    Counts total;
    for (const auto& [_, s] : by_type) total += Counts{s.metrics.tp, s.metrics.fp, s.metrics.fn};
    r.overall = StratumReport{MetricSet::from(total), std::nullopt};
    r.by_type = std::move(by_type);
    return r;
}

// Two transcripts, one MATH message each plus chat; gold and predictions are
// chosen so that every stratum has a known tally.
struct SegmentedCase {
    Corpus gold;
    std::vector<DetectionResult> predicted;
    SegmentLabeling labeling;

    SegmentedCase() {
        for (int t = 0; t < 2; ++t) {
            Transcript tr;
            tr.session_id = "s" + std::to_string(t);
            const std::string chat = "hi I am Ana from Ohio";
            const std::string math = "solve 3x + 2 = 11 for x, Ana";
            auto m0 = message(0, "Student", chat);
            m0.labels = {label_at(chat, "Ana", PiiType::Person), label_at(chat, "Ohio", PiiType::Location)};
            auto m1 = message(1, "Student", math);
            m1.labels = {label_at(math, "Ana", PiiType::Person)};
            tr.messages = {m0, m1};
            gold.push_back(tr);

            DetectionResult r;
            r.session_id = tr.session_id;
            r.engine = "probe";
            MessageDetections d0;
            d0.index = 0;
            d0.detections = {Detection{"Ana", PiiType::Person}};
            MessageDetections d1;
            d1.index = 1;
            d1.detections = {Detection{"Ana", PiiType::Person}, Detection{"11", PiiType::Date}};
            r.messages = {d0, d1};
            predicted.push_back(r);

            labeling.add(TranscriptLabeling{tr.session_id, {SegmentLabel::NonMath, SegmentLabel::Math}, {}});
        }
    }

    EvalReport evaluate_with(std::optional<BootstrapOptions> boot) const {
        EvaluateOptions opts;
        opts.segments = &labeling;
        opts.segment_strata = true;
        opts.bootstrap = boot;
        return evaluate(gold, predicted, opts);
    }
};

}  // namespace

TEST_CASE("metric cells use three decimals and a bracketed interval") {
    CHECK(format_metric(0.25449, std::nullopt) == "0.254");
    CHECK(format_metric(1.0, std::nullopt) == "1.000");
    CHECK(format_metric(0.0, std::nullopt) == "0.000");
    BootstrapCI ci{1000, 7, 0.2251, 0.2849};
    CHECK(format_metric(0.254, ci) == "0.254 [0.225, 0.285]");
}

TEST_CASE("aligned tables pad by code points and rule the header") {
    const auto text = render_aligned({{"Type", "n"}, {"Señor", "12"}, {"x", "3"}});
    const auto lines = lines_of(text);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "Type   n");
    CHECK(lines[1] == "---------");
    CHECK(lines[2] == "Señor  12");
    CHECK(lines[3] == "x      3");
    // Every row starts its second column at the same code point.
    for (std::size_t i : {0u, 2u, 3u}) {
        const auto& l = lines[i];
        CHECK(codepoint_length(l.substr(0, l.rfind(' ') + 1)) == 7);
    }
}

TEST_CASE("source-to-benchmark comparison orders by benchmark count") {
    CorpusStats src, bench;
    src.transcripts = bench.transcripts = 1000;
    src.messages = bench.messages = 25000;
    const std::vector<std::tuple<PiiType, std::size_t, std::size_t>> rows = {
        {PiiType::UsPassport, 2, 0},   {PiiType::Person, 1915, 1424},    {PiiType::IpAddress, 2, 2},
        {PiiType::Date, 0, 4},         {PiiType::Url, 245, 187},         {PiiType::UsBankNumber, 20, 0},
        {PiiType::Location, 595, 121}, {PiiType::UsDriverLicense, 941, 2}, {PiiType::GradeLevel, 87, 107},
        {PiiType::School, 88, 73},     {PiiType::PhoneNumber, 30, 2},    {PiiType::CourseNumber, 1103, 40},
        {PiiType::Nrp, 235, 25},       {PiiType::Age, 0, 8},
    };
    for (const auto& [t, s, b] : rows) {
        if (s) src.labels_by_type[t] = s;
        if (b) bench.labels_by_type[t] = b;
        src.labels += s;
        bench.labels += b;
    }
    CHECK(src.labels == 5263);
    CHECK(bench.labels == 1995);

    const auto lines = lines_of(render_label_comparison(src, bench));
    REQUIRE(lines.size() == 2 + 3 + rows.size());
    CHECK(columns_of(lines[0]) == std::vector<std::string>{"Category", "Source Corpus", "Benchmark"});
    CHECK(columns_of(lines[2]) == std::vector<std::string>{"Transcripts", "1,000", "1,000"});
    CHECK(columns_of(lines[4]) == std::vector<std::string>{"PII Labels (Total)", "5,263", "1,995"});
    // Ties on the benchmark count fall back to the source count.
    const std::vector<PiiType> expected = {
        PiiType::Person, PiiType::Url,  PiiType::Location, PiiType::GradeLevel,      PiiType::School,
        PiiType::CourseNumber, PiiType::Nrp, PiiType::Age, PiiType::Date, PiiType::UsDriverLicense,
        PiiType::PhoneNumber,  PiiType::IpAddress, PiiType::UsBankNumber, PiiType::UsPassport};
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto cols = columns_of(lines[5 + i]);
        REQUIRE(cols.size() == 3);
        CHECK(cols[0] == std::string(to_string(expected[i])));
    }
}

TEST_CASE("metric table has one row per engine with bracketed intervals") {
    const SegmentedCase c;
    const auto with_ci = c.evaluate_with(BootstrapOptions{200, 11, 1});
    const auto without = c.evaluate_with(std::nullopt);
    const auto lines = lines_of(render_metric_table({{"engine-a", with_ci}, {"engine-b", without}}));
    REQUIRE(lines.size() == 4);
    CHECK(columns_of(lines[0]) == std::vector<std::string>{"Model", "Precision", "Recall", "F1"});

    const boost::regex cell(R"(\d\.\d{3} \[\d\.\d{3}, \d\.\d{3}\])");
    const auto a = columns_of(lines[2]);
    REQUIRE(a.size() == 4);
    CHECK(a[0] == "engine-a");
    for (std::size_t i = 1; i < 4; ++i) CHECK_MESSAGE(boost::regex_match(a[i], cell), a[i]);
    // Overall: tp 4, fp 2, fn 2 so all three metrics are 2/3.
    CHECK(a[1].starts_with("0.667 ["));
    CHECK(a[2].starts_with("0.667 ["));
    CHECK(a[3].starts_with("0.667 ["));
    CHECK(columns_of(lines[3]) == std::vector<std::string>{"engine-b", "0.667", "0.667", "0.667"});
}

TEST_CASE("segment table splits NON-MATH and MATH strata") {
    const SegmentedCase c;
    const auto rep = c.evaluate_with(std::nullopt);
    REQUIRE(rep.by_segment);
    const auto lines = lines_of(render_segment_table({{"probe", rep}}));
    REQUIRE(lines.size() == 3);
    CHECK(columns_of(lines[0]) == std::vector<std::string>{"Model", "NON-MATH Prec", "NON-MATH Rec", "NON-MATH F1",
                                                            "MATH Prec", "MATH Rec", "MATH F1"});
    // NON-MATH: tp 2, fn 2 (Ohio). MATH: tp 2, fp 2 (the equation answer).
    CHECK(columns_of(lines[2]) ==
          std::vector<std::string>{"probe", "1.000", "0.500", "0.667", "0.500", "1.000", "0.667"});

    EvalReport plain = rep;
    plain.by_segment.reset();
    CHECK_THROWS_AS(render_segment_table({{"probe", rep}, {"plain", plain}}), ValidationError);
}

TEST_CASE("false positives by category order by the last engine's precision") {
    CorpusStats gold;
    gold.labels_by_type = {{PiiType::Person, 10}, {PiiType::Date, 2}, {PiiType::School, 4}};
    const auto basic = report_with({{PiiType::Person, stratum(8, 2, 2)},
                                    {PiiType::Date, stratum(2, 300, 0)},
                                    {PiiType::PhoneNumber, stratum(0, 5, 0)}});
    const auto tuned = report_with({{PiiType::Person, stratum(9, 1, 1)},
                                    {PiiType::Date, stratum(1, 3, 1)},
                                    {PiiType::School, stratum(0, 0, 4)}});
    const auto lines = lines_of(render_fp_by_category({{"basic", basic}, {"tuned", tuned}}, gold));
    REQUIRE(lines.size() == 2 + 4);
    CHECK(columns_of(lines[0]) ==
          std::vector<std::string>{"PII Type", "Total", "basic FP", "basic Prec", "tuned FP", "tuned Prec"});
    CHECK(columns_of(lines[2]) == std::vector<std::string>{"PERSON", "10", "2", "0.800", "1", "0.900"});
    CHECK(columns_of(lines[3]) == std::vector<std::string>{"DATE", "2", "300", "0.007", "3", "0.250"});
    // Types the last engine never predicted trail, in taxonomy order.
    CHECK(columns_of(lines[4]) == std::vector<std::string>{"PHONE_NUMBER", "0", "5", "0.000", "-", "-"});
    CHECK(columns_of(lines[5]) == std::vector<std::string>{"SCHOOL", "4", "-", "-", "-", "-"});
}

TEST_CASE("segment capture counts upstream verdicts by segment") {
    const SegmentedCase c;
    Corpus corpus = c.gold;
    // A surrogate label has no verdict and must not be counted.
    corpus[0].messages[0].labels.push_back(PiiSpan{0, 2, "hi", PiiType::Person, Provenance::Surrogate});
    LabelVerdicts verdicts;
    verdicts[{"s0", 0, 8}] = Verdict::Pii;       // Ana, chat
    verdicts[{"s0", 0, 17}] = Verdict::NotPii;   // Ohio, chat
    verdicts[{"s0", 1, 25}] = Verdict::NotPii;   // Ana, math
    verdicts[{"s1", 1, 25}] = Verdict::Uncertain;
    verdicts[{"s0", 0, 0}] = Verdict::Pii;       // only the surrogate label starts here
    verdicts[{"s1", 0, 3}] = Verdict::Pii;       // no label starts here

    const auto cap = segment_capture(corpus, verdicts, c.labeling);
    const auto& person = cap.by_type.at(PiiType::Person);
    CHECK(person.non_math_pii == 1);
    CHECK(person.math_not_pii == 1);
    CHECK(person.uncertain == 1);
    CHECK(cap.by_type.at(PiiType::Location).non_math_not_pii == 1);

    // The total row is the column sum of the type rows.
    SegmentCaptureRow sum;
    for (const auto& [_, r] : cap.by_type) {
        sum.math_pii += r.math_pii;
        sum.math_not_pii += r.math_not_pii;
        sum.non_math_pii += r.non_math_pii;
        sum.non_math_not_pii += r.non_math_not_pii;
        sum.uncertain += r.uncertain;
    }
    CHECK(sum.math_not_pii == cap.total.math_not_pii);
    CHECK(sum.non_math_pii == cap.total.non_math_pii);
    CHECK(sum.non_math_not_pii == cap.total.non_math_not_pii);
    CHECK(sum.uncertain == cap.total.uncertain);
    CHECK(cap.total.math_not_pii + cap.total.non_math_pii + cap.total.non_math_not_pii + cap.total.uncertain +
              cap.total.math_pii ==
          4);

    const auto lines = lines_of(render_segment_capture(cap));
    REQUIRE(lines.size() == 2 + 2 + 1);
    CHECK(columns_of(lines[2])[0] == "PERSON");
    CHECK(columns_of(lines[4]) == std::vector<std::string>{"TOTAL", "1", "0", "1", "1", "1"});
}
