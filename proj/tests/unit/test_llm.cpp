#include "mathpii/errors.hpp"
#include "mathpii/evaluation.hpp"
#include "mathpii/llm_detection.hpp"
#include "mathpii/text.hpp"

#include "mock_llm.hpp"
#include "support.hpp"

#include <doctest.h>
#include <httplib.h>

#include <cstdlib>
#include <mutex>
#include <thread>

using namespace mathpii;
using testsupport::message;

TEST_CASE("numeric type set matches the test oracle") {
    for (auto t : kAllPiiTypes) CHECK(is_numeric_type(t) == testsupport::oracle_numeric_type(t));
}

namespace {

const std::filesystem::path kFixtures = MATHPII_FIXTURES;

Transcript seven_messages() {
    Transcript t;
    t.session_id = "t7";
    for (std::size_t i = 0; i < 7; ++i)
        t.messages.push_back(message(i, i % 2 ? "Student" : "Volunteer", "message number " + std::to_string(i)));
    return t;
}

// Fails the first `failures` calls with `kind`, then answers `reply`.
class FlakyClient final : public ChatClient {
public:
    FlakyClient(int failures, GatewayErrorKind kind, std::string reply = "[]")
        : failures_(failures), kind_(kind), reply_(std::move(reply)) {}
    std::string client_id() const override { return "flaky"; }
    GatewayResponse complete(const GatewayRequest&) override {
        std::lock_guard lock(mutex_);
        ++calls;
        if (calls <= failures_) throw GatewayError(kind_, "scripted failure " + std::to_string(calls));
        GatewayResponse r;
        r.raw_text = reply_;
        return r;
    }
    int calls = 0;

private:
    int failures_;
    GatewayErrorKind kind_;
    std::string reply_;
    std::mutex mutex_;
};

RetryPolicy instant_retry(std::vector<std::chrono::milliseconds>* waits = nullptr) {
    RetryPolicy p;
    p.sleeper = [waits](std::chrono::milliseconds ms) {
        if (waits) waits->push_back(ms);
    };
    return p;
}

LlmRunOptions run_options(PromptVariant v, const SegmentLabeling* labeling = nullptr, std::size_t concurrency = 8) {
    LlmRunOptions o;
    o.variant = v;
    o.labeling = labeling;
    o.model_id = testsupport::kMockModel;
    o.concurrency = concurrency;
    o.retry = instant_retry();
    return o;
}

}  // namespace

TEST_CASE("detection prompts carry their variant clauses and the full taxonomy") {
    const auto basic = detection_prompt(PromptVariant::Basic);
    const auto math = detection_prompt(PromptVariant::MathAware);
    const auto seg = detection_prompt(PromptVariant::SegmentAware);
    CHECK(basic.find("identify ALL PII in the provided message content") != std::string_view::npos);
    CHECK(math.find("general math content should not be annotated as PII") != std::string_view::npos);
    CHECK(basic.find("general math content") == std::string_view::npos);
    CHECK(seg.find("its \"math_label\" field will have the value \"MATH\"") != std::string_view::npos);
    CHECK(seg.find("\"NON-MATH\"") != std::string_view::npos);
    CHECK(seg.find("Be extra careful when detecting PII within math messages.") != std::string_view::npos);
    for (auto prompt : {basic, math, seg}) {
        CHECK(prompt.find("PII Types to detect:") != std::string_view::npos);
        CHECK(prompt.find("If no PII is found, do not return anything.") != std::string_view::npos);
        // COURSE_NUMBER appears under its prompt spelling COURSE.
        for (auto t : kAllPiiTypes) {
            const std::string name = t == PiiType::CourseNumber ? "\nCOURSE:" : "\n" + std::string(to_string(t));
            CHECK_MESSAGE(prompt.find(name) != std::string_view::npos, name);
        }
    }
    const auto audit = audit_prompt();
    CHECK(audit.find("PII Taxonomy (17 Types):") != std::string_view::npos);
    CHECK(audit.find("\"PII\", \"Not PII\", or \"Uncertain\"") != std::string_view::npos);
    CHECK(audit.find("4. surrogate: The specific replacement value for the tag.") != std::string_view::npos);
}

TEST_CASE("prompt variant names") {
    CHECK(parse_prompt_variant("basic") == PromptVariant::Basic);
    CHECK(parse_prompt_variant("MATH_AWARE") == PromptVariant::MathAware);
    CHECK(parse_prompt_variant("math-aware") == PromptVariant::MathAware);
    CHECK(parse_prompt_variant("segment") == PromptVariant::SegmentAware);
    CHECK(to_string(PromptVariant::SegmentAware) == "SEGMENT_AWARE");
    CHECK_THROWS_AS(parse_prompt_variant("fancy"), ValidationError);
    CHECK(engine_id(PromptVariant::MathAware, "m1") == "llm:MATH_AWARE:m1");
    CHECK(engine_id(PromptVariant::Basic, "") == "llm:BASIC");
}

TEST_CASE("user payload holds the target and up to three messages each side") {
    const auto t = seven_messages();
    auto p = nlohmann::json::parse(build_user_payload(t, 3, 3, std::nullopt));
    CHECK(p["context_before"].size() == 3);
    CHECK(p["context_after"].size() == 3);
    CHECK(p["message"]["index"] == 3);
    CHECK(p["message"]["role"] == "Student");
    CHECK(p["message"]["text"] == "message number 3");
    CHECK(!p["message"].contains("math_label"));
    CHECK(p["context_before"][0]["index"] == 0);
    CHECK(p["context_after"][2]["index"] == 6);

    p = nlohmann::json::parse(build_user_payload(t, 0, 3, SegmentLabel::Math));
    CHECK(p["context_before"].empty());
    CHECK(p["context_after"].size() == 3);
    CHECK(p["message"]["math_label"] == "MATH");

    p = nlohmann::json::parse(build_user_payload(t, 5, 3, SegmentLabel::NonMath));
    CHECK(p["context_before"].size() == 3);
    CHECK(p["context_after"].size() == 1);
    CHECK(p["message"]["math_label"] == "NON-MATH");

    CHECK_THROWS_AS(build_user_payload(t, 7, 3, std::nullopt), ValidationError);
}

TEST_CASE("build_prompt attaches the math label only for the segment-aware variant") {
    const auto t = seven_messages();
    const auto basic = build_prompt(PromptVariant::Basic, t, 2, SegmentLabel::Math, "m");
    CHECK(basic.system_text == detection_prompt(PromptVariant::Basic));
    CHECK(basic.user_text.find("math_label") == std::string::npos);
    CHECK(basic.model_id == "m");
    const auto seg = build_prompt(PromptVariant::SegmentAware, t, 2, SegmentLabel::Math, "m");
    CHECK(seg.user_text.find("\"math_label\": \"MATH\"") != std::string::npos);
    CHECK_THROWS_AS(build_prompt(PromptVariant::SegmentAware, t, 2, std::nullopt, "m"), ConfigError);
}

TEST_CASE("request body and hash") {
    GatewayRequest r{"model-a", "sys", "user", 3, 0.0};
    const auto body = request_body(r);
    CHECK(body["model"] == "model-a");
    CHECK(body["temperature"] == 0.0);
    REQUIRE(body["messages"].size() == 2);
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][0]["content"] == "sys");
    CHECK(body["messages"][1]["role"] == "user");
    CHECK(body["messages"][1]["content"] == "user");

    const auto h = request_hash(r);
    CHECK(h.size() == 64);
    CHECK(h == sha256_hex(body.dump()));
    auto same = r;
    same.max_attempts = 9;
    CHECK(request_hash(same) == h);
    auto other = r;
    other.user_text = "user!";
    CHECK(request_hash(other) != h);
    other = r;
    other.model_id = "model-b";
    CHECK(request_hash(other) != h);
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("parse_detections contract examples") {
    auto d = parse_detections(R"([{"text":"John","type":"PERSON"}])");
    CHECK(d.status == ParseStatus::Ok);
    REQUIRE(d.detections.size() == 1);
    CHECK(d.detections[0].text == "John");
    CHECK(d.detections[0].type == PiiType::Person);

    d = parse_detections("");
    CHECK(d.status == ParseStatus::Empty);
    CHECK(d.detections.empty());
    CHECK(parse_detections(" \n\t ").status == ParseStatus::Empty);

    d = parse_detections(R"([{"text":"algebra 300","type":"COURSE"}])");
    REQUIRE(d.detections.size() == 1);
    CHECK(d.detections[0].type == PiiType::CourseNumber);

    d = parse_detections("```json\n[{\"text\":\"PS 12\",\"type\":\"SCHOOL\"}]\n```");
    CHECK(d.status == ParseStatus::Ok);
    CHECK(d.detections.size() == 1);

    d = parse_detections("I found these: [{\"text\":\"Denver\",\"type\":\"LOCATION\"}]. Let me know!");
    CHECK(d.status == ParseStatus::Ok);
    CHECK(d.detections.at(0).type == PiiType::Location);

    // An unparseable bracket group before the real array is skipped.
    d = parse_detections("see [1] and [x, y] then [{\"text\":\"Bo\",\"type\":\"PERSON\"}]");
    CHECK(d.status == ParseStatus::Ok);

    d = parse_detections("[]");
    CHECK(d.status == ParseStatus::Ok);
    CHECK(d.detections.empty());

    CHECK(parse_detections("no PII found").status == ParseStatus::Malformed);
    CHECK(parse_detections(R"([{"text":"x","type":"UNKNOWN"}])").status == ParseStatus::Malformed);
    CHECK(parse_detections(R"([{"text":"John","type":"PERSON")").status == ParseStatus::Malformed);

    d = parse_detections(R"([{"text":"Ann","type":"PERSON"},{"text":"","type":"PERSON"},{"text":"x","type":"BOGUS"}])");
    CHECK(d.status == ParseStatus::Ok);
    CHECK(d.detections.size() == 1);

    d = parse_detections(R"([{"text":"a ] b","type":"PERSON"}])");
    REQUIRE(d.detections.size() == 1);
    CHECK(d.detections[0].text == "a ] b");
}

TEST_CASE("parser totality over adversarial outputs") {
    const auto outputs = testsupport::adversarial_outputs(404, 1000);
    std::size_t ok = 0, malformed = 0, empty = 0;
    for (const auto& raw : outputs) {
        LlmDetection d;
        CHECK_NOTHROW(d = parse_detections(raw));
        switch (d.status) {
            case ParseStatus::Ok: ++ok; break;
            case ParseStatus::Malformed:
                ++malformed;
                CHECK(d.detections.empty());
                break;
            case ParseStatus::Empty:
                ++empty;
                CHECK(d.detections.empty());
                break;
        }
        for (const auto& det : d.detections) {
            CHECK(!trim_whitespace(det.text).empty());
            CHECK(is_valid_utf8(det.text));
            CHECK(!det.start.has_value());
        }
    }
    CHECK(ok + malformed + empty == outputs.size());
    CHECK(ok > 0);
    CHECK(malformed > 0);
    CHECK_NOTHROW(parse_detections(std::string(200000, '[')));
    CHECK_NOTHROW(parse_detections(std::string(100000, '[') + std::string(100000, ']')));
}

TEST_CASE("grounding locates the first occurrence in scalar offsets") {
    std::vector<Detection> d = {{"Ana", PiiType::Person, {}, {}},
                                {"ana", PiiType::Person, {}, {}},
                                {"BOB", PiiType::Person, {}, {}},
                                {"Zed", PiiType::Person, {}, {}}};
    ground_detections("Señor Ana met bob and Ana", d);
    CHECK(d[0].start == 6u);
    CHECK(d[0].end == 9u);
    CHECK(d[1].start == 6u);  // case-insensitive fallback
    CHECK(d[2].start == 14u);
    CHECK(d[2].end == 17u);
    CHECK(!d[3].start.has_value());
    CHECK(!d[3].end.has_value());
}

TEST_CASE("retry policy") {
    const GatewayRequest req{"m", "s", "u", 3, 0.0};
    SUBCASE("transient then success takes two attempts") {
        FlakyClient c(1, GatewayErrorKind::Transient);
        std::vector<std::chrono::milliseconds> waits;
        const auto r = complete_with_retry(c, req, instant_retry(&waits));
        CHECK(r.attempts == 2);
        CHECK(c.calls == 2);
        REQUIRE(waits.size() == 1);
        CHECK(waits[0].count() >= 750);
        CHECK(waits[0].count() <= 1250);
    }
    SUBCASE("backoff grows geometrically") {
        FlakyClient c(2, GatewayErrorKind::Transient);
        std::vector<std::chrono::milliseconds> waits;
        CHECK(complete_with_retry(c, req, instant_retry(&waits)).attempts == 3);
        REQUIRE(waits.size() == 2);
        CHECK(waits[1].count() >= 1500);
        CHECK(waits[1].count() <= 2500);
    }
    SUBCASE("exhaustion rethrows the last transient error") {
        FlakyClient c(5, GatewayErrorKind::Transient);
        CHECK_THROWS_AS(complete_with_retry(c, req, instant_retry()), GatewayError);
        CHECK(c.calls == 3);
    }
    SUBCASE("request max_attempts caps the policy") {
        FlakyClient c(5, GatewayErrorKind::Transient);
        auto capped = req;
        capped.max_attempts = 1;
        CHECK_THROWS_AS(complete_with_retry(c, capped, instant_retry()), GatewayError);
        CHECK(c.calls == 1);
    }
    SUBCASE("auth, config, and permanent errors are not retried") {
        for (auto kind : {GatewayErrorKind::Auth, GatewayErrorKind::Config, GatewayErrorKind::Permanent}) {
            FlakyClient c(5, kind);
            CHECK_THROWS_AS(complete_with_retry(c, req, instant_retry()), GatewayError);
            CHECK(c.calls == 1);
        }
    }
}

TEST_CASE("replay client serves entries in order and repeats the last") {
    ReplayClient replay;
    const GatewayRequest req{"m", "s", "u", 3, 0.0};
    const auto h = request_hash(req);
    replay.add(h, {"", "error"});
    replay.add(h, {"first", "ok"});
    replay.add(h, {"second", "ok"});
    CHECK_THROWS_AS(replay.complete(req), GatewayError);
    CHECK(replay.complete(req).raw_text == "first");
    CHECK(replay.complete(req).raw_text == "second");
    CHECK(replay.complete(req).raw_text == "second");

    const GatewayRequest missing{"m", "s", "other", 3, 0.0};
    try {
        replay.complete(missing);
        FAIL("expected a missing-entry error");
    } catch (const GatewayError& e) {
        CHECK(e.fatal());
    }
    CHECK_THROWS_AS(ReplayClient::load("/nonexistent/log.jsonl"), IoError);
}

TEST_CASE("recording then replaying reproduces identical results") {
    testsupport::TempDir dir;
    const auto corpus = load_corpus(kFixtures / "mock_corpus.jsonl");
    const auto labeling = load_labeling(kFixtures / "mock_labeling.jsonl");
    testsupport::ScriptedClient scripted(kFixtures / "mock_script.json");
    for (auto v : {PromptVariant::Basic, PromptVariant::MathAware, PromptVariant::SegmentAware}) {
        const auto log = dir / ("log-" + std::string(to_string(v)) + ".jsonl");
        std::vector<DetectionResult> live;
        {
            RecordingClient rec(scripted, log);
            live = detect_llm_corpus(corpus, rec, run_options(v, &labeling));
        }
        auto replay = ReplayClient::load(log);
        const auto again = detect_llm_corpus(corpus, *replay, run_options(v, &labeling, 3));
        CHECK(again == live);
        std::size_t lines = 0;
        std::ifstream in(log);
        for (std::string line; std::getline(in, line);) {
            const auto j = nlohmann::json::parse(line);
            CHECK(j.at("request_hash").get<std::string>().size() == 64);
            CHECK(j.at("status") == "ok");
            CHECK(j.contains("raw_text"));
            ++lines;
        }
        CHECK(lines == 40);
    }
}

TEST_CASE("corpus run preconditions and failure handling") {
    Corpus corpus(1);
    corpus[0].session_id = "c1";
    corpus[0].messages = {message(0, "Volunteer", "Hi Ann"), message(1, "Student", "   "),
                          message(2, "Student", "bye")};

    SUBCASE("segment-aware runs need a covering labeling") {
        FlakyClient c(0, GatewayErrorKind::Transient);
        CHECK_THROWS_AS(detect_llm_corpus(corpus, c, run_options(PromptVariant::SegmentAware)), ConfigError);
        SegmentLabeling partial;
        partial.add(TranscriptLabeling{"c1", {SegmentLabel::Math}, {}});
        CHECK_THROWS_AS(detect_llm_corpus(corpus, c, run_options(PromptVariant::SegmentAware, &partial)),
                        ConfigError);
        CHECK(c.calls == 0);
    }
    SUBCASE("blank messages are EMPTY without a request") {
        FlakyClient c(0, GatewayErrorKind::Transient, R"([{"text":"Ann","type":"PERSON"}])");
        LlmRunSummary s;
        const auto r = detect_llm_corpus(corpus, c, run_options(PromptVariant::Basic), &s);
        CHECK(c.calls == 2);
        CHECK(s.requests_total == 2);
        CHECK(s.requests_completed == 2);
        REQUIRE(r.size() == 1);
        CHECK(r[0].engine == "llm:BASIC:mock-model");
        CHECK(r[0].messages[1].status == ParseStatus::Empty);
        CHECK(r[0].messages[1].attempts == 0);
        CHECK(r[0].messages[0].detections.at(0).start == 3u);
        // "Ann" is not in "bye": kept as a message-level detection.
        CHECK(r[0].messages[2].detections.size() == 1);
        CHECK(!r[0].messages[2].detections[0].start.has_value());
    }
    SUBCASE("transient failure then success is OK after two attempts") {
        FlakyClient c(1, GatewayErrorKind::Transient);
        const auto r = detect_llm_corpus(corpus, c, run_options(PromptVariant::Basic, nullptr, 1));
        CHECK(r[0].messages[0].status == ParseStatus::Ok);
        CHECK(r[0].messages[0].attempts == 2);
        CHECK(r[0].messages[2].attempts == 1);
    }
    SUBCASE("exhausted retries record MALFORMED") {
        FlakyClient c(100, GatewayErrorKind::Transient);
        LlmRunSummary s;
        const auto r = detect_llm_corpus(corpus, c, run_options(PromptVariant::Basic), &s);
        CHECK(r[0].messages[0].status == ParseStatus::Malformed);
        CHECK(r[0].messages[0].attempts == 3);
        CHECK(!r[0].messages[0].warnings.empty());
        CHECK(s.failed == 2);
        CHECK(s.malformed == 2);
        CHECK(c.calls == 6);
    }
    SUBCASE("authentication failure aborts with a summary") {
        FlakyClient c(100, GatewayErrorKind::Auth);
        try {
            detect_llm_corpus(corpus, c, run_options(PromptVariant::Basic, nullptr, 1));
            FAIL("expected RunAborted");
        } catch (const RunAborted& e) {
            CHECK(e.summary().requests_total == 2);
            CHECK(e.summary().requests_completed == 0);
            CHECK(std::string(e.what()).find("scripted failure") != std::string::npos);
        }
        CHECK(c.calls == 1);
    }
}

TEST_CASE("results are independent of the worker count") {
    const auto corpus = load_corpus(kFixtures / "mock_corpus.jsonl");
    testsupport::ScriptedClient scripted(kFixtures / "mock_script.json");
    const auto serial = detect_llm_corpus(corpus, scripted, run_options(PromptVariant::Basic, nullptr, 1));
    const auto wide = detect_llm_corpus(corpus, scripted, run_options(PromptVariant::Basic, nullptr, 16));
    CHECK(serial == wide);
    for (std::size_t t = 0; t < corpus.size(); ++t) {
        CHECK(serial[t].session_id == corpus[t].session_id);
        for (std::size_t m = 0; m < corpus[t].messages.size(); ++m)
            CHECK(serial[t].messages[m].index == corpus[t].messages[m].index);
    }
}

TEST_CASE("shipped mock responses replay offline with numeric-FP monotonicity") {
    const auto corpus = load_corpus(kFixtures / "mock_corpus.jsonl");
    const auto labeling = load_labeling(kFixtures / "mock_labeling.jsonl");
    auto replay = ReplayClient::load(kFixtures / "mock_responses.jsonl");
    testsupport::ScriptedClient scripted(kFixtures / "mock_script.json");
    std::map<PromptVariant, std::size_t> fps;
    for (auto v : {PromptVariant::Basic, PromptVariant::MathAware, PromptVariant::SegmentAware}) {
        const auto replayed = detect_llm_corpus(corpus, *replay, run_options(v, &labeling));
        // The archive is in sync with the script it was recorded from.
        CHECK(replayed == detect_llm_corpus(corpus, scripted, run_options(v, &labeling)));
        EvaluateOptions eo;
        const auto report = evaluate(corpus, replayed, eo);
        fps[v] = testsupport::numeric_false_positives(report);
        CHECK(report.overall.metrics.tp > 0);
    }
    CHECK(fps[PromptVariant::MathAware] < fps[PromptVariant::Basic]);
    CHECK(fps[PromptVariant::SegmentAware] <= fps[PromptVariant::Basic]);
    CHECK(fps[PromptVariant::SegmentAware] <= fps[PromptVariant::MathAware]);
}

TEST_CASE("rate limiter spaces calls") {
    FlakyClient c(0, GatewayErrorKind::Transient);
    RateLimitedClient limited(c, 50.0);
    const GatewayRequest req{"m", "s", "u", 3, 0.0};
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < 5; ++i) limited.complete(req);
    CHECK(std::chrono::steady_clock::now() - start >= std::chrono::milliseconds(75));
    CHECK_THROWS_AS(RateLimitedClient(c, 0.0), ConfigError);
}

TEST_CASE("http gateway client against a local chat-completions endpoint") {
    httplib::Server server;
    std::string seen_auth;
    nlohmann::json seen_body;
    std::mutex m;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(m);
        seen_auth = req.get_header_value("Authorization");
        seen_body = nlohmann::json::parse(req.body);
        nlohmann::json out = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "[]"}}}}}},
                              {"usage", {{"total_tokens", 12}}}};
        res.set_content(out.dump(), "application/json");
    });
    server.Post("/deny", [](const httplib::Request&, httplib::Response& res) { res.status = 401; });
    server.Post("/busy", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    server.Post("/bad", [](const httplib::Request&, httplib::Response& res) { res.status = 400; });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    const std::string origin = "http://127.0.0.1:" + std::to_string(port);
    const GatewayRequest req{"m1", "sys", "usr", 3, 0.0};

    HttpGatewayClient ok(origin, "secret");
    const auto r = ok.complete(req);
    CHECK(r.raw_text == "[]");
    CHECK(r.usage["total_tokens"] == 12);
    {
        std::lock_guard lock(m);
        CHECK(seen_auth == "Bearer secret");
        CHECK(seen_body == request_body(req));
    }
    auto kind_of = [&](const std::string& path) {
        try {
            HttpGatewayClient(origin + path, "k").complete(req);
        } catch (const GatewayError& e) {
            return e.kind();
        }
        return GatewayErrorKind::Permanent;
    };
    CHECK(kind_of("/deny") == GatewayErrorKind::Auth);
    CHECK(kind_of("/busy") == GatewayErrorKind::Transient);
    CHECK(kind_of("/bad") == GatewayErrorKind::Permanent);
    CHECK(kind_of("/missing") == GatewayErrorKind::Config);
    server.stop();
    th.join();
    CHECK_THROWS_AS(HttpGatewayClient("no-scheme", "k"), GatewayError);
}

TEST_CASE("gateway configuration comes from the environment") {
    ::unsetenv("LLM_GATEWAY_URL");
    ::setenv("LLM_API_KEY", "k", 1);
    CHECK_THROWS_AS(HttpGatewayClient::from_env(), GatewayError);
    ::setenv("LLM_GATEWAY_URL", "http://127.0.0.1:9", 1);
    ::unsetenv("LLM_API_KEY");
    CHECK_THROWS_AS(HttpGatewayClient::from_env(), GatewayError);
    ::setenv("LLM_API_KEY", "k", 1);
    CHECK(HttpGatewayClient::from_env()->client_id() == "http:http://127.0.0.1:9");
    ::unsetenv("LLM_GATEWAY_URL");
    ::unsetenv("LLM_API_KEY");
}

// Regenerates tests/fixtures/mock_responses.jsonl from mock_script.json when
// MATHPII_WRITE_FIXTURES is set.
TEST_CASE("regenerate mock response archive" * doctest::skip(std::getenv("MATHPII_WRITE_FIXTURES") == nullptr)) {
    const auto corpus = load_corpus(kFixtures / "mock_corpus.jsonl");
    const auto labeling = load_labeling(kFixtures / "mock_labeling.jsonl");
    testsupport::ScriptedClient scripted(kFixtures / "mock_script.json");
    RecordingClient rec(scripted, kFixtures / "mock_responses.jsonl");
    for (auto v : {PromptVariant::Basic, PromptVariant::MathAware, PromptVariant::SegmentAware})
        detect_llm_corpus(corpus, rec, run_options(v, &labeling, 1));
}
