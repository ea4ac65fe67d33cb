// mathpii: command-line front end for segmentation, threshold search,
// detection, evaluation, the redaction audit, surrogate application, the
// review service, and report rendering.
//
// Exit status: 0 success, 1 bad usage / invalid input / configuration,
// 2 runtime failure (I/O, gateway, internal).

#include "mathpii/corpus.hpp"
#include "mathpii/embedding.hpp"
#include "mathpii/errors.hpp"
#include "mathpii/evaluation.hpp"
#include "mathpii/llm_detection.hpp"
#include "mathpii/manifest.hpp"
#include "mathpii/recognizers.hpp"
#include "mathpii/report.hpp"
#include "mathpii/review_service.hpp"
#include "mathpii/review_store.hpp"
#include "mathpii/segmentation.hpp"
#include "mathpii/surrogation.hpp"
#include "mathpii/threshold_optimizer.hpp"
#include "mathpii/vocabulary.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

namespace fs = std::filesystem;
using namespace mathpii;

namespace {

void require_file(const std::string& path, const char* what) {
    if (path.empty()) throw ValidationError(std::string(what) + " path is empty");
    if (!fs::is_regular_file(path)) throw ValidationError(std::string(what) + " '" + path + "' does not exist");
}

std::ofstream open_out(const std::string& path) {
    if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    return out;
}

fs::path manifest_for(const std::string& output, const std::string& override_path) {
    if (!override_path.empty()) return override_path;
    return output + ".manifest.json";
}

struct EmbedderChoice {
    std::string kind = "hashed";
    std::string table;
    std::size_t dim = 256;

    void add_options(CLI::App* app) {
        app->add_option("--embedder", kind, "hashed | table")->check(CLI::IsMember({"hashed", "table"}));
        app->add_option("--embeddings", table, "JSONL {text, vector} table for --embedder table");
        app->add_option("--embed-dim", dim, "dimension of the hashed embedder")->check(CLI::PositiveNumber);
    }
    std::unique_ptr<EmbeddingProvider> make() const {
        if (kind == "table") {
            require_file(table, "embedding table");
            return std::make_unique<TableEmbedder>(TableEmbedder::load(table));
        }
        return std::make_unique<HashedTfEmbedder>(dim);
    }
    void record(RunConfig& c) const {
        c.extra["embedder"] = kind == "table" ? "table:" + table : "hashed:" + std::to_string(dim);
    }
};

MathVocabulary vocab_from(const std::string& path) {
    if (path.empty()) return default_vocabulary();
    require_file(path, "vocabulary");
    return load_vocabulary(path);
}

struct GatewayChoice {
    std::string replay;
    std::string record;
    double rate_limit = 0.0;
    int max_attempts = 3;

    void add_options(CLI::App* app) {
        app->add_option("--replay", replay, "serve responses from a recorded JSONL log instead of the gateway");
        app->add_option("--record", record, "append every gateway response to this JSONL log");
        app->add_option("--rate-limit", rate_limit, "maximum requests per second (0 = unlimited)");
        app->add_option("--max-attempts", max_attempts, "attempts per request")->check(CLI::Range(1, 10));
    }

    // Owns the client chain; `client()` is the outermost layer.
    struct Chain {
        std::unique_ptr<ChatClient> base;
        std::unique_ptr<ChatClient> recording;
        std::unique_ptr<ChatClient> limited;
        ChatClient& client() const { return limited ? *limited : recording ? *recording : *base; }
    };

    Chain make() const {
        Chain c;
        if (!replay.empty()) {
            require_file(replay, "response log");
            c.base = ReplayClient::load(replay);
        } else {
            try {
                c.base = HttpGatewayClient::from_env();
            } catch (const GatewayError& e) {
                throw ConfigError(e.what());
            }
        }
        if (!record.empty()) c.recording = std::make_unique<RecordingClient>(*c.base, record);
        if (rate_limit > 0)
            c.limited = std::make_unique<RateLimitedClient>(c.recording ? *c.recording : *c.base, rate_limit);
        return c;
    }
};

std::string model_from_env(const std::string& flag) {
    if (!flag.empty()) return flag;
    const char* env = std::getenv("LLM_MODEL_ID");
    return env ? env : "";
}

// ---------------------------------------------------------------- segment
struct SegmentCmd {
    std::string input, vocab, out, manifest;
    double t_anchor = 0.05, t_sim = 0.3;
    unsigned threads = 0;
    EmbedderChoice embedder;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("segment", "label every message MATH or NON-MATH");
        sub->add_option("--input", input, "corpus JSONL")->required();
        sub->add_option("--vocab", vocab, "math vocabulary JSON (default: built-in)");
        sub->add_option("--t-anchor", t_anchor, "anchor density threshold")->check(CLI::Range(0.0, 100.0));
        sub->add_option("--t-sim", t_sim, "centroid similarity threshold")->check(CLI::Range(-1.0, 1.0));
        sub->add_option("--out", out, "labeling JSONL")->required();
        sub->add_option("--threads", threads, "worker threads (0 = all cores)");
        sub->add_option("--manifest", manifest, "manifest path (default: <out>.manifest.json)");
        embedder.add_options(sub);
        sub->callback([this] { run(); });
    }

    void run() {
        require_file(input, "corpus");
        const auto corpus = load_corpus(input);
        const auto v = vocab_from(vocab);
        const auto emb = embedder.make();
        const CachingEmbedder cached(*emb);
        const auto labeling = label_corpus(corpus, v, Thresholds{t_anchor, t_sim}, cached, threads);
        write_labeling(labeling, fs::path(out));
        std::size_t math = 0, total = 0, segments = 0;
        for (const auto& t : labeling.transcripts()) {
            segments += t.segments.size();
            for (auto l : t.labels) {
                ++total;
                math += l == SegmentLabel::Math;
            }
        }
        std::cout << "labeled " << total << " messages in " << labeling.transcripts().size() << " transcripts: "
                  << math << " MATH in " << segments << " segments\n";
        RunConfig c{.command = "segment", .corpus_path = input, .t_anchor = t_anchor, .t_sim = t_sim};
        c.vocabulary_path = vocab.empty() ? std::string("<built-in>") : vocab;
        embedder.record(c);
        std::vector<fs::path> inputs{input};
        if (!vocab.empty()) inputs.emplace_back(vocab);
        if (embedder.kind == "table") inputs.emplace_back(embedder.table);
        write_manifest(manifest_for(out, manifest), c, inputs, {out});
    }
};

// ---------------------------------------------------------------- optimize
struct OptimizeCmd {
    std::string input, items, vocab, out, select_out, uncertain = "exclude", manifest;
    std::vector<double> anchors, sims;
    unsigned threads = 0;
    EmbedderChoice embedder;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("optimize", "grid search over (t_anchor, t_sim)");
        sub->add_option("--input", input, "source corpus JSONL with upstream labels")->required();
        sub->add_option("--items", items, "audited annotation items JSONL")->required();
        sub->add_option("--vocab", vocab, "math vocabulary JSON (default: built-in)");
        sub->add_option("--out", out, "heatmap CSV")->required();
        sub->add_option("--select-out", select_out, "write the selected thresholds as JSON");
        sub->add_option("--uncertain", uncertain, "exclude | pii | not-pii")
            ->check(CLI::IsMember({"exclude", "pii", "not-pii"}));
        sub->add_option("--anchor-values", anchors, "override the anchor grid");
        sub->add_option("--sim-values", sims, "override the similarity grid");
        sub->add_option("--threads", threads, "worker threads (0 = all cores)");
        sub->add_option("--manifest", manifest, "manifest path (default: <out>.manifest.json)");
        embedder.add_options(sub);
        sub->callback([this] { run(); });
    }

    void run() {
        require_file(input, "corpus");
        require_file(items, "items");
        const auto corpus = load_corpus(input);
        const auto verdicts = verdicts_from_items(latest_items(load_items(items)));
        const auto v = vocab_from(vocab);
        auto grid = GridSpec::reference();
        if (!anchors.empty()) grid.anchor_values = anchors;
        if (!sims.empty()) grid.similarity_values = sims;
        const auto emb = embedder.make();
        const auto points =
            evaluate_grid(corpus, verdicts, v, *emb, grid, parse_uncertain_policy(uncertain), threads);
        {
            auto os = open_out(out);
            write_heatmap_csv(points, os);
        }
        const auto best = select_thresholds(points);
        const auto it = std::find_if(points.begin(), points.end(), [&](const GridPoint& p) {
            return p.thresholds.anchor == best.anchor && p.thresholds.similarity == best.similarity;
        });
        std::printf("selected t_anchor=%.2f t_sim=%.2f objective=%.6f (fp_prop=%.6f tp_prop=%.6f)\n", best.anchor,
                    best.similarity, it->objective, it->fp_prop, it->tp_prop);
        std::vector<fs::path> outputs{out};
        if (!select_out.empty()) {
            auto os = open_out(select_out);
            os << nlohmann::json{{"t_anchor", best.anchor}, {"t_sim", best.similarity}, {"objective", it->objective}}
                      .dump(2)
               << '\n';
            outputs.emplace_back(select_out);
        }
        RunConfig c{.command = "optimize", .corpus_path = input};
        c.vocabulary_path = vocab.empty() ? std::string("<built-in>") : vocab;
        c.extra["items"] = items;
        c.extra["uncertain"] = uncertain;
        embedder.record(c);
        std::vector<fs::path> inputs{input, items};
        if (!vocab.empty()) inputs.emplace_back(vocab);
        write_manifest(manifest_for(out, manifest), c, inputs, outputs);
    }
};

// ---------------------------------------------------------------- detect
struct DetectCmd {
    std::string input, engine = "baseline", prompt = "basic", segments, model, out, recognizers, ner = "none",
                                  ner_config, manifest;
    std::size_t concurrency = 8;
    unsigned threads = 0;
    GatewayChoice gateway;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("detect", "run a detection engine over a corpus");
        sub->add_option("--input", input, "corpus JSONL")->required();
        sub->add_option("--engine", engine, "baseline | llm")->check(CLI::IsMember({"baseline", "llm"}));
        sub->add_option("--prompt", prompt, "basic | math | segment (llm engine)");
        sub->add_option("--segments", segments, "segment labeling JSONL (required for --prompt segment)");
        sub->add_option("--model", model, "model id (default: $LLM_MODEL_ID)");
        sub->add_option("--recognizers", recognizers, "recognizer config JSON (default: built-in)");
        sub->add_option("--ner", ner, "NER provider id: none | gazetteer");
        sub->add_option("--ner-config", ner_config, "provider configuration file");
        sub->add_option("--concurrency", concurrency, "parallel gateway requests")->check(CLI::Range(1, 256));
        sub->add_option("--threads", threads, "baseline worker threads (0 = all cores)");
        sub->add_option("--out", out, "detection results JSONL")->required();
        sub->add_option("--manifest", manifest, "manifest path (default: <out>.manifest.json)");
        gateway.add_options(sub);
        sub->callback([this] { run(); });
    }

    void run() {
        require_file(input, "corpus");
        const auto corpus = load_corpus(input);
        RunConfig c{.command = "detect", .corpus_path = input, .engine = engine};
        std::vector<fs::path> inputs{input};
        std::vector<DetectionResult> results;
        if (engine == "baseline") {
            BaselineConfig cfg;
            if (!recognizers.empty()) {
                require_file(recognizers, "recognizer config");
                cfg.recognizers = load_recognizers(recognizers);
                inputs.emplace_back(recognizers);
            }
            if (!ner_config.empty()) {
                require_file(ner_config, "NER config");
                inputs.emplace_back(ner_config);
            }
            cfg.ner = make_ner_adapter(ner, ner_config);
            cfg.threads = threads;
            results = detect_baseline_corpus(corpus, cfg);
            c.extra["recognizers"] = recognizers.empty() ? "<built-in>" : recognizers;
            c.extra["ner"] = ner;
        } else {
            const auto variant = parse_prompt_variant(prompt);
            std::optional<SegmentLabeling> labeling;
            if (variant == PromptVariant::SegmentAware) {
                if (segments.empty()) throw ValidationError("--prompt segment requires --segments");
                require_file(segments, "segment labeling");
                labeling = load_labeling(segments);
                if (!labeling->covers(corpus))
                    throw ValidationError("segment labeling '" + segments + "' does not cover the corpus");
                inputs.emplace_back(segments);
            }
            LlmRunOptions opts;
            opts.variant = variant;
            opts.labeling = labeling ? &*labeling : nullptr;
            opts.model_id = model_from_env(model);
            opts.concurrency = concurrency;
            opts.retry.max_attempts = gateway.max_attempts;
            auto chain = gateway.make();
            if (!gateway.replay.empty()) inputs.emplace_back(gateway.replay);
            LlmRunSummary summary;
            results = detect_llm_corpus(corpus, chain.client(), opts, &summary);
            std::cout << "requests " << summary.requests_completed << "/" << summary.requests_total
                      << ", malformed " << summary.malformed << ", empty " << summary.empty << "\n";
            c.prompt_variant = std::string(to_string(variant));
            c.model_id = opts.model_id;
            c.extra["temperature"] = "0";
            c.extra["client"] = chain.client().client_id();
        }
        write_results(results, fs::path(out));
        std::size_t n = 0;
        for (const auto& r : results)
            for (const auto& m : r.messages) n += m.detections.size();
        std::cout << "wrote " << n << " detections for " << results.size() << " transcripts to " << out << "\n";
        write_manifest(manifest_for(out, manifest), c, inputs, {out});
    }
};

// ---------------------------------------------------------------- evaluate
struct EvaluateCmd {
    std::string gold, pred, segments, match = "text", out, csv, manifest;
    std::size_t iterations = 1000;
    std::uint64_t seed = BootstrapOptions{}.seed;
    bool no_bootstrap = false;
    unsigned threads = 0;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("evaluate", "score detection results against benchmark labels");
        sub->add_option("--gold", gold, "benchmark corpus JSONL")->required();
        sub->add_option("--pred", pred, "detection results JSONL")->required();
        sub->add_option("--segments", segments, "segment labeling JSONL for MATH/NON-MATH strata");
        sub->add_option("--match", match, "text | overlap")->check(CLI::IsMember({"text", "overlap"}));
        sub->add_option("--iterations", iterations, "bootstrap iterations");
        sub->add_option("--seed", seed, "bootstrap seed");
        sub->add_flag("--no-bootstrap", no_bootstrap, "skip confidence intervals");
        sub->add_option("--threads", threads, "bootstrap worker threads (0 = all cores)");
        sub->add_option("--out", out, "report JSON");
        sub->add_option("--csv", csv, "per-stratum CSV");
        sub->add_option("--manifest", manifest, "manifest path (default: <out>.manifest.json)");
        sub->callback([this] { run(); });
    }

    void run() {
        require_file(gold, "gold corpus");
        require_file(pred, "detection results");
        const auto corpus = load_corpus(gold);
        const auto results = load_results(pred);
        std::optional<SegmentLabeling> labeling;
        std::vector<fs::path> inputs{gold, pred};
        if (!segments.empty()) {
            require_file(segments, "segment labeling");
            labeling = load_labeling(segments);
            inputs.emplace_back(segments);
        }
        EvaluateOptions opts;
        opts.policy.mode = parse_match_mode(match);
        opts.segments = labeling ? &*labeling : nullptr;
        opts.segment_strata = labeling.has_value();
        if (!no_bootstrap) opts.bootstrap = BootstrapOptions{iterations, seed, threads};
        const auto report = evaluate(corpus, results, opts);

        const std::string name = report.engine.empty() ? fs::path(pred).stem().string() : report.engine;
        std::cout << render_metric_table({{name, report}});
        if (report.by_segment) std::cout << '\n' << render_segment_table({{name, report}});

        std::vector<fs::path> outputs;
        if (!out.empty()) {
            auto os = open_out(out);
            os << report_to_json(report).dump(2) << '\n';
            outputs.emplace_back(out);
        }
        if (!csv.empty()) {
            auto os = open_out(csv);
            write_strata_csv(report, os);
            outputs.emplace_back(csv);
        }
        RunConfig c{.command = "evaluate", .corpus_path = gold, .match_policy = std::string(to_string(opts.policy.mode))};
        if (opts.bootstrap) {
            c.seed = seed;
            c.extra["iterations"] = std::to_string(iterations);
        }
        c.extra["pred"] = pred;
        write_manifest(manifest_for(out.empty() ? (csv.empty() ? pred + ".eval" : csv) : out, manifest), c, inputs,
                       outputs);
    }
};

// ---------------------------------------------------------------- audit
struct AuditCmd {
    std::string input, model, out, manifest;
    std::size_t concurrency = 8, radius = 3;
    int iteration = 1;
    bool redacted_only = false;
    GatewayChoice gateway;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("audit", "evaluate upstream redactions and propose surrogates");
        sub->add_option("--input", input, "upstream-redacted corpus JSONL")->required();
        sub->add_option("--model", model, "model id (default: $LLM_MODEL_ID)");
        sub->add_option("--iteration", iteration, "iteration number recorded on the items")->check(CLI::PositiveNumber);
        sub->add_option("--context", radius, "messages of context on each side");
        sub->add_option("--concurrency", concurrency, "parallel gateway requests")->check(CLI::Range(1, 256));
        sub->add_flag("--redacted-only", redacted_only, "audit only messages carrying upstream labels");
        sub->add_option("--out", out, "annotation items JSONL")->required();
        sub->add_option("--manifest", manifest, "manifest path (default: <out>.manifest.json)");
        gateway.add_options(sub);
        sub->callback([this] { run(); });
    }

    void run() {
        require_file(input, "corpus");
        auto corpus = load_corpus(input);
        const auto attached = attach_placeholder_spans(corpus);
        AuditOptions opts;
        opts.model_id = model_from_env(model);
        opts.context_radius = radius;
        opts.concurrency = concurrency;
        opts.iteration = iteration;
        opts.all_messages = !redacted_only;
        opts.retry.max_attempts = gateway.max_attempts;
        auto chain = gateway.make();
        const auto items = audit_corpus(corpus, chain.client(), opts);
        write_items(items, fs::path(out));
        std::size_t review = 0, discovered = 0;
        for (const auto& i : items) {
            review += i.needs_review;
            discovered += i.discovered;
        }
        std::cout << "wrote " << items.size() << " items (" << discovered << " discovered, " << review
                  << " flagged for review; " << attached << " placeholder spans attached)\n";
        RunConfig c{.command = "audit", .corpus_path = input, .model_id = opts.model_id};
        c.extra["iteration"] = std::to_string(iteration);
        c.extra["context"] = std::to_string(radius);
        c.extra["client"] = chain.client().client_id();
        std::vector<fs::path> inputs{input};
        if (!gateway.replay.empty()) inputs.emplace_back(gateway.replay);
        write_manifest(manifest_for(out, manifest), c, inputs, {out});
    }
};

// ---------------------------------------------------------------- apply-surrogates
struct ApplyCmd {
    std::string input, items, events, registry, out, ledger, manifest;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("apply-surrogates", "rewrite the corpus with approved audit decisions");
        sub->add_option("--input", input, "upstream-redacted corpus JSONL")->required();
        sub->add_option("--items", items, "annotation items JSONL")->required();
        sub->add_option("--events", events, "review event log to replay onto the items");
        sub->add_option("--registry", registry, "surrogate registry JSON (read and updated)");
        sub->add_option("--out", out, "benchmark corpus JSONL")->required();
        sub->add_option("--ledger", ledger, "label ledger CSV (default: <out>.ledger.csv)");
        sub->add_option("--manifest", manifest, "manifest path (default: <out>.manifest.json)");
        sub->callback([this] { run(); });
    }

    void run() {
        require_file(input, "corpus");
        require_file(items, "items");
        auto corpus = load_corpus(input);
        attach_placeholder_spans(corpus);
        std::vector<fs::path> inputs{input, items};
        std::vector<AnnotationItem> current;
        if (!events.empty()) {
            require_file(events, "event log");
            inputs.emplace_back(events);
            AnnotationStore store(items, events);
            current = store.latest();
        } else {
            current = latest_items(load_items(items));
        }
        SurrogateRegistry reg = registry.empty() ? SurrogateRegistry{} : SurrogateRegistry::load(registry);
        if (!registry.empty() && fs::exists(registry)) inputs.emplace_back(registry);
        auto result = apply_surrogates(corpus, current, reg);
        write_corpus(result.benchmark, fs::path(out));
        const auto ledger_path = ledger.empty() ? out + ".ledger.csv" : ledger;
        {
            auto os = open_out(ledger_path);
            write_ledger_csv(result.ledger, os);
        }
        std::vector<fs::path> outputs{out, ledger_path};
        if (!registry.empty()) {
            reg.save(registry);
            outputs.emplace_back(registry);
        }
        std::cout << "input labels " << result.input_labels << " + discovered " << result.discovered
                  << " = retained " << result.retained << " + removed " << result.removed << "\n";
        std::cout << render_label_comparison(corpus_stats(corpus), corpus_stats(result.benchmark));
        RunConfig c{.command = "apply-surrogates", .corpus_path = input};
        c.extra["items"] = items;
        if (!events.empty()) c.extra["events"] = events;
        write_manifest(manifest_for(out, manifest), c, inputs, outputs);
    }
};

// ---------------------------------------------------------------- review-serve
ReviewServer* g_server = nullptr;

extern "C" void handle_signal(int) {
    if (g_server) g_server->stop();
}

struct ServeCmd {
    std::string items, events, host = "127.0.0.1", static_dir, token, manifest;
    int port = 8080;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("review-serve", "serve the annotation review API");
        sub->add_option("--items", items, "annotation items JSONL")->required();
        sub->add_option("--events", events, "append-only event log (default: <items>.events.jsonl)");
        sub->add_option("--host", host, "bind address");
        sub->add_option("--port", port, "listen port")->check(CLI::Range(0, 65535));
        sub->add_option("--static-dir", static_dir, "review UI bundle served at /");
        sub->add_option("--token", token, "shared token required in X-Review-Token");
        sub->add_option("--manifest", manifest, "manifest path (default: <events>.manifest.json)");
        sub->callback([this] { run(); });
    }

    void run() {
        require_file(items, "items");
        if (!static_dir.empty() && !fs::is_directory(static_dir))
            throw ValidationError("static directory '" + static_dir + "' does not exist");
        const auto events_path = events.empty() ? items + ".events.jsonl" : events;
        AnnotationStore store(items, events_path);
        RunConfig c{.command = "review-serve"};
        c.extra["items"] = items;
        c.extra["events"] = events_path;
        c.extra["port"] = std::to_string(port);
        write_manifest(manifest_for(events_path, manifest), c, {items}, {});
        ReviewServer server(store, ReviewServiceOptions{host, port, static_dir, token});
        const int bound = server.bind();
        std::cout << "review service listening on http://" << host << ":" << bound << "/" << std::endl;
        g_server = &server;
        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);
        server.serve();
        g_server = nullptr;
    }
};

// ---------------------------------------------------------------- report
struct ReportCmd {
    std::vector<std::string> reports;
    std::string gold, source, items, segments, out, manifest;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("report", "render summary tables");
        sub->add_option("--reports", reports, "evaluation report JSON files, optionally NAME=PATH");
        sub->add_option("--gold", gold, "benchmark corpus (per-type totals and label comparison)");
        sub->add_option("--source", source, "source corpus (label comparison and segment capture)");
        sub->add_option("--items", items, "audited items (segment capture)");
        sub->add_option("--segments", segments, "segment labeling of the source corpus (segment capture)");
        sub->add_option("--out", out, "write the tables to this file as well as stdout");
        sub->add_option("--manifest", manifest, "manifest path (default: <out>.manifest.json)");
        sub->callback([this] { run(); });
    }

    void run() {
        std::string text;
        std::vector<fs::path> inputs;
        std::optional<Corpus> gold_corpus, source_corpus;
        if (!gold.empty()) {
            require_file(gold, "gold corpus");
            gold_corpus = load_corpus(gold);
            inputs.emplace_back(gold);
        }
        if (!source.empty()) {
            require_file(source, "source corpus");
            source_corpus = load_corpus(source);
            attach_placeholder_spans(*source_corpus);
            inputs.emplace_back(source);
        }
        if (gold_corpus && source_corpus)
            text += "== Label counts ==\n" + render_label_comparison(corpus_stats(*source_corpus), corpus_stats(*gold_corpus)) + "\n";

        std::vector<NamedReport> named;
        for (const auto& spec : reports) {
            const auto eq = spec.find('=');
            const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
            require_file(path, "report");
            std::ifstream in(path);
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(in);
            } catch (const std::exception& e) {
                throw ValidationError(path + ": " + e.what());
            }
            auto r = report_from_json(j);
            std::string name = eq == std::string::npos ? r.engine : spec.substr(0, eq);
            if (name.empty()) name = fs::path(path).stem().string();
            named.push_back({name, std::move(r)});
            inputs.emplace_back(path);
        }
        if (!named.empty()) {
            text += "== Detection performance ==\n" + render_metric_table(named) + "\n";
            if (gold_corpus)
                text += "== False positives and precision by type ==\n" +
                        render_fp_by_category(named, corpus_stats(*gold_corpus)) + "\n";
            std::vector<NamedReport> stratified;
            for (const auto& n : named)
                if (n.report.by_segment) stratified.push_back(n);
            if (!stratified.empty())
                text += "== Performance by segment ==\n" + render_segment_table(stratified) + "\n";
        }
        if (source_corpus && !items.empty() && !segments.empty()) {
            require_file(items, "items");
            require_file(segments, "segment labeling");
            inputs.emplace_back(items);
            inputs.emplace_back(segments);
            const auto capture = segment_capture(*source_corpus, verdicts_from_items(latest_items(load_items(items))),
                                                 load_labeling(segments));
            text += "== Upstream redactions by segment and verdict ==\n" + render_segment_capture(capture) + "\n";
        }
        if (text.empty()) throw ValidationError("nothing to report: pass --reports and/or corpora");
        std::cout << text;
        std::vector<fs::path> outputs;
        if (!out.empty()) {
            auto os = open_out(out);
            os << text;
            outputs.emplace_back(out);
        }
        RunConfig c{.command = "report"};
        write_manifest(manifest_for(out.empty() ? "mathpii-report" : out, manifest), c, inputs, outputs);
    }
};

// ---------------------------------------------------------------- export-defaults
struct ExportCmd {
    std::string vocab, recognizers;

    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("export-defaults", "write the built-in vocabulary and recognizer configs");
        sub->add_option("--vocab", vocab, "vocabulary JSON output");
        sub->add_option("--recognizers", recognizers, "recognizer config JSON output");
        sub->callback([this] { run(); });
    }

    void run() {
        if (vocab.empty() && recognizers.empty()) throw ValidationError("pass --vocab and/or --recognizers");
        if (!vocab.empty()) open_out(vocab) << vocabulary_to_json(default_vocabulary()) << '\n';
        if (!recognizers.empty()) {
            const auto recs = default_recognizers();
            open_out(recognizers) << recognizers_to_json(recs).dump(2) << '\n';
        }
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"De-identification toolkit for math tutoring transcripts", "mathpii"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    SegmentCmd segment;
    OptimizeCmd optimize;
    DetectCmd detect;
    EvaluateCmd evaluate_cmd;
    AuditCmd audit;
    ApplyCmd apply;
    ServeCmd serve;
    ReportCmd report;
    ExportCmd export_defaults;
    segment.add(app);
    optimize.add(app);
    detect.add(app);
    evaluate_cmd.add(app);
    audit.add(app);
    apply.add(app);
    serve.add(app);
    report.add(app);
    export_defaults.add(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 1;
    } catch (const RunAborted& e) {
        std::cerr << "aborted: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
