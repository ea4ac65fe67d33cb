// Python bindings. Corpora, labelings, and reports cross the boundary as
// file paths or JSON text; Python callables can stand in for the embedding
// model and the NER provider.

#include "mathpii/corpus.hpp"
#include "mathpii/density.hpp"
#include "mathpii/embedding.hpp"
#include "mathpii/errors.hpp"
#include "mathpii/evaluation.hpp"
#include "mathpii/llm_detection.hpp"
#include "mathpii/recognizers.hpp"
#include "mathpii/segmentation.hpp"
#include "mathpii/threshold_optimizer.hpp"
#include "mathpii/vocabulary.hpp"

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include <sstream>

namespace py = pybind11;
using namespace mathpii;

namespace {

// Wraps `embed(text) -> sequence of floats`. Every call takes the GIL, so
// worker threads serialize on it; the returned length must equal `dimension`.
class PyEmbedder final : public EmbeddingProvider {
public:
    PyEmbedder(py::function fn, std::size_t dimension, std::string id)
        : fn_(std::move(fn)), dimension_(dimension), id_(std::move(id)) {}
    ~PyEmbedder() override {
        py::gil_scoped_acquire gil;
        fn_ = py::function();
    }
    std::string provider_id() const override { return id_; }
    std::size_t dimension() const override { return dimension_; }
    Embedding embed(std::string_view text) const override {
        py::gil_scoped_acquire gil;
        auto values = fn_(py::str(text.data(), text.size())).cast<std::vector<float>>();
        if (values.size() != dimension_)
            throw ValidationError("embedder '" + id_ + "' returned " + std::to_string(values.size()) +
                                  " values, expected " + std::to_string(dimension_));
        return values;
    }

private:
    py::function fn_;
    std::size_t dimension_;
    std::string id_;
};

// Wraps `analyze(text) -> [(start, end, label), ...]` with scalar offsets.
// A Python exception makes the provider unavailable, so the baseline engine
// degrades to patterns and records a warning.
class PyNer final : public NerProvider {
public:
    PyNer(py::function fn, std::string id) : fn_(std::move(fn)), id_(std::move(id)) {}
    ~PyNer() override {
        py::gil_scoped_acquire gil;
        fn_ = py::function();
    }
    std::string provider_id() const override { return id_; }
    std::vector<NerEntity> analyze(std::string_view text) const override {
        py::gil_scoped_acquire gil;
        std::vector<NerEntity> out;
        try {
            for (const auto& t : fn_(py::str(text.data(), text.size()))) {
                const auto tup = t.cast<std::tuple<std::size_t, std::size_t, std::string>>();
                out.push_back(NerEntity{std::get<0>(tup), std::get<1>(tup), std::get<2>(tup)});
            }
        } catch (const py::error_already_set& e) {
            throw NerUnavailable(id_ + ": " + e.what());
        }
        return out;
    }

private:
    py::function fn_;
    std::string id_;
};

py::dict span_dict(const PiiSpan& s) {
    py::dict d;
    d["start"] = s.start;
    d["end"] = s.end;
    d["text"] = s.surface;
    d["type"] = std::string(to_string(s.type));
    return d;
}

std::string labeling_json(const SegmentLabeling& l) {
    std::ostringstream out;
    write_labeling(l, out);
    return out.str();
}

}  // namespace

PYBIND11_MODULE(_mathpii, m) {
    m.doc() = "PII de-identification engine for math tutoring transcripts";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_RuntimeError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.def("tokenize", &tokenize, py::arg("text"));

    m.def(
        "math_density",
        [](const std::string& text) {
            const auto s = math_density(text, default_vocabulary());
            py::dict d;
            d["value"] = s.value;
            d["tokens"] = s.token_count;
            d["words"] = s.word_hits;
            d["phrases"] = s.phrase_hits;
            d["patterns"] = s.pattern_hits;
            return d;
        },
        py::arg("text"), "Density score of one message under the built-in vocabulary.");

    m.def("harmonic_objective", &harmonic_objective, py::arg("fp_prop"), py::arg("tp_prop"));

    m.def(
        "parse_detections",
        [](const std::string& raw) {
            const auto d = parse_detections(raw);
            py::list items;
            for (const auto& x : d.detections) {
                py::dict e;
                e["text"] = x.text;
                e["type"] = std::string(to_string(x.type));
                items.append(e);
            }
            return py::make_tuple(std::string(to_string(d.status)), items);
        },
        py::arg("raw_text"), "Parse a model reply into (status, [{text, type}]); never raises.");

    m.def(
        "detect_baseline",
        [](const std::string& text, std::optional<py::function> ner) {
            const auto recognizers = default_recognizers();
            std::optional<NerAdapter> adapter;
            if (ner) adapter = NerAdapter{std::make_shared<PyNer>(*ner, "python")};
            const auto out = detect_baseline(text, recognizers, adapter ? &*adapter : nullptr);
            py::list spans;
            for (const auto& s : out.spans) spans.append(span_dict(s));
            return py::make_tuple(spans, out.warnings);
        },
        py::arg("text"), py::arg("ner") = py::none(),
        "Pattern recognizers plus an optional NER callable; returns (spans, warnings).");

    m.def(
        "label_corpus",
        [](const std::string& corpus_path, double t_anchor, double t_sim, std::optional<py::function> embedder,
           std::size_t dimension) {
            const auto corpus = load_corpus(corpus_path);
            std::unique_ptr<EmbeddingProvider> emb;
            if (embedder) {
                emb = std::make_unique<PyEmbedder>(*embedder, dimension, "python");
            } else {
                emb = std::make_unique<HashedTfEmbedder>(dimension);
            }
            py::gil_scoped_release release;
            return labeling_json(label_corpus(corpus, default_vocabulary(), Thresholds{t_anchor, t_sim}, *emb));
        },
        py::arg("corpus_path"), py::arg("t_anchor") = 0.05, py::arg("t_sim") = 0.3, py::arg("embedder") = py::none(),
        py::arg("dimension") = 256,
        "Label every message MATH or NON-MATH; returns labeling JSONL text.");

    m.def(
        "evaluate",
        [](const std::string& gold_path, const std::string& pred_path, std::optional<std::string> segments_path,
           const std::string& match, std::size_t iterations, std::uint64_t seed) {
            const auto gold = load_corpus(gold_path);
            const auto pred = load_results(pred_path);
            std::optional<SegmentLabeling> labeling;
            if (segments_path) labeling = load_labeling(*segments_path);
            EvaluateOptions opts;
            opts.policy = MatchPolicy{parse_match_mode(match)};
            if (labeling) {
                opts.segments = &*labeling;
                opts.segment_strata = true;
            }
            if (iterations > 0) opts.bootstrap = BootstrapOptions{iterations, seed, 0};
            py::gil_scoped_release release;
            return report_to_json(evaluate(gold, pred, opts)).dump();
        },
        py::arg("gold_path"), py::arg("pred_path"), py::arg("segments_path") = py::none(), py::arg("match") = "text",
        py::arg("iterations") = 1000, py::arg("seed") = 20240601,
        "Score detection results against gold labels; returns the report as JSON text.");
}
