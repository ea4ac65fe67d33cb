#include "mathpii/evaluation.hpp"

#include "mathpii/errors.hpp"
#include "mathpii/parallel.hpp"
#include "mathpii/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>
#include <set>
#include <unordered_map>

namespace mathpii {

std::string_view to_string(MatchMode mode) {
    return mode == MatchMode::TextAndType ? "TEXT_AND_TYPE" : "OVERLAP_AND_TYPE";
}

MatchMode parse_match_mode(std::string_view text) {
    const auto t = ascii_lower(trim_whitespace(text));
    if (t == "text_and_type" || t == "text") return MatchMode::TextAndType;
    if (t == "overlap_and_type" || t == "overlap") return MatchMode::OverlapAndType;
    throw ValidationError("unknown match mode '" + std::string(text) + "'");
}

MetricSet MetricSet::from(const Counts& c) {
    MetricSet m;
    m.tp = c.tp;
    m.fp = c.fp;
    m.fn = c.fn;
    const double tp = static_cast<double>(c.tp);
    if (c.tp + c.fp > 0) m.precision = tp / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0) m.recall = tp / static_cast<double>(c.tp + c.fn);
    if (m.precision + m.recall > 0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

namespace {

template <typename T, typename TextOf>
std::vector<T> dedup(std::span<const T> items, TextOf text_of) {
    std::set<std::pair<PiiType, std::string>> seen;
    std::vector<T> out;
    for (const auto& item : items)
        if (seen.emplace(item.type, normalize_span_text(text_of(item))).second) out.push_back(item);
    return out;
}

bool ranges_overlap(std::size_t a0, std::size_t a1, std::size_t b0, std::size_t b1) {
    return a0 < b1 && b0 < a1;
}

}  // namespace

MessageMatch match_spans(std::span<const PiiSpan> gold, std::span<const Detection> predicted,
                         const MatchPolicy& policy) {
    MessageMatch mm;
    mm.gold = dedup(gold, [](const PiiSpan& s) -> const std::string& { return s.surface; });
    mm.predicted = dedup(predicted, [](const Detection& d) -> const std::string& { return d.text; });

    std::vector<std::string> gold_norm, pred_norm;
    for (const auto& g : mm.gold) gold_norm.push_back(normalize_span_text(g.surface));
    for (const auto& p : mm.predicted) pred_norm.push_back(normalize_span_text(p.text));

    auto compatible = [&](std::size_t p, std::size_t g) {
        const auto& pd = mm.predicted[p];
        const auto& gs = mm.gold[g];
        if (pd.type != gs.type) return false;
        if (policy.mode == MatchMode::OverlapAndType && pd.start && pd.end)
            return ranges_overlap(*pd.start, *pd.end, gs.start, gs.end);
        return pred_norm[p] == gold_norm[g];
    };

    std::vector<std::vector<std::size_t>> adj(mm.predicted.size());
    for (std::size_t p = 0; p < mm.predicted.size(); ++p)
        for (std::size_t g = 0; g < mm.gold.size(); ++g)
            if (compatible(p, g)) adj[p].push_back(g);

    // Augmenting-path maximum bipartite matching, predictions in input order.
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> gold_owner(mm.gold.size(), kNone);
    std::vector<char> visited;
    std::function<bool(std::size_t)> augment = [&](std::size_t p) {
        for (std::size_t g : adj[p]) {
            if (visited[g]) continue;
            visited[g] = 1;
            if (gold_owner[g] == kNone || augment(gold_owner[g])) {
                gold_owner[g] = p;
                return true;
            }
        }
        return false;
    };
    for (std::size_t p = 0; p < mm.predicted.size(); ++p) {
        if (adj[p].empty()) continue;
        visited.assign(mm.gold.size(), 0);
        augment(p);
    }
    for (std::size_t g = 0; g < mm.gold.size(); ++g)
        if (gold_owner[g] != kNone) mm.pairs.emplace_back(gold_owner[g], g);
    std::sort(mm.pairs.begin(), mm.pairs.end());

    mm.counts.tp = mm.pairs.size();
    mm.counts.fp = mm.predicted.size() - mm.pairs.size();
    mm.counts.fn = mm.gold.size() - mm.pairs.size();
    return mm;
}

std::vector<TranscriptTally> tally_corpus(const Corpus& gold, const std::vector<DetectionResult>& predicted,
                                          const MatchPolicy& policy, const SegmentLabeling* labeling) {
    std::unordered_map<std::string_view, const DetectionResult*> by_session;
    for (const auto& r : predicted) by_session.emplace(r.session_id, &r);

    std::vector<TranscriptTally> tallies(gold.size());
    for (std::size_t t = 0; t < gold.size(); ++t) {
        const auto& tr = gold[t];
        auto it = by_session.find(tr.session_id);
        const DetectionResult* result = it == by_session.end() ? nullptr : it->second;
        const TranscriptLabeling* tl = labeling ? labeling->find(tr.session_id) : nullptr;
        auto& tally = tallies[t];
        for (const auto& msg : tr.messages) {
            const MessageDetections* md = result ? result->find(msg.index) : nullptr;
            std::span<const Detection> preds;
            if (md) preds = md->detections;
            const auto mm = match_spans(msg.labels, preds, policy);
            tally.overall += mm.counts;

            std::vector<char> pred_matched(mm.predicted.size(), 0), gold_matched(mm.gold.size(), 0);
            for (auto [p, g] : mm.pairs) {
                pred_matched[p] = gold_matched[g] = 1;
                tally.by_type[index_of(mm.gold[g].type)].tp += 1;
            }
            for (std::size_t p = 0; p < mm.predicted.size(); ++p)
                if (!pred_matched[p]) tally.by_type[index_of(mm.predicted[p].type)].fp += 1;
            for (std::size_t g = 0; g < mm.gold.size(); ++g)
                if (!gold_matched[g]) tally.by_type[index_of(mm.gold[g].type)].fn += 1;

            if (tl && msg.index < tl->labels.size())
                tally.by_segment[static_cast<std::size_t>(tl->labels[msg.index])] += mm.counts;
        }
    }
    return tallies;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform draw in [0, n) by rejection on the raw engine output, so the
// sequence is identical across standard library implementations.
std::size_t bounded(std::mt19937_64& rng, std::size_t n) {
    const std::uint64_t un = n;
    const std::uint64_t threshold = (0 - un) % un;
    for (;;) {
        const std::uint64_t r = rng();
        if (r >= threshold) return static_cast<std::size_t>(r % un);
    }
}

}  // namespace

std::vector<std::size_t> bootstrap_sample(std::uint64_t seed, std::size_t iteration, std::size_t n) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(iteration)));
    std::vector<std::size_t> out(n);
    for (auto& v : out) v = bounded(rng, n);
    return out;
}

double nearest_rank(std::vector<double> values, unsigned per_mille) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    std::size_t rank = (static_cast<std::size_t>(per_mille) * n + 999) / 1000;
    rank = std::clamp<std::size_t>(rank, 1, n);
    return values[rank - 1];
}

MetricCIs bootstrap_ci(std::span<const TranscriptTally> tallies, const BootstrapOptions& options,
                       Counts (*pick)(const TranscriptTally&, std::size_t), std::size_t pick_arg) {
    MetricCIs out;
    for (auto* ci : {&out.precision, &out.recall, &out.f1}) {
        ci->iterations = options.iterations;
        ci->seed = options.seed;
    }
    if (tallies.empty() || options.iterations == 0) return out;

    const std::size_t n = tallies.size();
    std::vector<Counts> per(n);
    for (std::size_t i = 0; i < n; ++i) per[i] = pick(tallies[i], pick_arg);

    std::vector<double> p(options.iterations), r(options.iterations), f(options.iterations);
    parallel_for(options.iterations, options.threads, [&](std::size_t it) {
        Counts pooled;
        for (std::size_t idx : bootstrap_sample(options.seed, it, n)) pooled += per[idx];
        const auto m = MetricSet::from(pooled);
        p[it] = m.precision;
        r[it] = m.recall;
        f[it] = m.f1;
    });
    out.precision.lower = nearest_rank(p, 25);
    out.precision.upper = nearest_rank(p, 975);
    out.recall.lower = nearest_rank(r, 25);
    out.recall.upper = nearest_rank(r, 975);
    out.f1.lower = nearest_rank(f, 25);
    out.f1.upper = nearest_rank(f, 975);
    return out;
}

namespace {

Counts pick_overall(const TranscriptTally& t, std::size_t) { return t.overall; }
Counts pick_type(const TranscriptTally& t, std::size_t i) { return t.by_type[i]; }
Counts pick_segment(const TranscriptTally& t, std::size_t i) { return t.by_segment[i]; }

}  // namespace

EvalReport evaluate(const Corpus& gold, const std::vector<DetectionResult>& predicted, const EvaluateOptions& options) {
    if (options.segment_strata) {
        if (!options.segments) throw ValidationError("segment strata requested but no segment labeling supplied");
        if (!options.segments->covers(gold))
            throw ValidationError("segment labeling does not cover every transcript of the gold corpus");
    }
    EvalReport report;
    report.policy = options.policy;
    report.transcripts = gold.size();
    for (const auto& t : gold) report.messages += t.messages.size();
    std::set<std::string> engines;
    for (const auto& r : predicted) engines.insert(r.engine);
    for (const auto& e : engines) report.engine += (report.engine.empty() ? "" : "+") + e;

    const auto tallies =
        tally_corpus(gold, predicted, options.policy, options.segment_strata ? options.segments : nullptr);

    Counts overall;
    std::array<Counts, 17> types{};
    std::array<Counts, 2> segs{};
    for (const auto& t : tallies) {
        overall += t.overall;
        for (std::size_t i = 0; i < 17; ++i) types[i] += t.by_type[i];
        for (std::size_t i = 0; i < 2; ++i) segs[i] += t.by_segment[i];
    }
    report.overall.metrics = MetricSet::from(overall);
    report.bootstrap = options.bootstrap;
    if (options.bootstrap) report.overall.ci = bootstrap_ci(tallies, *options.bootstrap, pick_overall);

    for (std::size_t i = 0; i < 17; ++i) {
        if (types[i] == Counts{}) continue;
        StratumReport s;
        s.metrics = MetricSet::from(types[i]);
        if (options.bootstrap) s.ci = bootstrap_ci(tallies, *options.bootstrap, pick_type, i);
        report.by_type.emplace(kAllPiiTypes[i], s);
    }
    if (options.segment_strata) {
        std::map<SegmentLabel, StratumReport> by_seg;
        for (auto label : {SegmentLabel::NonMath, SegmentLabel::Math}) {
            const auto i = static_cast<std::size_t>(label);
            StratumReport s;
            s.metrics = MetricSet::from(segs[i]);
            if (options.bootstrap) s.ci = bootstrap_ci(tallies, *options.bootstrap, pick_segment, i);
            by_seg.emplace(label, s);
        }
        report.by_segment = std::move(by_seg);
    }
    return report;
}

namespace {

nlohmann::ordered_json ci_json(const BootstrapCI& ci) { return {{"lower", ci.lower}, {"upper", ci.upper}}; }

nlohmann::ordered_json stratum_json(const StratumReport& s) {
    nlohmann::ordered_json j;
    j["tp"] = s.metrics.tp;
    j["fp"] = s.metrics.fp;
    j["fn"] = s.metrics.fn;
    j["precision"] = s.metrics.precision;
    j["recall"] = s.metrics.recall;
    j["f1"] = s.metrics.f1;
    if (s.ci) {
        j["ci"] = {{"precision", ci_json(s.ci->precision)},
                   {"recall", ci_json(s.ci->recall)},
                   {"f1", ci_json(s.ci->f1)}};
    }
    return j;
}

StratumReport stratum_from_json(const nlohmann::json& j, const std::optional<BootstrapOptions>& boot) {
    StratumReport s;
    s.metrics = MetricSet::from(Counts{j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(),
                                       j.at("fn").get<std::size_t>()});
    if (j.contains("ci")) {
        MetricCIs c;
        const auto& cis = j.at("ci");
        auto read = [&](const char* key, BootstrapCI& ci) {
            ci.lower = cis.at(key).at("lower").get<double>();
            ci.upper = cis.at(key).at("upper").get<double>();
            if (boot) {
                ci.iterations = boot->iterations;
                ci.seed = boot->seed;
            }
        };
        read("precision", c.precision);
        read("recall", c.recall);
        read("f1", c.f1);
        s.ci = c;
    }
    return s;
}

}  // namespace

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["engine"] = report.engine;
    j["match_policy"] = {{"mode", to_string(report.policy.mode)}, {"normalization", "casefold+trim"}};
    j["transcripts"] = report.transcripts;
    j["messages"] = report.messages;
    if (report.bootstrap)
        j["bootstrap"] = {{"iterations", report.bootstrap->iterations}, {"seed", report.bootstrap->seed},
                          {"percentiles", {2.5, 97.5}}, {"method", "nearest-rank"}};
    j["overall"] = stratum_json(report.overall);
    auto& types = j["by_type"] = nlohmann::ordered_json::object();
    for (const auto& [type, s] : report.by_type) types[std::string(to_string(type))] = stratum_json(s);
    if (report.by_segment) {
        auto& segs = j["by_segment"] = nlohmann::ordered_json::object();
        for (auto label : {SegmentLabel::NonMath, SegmentLabel::Math})
            segs[std::string(to_string(label))] = stratum_json(report.by_segment->at(label));
    }
    return nlohmann::json::parse(j.dump());
}

EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport r;
    try {
        r.engine = j.value("engine", std::string());
        r.policy.mode = parse_match_mode(j.at("match_policy").at("mode").get<std::string>());
        r.transcripts = j.value("transcripts", std::size_t{0});
        r.messages = j.value("messages", std::size_t{0});
        if (j.contains("bootstrap")) {
            BootstrapOptions b;
            const auto& boot = j.at("bootstrap");
            b.iterations = boot.at("iterations").get<std::size_t>();
            b.seed = boot.at("seed").get<std::uint64_t>();
            r.bootstrap = b;
        }
        r.overall = stratum_from_json(j.at("overall"), r.bootstrap);
        const auto by_type = j.value("by_type", nlohmann::json::object());
        for (const auto& [key, value] : by_type.items())
            r.by_type.emplace(parse_pii_type(key), stratum_from_json(value, r.bootstrap));
        if (j.contains("by_segment")) {
            std::map<SegmentLabel, StratumReport> segs;
            for (const auto& [key, value] : j.at("by_segment").items())
                segs.emplace(parse_segment_label(key), stratum_from_json(value, r.bootstrap));
            r.by_segment = std::move(segs);
        }
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception& e) {
        throw ValidationError(std::string("malformed evaluation report: ") + e.what());
    }
    return r;
}

void write_strata_csv(const EvalReport& report, std::ostream& out) {
    out << "stratum,key,tp,fp,fn,precision,recall,f1,p_lo,p_hi,r_lo,r_hi,f1_lo,f1_hi\n";
    auto row = [&](std::string_view stratum, std::string_view key, const StratumReport& s) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.6f,%.6f,%.6f", s.metrics.tp, s.metrics.fp, s.metrics.fn,
                      s.metrics.precision, s.metrics.recall, s.metrics.f1);
        out << stratum << ',' << key << ',' << buf;
        if (s.ci) {
            std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", s.ci->precision.lower,
                          s.ci->precision.upper, s.ci->recall.lower, s.ci->recall.upper, s.ci->f1.lower,
                          s.ci->f1.upper);
            out << buf;
        } else {
            out << ",,,,,,";
        }
        out << '\n';
    };
    row("overall", "ALL", report.overall);
    for (const auto& [type, s] : report.by_type) row("type", to_string(type), s);
    if (report.by_segment)
        for (auto label : {SegmentLabel::NonMath, SegmentLabel::Math})
            row("segment", to_string(label), report.by_segment->at(label));
}

}  // namespace mathpii
