#include "mathpii/segmentation.hpp"

#include "mathpii/errors.hpp"
#include "mathpii/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <optional>

namespace mathpii {

std::string_view to_string(SegmentLabel label) { return label == SegmentLabel::Math ? "MATH" : "NON-MATH"; }

SegmentLabel parse_segment_label(std::string_view text) {
    if (text == "MATH") return SegmentLabel::Math;
    if (text == "NON-MATH") return SegmentLabel::NonMath;
    throw ValidationError("unknown segment label '" + std::string(text) + "'");
}

void SegmentLabeling::add(TranscriptLabeling labeling) {
    if (index_.count(labeling.session_id))
        throw ValidationError("duplicate labeling for session '" + labeling.session_id + "'");
    index_.emplace(labeling.session_id, transcripts_.size());
    transcripts_.push_back(std::move(labeling));
}

const TranscriptLabeling* SegmentLabeling::find(std::string_view session_id) const {
    auto it = index_.find(std::string(session_id));
    return it == index_.end() ? nullptr : &transcripts_[it->second];
}

SegmentLabel SegmentLabeling::label(std::string_view session_id, std::size_t message_index) const {
    const auto* t = find(session_id);
    if (!t) throw ValidationError("no segment labels for session '" + std::string(session_id) + "'");
    if (message_index >= t->labels.size())
        throw ValidationError("no segment label for session '" + std::string(session_id) + "' message " +
                              std::to_string(message_index));
    return t->labels[message_index];
}

bool SegmentLabeling::covers(const Corpus& corpus) const {
    return std::all_of(corpus.begin(), corpus.end(), [&](const Transcript& t) {
        const auto* l = find(t.session_id);
        return l && l->labels.size() == t.messages.size();
    });
}

std::vector<double> message_densities(const Transcript& transcript, const MathVocabulary& vocab) {
    std::vector<double> out;
    out.reserve(transcript.messages.size());
    for (const auto& m : transcript.messages) out.push_back(math_density(m.text, vocab).value);
    return out;
}

std::vector<std::size_t> anchors_from_densities(std::span<const double> densities, double anchor_threshold) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < densities.size(); ++i)
        if (densities[i] >= anchor_threshold) out.push_back(i);
    return out;
}

std::vector<std::size_t> find_anchors(const Transcript& transcript, const MathVocabulary& vocab,
                                      const Thresholds& thresholds) {
    const auto d = message_densities(transcript, vocab);
    return anchors_from_densities(d, thresholds.anchor);
}

namespace {

class Centroid {
public:
    explicit Centroid(const Embedding& first) : sum_(first.begin(), first.end()), count_(1) {}

    void add(const Embedding& v) {
        if (v.size() > sum_.size()) sum_.resize(v.size(), 0.0);
        for (std::size_t i = 0; i < v.size(); ++i) sum_[i] += v[i];
        ++count_;
    }

    double similarity(const Embedding& v) const {
        Embedding mean = value();
        return cosine(mean, v);
    }

    Embedding value() const {
        Embedding out(sum_.size());
        for (std::size_t i = 0; i < sum_.size(); ++i) out[i] = static_cast<float>(sum_[i] / count_);
        return out;
    }

private:
    std::vector<double> sum_;
    std::size_t count_;
};

}  // namespace

Segment expand_segment(std::string_view transcript_id, std::size_t message_count, std::size_t anchor_index,
                       double similarity_threshold, const EmbeddingLookup& embedding_at) {
    if (anchor_index >= message_count)
        throw ValidationError("anchor index " + std::to_string(anchor_index) + " outside transcript '" +
                              std::string(transcript_id) + "'");
    Centroid centroid(embedding_at(anchor_index));
    std::size_t lo = anchor_index;
    std::size_t hi = anchor_index;
    bool forward = hi + 1 < message_count;
    bool backward = lo > 0;

    auto try_join = [&](std::size_t candidate) {
        const auto& e = embedding_at(candidate);
        if (centroid.similarity(e) >= similarity_threshold) {
            centroid.add(e);
            return true;
        }
        return false;
    };

    while (forward || backward) {
        if (forward) {
            if (try_join(hi + 1)) {
                ++hi;
                forward = hi + 1 < message_count;
            } else {
                forward = false;
            }
        }
        if (backward) {
            if (try_join(lo - 1)) {
                --lo;
                backward = lo > 0;
            } else {
                backward = false;
            }
        }
    }

    Segment seg;
    seg.transcript_id = std::string(transcript_id);
    seg.anchor_index = anchor_index;
    seg.start_index = lo;
    seg.end_index = hi;
    seg.centroid = centroid.value();
    seg.anchors = {anchor_index};
    return seg;
}

namespace {

EmbeddingLookup lazy_lookup(const Transcript& transcript, const EmbeddingProvider& embedder,
                            std::vector<std::optional<Embedding>>& slots) {
    slots.assign(transcript.messages.size(), std::nullopt);
    return [&transcript, &embedder, &slots](std::size_t i) -> const Embedding& {
        auto& slot = slots.at(i);
        if (!slot) {
            try {
                slot = embedder.embed(transcript.messages[i].text);
            } catch (const std::exception& e) {
                throw std::runtime_error("embedding failed for session '" + transcript.session_id + "' message " +
                                         std::to_string(i) + ": " + e.what());
            }
        }
        return *slot;
    };
}

}  // namespace

Segment expand_segment(const Transcript& transcript, std::size_t anchor_index, const Thresholds& thresholds,
                       const EmbeddingProvider& embedder) {
    std::vector<std::optional<Embedding>> slots;
    const auto lookup = lazy_lookup(transcript, embedder, slots);
    return expand_segment(transcript.session_id, transcript.messages.size(), anchor_index, thresholds.similarity,
                          lookup);
}

TranscriptLabeling label_transcript(const Transcript& transcript, std::span<const double> densities,
                                    const Thresholds& thresholds, const EmbeddingLookup& embedding_at) {
    const auto n = transcript.messages.size();
    TranscriptLabeling out;
    out.session_id = transcript.session_id;
    out.labels.assign(n, SegmentLabel::NonMath);

    std::vector<Segment> raw;
    std::vector<bool> covered(n, false);
    const auto anchors = anchors_from_densities(densities, thresholds.anchor);
    for (auto a : anchors) {
        if (covered[a]) continue;
        auto seg = expand_segment(transcript.session_id, n, a, thresholds.similarity, embedding_at);
        for (auto i = seg.start_index; i <= seg.end_index; ++i) covered[i] = true;
        raw.push_back(std::move(seg));
    }

    std::sort(raw.begin(), raw.end(),
              [](const Segment& x, const Segment& y) { return x.start_index < y.start_index; });
    std::vector<Segment> merged;
    for (auto& seg : raw) {
        if (!merged.empty() && seg.start_index <= merged.back().end_index + 1) {
            auto& cur = merged.back();
            cur.end_index = std::max(cur.end_index, seg.end_index);
            cur.anchor_index = std::min(cur.anchor_index, seg.anchor_index);
            continue;
        }
        merged.push_back(std::move(seg));
    }

    for (auto& seg : merged) {
        seg.anchors.clear();
        for (auto a : anchors)
            if (seg.contains(a)) seg.anchors.push_back(a);
        Centroid c(embedding_at(seg.start_index));
        for (auto i = seg.start_index + 1; i <= seg.end_index; ++i) c.add(embedding_at(i));
        seg.centroid = c.value();
        for (auto i = seg.start_index; i <= seg.end_index; ++i) out.labels[i] = SegmentLabel::Math;
    }
    out.segments = std::move(merged);
    return out;
}

TranscriptLabeling label_transcript(const Transcript& transcript, const MathVocabulary& vocab,
                                    const Thresholds& thresholds, const EmbeddingProvider& embedder) {
    const auto densities = message_densities(transcript, vocab);
    std::vector<std::optional<Embedding>> slots;
    const auto lookup = lazy_lookup(transcript, embedder, slots);
    return label_transcript(transcript, densities, thresholds, lookup);
}

SegmentLabeling label_corpus(const Corpus& corpus, const MathVocabulary& vocab, const Thresholds& thresholds,
                             const EmbeddingProvider& embedder, unsigned threads) {
    std::vector<TranscriptLabeling> parts(corpus.size());
    parallel_for(corpus.size(), threads,
                 [&](std::size_t i) { parts[i] = label_transcript(corpus[i], vocab, thresholds, embedder); });
    SegmentLabeling out;
    for (auto& p : parts) out.add(std::move(p));
    return out;
}

TranscriptFeatures compute_features(const Transcript& transcript, const MathVocabulary& vocab,
                                    const EmbeddingProvider& embedder) {
    TranscriptFeatures f;
    f.densities = message_densities(transcript, vocab);
    f.embeddings.reserve(transcript.messages.size());
    for (const auto& m : transcript.messages) {
        try {
            f.embeddings.push_back(embedder.embed(m.text));
        } catch (const std::exception& e) {
            throw std::runtime_error("embedding failed for session '" + transcript.session_id + "' message " +
                                     std::to_string(m.index) + ": " + e.what());
        }
    }
    return f;
}

void write_labeling(const SegmentLabeling& labeling, std::ostream& out) {
    for (const auto& t : labeling.transcripts()) {
        nlohmann::ordered_json j;
        j["session_id"] = t.session_id;
        auto& labels = j["labels"] = nlohmann::ordered_json::array();
        for (auto l : t.labels) labels.push_back(to_string(l));
        out << j.dump() << '\n';
    }
}

void write_labeling(const SegmentLabeling& labeling, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write labeling '" + path.string() + "'");
    write_labeling(labeling, out);
}

SegmentLabeling load_labeling(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open segment labels '" + path.string() + "'");
    SegmentLabeling out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            TranscriptLabeling t;
            t.session_id = j.at("session_id").get<std::string>();
            for (const auto& l : j.at("labels")) t.labels.push_back(parse_segment_label(l.get<std::string>()));
            out.add(std::move(t));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace mathpii
