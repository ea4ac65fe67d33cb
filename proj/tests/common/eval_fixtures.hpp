#pragma once

// Small random gold/prediction fixtures for the metric and bootstrap tests.

#include "mathpii/corpus.hpp"
#include "mathpii/detection.hpp"
#include "mathpii/segmentation.hpp"

#include <random>
#include <string>
#include <vector>

namespace testsupport {

struct EvalFixture {
    mathpii::Corpus gold;
    std::vector<mathpii::DetectionResult> predicted;
    mathpii::SegmentLabeling labeling;
};

// Messages are sequences of tokens from a tiny alphabet so that duplicates,
// case variants and overlaps all occur often.
inline EvalFixture random_eval_fixture(std::mt19937_64& rng, std::size_t transcripts, std::size_t max_messages,
                                       bool with_offsets) {
    static const std::vector<std::string> toks = {"Ana", "ana", "Bo", "12", "4/12", "Lee", "x", "PS 1"};
    static const std::vector<mathpii::PiiType> types = {mathpii::PiiType::Person, mathpii::PiiType::Date,
                                                        mathpii::PiiType::School};
    EvalFixture f;
    for (std::size_t t = 0; t < transcripts; ++t) {
        mathpii::Transcript tr;
        tr.session_id = "t" + std::to_string(t);
        mathpii::DetectionResult res;
        res.session_id = tr.session_id;
        res.engine = "fixture";
        mathpii::TranscriptLabeling tl;
        tl.session_id = tr.session_id;
        const auto n = 1 + rng() % max_messages;
        for (std::size_t i = 0; i < n; ++i) {
            mathpii::Message m;
            m.index = i;
            m.role = "S";
            std::vector<std::pair<std::size_t, std::size_t>> tok_ranges;
            const auto k = 1 + rng() % 5;
            for (std::size_t j = 0; j < k; ++j) {
                if (!m.text.empty()) m.text += ' ';
                const auto& w = toks[rng() % toks.size()];
                tok_ranges.emplace_back(m.text.size(), m.text.size() + w.size());
                m.text += w;
            }
            mathpii::MessageDetections md;
            md.index = i;
            for (const auto& [b, e] : tok_ranges) {
                const auto type = types[rng() % types.size()];
                if (rng() % 2)
                    m.labels.push_back(mathpii::PiiSpan{b, e, m.text.substr(b, e - b), type,
                                                        mathpii::Provenance::Upstream});
                const auto r = rng() % 4;
                if (r == 0) continue;
                mathpii::Detection d;
                d.type = r == 3 ? types[rng() % types.size()] : type;
                // Predictions sometimes widen by one character to the left to
                // exercise overlap matching.
                const auto pb = (rng() % 3 == 0 && b > 0) ? b - 1 : b;
                d.text = m.text.substr(pb, e - pb);
                if (rng() % 5 == 0) d.text = d.text + " ";
                if (with_offsets && rng() % 4) {
                    d.start = pb;
                    d.end = e;
                }
                md.detections.push_back(d);
            }
            tl.labels.push_back(rng() % 2 ? mathpii::SegmentLabel::Math : mathpii::SegmentLabel::NonMath);
            res.messages.push_back(std::move(md));
            tr.messages.push_back(std::move(m));
        }
        mathpii::validate_transcript(tr);
        f.gold.push_back(std::move(tr));
        f.predicted.push_back(std::move(res));
        f.labeling.add(std::move(tl));
    }
    return f;
}

}  // namespace testsupport
