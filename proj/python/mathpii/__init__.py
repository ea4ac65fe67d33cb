"""PII de-identification engine for math tutoring transcripts."""

import json

try:
    from . import _mathpii
except ImportError:  # build tree: the extension sits next to, not inside, the package
    import _mathpii

from ._labeling import parse_labeling

ValidationError = _mathpii.ValidationError
ConfigError = _mathpii.ConfigError
IoError = _mathpii.IoError

tokenize = _mathpii.tokenize
math_density = _mathpii.math_density
harmonic_objective = _mathpii.harmonic_objective
parse_detections = _mathpii.parse_detections
detect_baseline = _mathpii.detect_baseline


def label_corpus(corpus_path, t_anchor=0.05, t_sim=0.3, embedder=None, dimension=256):
    """Return {session_id: ["MATH" | "NON-MATH", ...]} for a corpus JSONL file.

    `embedder` is any callable mapping a string to `dimension` floats, for
    example a sentence-transformers model's `encode`. Without one, the
    deterministic hashed term-frequency embedder is used.
    """
    text = _mathpii.label_corpus(str(corpus_path), t_anchor, t_sim, embedder, dimension)
    return parse_labeling(text)


def evaluate(gold_path, pred_path, segments_path=None, match="text", iterations=1000, seed=20240601):
    """Score a detection results file against gold labels; returns the report dict."""
    segments = None if segments_path is None else str(segments_path)
    return json.loads(_mathpii.evaluate(str(gold_path), str(pred_path), segments, match, iterations, seed))


def sentence_transformer_embedder(model_name="all-MiniLM-L6-v2"):
    """Return (embed, dimension) backed by a sentence-transformers model."""
    from sentence_transformers import SentenceTransformer

    model = SentenceTransformer(model_name)

    def embed(text):
        return model.encode(text, normalize_embeddings=True).tolist()

    return embed, model.get_sentence_embedding_dimension()


__all__ = [
    "ConfigError",
    "IoError",
    "ValidationError",
    "detect_baseline",
    "evaluate",
    "harmonic_objective",
    "label_corpus",
    "math_density",
    "parse_detections",
    "parse_labeling",
    "sentence_transformer_embedder",
    "tokenize",
]
