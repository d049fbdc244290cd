"""Two-stage averaged structured perceptron for emerging-entity tagging.

Stage 1 labels tokens with B/I/O to find entity spans; stage 2 labels the
span sequence of a sentence with entity classes. Both stages share the same
trainer and Viterbi decoder; BIO well-formedness is enforced by transition
constraints in the decoder rather than repaired afterwards.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from emergent.corpus import Sentence
from emergent.kernels import viterbi_decode
from emergent.pgt import NERC_CLASSES, TaggedSentence, validate_bio

STAGE1_LABELS = ("O", "B", "I")
STAGE2_LABELS = tuple(sorted(NERC_CLASSES))


@dataclass
class PerceptronModel:
    """Averaged weights of one labeling stage."""

    labels: tuple[str, ...]
    feature_weights: dict[str, np.ndarray]
    start: np.ndarray
    transitions: np.ndarray
    allowed_start: np.ndarray
    allowed: np.ndarray
    epochs_trained: int = 0
    seed: int = 0

    def decode(self, features: Sequence[Sequence[str]]) -> list[int]:
        n = len(features)
        emissions = np.zeros((n, len(self.labels)))
        for i, feats in enumerate(features):
            for f in feats:
                row = self.feature_weights.get(f)
                if row is not None:
                    emissions[i] += row
        return viterbi_decode(emissions, self.start, self.transitions,
                              self.allowed_start, self.allowed)


@dataclass(frozen=True)
class Prediction:
    spans: tuple[tuple[tuple[int, int], str], ...]


@dataclass
class TwoStageTagger:
    span_stage: PerceptronModel
    class_stage: PerceptronModel
    epochs_trained: int
    seed: int


def word_shape(token: str) -> str:
    """Collapsed X/x/d/p signature: "Kendrick" -> "Xx", "A$AP" -> "XpX"."""
    shape = []
    for ch in token:
        if ch.isupper():
            code = "X"
        elif ch.islower():
            code = "x"
        elif ch.isdigit():
            code = "d"
        else:
            code = "p"
        if not shape or shape[-1] != code:
            shape.append(code)
    return "".join(shape)


def token_features(tokens: Sequence[str], i: int) -> list[str]:
    w = tokens[i]
    cf = w.casefold()
    feats = [
        "w=" + w,
        "lw=" + cf,
        "shape=" + word_shape(w),
        "pre=" + cf[:3],
        "suf=" + cf[-3:],
        "prev=" + (tokens[i - 1].casefold() if i > 0 else "<s>"),
        "next=" + (tokens[i + 1].casefold() if i + 1 < len(tokens) else "</s>"),
    ]
    if w[:1].isupper():
        feats.append("cap")
    if i == 0:
        feats.append("first")
    if i > 0 and tokens[i - 1][:1].isupper():
        feats.append("pcap")
    if i + 1 < len(tokens) and tokens[i + 1][:1].isupper():
        feats.append("ncap")
    return feats


def span_features(tokens: Sequence[str], start: int, end: int) -> list[str]:
    words = tokens[start:end]
    return [
        "span=" + " ".join(w.casefold() for w in words),
        "head=" + words[0].casefold(),
        "tail=" + words[-1].casefold(),
        "shape=" + "_".join(word_shape(w) for w in words),
        "len=" + str(min(end - start, 5)),
        "prev=" + (tokens[start - 1].casefold() if start > 0 else "<s>"),
        "next=" + (tokens[end].casefold() if end < len(tokens) else "</s>"),
    ]


def spans_from_bio(labels: Sequence[str]) -> list[tuple[int, int]]:
    """[start, end) token ranges of B/I(-X) spans."""
    spans = []
    start = None
    for i, label in enumerate(labels):
        tag = label.split("-", 1)[0]
        if tag == "B":
            if start is not None:
                spans.append((start, i))
            start = i
        elif tag == "I":
            continue
        else:
            if start is not None:
                spans.append((start, i))
                start = None
    if start is not None:
        spans.append((start, len(labels)))
    return spans


def _bio_masks() -> tuple[np.ndarray, np.ndarray]:
    # I may not open a sentence and may not follow O
    allowed_start = np.array([1, 1, 0], dtype=np.uint8)
    allowed = np.ones((3, 3), dtype=np.uint8)
    allowed[STAGE1_LABELS.index("O"), STAGE1_LABELS.index("I")] = 0
    return allowed_start, allowed


def _new_model(labels: tuple[str, ...], allowed_start, allowed, seed: int) -> PerceptronModel:
    k = len(labels)
    return PerceptronModel(labels, {}, np.zeros(k), np.zeros((k, k)),
                           allowed_start, allowed, seed=seed)


class _AveragedTrainer:
    """Online perceptron with lazily accumulated weight averages.

    A tick is one training example; the averaged weight of a feature is the
    mean of its weight value after every tick.
    """

    def __init__(self, model: PerceptronModel):
        self.model = model
        self.k = len(model.labels)
        self.acc: dict[str, np.ndarray] = {}
        self.stamp: dict[str, int] = {}
        self.acc_start = np.zeros(self.k)
        self.acc_trans = np.zeros((self.k, self.k))
        self.stamp_dense = 0
        self.tick = 0

    def _row(self, feature: str) -> np.ndarray:
        row = self.model.feature_weights.get(feature)
        if row is None:
            row = np.zeros(self.k)
            self.model.feature_weights[feature] = row
            self.acc[feature] = np.zeros(self.k)
            self.stamp[feature] = self.tick - 1
        else:
            self.acc[feature] += (self.tick - 1 - self.stamp[feature]) * row
            self.stamp[feature] = self.tick - 1
        return row

    def _flush_dense(self):
        steps = self.tick - 1 - self.stamp_dense
        if steps > 0:
            self.acc_start += steps * self.model.start
            self.acc_trans += steps * self.model.transitions
        self.stamp_dense = self.tick - 1

    def observe(self, features: Sequence[Sequence[str]], gold: Sequence[int]) -> bool:
        """Process one example; returns True when an update was made."""
        self.tick += 1
        pred = self.model.decode(features)
        if list(pred) == list(gold):
            return False
        touched: set[str] = set()
        for i, feats in enumerate(features):
            if pred[i] == gold[i]:
                continue
            for f in feats:
                if f not in touched:
                    row = self._row(f)
                    touched.add(f)
                else:
                    row = self.model.feature_weights[f]
                row[gold[i]] += 1.0
                row[pred[i]] -= 1.0
        self._flush_dense()
        if gold[0] != pred[0]:
            self.model.start[gold[0]] += 1.0
            self.model.start[pred[0]] -= 1.0
        for i in range(1, len(gold)):
            if (gold[i - 1], gold[i]) != (pred[i - 1], pred[i]):
                self.model.transitions[gold[i - 1], gold[i]] += 1.0
                self.model.transitions[pred[i - 1], pred[i]] -= 1.0
        return True

    def finalize(self) -> PerceptronModel:
        """Replace weights with their per-tick averages."""
        total = self.tick
        if total == 0:
            return self.model
        for f, row in self.model.feature_weights.items():
            self.acc[f] += (total - self.stamp[f]) * row
        steps = total - self.stamp_dense
        self.acc_start += steps * self.model.start
        self.acc_trans += steps * self.model.transitions
        averaged = {f: self.acc[f] / total for f in self.model.feature_weights}
        averaged = {f: row for f, row in sorted(averaged.items()) if np.any(row)}
        self.model.feature_weights = averaged
        self.model.start = self.acc_start / total
        self.model.transitions = self.acc_trans / total
        return self.model


def train(corpus: Sequence[TaggedSentence], epochs: int = 10, seed: int = 1) -> TwoStageTagger:
    """Train span and class stages on BIO pseudo-ground truth.

    Training is deterministic: the corpus is reshuffled each epoch by a
    single generator seeded with ``seed``, so identical inputs give
    bit-identical weights. The class stage trains on gold spans.
    """
    if not corpus:
        raise ValueError("training corpus is empty")
    for s in corpus:
        validate_bio(s.labels)

    allowed_start, allowed = _bio_masks()
    stage1 = _AveragedTrainer(_new_model(STAGE1_LABELS, allowed_start, allowed, seed))
    k2 = len(STAGE2_LABELS)
    stage2 = _AveragedTrainer(_new_model(
        STAGE2_LABELS, np.ones(k2, dtype=np.uint8), np.ones((k2, k2), dtype=np.uint8), seed))

    span_data = []
    class_data = []
    for s in corpus:
        feats = [token_features(s.tokens, i) for i in range(len(s.tokens))]
        gold1 = [STAGE1_LABELS.index(l.split("-", 1)[0]) for l in s.labels]
        span_data.append((feats, gold1))
        # classless spans (bare B/I labels) still train the span stage
        classed = [(a, b) for a, b in spans_from_bio(s.labels) if "-" in s.labels[a]]
        if classed:
            sfeats = [span_features(s.tokens, a, b) for a, b in classed]
            gold2 = [STAGE2_LABELS.index(s.labels[a].split("-", 1)[1]) for a, b in classed]
            class_data.append((sfeats, gold2))

    rng = random.Random(seed)
    order1 = list(range(len(span_data)))
    order2 = list(range(len(class_data)))
    for _ in range(epochs):
        rng.shuffle(order1)
        for idx in order1:
            stage1.observe(*span_data[idx])
        rng.shuffle(order2)
        for idx in order2:
            stage2.observe(*class_data[idx])

    m1 = stage1.finalize()
    m2 = stage2.finalize()
    m1.epochs_trained = m2.epochs_trained = epochs
    return TwoStageTagger(m1, m2, epochs, seed)


def _tokens_of(sentence) -> tuple[str, ...]:
    if isinstance(sentence, Sentence):
        return sentence.texts
    if isinstance(sentence, TaggedSentence):
        return sentence.tokens
    return tuple(sentence)


def predict(model: TwoStageTagger, sentence) -> Prediction:
    """Decode entity spans and classify each one.

    Accepts a Sentence, a TaggedSentence, or a plain token sequence. An
    all-zero (untrained) model predicts no spans.
    """
    tokens = _tokens_of(sentence)
    if not tokens:
        return Prediction(())
    feats = [token_features(tokens, i) for i in range(len(tokens))]
    path = model.span_stage.decode(feats)
    labels = [STAGE1_LABELS[i] for i in path]
    spans = spans_from_bio(labels)
    if not spans:
        return Prediction(())
    sfeats = [span_features(tokens, a, b) for a, b in spans]
    classes = [STAGE2_LABELS[i] for i in model.class_stage.decode(sfeats)]
    return Prediction(tuple(((a, b), cls) for (a, b), cls in zip(spans, classes)))


def predict_labels(model: TwoStageTagger, sentence) -> list[str]:
    """Full BIO-with-class label sequence for one sentence."""
    tokens = _tokens_of(sentence)
    labels = ["O"] * len(tokens)
    for (a, b), cls in predict(model, sentence).spans:
        for i in range(a, b):
            labels[i] = ("B-" if i == a else "I-") + cls
    return labels


# ---------------------------------------------------------------------------
# persistence: versioned JSON weight tables with stable key order

def _stage_payload(m: PerceptronModel) -> dict:
    return {
        "labels": list(m.labels),
        "start": m.start.tolist(),
        "transitions": m.transitions.tolist(),
        "allowed_start": m.allowed_start.astype(int).tolist(),
        "allowed": m.allowed.astype(int).tolist(),
        "features": {f: row.tolist() for f, row in sorted(m.feature_weights.items())},
    }


def _stage_from_payload(obj: dict, seed: int, epochs: int) -> PerceptronModel:
    return PerceptronModel(
        tuple(obj["labels"]),
        {f: np.array(row, dtype=np.float64) for f, row in obj["features"].items()},
        np.array(obj["start"], dtype=np.float64),
        np.array(obj["transitions"], dtype=np.float64),
        np.array(obj["allowed_start"], dtype=np.uint8),
        np.array(obj["allowed"], dtype=np.uint8),
        epochs_trained=epochs,
        seed=seed,
    )


def dumps_model(model: TwoStageTagger) -> str:
    payload = {
        "format": 1,
        "epochs_trained": model.epochs_trained,
        "seed": model.seed,
        "span_stage": _stage_payload(model.span_stage),
        "class_stage": _stage_payload(model.class_stage),
    }
    return json.dumps(payload, sort_keys=True) + "\n"


def save_model(model: TwoStageTagger, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(model))


def load_model(path) -> TwoStageTagger:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != 1:
        raise ValueError(f"unsupported model format in {path}")
    seed = payload["seed"]
    epochs = payload["epochs_trained"]
    return TwoStageTagger(
        _stage_from_payload(payload["span_stage"], seed, epochs),
        _stage_from_payload(payload["class_stage"], seed, epochs),
        epochs, seed)
