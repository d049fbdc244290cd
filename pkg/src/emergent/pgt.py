"""Pseudo-ground truth: BIO conversion and the two sampling procedures.

Linked sentences become BIO training material; documents are scored for
textual quality and binned noisy/normal/nice around the score mean, and
links below a confidence threshold are dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from emergent.corpus import Document, Sentence
from emergent.lexicon import Entity, Lexicon
from emergent.linker import EntityLink

NERC_CLASSES = ("PER", "LOC", "ORG")
BINS = ("noisy", "normal", "nice")

_PERSONAL = {"i", "me", "my", "we", "us", "our", "mine", "ours"}

# canonical feature order for score vectors
FEATURE_NAMES = ("n_mentions", "n_hashtags", "n_urls", "ratio_upper",
                 "ratio_nonalpha", "avg_token_len", "tweet_len", "density",
                 "personal")


@dataclass(frozen=True)
class TaggedSentence:
    tokens: tuple[str, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.labels):
            raise ValueError("labels and tokens must have equal length")


def validate_bio(labels: Sequence[str]) -> None:
    """Raise ValueError unless the label sequence is BIO well-formed."""
    prev = "O"
    for i, label in enumerate(labels):
        if label == "O":
            prev = label
            continue
        if "-" in label:
            tag, cls = label.split("-", 1)
        else:
            tag, cls = label, ""
        if tag not in ("B", "I") or (cls and cls not in NERC_CLASSES):
            raise ValueError(f"unknown label {label!r} at position {i}")
        if tag == "I":
            prev_cls = prev.split("-", 1)[1] if "-" in prev else ""
            if prev == "O" or prev_cls != cls:
                raise ValueError(f"I label at position {i} does not continue a span")
        prev = label


def is_well_formed(labels: Sequence[str]) -> bool:
    try:
        validate_bio(labels)
    except ValueError:
        return False
    return True


def entity_class(entity: Entity) -> str | None:
    """The NERC class used for tagging; None when the entity has no PER/LOC/ORG class."""
    for cls in NERC_CLASSES:
        if cls in entity.classes:
            return cls
    return None


def to_bio(sentence: Sentence, links: Sequence[EntityLink], lex: Lexicon) -> TaggedSentence:
    """Label the sentence tokens with B-X/I-X over link spans, O elsewhere.

    Links to entities without a PER/LOC/ORG class are dropped. Overlapping
    links are a programming error upstream.
    """
    tokens = sentence.texts
    labels = ["O"] * len(tokens)
    for link in sorted(links, key=lambda l: l.start):
        if not (0 <= link.start < link.end <= len(tokens)):
            raise ValueError(f"link span [{link.start},{link.end}) out of bounds")
        cls = entity_class(lex.entities[link.entity_id])
        if cls is None:
            continue
        for i in range(link.start, link.end):
            if labels[i] != "O":
                raise ValueError("overlapping links")
            labels[i] = f"B-{cls}" if i == link.start else f"I-{cls}"
    return TaggedSentence(tuple(tokens), tuple(labels))


@dataclass(frozen=True)
class QualityFeatures:
    n_mentions: int
    n_hashtags: int
    n_urls: int
    ratio_upper: float
    ratio_nonalpha: float
    avg_token_len: float
    tweet_len: int
    density: float
    personal: int

    def as_vector(self) -> tuple[float, ...]:
        return tuple(float(getattr(self, name)) for name in FEATURE_NAMES)


def quality_features(doc: Document | str) -> QualityFeatures:
    """Textual-quality features of a document, over whitespace tokens."""
    text = doc.text if isinstance(doc, Document) else doc
    words = text.split()
    alpha = sum(1 for c in text if c.isalpha())
    upper = sum(1 for c in text if c.isupper())
    nonalpha = sum(1 for c in text if not c.isalnum() and not c.isspace())
    return QualityFeatures(
        n_mentions=sum(1 for w in words if w.startswith("@")),
        n_hashtags=sum(1 for w in words if w.startswith("#")),
        n_urls=sum(1 for w in words if w.startswith(("http://", "https://"))),
        ratio_upper=upper / alpha if alpha else 0.0,
        ratio_nonalpha=nonalpha / len(text) if text else 0.0,
        avg_token_len=sum(len(w) for w in words) / len(words) if words else 0.0,
        tweet_len=len(text),
        density=len(set(words)) / len(words) if words else 0.0,
        personal=int(any(w.casefold() in _PERSONAL for w in words)),
    )


def quality_score(features: QualityFeatures, running_max: Sequence[float]) -> float:
    """Mean of per-feature values normalized by the maxima seen so far.

    A feature whose maximum is 0 contributes 0.
    """
    vec = features.as_vector()
    if len(running_max) != len(vec):
        raise ValueError("running_max must cover all features")
    total = 0.0
    for value, peak in zip(vec, running_max):
        if peak < value:
            raise ValueError("running_max below feature value; update maxima first")
        if peak > 0:
            total += value / peak
    return total / len(vec)


def score_stream(features: Sequence[QualityFeatures], streaming: bool = False) -> list[float]:
    """Quality scores for a document stream.

    Batch mode (default) normalizes by global maxima for reproducibility;
    streaming mode updates the running maxima document by document, in
    stream order, before scoring each document.
    """
    if streaming:
        maxima = [0.0] * len(FEATURE_NAMES)
        scores = []
        for f in features:
            maxima = [max(m, v) for m, v in zip(maxima, f.as_vector())]
            scores.append(quality_score(f, maxima))
        return scores
    maxima = [0.0] * len(FEATURE_NAMES)
    for f in features:
        maxima = [max(m, v) for m, v in zip(maxima, f.as_vector())]
    return [quality_score(f, maxima) for f in features]


def bin_documents(scores: Sequence[float]) -> list[str]:
    """Trichotomy around the score mean: outside one standard deviation is
    noisy (left) or nice (right), inside is normal."""
    if len(scores) == 0:
        raise ValueError("no scores to bin")
    mean = sum(scores) / len(scores)
    sigma = math.sqrt(sum((s - mean) ** 2 for s in scores) / len(scores))
    if sigma == 0:
        return ["normal"] * len(scores)
    bins = []
    for s in scores:
        if s < mean - sigma:
            bins.append("noisy")
        elif s > mean + sigma:
            bins.append("nice")
        else:
            bins.append("normal")
    return bins


def filter_by_confidence(links: Iterable[EntityLink], theta: float) -> list[EntityLink]:
    """Keep links scoring at least theta, preserving order."""
    return [l for l in links if l.score >= theta]


# ---------------------------------------------------------------------------
# CoNLL-style BIO file I/O: "token label" lines, blank line between sentences

def write_bio(path, sentences: Iterable[TaggedSentence]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in sentences:
            for token, label in zip(s.tokens, s.labels):
                fh.write(f"{token} {label}\n")
            fh.write("\n")


def read_bio(path) -> list[TaggedSentence]:
    sentences = []
    tokens: list[str] = []
    labels: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                if tokens:
                    sentences.append(TaggedSentence(tuple(tokens), tuple(labels)))
                    tokens, labels = [], []
                continue
            token, _, label = line.rpartition(" ")
            if not token:
                raise ValueError(f"malformed BIO line: {line!r}")
            tokens.append(token)
            labels.append(label)
    if tokens:
        sentences.append(TaggedSentence(tuple(tokens), tuple(labels)))
    return sentences
