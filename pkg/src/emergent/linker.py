"""Lexical-matching entity linker over tokenized sentences.

Every n-gram (up to the configured length) whose keyphraseness clears the
candidate threshold is resolved to its most probable entity; low-confidence
links are dropped and overlaps are settled longest-match-first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence, TypeVar

from emergent.corpus import Sentence
from emergent.lexicon import Lexicon

T = TypeVar("T")


@dataclass(frozen=True)
class EntityLink:
    doc_id: str
    sentence: int
    start: int
    end: int
    entity_id: str
    score: float


@dataclass(frozen=True)
class LinkerConfig:
    keyphraseness_min: float = 0.01
    confidence_min: float = 0.0
    max_ngram_len: int = 5

    def __post_init__(self):
        if not 0.0 <= self.keyphraseness_min <= 1.0:
            raise ValueError("keyphraseness_min must be in [0, 1]")
        if not 0.0 <= self.confidence_min <= 1.0:
            raise ValueError("confidence_min must be in [0, 1]")
        if self.max_ngram_len < 1:
            raise ValueError("max_ngram_len must be positive")


def link_sentence(lex: Lexicon, sentence: Sentence, cfg: LinkerConfig) -> list[EntityLink]:
    """Resolve entity mentions in one sentence.

    Returned links never overlap; they are sorted by start position.
    """
    tokens = sentence.texts
    n = len(tokens)
    limit = min(cfg.max_ngram_len, lex.max_ngram_len)
    candidates: list[EntityLink] = []
    for length in range(1, limit + 1):
        for start in range(0, n - length + 1):
            ngram = tokens[start:start + length]
            if lex.keyphraseness(ngram) < cfg.keyphraseness_min:
                continue
            resolved = lex.disambiguate(ngram)
            if resolved is None:
                continue
            entity_id, score = resolved
            if score < cfg.confidence_min:
                continue
            candidates.append(EntityLink(sentence.doc_id, sentence.index,
                                         start, start + length, entity_id, score))
    # longest match first, then leftmost; greedily keep non-overlapping spans
    candidates.sort(key=lambda l: (l.start - l.end, l.start))
    taken: list[EntityLink] = []
    occupied: set[int] = set()
    for link in candidates:
        span = range(link.start, link.end)
        if any(i in occupied for i in span):
            continue
        occupied.update(span)
        taken.append(link)
    taken.sort(key=lambda l: l.start)
    return taken


def partition_stream(items: Iterable[tuple[T, Sequence[EntityLink]]],
                     ) -> tuple[list[tuple[T, list[EntityLink]]], list[T]]:
    """Split (sentence, links) pairs into linkable and unlinkable, in input order.

    A sentence is linkable iff it carries at least one link.
    """
    linkable: list[tuple[T, list[EntityLink]]] = []
    unlinkable: list[T] = []
    for item, links in items:
        links = list(links)
        if links:
            linkable.append((item, links))
        else:
            unlinkable.append(item)
    return linkable, unlinkable


def write_links(path, links: Iterable[EntityLink]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for l in links:
            fh.write(json.dumps({"doc_id": l.doc_id, "sentence": l.sentence,
                                 "start": l.start, "end": l.end,
                                 "entity": l.entity_id, "score": l.score},
                                ensure_ascii=False) + "\n")


def read_links(path) -> list[EntityLink]:
    links = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                links.append(EntityLink(obj["doc_id"], obj["sentence"], obj["start"],
                                        obj["end"], obj["entity"], obj["score"]))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed link record: {exc}") from exc
    return links
