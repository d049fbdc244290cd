"""Timestamped document streams: loading, validation, tokenization, sentences.

The stream file format is JSONL (UTF-8), one object per line with fields
``id`` (string), ``ts`` (integer epoch seconds), ``text`` (string) and
``stream`` ("news" | "social").
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple

STREAMS = ("news", "social")

_WORD = re.compile(r"\S+")
_TERMINATORS = ".!?"


@dataclass(frozen=True)
class Document:
    """One timestamped text unit from a named stream."""

    id: str
    timestamp: int
    text: str
    stream: str

    @property
    def day(self) -> int:
        """UTC day index (days since epoch)."""
        return self.timestamp // 86400


class Token(NamedTuple):
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class Sentence:
    doc_id: str
    index: int
    tokens: tuple[Token, ...]

    @property
    def texts(self) -> tuple[str, ...]:
        return tuple(t.text for t in self.tokens)


@dataclass(frozen=True)
class RecordError:
    """A rejected input record; never silently dropped."""

    line: int
    reason: str


def tokenize(text: str, base: int = 0) -> list[Token]:
    """Split on whitespace, then peel leading/trailing punctuation into
    single-character tokens. Interior punctuation ("A$AP", "That's") stays.

    Offsets are into ``text`` shifted by ``base``.
    """
    tokens: list[Token] = []
    for m in _WORD.finditer(text):
        chunk = m.group()
        lo, hi = 0, len(chunk)
        lead: list[Token] = []
        trail: list[Token] = []
        while lo < hi and not chunk[lo].isalnum():
            lead.append(Token(chunk[lo], base + m.start() + lo, base + m.start() + lo + 1))
            lo += 1
        while hi > lo and not chunk[hi - 1].isalnum():
            trail.append(Token(chunk[hi - 1], base + m.start() + hi - 1, base + m.start() + hi))
            hi -= 1
        tokens.extend(lead)
        if lo < hi:
            tokens.append(Token(chunk[lo:hi], base + m.start() + lo, base + m.start() + hi))
        tokens.extend(reversed(trail))
    return tokens


def sentence_spans(text: str) -> list[tuple[int, int]]:
    """Character spans of sentences; they partition the whole text.

    A boundary is a '.', '!' or '?' followed by whitespace and an uppercase
    letter, or by the end of the text.
    """
    spans: list[tuple[int, int]] = []
    n = len(text)
    start = 0
    i = 0
    while i < n:
        if text[i] in _TERMINATORS:
            j = i + 1
            while j < n and text[j].isspace():
                j += 1
            if j >= n:
                spans.append((start, n))
                return spans
            if j > i + 1 and text[j].isupper():
                spans.append((start, j))
                start = j
                i = j
                continue
        i += 1
    if start < n:
        spans.append((start, n))
    return spans


def segment_sentences(doc: Document) -> list[Sentence]:
    sentences = []
    for idx, (lo, hi) in enumerate(sentence_spans(doc.text)):
        toks = tokenize(doc.text[lo:hi], base=lo)
        sentences.append(Sentence(doc.id, idx, tuple(toks)))
    return sentences


def _validate_record(obj) -> tuple[Document | None, str | None]:
    if not isinstance(obj, dict):
        return None, "record is not an object"
    for field, kind in (("id", str), ("ts", int), ("text", str), ("stream", str)):
        if field not in obj:
            return None, f"missing field {field!r}"
        if isinstance(obj[field], bool) or not isinstance(obj[field], kind):
            return None, f"field {field!r} has wrong type"
    if not obj["id"]:
        return None, "empty id"
    if obj["ts"] < 0:
        return None, "negative timestamp"
    if obj["stream"] not in STREAMS:
        return None, f"unknown stream {obj['stream']!r}"
    if not obj["text"]:
        return None, "empty text"
    return Document(obj["id"], obj["ts"], obj["text"], obj["stream"]), None


def load_stream(path) -> tuple[list[Document], list[RecordError]]:
    """Read a JSONL stream file.

    Returns documents in non-decreasing timestamp order (stable sort) plus
    the list of rejected records with line numbers. Raises ``OSError`` if
    the file cannot be read.
    """
    docs: list[Document] = []
    errors: list[RecordError] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                errors.append(RecordError(lineno, f"malformed JSON: {exc.msg}"))
                continue
            doc, reason = _validate_record(obj)
            if doc is None:
                errors.append(RecordError(lineno, reason))
                continue
            if doc.id in seen:
                errors.append(RecordError(lineno, f"duplicate id {doc.id!r}"))
                continue
            seen.add(doc.id)
            docs.append(doc)
    docs.sort(key=lambda d: d.timestamp)
    return docs, errors


def write_stream(path, docs: Iterable[Document]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps(
                {"id": d.id, "ts": d.timestamp, "text": d.text, "stream": d.stream},
                ensure_ascii=False) + "\n")
