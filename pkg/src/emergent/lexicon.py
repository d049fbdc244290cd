"""Surface-form lexicon: anchor statistics for entity linking.

Keyphraseness of an n-gram is the fraction of its corpus occurrences that
were link anchors; sense probability of an (n-gram, entity) pair is the
fraction of the n-gram's anchor uses that targeted that entity.

On-disk format is a directory of three TSV files:

  anchors.tsv      ngram <TAB> entity_id <TAB> link_count
  occurrences.tsv  ngram <TAB> count
  entities.tsv     entity_id <TAB> classes (comma-separated) <TAB> creation ("-" if unknown)
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from emergent import corpus

ENTITY_CLASSES = ("PER", "LOC", "ORG", "NONE")


@dataclass(frozen=True)
class Entity:
    id: str
    classes: frozenset[str] = frozenset({"NONE"})
    creation_date: int | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("entity id must be non-empty")
        bad = self.classes - set(ENTITY_CLASSES)
        if bad:
            raise ValueError(f"unknown entity classes: {sorted(bad)}")
        if not self.classes:
            object.__setattr__(self, "classes", frozenset({"NONE"}))


@dataclass
class SurfaceFormStats:
    ngram: tuple[str, ...]
    occurrence_count: int
    link_counts: dict[str, int] = field(default_factory=dict)

    @property
    def total_links(self) -> int:
        return sum(self.link_counts.values())


def _as_key(ngram, fold_case: bool) -> tuple[str, ...]:
    if isinstance(ngram, str):
        toks = tuple(t.text for t in corpus.tokenize(ngram))
    else:
        toks = tuple(ngram)
    if fold_case:
        toks = tuple(t.casefold() for t in toks)
    return toks


class Lexicon:
    """Immutable after build; safe for concurrent readers."""

    def __init__(self, entries: Mapping[tuple[str, ...], SurfaceFormStats],
                 entities: Mapping[str, Entity], max_ngram_len: int = 5,
                 fold_case: bool = False):
        self.entries = dict(entries)
        self.entities = dict(entities)
        self.max_ngram_len = max_ngram_len
        self.fold_case = fold_case
        for stats in self.entries.values():
            for eid in stats.link_counts:
                if eid not in self.entities:
                    raise ValueError(f"entry {stats.ngram!r} references unknown entity {eid!r}")

    def stats(self, ngram) -> SurfaceFormStats | None:
        return self.entries.get(_as_key(ngram, self.fold_case))

    def keyphraseness(self, ngram) -> float:
        """P(n-gram is an entity mention) = anchor count / occurrence count."""
        stats = self.stats(ngram)
        if stats is None or stats.occurrence_count == 0:
            return 0.0
        return stats.total_links / stats.occurrence_count

    def sense_probability(self, ngram, entity_id: str) -> float:
        """P(n-gram refers to entity | n-gram used as anchor)."""
        stats = self.stats(ngram)
        if stats is None:
            return 0.0
        total = stats.total_links
        if total == 0:
            return 0.0
        return stats.link_counts.get(entity_id, 0) / total

    def disambiguate(self, ngram) -> tuple[str, float] | None:
        """Most probable entity for the n-gram, with its sense probability.

        Ties break toward the lexicographically smallest entity id.
        """
        stats = self.stats(ngram)
        if stats is None or not stats.link_counts:
            return None
        total = stats.total_links
        best = min(stats.link_counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return best[0], best[1] / total


def build_lexicon(anchor_records: Iterable[tuple], occurrence_records: Iterable[tuple],
                  entity_table: Iterable[Entity], max_ngram_len: int = 5,
                  fold_case: bool = False) -> Lexicon:
    """Aggregate raw count records into a queryable lexicon.

    Duplicate records sum; an n-gram with links but no occurrence record
    gets its total link count as occurrence count; an occurrence count
    below the total link count is raised to it (keyphraseness stays <= 1).
    """
    entities: dict[str, Entity] = {}
    for ent in entity_table:
        if ent.id in entities and entities[ent.id] != ent:
            raise ValueError(f"conflicting duplicate entity {ent.id!r}")
        entities[ent.id] = ent

    links: dict[tuple[str, ...], dict[str, int]] = {}
    for ngram, entity_id, count in anchor_records:
        if count < 0:
            raise ValueError(f"negative link count for {ngram!r}")
        if entity_id not in entities:
            raise ValueError(f"anchor {ngram!r} references unknown entity {entity_id!r}")
        key = _as_key(ngram, fold_case)
        per = links.setdefault(key, {})
        per[entity_id] = per.get(entity_id, 0) + count

    occurrences: dict[tuple[str, ...], int] = {}
    for ngram, count in occurrence_records:
        if count < 0:
            raise ValueError(f"negative occurrence count for {ngram!r}")
        key = _as_key(ngram, fold_case)
        occurrences[key] = occurrences.get(key, 0) + count

    entries: dict[tuple[str, ...], SurfaceFormStats] = {}
    for key in links.keys() | occurrences.keys():
        link_counts = links.get(key, {})
        total = sum(link_counts.values())
        occ = max(occurrences.get(key, 0), total)
        entries[key] = SurfaceFormStats(key, occ, dict(sorted(link_counts.items())))
    return Lexicon(entries, entities, max_ngram_len=max_ngram_len, fold_case=fold_case)


# ---------------------------------------------------------------------------
# TSV I/O

def _split_tsv(line: str, n_fields: int, path, lineno: int) -> list[str]:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != n_fields:
        raise ValueError(f"{path}:{lineno}: expected {n_fields} tab-separated fields")
    return parts


def read_anchors(path) -> list[tuple[str, str, int]]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            ngram, entity_id, count = _split_tsv(line, 3, path, lineno)
            records.append((ngram, entity_id, int(count)))
    return records


def read_occurrences(path) -> list[tuple[str, int]]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            ngram, count = _split_tsv(line, 2, path, lineno)
            records.append((ngram, int(count)))
    return records


def read_entities(path) -> list[Entity]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            eid, classes, creation = _split_tsv(line, 3, path, lineno)
            names = frozenset(c for c in classes.split(",") if c) or frozenset({"NONE"})
            created = None if creation == "-" else int(creation)
            records.append(Entity(eid, names, created))
    return records


def load_lexicon_dir(directory, max_ngram_len: int = 5, fold_case: bool = False) -> Lexicon:
    return build_lexicon(
        read_anchors(os.path.join(directory, "anchors.tsv")),
        read_occurrences(os.path.join(directory, "occurrences.tsv")),
        read_entities(os.path.join(directory, "entities.tsv")),
        max_ngram_len=max_ngram_len,
        fold_case=fold_case,
    )


def write_lexicon_dir(directory, anchor_records, occurrence_records, entity_table) -> None:
    """Write raw lexicon records as the three TSV files (sorted, stable bytes)."""
    os.makedirs(directory, exist_ok=True)
    for ngram, *_ in anchor_records:
        if "\t" in ngram:
            raise ValueError("tab characters are forbidden in ngrams")
    with open(os.path.join(directory, "anchors.tsv"), "w", encoding="utf-8") as fh:
        for ngram, eid, count in sorted(anchor_records):
            fh.write(f"{ngram}\t{eid}\t{count}\n")
    with open(os.path.join(directory, "occurrences.tsv"), "w", encoding="utf-8") as fh:
        for ngram, count in sorted(occurrence_records):
            fh.write(f"{ngram}\t{count}\n")
    with open(os.path.join(directory, "entities.tsv"), "w", encoding="utf-8") as fh:
        for ent in sorted(entity_table, key=lambda e: e.id):
            classes = ",".join(sorted(ent.classes))
            created = "-" if ent.creation_date is None else str(ent.creation_date)
            fh.write(f"{ent.id}\t{classes}\t{created}\n")
