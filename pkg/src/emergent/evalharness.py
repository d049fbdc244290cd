"""Retrospective evaluation: KB ablation, mention/entity precision-recall,
and the threshold-by-ablation sweep.

The sweep regenerates pseudo-ground truth per cell, trains a tagger, and
scores predictions on the sentences the ablated lexicon could not link.
"""

from __future__ import annotations

import csv
import random
import statistics
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from emergent import linker, nerc, pgt
from emergent.corpus import Document, Sentence, segment_sentences
from emergent.lexicon import Lexicon

SentenceKey = tuple[str, int]
Span = tuple[int, int]


@dataclass(frozen=True)
class AblationConfig:
    fractions: tuple[float, ...] = (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    repeats: int = 10
    seed: int = 0
    nested: bool = True

    def __post_init__(self):
        if any(not 0 < f <= 1 for f in self.fractions):
            raise ValueError("fractions must lie in (0, 1]")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")


@dataclass(frozen=True)
class PRResult:
    precision: float
    recall: float
    tp: int
    fp: int
    fn: int
    precision_undefined: bool = False
    recall_undefined: bool = False


def pr_result(tp: int, fp: int, fn: int) -> PRResult:
    """P/R with the empty-denominator convention: undefined ratios are 0
    and flagged."""
    p_undef = tp + fp == 0
    r_undef = tp + fn == 0
    return PRResult(
        precision=0.0 if p_undef else tp / (tp + fp),
        recall=0.0 if r_undef else tp / (tp + fn),
        tp=tp, fp=fp, fn=fn,
        precision_undefined=p_undef,
        recall_undefined=r_undef,
    )


def ablate_kb(lex: Lexicon, fraction: float, seed: int, nested: bool = True) -> Lexicon:
    """Retain floor(fraction * |entities|) entities by seeded sampling.

    Nested mode (default) draws one seeded permutation and takes prefixes,
    so smaller fractions retain subsets of larger ones; non-nested mode
    re-samples independently per fraction.
    """
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    if not lex.entities:
        raise ValueError("cannot ablate an empty lexicon")
    ids = sorted(lex.entities)
    if nested:
        rng = random.Random(seed)
    else:
        rng = random.Random(seed * 100003 + round(fraction * 1000))
    order = rng.sample(ids, len(ids))
    # epsilon guards the floor against float error (0.29 * 100 -> 28.999...)
    keep = set(order[:int(fraction * len(ids) + 1e-9)])
    entities = {eid: ent for eid, ent in lex.entities.items() if eid in keep}
    entries = {}
    for key, stats in lex.entries.items():
        links = {eid: c for eid, c in stats.link_counts.items() if eid in keep}
        entries[key] = replace(stats, link_counts=links)
    return Lexicon(entries, entities, max_ngram_len=lex.max_ngram_len,
                   fold_case=lex.fold_case)


def score_mentions(predicted: Mapping[SentenceKey, Iterable[Span]],
                   gold: Mapping[SentenceKey, Iterable[Span]]) -> PRResult:
    """Exact-span matching over aligned sentences; classes are ignored."""
    if set(predicted) != set(gold):
        raise ValueError("predicted and gold cover different sentences")
    tp = fp = fn = 0
    for key in gold:
        pred_spans = set(map(tuple, predicted[key]))
        gold_spans = set(map(tuple, gold[key]))
        tp += len(pred_spans & gold_spans)
        fp += len(pred_spans - gold_spans)
        fn += len(gold_spans - pred_spans)
    return pr_result(tp, fp, fn)


def score_entities(tp_mentions: Iterable[tuple[SentenceKey, Span]],
                   gold_links: Mapping[tuple[SentenceKey, Span], str]) -> PRResult:
    """Distinct-entity coverage: which gold entities are reachable through
    correctly predicted mentions."""
    recovered = set()
    for mention in tp_mentions:
        key = (mention[0], tuple(mention[1]))
        if key not in gold_links:
            raise ValueError(f"mention {key!r} is not a gold mention")
        recovered.add(gold_links[key])
    all_entities = set(gold_links.values())
    tp = len(recovered)
    return pr_result(tp, 0, len(all_entities) - tp)


@dataclass(frozen=True)
class SweepRow:
    theta: float
    fraction: float
    repeat: int
    mention: PRResult
    entity: PRResult


@dataclass
class SweepConfig:
    documents: Sequence[Document]
    lexicon: Lexicon
    gold_spans: Mapping[SentenceKey, frozenset[Span]]
    gold_entities: Mapping[tuple[SentenceKey, Span], str]
    thetas: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    ablation: AblationConfig = field(default_factory=AblationConfig)
    kappa: float = 0.01
    bins: tuple[str, ...] = ("normal", "nice")
    epochs: int = 5
    max_train_sentences: int | None = None
    max_test_sentences: int | None = None
    seed: int = 0


def build_pgt(documents: Sequence[Document], lex: Lexicon, theta: float,
              kappa: float = 0.01, bins: Sequence[str] = ("normal", "nice"),
              ) -> tuple[list[pgt.TaggedSentence], list[Sentence]]:
    """Link the stream and split it into BIO training material (linkable
    sentences of documents in the selected quality bins) and the unlinkable
    sentences left over for prediction."""
    cfg = linker.LinkerConfig(keyphraseness_min=kappa, confidence_min=theta)
    features = [pgt.quality_features(d) for d in documents]
    doc_bins = dict(zip((d.id for d in documents),
                        pgt.bin_documents(pgt.score_stream(features))))
    train: list[pgt.TaggedSentence] = []
    unlinkable: list[Sentence] = []
    for doc in documents:
        for sentence in segment_sentences(doc):
            links = linker.link_sentence(lex, sentence, cfg)
            if links:
                if doc_bins[doc.id] in bins:
                    train.append(pgt.to_bio(sentence, links, lex))
            else:
                unlinkable.append(sentence)
    return train, unlinkable


def run_cell(cfg: SweepConfig, theta: float, fraction: float, repeat: int) -> SweepRow:
    cell_seed = cfg.seed * 1000003 + repeat
    lex_s = (ablate_kb(cfg.lexicon, fraction, cell_seed, nested=cfg.ablation.nested)
             if fraction < 1.0 else cfg.lexicon)
    train_set, test_sentences = build_pgt(cfg.documents, lex_s, theta,
                                          kappa=cfg.kappa, bins=cfg.bins)
    rng = random.Random(cell_seed)
    if cfg.max_train_sentences is not None and len(train_set) > cfg.max_train_sentences:
        train_set = rng.sample(train_set, cfg.max_train_sentences)
    if cfg.max_test_sentences is not None and len(test_sentences) > cfg.max_test_sentences:
        test_sentences = rng.sample(test_sentences, cfg.max_test_sentences)

    predicted: dict[SentenceKey, set[Span]] = {}
    if train_set:
        model = nerc.train(train_set, epochs=cfg.epochs, seed=cell_seed)
        for sentence in test_sentences:
            spans = nerc.predict(model, sentence).spans
            predicted[(sentence.doc_id, sentence.index)] = {span for span, _ in spans}
    else:
        predicted = {(s.doc_id, s.index): set() for s in test_sentences}

    gold = {key: set(cfg.gold_spans.get(key, frozenset())) for key in predicted}
    mention = score_mentions(predicted, gold)
    tp_mentions = [(key, span) for key in predicted for span in predicted[key] & gold[key]]
    gold_links = {(key, span): cfg.gold_entities[(key, span)]
                  for key in gold for span in gold[key]}
    entity = score_entities(tp_mentions, gold_links)
    return SweepRow(theta, fraction, repeat, mention, entity)


def sweep(cfg: SweepConfig, jobs: int = 1) -> list[SweepRow]:
    """One row per (theta, fraction, repeat), deterministic per seed.

    Cells are independent; with jobs > 1 they run in a process pool (falling
    back to serial execution when no pool can be created). Row order is the
    grid order either way.
    """
    grid = [(theta, fraction, repeat)
            for theta in cfg.thetas
            for fraction in cfg.ablation.fractions
            for repeat in range(cfg.ablation.repeats)]
    if jobs > 1 and len(grid) > 1:
        import concurrent.futures

        try:
            with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
                return list(pool.map(_run_cell_args, [(cfg,) + cell for cell in grid]))
        except (OSError, PermissionError):
            pass
    return [run_cell(cfg, *cell) for cell in grid]


def _run_cell_args(packed) -> SweepRow:
    return run_cell(*packed)


def aggregate(rows: Sequence[SweepRow]) -> dict[tuple[float, float], dict[str, float]]:
    """Mean and std of mention/entity precision and recall per cell."""
    cells: dict[tuple[float, float], list[SweepRow]] = {}
    for row in rows:
        cells.setdefault((row.theta, row.fraction), []).append(row)
    out = {}
    for key, group in cells.items():
        metrics = {
            "mention_p": [r.mention.precision for r in group],
            "mention_r": [r.mention.recall for r in group],
            "entity_p": [r.entity.precision for r in group],
            "entity_r": [r.entity.recall for r in group],
        }
        summary = {}
        for name, values in metrics.items():
            summary[name + "_mean"] = statistics.fmean(values)
            summary[name + "_std"] = statistics.pstdev(values)
        out[key] = summary
    return out


def write_results_csv(rows: Sequence[SweepRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta", "fraction", "repeat",
                         "mention_p", "mention_r", "entity_p", "entity_r"])
        for r in rows:
            writer.writerow([r.theta, r.fraction, r.repeat,
                             f"{r.mention.precision:.6f}", f"{r.mention.recall:.6f}",
                             f"{r.entity.precision:.6f}", f"{r.entity.recall:.6f}"])
