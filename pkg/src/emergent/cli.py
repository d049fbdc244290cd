"""Subcommand front end for the pipeline stages.

Outputs are written atomically (temp file + rename). Exit codes: 0 success,
1 stage error, 2 bad config/usage, 3 I/O failure. ``EMERGENT_LOG`` selects
the log level (error, info, debug); a TOML file given with ``--config``
supplies per-subcommand defaults that explicit flags override.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import os
import sys
import tempfile

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from emergent import corpus, emergence, evalharness, linker, nerc, pgt, syngen
from emergent.lexicon import load_lexicon_dir, read_entities

log = logging.getLogger("emergent")


class ConfigError(Exception):
    pass


@contextlib.contextmanager
def atomic_write(path, newline=None):
    """Write to a temp file in the target directory, rename on success."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline=newline) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def _require_file(path) -> str:
    if not os.path.exists(path):
        raise FileNotFoundError(2, "no such file", str(path))
    return path


def _read_toml(path) -> dict:
    with open(_require_file(path), "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}") from exc


def _load_config(args) -> dict:
    if not getattr(args, "config", None):
        return {}
    return _read_toml(args.config)


def _setting(args, config: dict, section: str, name: str, default):
    """Flag value if given, else config value, else default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    return config.get(section, {}).get(name, default)


def _load_documents(path) -> list[corpus.Document]:
    docs, errors = corpus.load_stream(_require_file(path))
    for err in errors:
        log.warning("%s:%d: %s", path, err.line, err.reason)
    if errors:
        log.info("rejected %d invalid records from %s", len(errors), path)
    return docs


def _links_by_sentence(links):
    grouped: dict[tuple[str, int], list[linker.EntityLink]] = {}
    for link in links:
        grouped.setdefault((link.doc_id, link.sentence), []).append(link)
    return grouped


# ---------------------------------------------------------------------------
# subcommands

def cmd_syngen(args) -> int:
    config = _load_config(args)
    section = config.get("syngen", config)
    if args.spec:
        section = _read_toml(args.spec)
    known = {"n_entities", "n_heldout", "n_docs", "days", "noise_rate", "seed",
             "hard_trap_rate", "soft_trap_rate", "extreme_junk_rate"}
    fields = {k: v for k, v in section.items() if k in known}
    try:
        plans = tuple(syngen.BurstPlan(p["entity"], p["start_day"],
                                       p["length"], p["intensity"])
                      for p in section.get("burst_plan", ()))
        spec = syngen.GeneratorSpec(burst_plan=plans, **fields)
        spec.validate()
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid generator spec: {exc}") from exc
    syn = syngen.generate(spec, args.out)
    log.info("generated %d documents, %d gold mentions -> %s",
             len(syn.documents), len(syn.gold), args.out)
    return 0


def cmd_link(args) -> int:
    config = _load_config(args)
    theta = float(_setting(args, config, "link", "theta", 0.0))
    kappa = float(_setting(args, config, "link", "kappa", 0.01))
    fold_case = bool(_setting(args, config, "link", "fold_case", False))
    lex = load_lexicon_dir(_require_file(args.lexicon), fold_case=fold_case)
    docs = _load_documents(args.input)
    cfg = linker.LinkerConfig(keyphraseness_min=kappa, confidence_min=theta)
    n_links = 0
    with atomic_write(args.out) as fh:
        for doc in docs:
            for sentence in corpus.segment_sentences(doc):
                for l in linker.link_sentence(lex, sentence, cfg):
                    fh.write(json.dumps({"doc_id": l.doc_id, "sentence": l.sentence,
                                         "start": l.start, "end": l.end,
                                         "entity": l.entity_id, "score": l.score},
                                        ensure_ascii=False) + "\n")
                    n_links += 1
    log.info("linked %d mentions -> %s", n_links, args.out)
    return 0


def cmd_pgt(args) -> int:
    config = _load_config(args)
    theta = float(_setting(args, config, "pgt", "theta", 0.7))
    bins = _setting(args, config, "pgt", "bins", "normal,nice")
    if isinstance(bins, str):
        bins = tuple(b.strip() for b in bins.split(",") if b.strip())
    unknown = set(bins) - set(pgt.BINS)
    if unknown:
        raise ConfigError(f"unknown quality bins: {sorted(unknown)}")
    lex = load_lexicon_dir(_require_file(args.lexicon))
    docs = _load_documents(args.input)
    grouped = _links_by_sentence(linker.read_links(_require_file(args.links)))
    known_docs = {d.id for d in docs}
    stray = {doc_id for doc_id, _ in grouped} - known_docs
    if stray:
        log.warning("%d link(s) reference documents absent from %s",
                    len(stray), args.input)
    features = [pgt.quality_features(d) for d in docs]
    scores = pgt.score_stream(features, streaming=args.streaming_quality)
    doc_bins = dict(zip((d.id for d in docs), pgt.bin_documents(scores)))
    tagged = []
    for doc in docs:
        if doc_bins[doc.id] not in bins:
            continue
        for sentence in corpus.segment_sentences(doc):
            links = pgt.filter_by_confidence(
                grouped.get((doc.id, sentence.index), []), theta)
            if links:
                tagged.append(pgt.to_bio(sentence, links, lex))
    with atomic_write(args.out) as fh:
        for s in tagged:
            for token, label in zip(s.tokens, s.labels):
                fh.write(f"{token} {label}\n")
            fh.write("\n")
    log.info("wrote %d training sentences -> %s", len(tagged), args.out)
    return 0


def cmd_nerc_train(args) -> int:
    config = _load_config(args)
    epochs = int(_setting(args, config, "nerc", "epochs", 10))
    seed = int(_setting(args, config, "nerc", "seed", 1))
    sentences = pgt.read_bio(_require_file(args.train))
    model = nerc.train(sentences, epochs=epochs, seed=seed)
    with atomic_write(args.model) as fh:
        fh.write(nerc.dumps_model(model))
    log.info("trained on %d sentences -> %s", len(sentences), args.model)
    return 0


def cmd_nerc_predict(args) -> int:
    model = nerc.load_model(_require_file(args.model))
    docs = _load_documents(args.input)
    linked_keys = set()
    if args.links:
        linked_keys = set(_links_by_sentence(linker.read_links(_require_file(args.links))))
    n = 0
    with atomic_write(args.out) as fh:
        for doc in docs:
            for sentence in corpus.segment_sentences(doc):
                if (doc.id, sentence.index) in linked_keys and not args.all:
                    continue
                for (a, b), cls in nerc.predict(model, sentence).spans:
                    fh.write(json.dumps({"doc_id": doc.id, "sentence": sentence.index,
                                         "start": a, "end": b, "class": cls}) + "\n")
                    n += 1
    log.info("predicted %d spans -> %s", n, args.out)
    return 0


def cmd_emerge(args) -> int:
    config = _load_config(args)
    window = int(_setting(args, config, "emerge", "window", 7))
    multiplier = float(_setting(args, config, "emerge", "multiplier", 1.5))
    k = int(_setting(args, config, "emerge", "k", 2))
    cfg = emergence.BurstConfig(window=window, cutoff_multiplier=multiplier)

    docs = _load_documents(args.input)
    day_of = {d.id: d.day for d in docs}
    entities = {e.id: e for e in read_entities(_require_file(args.entities))}
    creation_days = {eid: (None if e.creation_date is None else e.creation_date // 86400)
                     for eid, e in entities.items()}
    links = linker.read_links(_require_file(args.links))
    mentions = [(l.entity_id, l.doc_id, day_of[l.doc_id])
                for l in links if l.doc_id in day_of]
    if len(mentions) < len(links):
        log.warning("%d link(s) reference documents absent from %s",
                    len(links) - len(mentions), args.input)
    stream_end = max(day_of.values(), default=0)
    series, excluded = emergence.build_series(mentions, creation_days, stream_end)
    for eid, reason in excluded:
        log.info("excluded %s: %s", eid, reason)
    if len(series) < 2:
        print(f"error: only {len(series)} usable series (need at least 2)",
              file=sys.stderr)
        return 1
    if not 1 <= k <= len(series):
        raise ConfigError(f"k={k} out of range for {len(series)} series")

    bursts = [emergence.detect_bursts(s.counts, cfg) for s in series]
    dendrogram, labels = emergence.cluster(series, cfg, k)
    target_len = max(len(s.counts) for s in series)
    target_len = max(target_len, 2)
    prepared = [emergence.prepare(s.counts, target_len) if len(s.counts) >= 2
                else None for s in series]

    os.makedirs(args.out, exist_ok=True)
    with atomic_write(os.path.join(args.out, "series.csv"), newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["entity", "day", "count"])
        for s in series:
            for offset, count in enumerate(s.counts):
                w.writerow([s.entity_id, s.first_day + offset, count])
    with atomic_write(os.path.join(args.out, "clusters.csv"), newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["entity", "cluster"])
        for s, label in zip(series, labels):
            w.writerow([s.entity_id, label])
    with atomic_write(os.path.join(args.out, "signatures.csv"), newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cluster", "position", "mean", "std"])
        for label in sorted(set(labels)):
            members = [vec for vec, l in zip(prepared, labels)
                       if l == label and vec is not None]
            if not members:
                continue
            mean, std = emergence.signature(members)
            for pos in range(len(mean)):
                w.writerow([label, pos, f"{mean[pos]:.6f}", f"{std[pos]:.6f}"])
    with atomic_write(os.path.join(args.out, "stats.csv"), newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["entity", "duration", "volume", "velocity",
                    "n_bursts", "mean_burst_duration", "mean_burst_value"])
        for s, b in zip(series, bursts):
            st = emergence.descriptive_stats(s, b)
            w.writerow([st.entity_id, st.duration, st.volume, f"{st.velocity:.6f}",
                        st.n_bursts, f"{st.mean_burst_duration:.6f}",
                        f"{st.mean_burst_value:.6f}"])

    def _entity_class(eid: str) -> str:
        for cls in ("PER", "LOC", "ORG"):
            if cls in entities[eid].classes:
                return cls
        return "NONE"

    global_counts: dict[str, int] = {}
    for s in series:
        cls = _entity_class(s.entity_id)
        global_counts[cls] = global_counts.get(cls, 0) + 1
    with atomic_write(os.path.join(args.out, "chigrams.csv"), newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cluster", "class", "contribution"])
        n_total = len(series)
        for label in sorted(set(labels)):
            members = [s for s, l in zip(series, labels) if l == label]
            observed: dict[str, int] = {}
            for s in members:
                cls = _entity_class(s.entity_id)
                observed[cls] = observed.get(cls, 0) + 1
            expected = {cls: count * len(members) / n_total
                        for cls, count in global_counts.items()}
            for cls, contribution in emergence.chi_grams(observed, expected):
                w.writerow([label, cls, f"{contribution:.6f}"])
    log.info("clustered %d series at k=%d -> %s", len(series), k, args.out)
    return 0


def _sweep_config(args) -> evalharness.SweepConfig:
    raw = _read_toml(args.config)
    section = raw.get("sweep", raw)
    for key in ("stream", "lexicon", "gold"):
        if key not in section:
            raise ConfigError(f"sweep config is missing {key!r}")
    docs = _load_documents(section["stream"])
    lex = load_lexicon_dir(_require_file(section["lexicon"]))
    gold = syngen.read_gold(_require_file(section["gold"]))
    gold_spans: dict[tuple[str, int], set] = {}
    gold_entities = {}
    for g in gold:
        gold_spans.setdefault((g.doc_id, g.sentence), set()).add((g.start, g.end))
        gold_entities[((g.doc_id, g.sentence), (g.start, g.end))] = g.entity_id
    ablation = evalharness.AblationConfig(
        fractions=tuple(section.get("fractions", (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9))),
        repeats=int(section.get("repeats", 10)),
        seed=int(section.get("seed", 0)),
        nested=bool(section.get("nested", True)),
    )
    return evalharness.SweepConfig(
        documents=docs,
        lexicon=lex,
        gold_spans={k: frozenset(v) for k, v in gold_spans.items()},
        gold_entities=gold_entities,
        thetas=tuple(section.get("thetas", (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9))),
        ablation=ablation,
        kappa=float(section.get("kappa", 0.01)),
        bins=tuple(section.get("bins", ("normal", "nice"))),
        epochs=int(section.get("epochs", 5)),
        max_train_sentences=section.get("max_train_sentences"),
        max_test_sentences=section.get("max_test_sentences"),
        seed=int(section.get("seed", 0)),
    )


def cmd_eval_sweep(args) -> int:
    cfg = _sweep_config(args)
    rows = evalharness.sweep(cfg, jobs=max(1, args.jobs))
    with atomic_write(args.out, newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "fraction", "repeat",
                    "mention_p", "mention_r", "entity_p", "entity_r"])
        for r in rows:
            w.writerow([r.theta, r.fraction, r.repeat,
                        f"{r.mention.precision:.6f}", f"{r.mention.recall:.6f}",
                        f"{r.entity.precision:.6f}", f"{r.entity.recall:.6f}"])
    log.info("swept %d cells -> %s", len(rows), args.out)
    return 0


def cmd_eval_score(args) -> int:
    """Score predictions against gold over the unlinked sentences.

    The sentence universe is the union of sentences in the two files minus
    any sentence carrying a link (when --links is given), so sentences where
    the tagger predicted nothing still count their gold mentions as misses.
    """
    gold = syngen.read_gold(_require_file(args.gold))
    raw_pred: dict[tuple[str, int], set] = {}
    with open(_require_file(args.pred), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                raw_pred.setdefault((obj["doc_id"], obj["sentence"]), set()).add(
                    (obj["start"], obj["end"]))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(
                    f"{args.pred}:{lineno}: malformed prediction record: {exc}") from exc
    linked_keys = set()
    if args.links:
        linked_keys = set(_links_by_sentence(linker.read_links(_require_file(args.links))))
    universe = (set(raw_pred) | {(g.doc_id, g.sentence) for g in gold}) - linked_keys
    predicted = {key: raw_pred.get(key, set()) for key in universe}
    gold_spans: dict[tuple[str, int], set] = {key: set() for key in universe}
    gold_entities = {}
    for g in gold:
        key = (g.doc_id, g.sentence)
        if key not in universe:
            continue
        gold_entities[(key, (g.start, g.end))] = g.entity_id
        gold_spans[key].add((g.start, g.end))
    mention = evalharness.score_mentions(predicted, gold_spans)
    tp = [(key, span) for key in predicted for span in predicted[key] & gold_spans[key]]
    entity = evalharness.score_entities(tp, gold_entities)
    with atomic_write(args.out, newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "precision", "recall", "tp", "fp", "fn"])
        w.writerow(["mention", f"{mention.precision:.6f}", f"{mention.recall:.6f}",
                    mention.tp, mention.fp, mention.fn])
        w.writerow(["entity", f"{entity.precision:.6f}", f"{entity.recall:.6f}",
                    entity.tp, entity.fp, entity.fn])
    log.info("mention P=%.3f R=%.3f; entity R=%.3f -> %s",
             mention.precision, mention.recall, entity.recall, args.out)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emergent",
        description="Discover emerging entities in timestamped document streams.")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker processes for parallel sections (default 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("syngen", help="generate a synthetic corpus")
    p.add_argument("--spec", help="generator spec TOML")
    p.add_argument("--config", help="pipeline config TOML")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_syngen)

    p = sub.add_parser("link", help="link knowledge-base entities in a stream")
    p.add_argument("--lexicon", required=True, help="lexicon directory")
    p.add_argument("--input", required=True, help="stream JSONL")
    p.add_argument("--theta", type=float, help="confidence threshold")
    p.add_argument("--kappa", type=float, help="keyphraseness threshold")
    p.add_argument("--fold-case", dest="fold_case", action="store_const", const=True,
                   help="case-insensitive surface matching")
    p.add_argument("--config", help="pipeline config TOML")
    p.add_argument("--out", required=True, help="links JSONL")
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("pgt", help="build BIO pseudo-ground truth from links")
    p.add_argument("--in", dest="links", required=True, help="links JSONL")
    p.add_argument("--input", required=True, help="stream JSONL")
    p.add_argument("--lexicon", required=True, help="lexicon directory")
    p.add_argument("--bins", help="quality bins to keep (comma-separated)")
    p.add_argument("--theta", type=float, help="confidence threshold")
    p.add_argument("--streaming-quality", action="store_true",
                   help="running quality maxima in stream order instead of "
                        "global (batch) maxima")
    p.add_argument("--config", help="pipeline config TOML")
    p.add_argument("--out", required=True, help="BIO training file")
    p.set_defaults(func=cmd_pgt)

    p = sub.add_parser("nerc", help="train or apply the sequence tagger")
    nerc_sub = p.add_subparsers(dest="nerc_command", required=True)
    t = nerc_sub.add_parser("train")
    t.add_argument("--train", required=True, help="BIO training file")
    t.add_argument("--model", required=True, help="model output path")
    t.add_argument("--epochs", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--config", help="pipeline config TOML")
    t.set_defaults(func=cmd_nerc_train)
    q = nerc_sub.add_parser("predict")
    q.add_argument("--model", required=True, help="trained model path")
    q.add_argument("--input", required=True, help="stream JSONL")
    q.add_argument("--links", help="links JSONL; linked sentences are skipped")
    q.add_argument("--all", action="store_true", help="predict on every sentence")
    q.add_argument("--out", required=True, help="predictions JSONL")
    q.set_defaults(func=cmd_nerc_predict)

    p = sub.add_parser("emerge", help="emergence series, bursts, clusters")
    p.add_argument("--links", required=True, help="links JSONL")
    p.add_argument("--entities", required=True, help="entities TSV")
    p.add_argument("--input", required=True, help="stream JSONL (timestamps)")
    p.add_argument("--k", type=int, help="number of clusters")
    p.add_argument("--window", type=int, help="moving-average window (days)")
    p.add_argument("--multiplier", type=float, help="burst cutoff multiplier")
    p.add_argument("--config", help="pipeline config TOML")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_emerge)

    p = sub.add_parser("eval", help="evaluation harness")
    eval_sub = p.add_subparsers(dest="eval_command", required=True)
    s = eval_sub.add_parser("sweep")
    s.add_argument("--config", required=True, help="sweep config TOML")
    s.add_argument("--out", required=True, help="results CSV")
    s.set_defaults(func=cmd_eval_sweep)
    c = eval_sub.add_parser("score")
    c.add_argument("--pred", required=True, help="predictions JSONL")
    c.add_argument("--gold", required=True, help="gold JSONL")
    c.add_argument("--links", help="links JSONL; linked sentences are excluded")
    c.add_argument("--out", required=True, help="scores CSV")
    c.set_defaults(func=cmd_eval_score)

    return parser


def main(argv=None) -> int:
    level = os.environ.get("EMERGENT_LOG", "info").lower()
    if level not in ("error", "info", "debug"):
        level = "info"
    logging.basicConfig(level=getattr(logging, level.upper()),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        missing = exc.filename or exc.args[-1]
        print(f"error: cannot read {missing}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
