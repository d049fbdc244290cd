import pytest

from emergent import evalharness as ev
from emergent import syngen
from emergent.evalharness import (AblationConfig, PRResult, ablate_kb, aggregate,
                                  pr_result, score_entities, score_mentions, sweep)
from emergent.lexicon import Entity, build_lexicon


def small_lexicon(n=10):
    entities = [Entity(f"e{i}") for i in range(n)]
    anchors = [(f"Name{i} Surname{i}", f"e{i}", 10) for i in range(n)]
    return build_lexicon(anchors, [], entities)


class TestAblation:
    def test_half_retained(self):
        lex = ablate_kb(small_lexicon(10), 0.5, seed=0)
        assert len(lex.entities) == 5

    def test_floor_robust_to_float_error(self):
        assert len(ablate_kb(small_lexicon(100), 0.29, seed=0).entities) == 29
        assert len(ablate_kb(small_lexicon(50), 0.58, seed=0).entities) == 29
        assert len(ablate_kb(small_lexicon(10), 0.25, seed=0).entities) == 2

    def test_full_fraction_identity(self):
        base = small_lexicon(10)
        lex = ablate_kb(base, 1.0, seed=0)
        assert set(lex.entities) == set(base.entities)
        for key, stats in base.entries.items():
            assert lex.entries[key].link_counts == stats.link_counts

    def test_same_seed_same_set(self):
        a = ablate_kb(small_lexicon(10), 0.4, seed=7)
        b = ablate_kb(small_lexicon(10), 0.4, seed=7)
        assert set(a.entities) == set(b.entities)

    def test_nested_fractions_monotone(self):
        base = small_lexicon(20)
        previous = set()
        for fraction in (0.2, 0.3, 0.5, 0.8, 1.0):
            retained = set(ablate_kb(base, fraction, seed=3).entities)
            assert previous <= retained
            previous = retained

    def test_entries_refiltered(self):
        lex = ablate_kb(small_lexicon(10), 0.3, seed=1)
        for stats in lex.entries.values():
            assert set(stats.link_counts) <= set(lex.entities)

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            ablate_kb(small_lexicon(5), 0.0, seed=0)
        with pytest.raises(ValueError):
            ablate_kb(build_lexicon([], [], []), 0.5, seed=0)

    def test_ablation_config_validation(self):
        with pytest.raises(ValueError):
            AblationConfig(fractions=(0.0,))
        with pytest.raises(ValueError):
            AblationConfig(repeats=0)


class TestMentionScoring:
    def test_exact_match(self):
        spans = {("d", 0): {(0, 2), (3, 4)}}
        result = score_mentions(spans, spans)
        assert result.precision == 1.0 and result.recall == 1.0

    def test_no_predictions(self):
        result = score_mentions({("d", 0): set()}, {("d", 0): {(0, 2)}})
        assert result.precision == 0.0 and result.precision_undefined
        assert result.recall == 0.0

    def test_half_and_half(self):
        predicted = {("d", 0): {(0, 2), (5, 6)}}
        gold = {("d", 0): {(0, 2), (3, 4)}}
        result = score_mentions(predicted, gold)
        assert result.precision == 0.5 and result.recall == 0.5
        assert (result.tp, result.fp, result.fn) == (1, 1, 1)

    def test_swapping_swaps_p_and_r(self):
        predicted = {("d", 0): {(0, 2), (5, 6), (9, 10)}}
        gold = {("d", 0): {(0, 2), (3, 4)}}
        a = score_mentions(predicted, gold)
        b = score_mentions(gold, predicted)
        assert a.precision == b.recall and a.recall == b.precision

    def test_tp_fn_covers_gold(self):
        predicted = {("d", 0): {(0, 2)}, ("d", 1): set()}
        gold = {("d", 0): {(0, 2), (4, 6)}, ("d", 1): {(1, 2)}}
        result = score_mentions(predicted, gold)
        assert result.tp + result.fn == 3

    def test_misaligned_rejected(self):
        with pytest.raises(ValueError, match="different sentences"):
            score_mentions({("d", 0): set()}, {("d", 1): set()})


class TestEntityScoring:
    def test_full_coverage(self):
        gold_links = {(("d", 0), (0, 2)): "e1", (("d", 1), (3, 5)): "e2"}
        result = score_entities(list(gold_links), gold_links)
        assert result.recall == 1.0

    def test_no_true_positives(self):
        gold_links = {(("d", 0), (0, 2)): "e1"}
        result = score_entities([], gold_links)
        assert result.recall == 0.0 and result.tp == 0 and result.fn == 1

    def test_distinct_entity_basis(self):
        gold_links = {(("d", 0), (0, 2)): "e1", (("d", 1), (3, 5)): "e1"}
        result = score_entities([(("d", 0), (0, 2))], gold_links)
        assert result.recall == 1.0 and result.fn == 0

    def test_non_gold_mention_rejected(self):
        with pytest.raises(ValueError):
            score_entities([(("d", 0), (9, 12))], {(("d", 0), (0, 2)): "e1"})


class TestPRResult:
    def test_bounds_and_conventions(self):
        r = pr_result(0, 0, 0)
        assert r.precision == 0.0 and r.recall == 0.0
        assert r.precision_undefined and r.recall_undefined
        r = pr_result(3, 1, 2)
        assert r == PRResult(0.75, 0.6, 3, 1, 2)


def tiny_sweep_config(seed=0, **kwargs):
    spec = syngen.GeneratorSpec(n_entities=30, n_heldout=3, n_docs=80, days=30,
                                noise_rate=0.25, seed=seed)
    syn = syngen.generate_corpus(spec)
    defaults = dict(documents=syn.documents, lexicon=syn.lexicon(),
                    gold_spans=syn.gold_spans(), gold_entities=syn.gold_entities(),
                    thetas=(0.4, 0.8), epochs=3, seed=seed,
                    ablation=AblationConfig(fractions=(0.5, 0.9), repeats=2, seed=seed))
    defaults.update(kwargs)
    return ev.SweepConfig(**defaults)


class TestSweep:
    def test_grid_size(self):
        rows = sweep(tiny_sweep_config())
        assert len(rows) == 2 * 2 * 2

    def test_full_grid_product_144_rows(self):
        spec = syngen.GeneratorSpec(n_entities=8, n_heldout=0, n_docs=14, days=10,
                                    noise_rate=0.0, seed=2)
        syn = syngen.generate_corpus(spec)
        cfg = ev.SweepConfig(
            documents=syn.documents, lexicon=syn.lexicon(),
            gold_spans=syn.gold_spans(), gold_entities=syn.gold_entities(),
            epochs=1, seed=2,
            thetas=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9),
            ablation=AblationConfig(repeats=2, seed=2))
        rows = sweep(cfg)
        assert len(rows) == 9 * 8 * 2
        assert len({(r.theta, r.fraction, r.repeat) for r in rows}) == 144

    def test_deterministic(self):
        a = sweep(tiny_sweep_config())
        b = sweep(tiny_sweep_config())
        assert a == b

    def test_results_in_bounds(self):
        for row in sweep(tiny_sweep_config()):
            for r in (row.mention, row.entity):
                assert 0.0 <= r.precision <= 1.0
                assert 0.0 <= r.recall <= 1.0

    def test_aggregate_shape(self):
        rows = sweep(tiny_sweep_config())
        agg = aggregate(rows)
        assert set(agg) == {(t, f) for t in (0.4, 0.8) for f in (0.5, 0.9)}
        for stats in agg.values():
            assert set(stats) == {"mention_p_mean", "mention_p_std",
                                  "mention_r_mean", "mention_r_std",
                                  "entity_p_mean", "entity_p_std",
                                  "entity_r_mean", "entity_r_std"}

    def test_parallel_jobs_match_serial(self):
        cfg = tiny_sweep_config()
        assert sweep(cfg, jobs=2) == sweep(cfg, jobs=1)

    def test_csv_columns(self, tmp_path):
        rows = sweep(tiny_sweep_config())
        path = tmp_path / "results.csv"
        ev.write_results_csv(rows, path)
        header = path.read_text().splitlines()[0]
        assert header == "theta,fraction,repeat,mention_p,mention_r,entity_p,entity_r"
        assert len(path.read_text().splitlines()) == len(rows) + 1
