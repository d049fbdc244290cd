"""Randomized invariant suites, each over at least 1,000 cases."""

import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from emergent import nerc, pgt
from emergent.emergence import Burst, bsim, prepare, ward_linkage
from emergent.evalharness import pr_result, score_mentions
from emergent.lexicon import Entity, build_lexicon
from oracles import ward_reference

MANY = settings(max_examples=1000, deadline=None)


# --- sense-probability normalization ---------------------------------------

@st.composite
def anchor_tables(draw):
    n_entities = draw(st.integers(1, 6))
    entities = [f"e{i}" for i in range(n_entities)]
    n_grams = draw(st.integers(1, 5))
    records = []
    for g in range(n_grams):
        ngram = f"ngram{g}"
        for eid in draw(st.sets(st.sampled_from(entities), min_size=1)):
            records.append((ngram, eid, draw(st.integers(1, 10_000))))
    return records, entities


@MANY
@given(anchor_tables())
def test_sense_probabilities_normalize(table):
    records, entities = table
    lex = build_lexicon(records, [], [Entity(e) for e in entities])
    by_ngram = {}
    for ngram, _, _ in records:
        by_ngram.setdefault(ngram, None)
    for ngram in by_ngram:
        stats = lex.stats(ngram)
        total = sum(lex.sense_probability(ngram, eid) for eid in stats.link_counts)
        assert abs(total - 1.0) <= 1e-12
        for eid in stats.link_counts:
            assert 0.0 <= lex.sense_probability(ngram, eid) <= 1.0
        assert 0.0 <= lex.keyphraseness(ngram) <= 1.0


# --- BIO well-formedness: generated and decoded sequences -------------------

def test_generated_bio_always_well_formed():
    rng = random.Random(101)
    entities = [Entity(f"e{i}", frozenset({cls}))
                for i, cls in enumerate(["PER", "LOC", "ORG", "NONE"] * 2)]
    lex = build_lexicon([], [], entities)
    from emergent.corpus import Sentence, Token
    from emergent.linker import EntityLink
    for _ in range(1000):
        n = rng.randrange(1, 15)
        tokens = tuple(Token(f"t{i}", i * 3, i * 3 + 2) for i in range(n))
        sentence = Sentence("d", 0, tokens)
        links = []
        pos = 0
        while pos < n:
            if rng.random() < 0.35:
                end = min(n, pos + rng.randrange(1, 4))
                links.append(EntityLink("d", 0, pos, end,
                                        f"e{rng.randrange(len(entities))}", 1.0))
                pos = end + rng.randrange(0, 2)
            else:
                pos += 1
        tagged = pgt.to_bio(sentence, links, lex)
        pgt.validate_bio(tagged.labels)


def test_decoded_bio_always_well_formed():
    rng = random.Random(55)
    allowed_start, allowed = nerc._bio_masks()
    for _ in range(1000):
        model = nerc._new_model(nerc.STAGE1_LABELS, allowed_start, allowed, 0)
        vocab = [f"w{i}" for i in range(8)] + ["Cap", "Word", "!"]
        for feature in (f"lw={v.casefold()}" for v in vocab):
            if rng.random() < 0.7:
                model.feature_weights[feature] = np.array(
                    [rng.uniform(-3, 3) for _ in range(3)])
        model.start = np.array([rng.uniform(-2, 2) for _ in range(3)])
        model.transitions = np.array([[rng.uniform(-2, 2) for _ in range(3)]
                                      for _ in range(3)])
        tagger = nerc.TwoStageTagger(model, nerc._new_model(
            nerc.STAGE2_LABELS, np.ones(3, np.uint8), np.ones((3, 3), np.uint8), 0), 1, 0)
        tokens = tuple(rng.choice(vocab) for _ in range(rng.randrange(1, 12)))
        labels = nerc.predict_labels(tagger, tokens)
        pgt.validate_bio(labels)


# --- bsim symmetry, bounds, self-similarity ---------------------------------

@st.composite
def burst_sets(draw):
    axis = draw(st.integers(5, 200))
    bursts = []
    cursor = 0
    for _ in range(draw(st.integers(0, 5))):
        gap = draw(st.integers(0, 30))
        width = draw(st.integers(1, 30))
        start = cursor + gap
        end = start + width
        if end > axis:
            break
        bursts.append(Burst(start, end, width / axis, 0.5))
        cursor = end
    return bursts, axis


@MANY
@given(burst_sets(), burst_sets())
def test_bsim_symmetry_and_bounds(a, b):
    bursts_a, len_a = a
    bursts_b, len_b = b
    forward = bsim(bursts_a, bursts_b, len_a, len_b)
    backward = bsim(bursts_b, bursts_a, len_b, len_a)
    assert forward == pytest.approx(backward, abs=1e-12)
    assert 0.0 <= forward <= 1.0
    assert bsim(bursts_a, bursts_a, len_a, len_a) == pytest.approx(1.0)


# --- dendrogram height monotonicity -----------------------------------------

def test_ward_heights_monotone_random_matrices():
    rng = random.Random(77)
    for trial in range(1000):
        n = rng.randrange(2, 9)
        m = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                # duplicate distances are common in burst similarity space
                m[i, j] = m[j, i] = rng.choice([0.0, 0.25, 0.5, 1.0,
                                                rng.random()])
        merges = ward_linkage(m)
        heights = [h for _, _, h, _ in merges]
        assert heights == sorted(heights)
        if trial % 25 == 0:
            assert merges == [
                (a, b, pytest.approx(h, abs=1e-9), s)
                for a, b, h, s in ward_reference(m.tolist())]


# --- standardization moments -------------------------------------------------

@MANY
@given(st.lists(st.integers(0, 50), min_size=2, max_size=60))
def test_prepare_moments_at_identity_length(counts):
    out = prepare(counts, len(counts))
    if len(set(counts)) == 1:
        assert np.allclose(out, 0.0)
    else:
        assert abs(out.mean()) <= 1e-6
        assert abs(out.std() - 1.0) <= 1e-6


# --- precision/recall bounds --------------------------------------------------

@st.composite
def span_universes(draw):
    keys = [("d", i) for i in range(draw(st.integers(1, 4)))]
    def spans():
        out = set()
        for _ in range(draw(st.integers(0, 5))):
            start = draw(st.integers(0, 20))
            out.add((start, start + draw(st.integers(1, 4))))
        return out
    predicted = {k: spans() for k in keys}
    gold = {k: spans() for k in keys}
    return predicted, gold


@MANY
@given(span_universes())
def test_pr_bounds_and_totals(universe):
    predicted, gold = universe
    result = score_mentions(predicted, gold)
    assert 0.0 <= result.precision <= 1.0
    assert 0.0 <= result.recall <= 1.0
    assert result.tp + result.fn == sum(len(v) for v in gold.values())
    assert result.tp + result.fp == sum(len(v) for v in predicted.values())


@MANY
@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_pr_result_bounds(tp, fp, fn):
    r = pr_result(tp, fp, fn)
    assert 0.0 <= r.precision <= 1.0
    assert 0.0 <= r.recall <= 1.0
