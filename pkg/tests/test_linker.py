import pytest

from emergent import corpus, linker
from emergent.lexicon import Entity, build_lexicon
from emergent.linker import EntityLink, LinkerConfig, link_sentence, partition_stream


def sentence(text, doc_id="d1", index=0):
    return corpus.Sentence(doc_id, index, tuple(corpus.tokenize(text)))


class TestLinkSentence:
    def test_toy_example(self, toy_lexicon):
        s = sentence("Kendrick Lamar and A$AP Rocky")
        cfg = LinkerConfig(keyphraseness_min=0.01, confidence_min=0.7)
        links = link_sentence(toy_lexicon, s, cfg)
        assert [(l.start, l.end, l.entity_id) for l in links] == \
            [(0, 2, "Kendrick_Lamar"), (3, 5, "ASAP_Rocky")]
        assert links[0].score == pytest.approx(1.0)

    def test_single_entry_lexicon_one_link(self):
        lex = build_lexicon([("Kendrick Lamar", "E_KL", 501)],
                            [("Kendrick Lamar", 698)],
                            [Entity("E_KL", frozenset({"PER"}))])
        s = sentence("Kendrick Lamar and A$AP Rocky")
        links = link_sentence(lex, s, LinkerConfig(keyphraseness_min=0.01,
                                                   confidence_min=0.7))
        assert len(links) == 1
        assert (links[0].start, links[0].end) == (0, 2)
        assert links[0].entity_id == "E_KL" and links[0].score == 1.0

    def test_no_shared_ngram(self, toy_lexicon):
        assert link_sentence(toy_lexicon, sentence("nothing to see here"),
                             LinkerConfig()) == []

    def test_theta_above_all_scores(self, toy_lexicon):
        lex = build_lexicon([("Foo", "a", 2), ("Foo", "b", 1)], [("Foo", 4)],
                            [Entity("a"), Entity("b")])
        s = sentence("Foo bar")
        assert link_sentence(lex, s, LinkerConfig(confidence_min=0.9)) == []

    def test_longest_match_wins(self, toy_lexicon):
        # bare "Kendrick" has keyphraseness below the default candidate
        # threshold; even with kappa=0 the bigram must absorb the overlap
        s = sentence("Kendrick Lamar arrived")
        links = link_sentence(toy_lexicon, s, LinkerConfig(keyphraseness_min=0.0,
                                                           confidence_min=0.0))
        assert [(l.start, l.end) for l in links] == [(0, 2)]

    def test_links_never_overlap(self, toy_lexicon):
        s = sentence("Kendrick Lamar Kendrick Lamar Kendrick")
        links = link_sentence(toy_lexicon, s, LinkerConfig(keyphraseness_min=0.0))
        claimed = set()
        for l in links:
            span = set(range(l.start, l.end))
            assert not span & claimed
            claimed |= span

    def test_raising_theta_monotone(self, toy_lexicon):
        s = sentence("Kendrick Lamar and A$AP Rocky and Brendan")
        counts = []
        for theta in (0.0, 0.3, 0.6, 0.9, 1.0):
            cfg = LinkerConfig(keyphraseness_min=0.0, confidence_min=theta)
            counts.append(len(link_sentence(toy_lexicon, s, cfg)))
        assert counts == sorted(counts, reverse=True)

    def test_scale_free_disambiguation(self):
        entities = [Entity("a"), Entity("b")]
        base = build_lexicon([("Foo", "a", 6), ("Foo", "b", 2)], [("Foo", 10)], entities)
        scaled = build_lexicon([("Foo", "a", 60), ("Foo", "b", 20)], [("Foo", 100)], entities)
        s = sentence("Foo")
        cfg = LinkerConfig(keyphraseness_min=0.0, confidence_min=0.0)
        a = link_sentence(base, s, cfg)
        b = link_sentence(scaled, s, cfg)
        assert a[0].entity_id == b[0].entity_id
        assert a[0].score == pytest.approx(b[0].score)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            LinkerConfig(keyphraseness_min=-0.1)
        with pytest.raises(ValueError):
            LinkerConfig(confidence_min=1.5)
        with pytest.raises(ValueError):
            LinkerConfig(max_ngram_len=0)


class TestPartition:
    def test_mixed(self):
        link = EntityLink("d", 0, 0, 1, "e", 1.0)
        items = [("s0", [link, link]), ("s1", []), ("s2", [link])]
        linkable, unlinkable = partition_stream(items)
        assert [s for s, _ in linkable] == ["s0", "s2"]
        assert unlinkable == ["s1"]

    def test_all_empty(self):
        linkable, unlinkable = partition_stream([("a", []), ("b", [])])
        assert linkable == [] and unlinkable == ["a", "b"]

    def test_all_linked(self):
        link = EntityLink("d", 0, 0, 1, "e", 1.0)
        linkable, unlinkable = partition_stream([("a", [link]), ("b", [link])])
        assert len(linkable) == 2 and unlinkable == []


def test_links_jsonl_roundtrip(tmp_path):
    links = [EntityLink("d1", 0, 2, 4, "e9", 0.75), EntityLink("d2", 3, 0, 1, "e1", 1.0)]
    path = tmp_path / "links.jsonl"
    linker.write_links(path, links)
    assert linker.read_links(path) == links
