import random

import pytest

from emergent import corpus, pgt
from emergent.linker import EntityLink, LinkerConfig, link_sentence
from emergent.pgt import (TaggedSentence, bin_documents, filter_by_confidence,
                          quality_features, quality_score, read_bio, score_stream,
                          to_bio, validate_bio, write_bio)


def sentence(text, doc_id="d1", index=0):
    return corpus.Sentence(doc_id, index, tuple(corpus.tokenize(text)))


def doc(text):
    return corpus.Document("d1", 0, text, "social")


class TestToBio:
    def test_worked_example(self, toy_lexicon):
        s = sentence("Kendrick Lamar and A$AP Rocky")
        links = link_sentence(toy_lexicon, s, LinkerConfig(confidence_min=0.7))
        tagged = to_bio(s, links, toy_lexicon)
        assert tagged.labels == ("B-PER", "I-PER", "O", "B-PER", "I-PER")

    def test_no_links_all_o(self, toy_lexicon):
        tagged = to_bio(sentence("nothing here"), [], toy_lexicon)
        assert set(tagged.labels) == {"O"}

    def test_single_token_link(self, toy_lexicon):
        s = sentence("Thanks to Brendan")
        links = [EntityLink("d1", 0, 2, 3, "Brendan_p", 1.0)]
        assert to_bio(s, links, toy_lexicon).labels == ("O", "O", "B-PER")

    def test_none_class_dropped(self, toy_lexicon):
        s = sentence("Kendrick things")
        links = [EntityLink("d1", 0, 0, 1, "Kendrick_other", 1.0)]
        assert to_bio(s, links, toy_lexicon).labels == ("O", "O")

    def test_overlap_rejected(self, toy_lexicon):
        s = sentence("Kendrick Lamar x")
        links = [EntityLink("d1", 0, 0, 2, "Kendrick_Lamar", 1.0),
                 EntityLink("d1", 0, 1, 3, "Brendan_p", 1.0)]
        with pytest.raises(ValueError, match="overlap"):
            to_bio(s, links, toy_lexicon)

    def test_out_of_bounds_rejected(self, toy_lexicon):
        s = sentence("short")
        links = [EntityLink("d1", 0, 0, 9, "Brendan_p", 1.0)]
        with pytest.raises(ValueError, match="bounds"):
            to_bio(s, links, toy_lexicon)


class TestBioValidation:
    def test_good_sequences(self):
        validate_bio(["O", "B-PER", "I-PER", "O", "B-ORG"])
        validate_bio(["B-LOC", "I-LOC", "I-LOC"])
        validate_bio([])

    @pytest.mark.parametrize("labels", [
        ["I-PER"],
        ["O", "I-ORG"],
        ["B-PER", "I-LOC"],
        ["B-XXX"],
        ["Q"],
    ])
    def test_bad_sequences(self, labels):
        with pytest.raises(ValueError):
            validate_bio(labels)

    def test_tagged_sentence_length_mismatch(self):
        with pytest.raises(ValueError):
            TaggedSentence(("a", "b"), ("O",))


class TestQualityFeatures:
    def test_hand_counted_example(self):
        f = quality_features(doc("@a @b #x http://t.co I run"))
        assert f.n_mentions == 2
        assert f.n_hashtags == 1
        assert f.n_urls == 1
        assert f.personal == 1

    def test_empty_text(self):
        f = quality_features(doc(""))
        assert f.as_vector() == (0.0,) * 9

    def test_all_uppercase_ratio(self):
        assert quality_features(doc("ABC DEF")).ratio_upper == 1.0

    def test_density_and_avg_len(self):
        f = quality_features(doc("aa aa bb"))
        assert f.density == pytest.approx(2 / 3)
        assert f.avg_token_len == pytest.approx(2.0)

    def test_accepts_plain_string(self):
        assert quality_features("I run").personal == 1


class TestQualityScore:
    def test_equal_to_maxima(self):
        f = quality_features(doc("@a #b http://c XY I hello world"))
        assert min(f.as_vector()) > 0
        assert quality_score(f, f.as_vector()) == pytest.approx(1.0)

    def test_all_zero(self):
        f = quality_features(doc(""))
        assert quality_score(f, [0.0] * 9) == 0.0

    def test_half_of_maxima(self):
        f = pgt.QualityFeatures(1, 1, 1, 0.25, 0.25, 2.0, 50, 0.5, 0)
        maxima = [2, 2, 2, 0.5, 0.5, 4.0, 100, 1.0, 1]
        # the personal flag is 0 with max 1, so 8 of 9 features are at half
        assert quality_score(f, maxima) == pytest.approx((8 * 0.5) / 9)

    def test_stale_maxima_rejected(self):
        f = quality_features(doc("hello"))
        with pytest.raises(ValueError, match="maxima"):
            quality_score(f, [0.0] * 8 + [0.0])
        with pytest.raises(ValueError, match="features"):
            quality_score(f, [1.0] * 5)

    def test_batch_third_doc_half_maxima(self):
        big = pgt.QualityFeatures(2, 2, 2, 0.5, 0.5, 8.0, 200, 1.0, 1)
        half = pgt.QualityFeatures(1, 1, 1, 0.25, 0.25, 4.0, 100, 0.5, 1)
        zero = pgt.QualityFeatures(0, 0, 0, 0.0, 0.0, 0.0, 0, 0.0, 0)
        scores = score_stream([big, zero, half])
        # nine features, eight at half of their maxima, personal at its max
        assert scores[2] == pytest.approx((8 * 0.5 + 1.0) / 9)

    def test_streaming_maxima_include_current(self):
        a = pgt.QualityFeatures(1, 0, 0, 0.0, 0.0, 1.0, 10, 1.0, 0)
        scores = score_stream([a, a], streaming=True)
        assert scores[0] == scores[1]

    def test_monotone_in_single_feature(self):
        rng = random.Random(7)
        maxima = [5, 5, 5, 1.0, 1.0, 10.0, 200, 1.0, 1]
        for _ in range(100):
            vec = [rng.uniform(0, m) for m in maxima]
            f1 = pgt.QualityFeatures(*vec)
            i = rng.randrange(9)
            vec2 = list(vec)
            vec2[i] = min(maxima[i], vec2[i] + rng.uniform(0, maxima[i] - vec2[i]))
            f2 = pgt.QualityFeatures(*vec2)
            assert quality_score(f2, maxima) >= quality_score(f1, maxima) - 1e-12


class TestBins:
    def test_all_equal_scores(self):
        assert bin_documents([0.5, 0.5, 0.5]) == ["normal"] * 3

    def test_single_score(self):
        assert bin_documents([0.9]) == ["normal"]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            bin_documents([])

    def test_partition_complete(self):
        rng = random.Random(3)
        scores = [rng.random() for _ in range(500)]
        bins = bin_documents(scores)
        assert len(bins) == len(scores)
        assert set(bins) <= {"noisy", "normal", "nice"}

    def test_bell_curve_about_68_percent_normal(self):
        rng = random.Random(11)
        scores = [rng.gauss(0.5, 0.1) for _ in range(1000)]
        bins = bin_documents(scores)
        share = bins.count("normal") / len(bins)
        assert 0.63 <= share <= 0.73


class TestConfidenceFilter:
    def links(self, *scores):
        return [EntityLink("d", 0, i, i + 1, "e", s) for i, s in enumerate(scores)]

    def test_threshold(self):
        kept = filter_by_confidence(self.links(0.65, 0.72, 0.90), 0.7)
        assert [l.score for l in kept] == [0.72, 0.90]

    def test_zero_keeps_all(self):
        assert len(filter_by_confidence(self.links(0.1, 0.5, 0.9), 0.0)) == 3

    def test_one_keeps_only_certain(self):
        assert [l.score for l in filter_by_confidence(self.links(0.99, 1.0), 1.0)] == [1.0]

    def test_nested_filtering(self):
        links = self.links(0.2, 0.4, 0.6, 0.8)
        low = filter_by_confidence(links, 0.3)
        high = filter_by_confidence(links, 0.7)
        assert set(high) <= set(low)


def test_bio_file_roundtrip(tmp_path):
    sentences = [
        TaggedSentence(("Kendrick", "Lamar", "."), ("B-PER", "I-PER", "O")),
        TaggedSentence(("hello",), ("O",)),
    ]
    path = tmp_path / "train.bio"
    write_bio(path, sentences)
    assert read_bio(path) == sentences
    text = path.read_text()
    assert "Kendrick B-PER\n" in text and "\n\n" in text
