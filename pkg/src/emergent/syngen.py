"""Deterministic synthetic corpus generator with known ground truth.

Produces a document stream, lexicon TSVs, and gold annotations. Held-out
entities look like knowledge-base entities in text but are absent from the
entity tables, so they are genuinely emerging. Noisy documents are short
lowercase junk; a configurable share of them carries "trap" anchors
(junk phrases the lexicon links with high or middling confidence) whose
wrong labels are what confidence thresholds and quality sampling are
supposed to keep out of the training data.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field

from emergent import corpus, lexicon
from emergent.corpus import Document
from emergent.lexicon import Entity

FIRST_NAMES = (
    "Alba", "Boris", "Carmen", "Dario", "Elena", "Felix", "Greta", "Hugo",
    "Irene", "Jonas", "Katja", "Lorenz", "Mira", "Nils", "Odette", "Pavel",
    "Quinn", "Rosa", "Stefan", "Tilda", "Ugo", "Vera", "Wim", "Xenia",
)
# held-out entities use first names no knowledge-base anchor can match, so
# partial unigram links never pull their documents out of the test side
HELDOUT_FIRST_NAMES = (
    "Nadia", "Ruben", "Selma", "Tariq", "Usha", "Viggo", "Wanda", "Yusuf",
    "Zoran", "Amara", "Bruno", "Clara",
)
LAST_NAMES = (
    "Arden", "Bellver", "Corin", "Drost", "Eifman", "Falk", "Grober",
    "Hartwig", "Imhof", "Jansen", "Kraal", "Lindqvist", "Marek", "Nolte",
    "Oberst", "Prinsen", "Quast", "Rietveld", "Sandor", "Tromp", "Udala",
    "Vonk", "Wouters", "Ypma",
)
FILLERS = (
    "about", "after", "again", "concert", "festival", "yesterday", "downtown",
    "morning", "people", "report", "story", "traffic", "weather", "update",
    "meeting", "season", "review", "local", "north", "small", "quiet",
    "early", "late", "good", "new", "long", "show", "game", "team", "road",
    "city", "park", "press", "talks", "plans", "week", "month", "night",
)
# capitalized non-entity words; they keep capitalization from being a
# sufficient entity signal in the pseudo-ground truth
CONFUSERS = (
    "Monday", "Tuesday", "Friday", "Sunday", "Online", "Live", "Breaking",
    "Tonight", "Official", "Update",
)
PERSONAL_TOKENS = ("i", "we", "my", "our")
JUNK = ("rt", "lol", "omg", "wow", "plz", "sub", "fam", "smh", "x2", "ikr")
HARD_TRAPS = (("win", "big"), ("mega", "deal"), ("hot", "sale"))
SOFT_TRAPS = (("click", "here"), ("free", "stuff"), ("top", "prize"))

_CLASSES = ("PER", "LOC", "ORG")


@dataclass(frozen=True)
class BurstPlan:
    entity: str
    start_day: int
    length: int
    intensity: int  # extra mentioning documents per burst day


@dataclass(frozen=True)
class GeneratorSpec:
    n_entities: int = 80
    n_heldout: int = 6
    n_docs: int = 200
    days: int = 60
    burst_plan: tuple[BurstPlan, ...] = ()
    noise_rate: float = 0.25
    seed: int = 0
    # composition of the noisy share: traps poison pseudo-ground truth when
    # sampling fails; the remainder is unlinkable junk that lands in test sets
    hard_trap_rate: float = 0.25
    soft_trap_rate: float = 0.25
    extreme_junk_rate: float = 0.1

    def validate(self) -> None:
        if min(self.n_entities, self.n_heldout, self.n_docs, self.days) < 0:
            raise ValueError("counts must be non-negative")
        if self.n_heldout > self.n_entities:
            raise ValueError("n_heldout exceeds n_entities")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ValueError("noise_rate must be in [0, 1]")
        if self.hard_trap_rate + self.soft_trap_rate > 1.0:
            raise ValueError("trap rates exceed the noisy share")
        if self.n_heldout and self.n_docs < 5 * self.n_heldout:
            raise ValueError("n_docs too small to mention every held-out entity 5 times")
        if (self.n_docs or self.burst_plan) and self.days < 1:
            raise ValueError("days must be positive when documents are generated")
        ids = {entity_id(i) for i in range(self.n_entities)}
        for plan in self.burst_plan:
            if plan.entity not in ids:
                raise ValueError(f"burst plan references unknown entity {plan.entity!r}")
            if plan.start_day < 0 or plan.length < 1 or plan.intensity < 0:
                raise ValueError("burst plan values out of range")
            if plan.start_day + plan.length > self.days:
                raise ValueError("burst plan exceeds the stream span")


@dataclass(frozen=True)
class GoldMention:
    doc_id: str
    sentence: int
    start: int
    end: int
    entity_id: str
    entity_class: str


@dataclass
class SynCorpus:
    documents: list[Document]
    anchor_records: list[tuple[str, str, int]]
    occurrence_records: list[tuple[str, int]]
    entities: list[Entity]
    gold: list[GoldMention]
    heldout_ids: list[str] = field(default_factory=list)

    def lexicon(self, **kwargs) -> lexicon.Lexicon:
        return lexicon.build_lexicon(self.anchor_records, self.occurrence_records,
                                     self.entities, **kwargs)

    def gold_spans(self) -> dict[tuple[str, int], frozenset[tuple[int, int]]]:
        spans: dict[tuple[str, int], set] = {}
        for g in self.gold:
            spans.setdefault((g.doc_id, g.sentence), set()).add((g.start, g.end))
        return {k: frozenset(v) for k, v in spans.items()}

    def gold_entities(self) -> dict[tuple[tuple[str, int], tuple[int, int]], str]:
        return {((g.doc_id, g.sentence), (g.start, g.end)): g.entity_id for g in self.gold}


def entity_id(i: int) -> str:
    return f"E{i:03d}"


def entity_name(i: int, heldout_rank: int | None = None) -> tuple[str, str]:
    if heldout_rank is not None:
        first = HELDOUT_FIRST_NAMES[heldout_rank % len(HELDOUT_FIRST_NAMES)]
        last = LAST_NAMES[(heldout_rank // len(HELDOUT_FIRST_NAMES)) % len(LAST_NAMES)]
        return first, last
    first = FIRST_NAMES[i % len(FIRST_NAMES)]
    last = LAST_NAMES[(i // len(FIRST_NAMES)) % len(LAST_NAMES)]
    return first, last


class _Generator:
    def __init__(self, spec: GeneratorSpec):
        spec.validate()
        self.spec = spec
        self.rng = random.Random(spec.seed)
        n_kb = spec.n_entities - spec.n_heldout
        self.kb_ids = [entity_id(i) for i in range(n_kb)]
        self.heldout_ids = [entity_id(i) for i in range(n_kb, spec.n_entities)]
        self.names = {entity_id(i): entity_name(i) for i in range(n_kb)}
        self.names.update({eid: entity_name(0, heldout_rank=rank)
                           for rank, eid in enumerate(self.heldout_ids)})
        self.classes = {entity_id(i): _CLASSES[i % len(_CLASSES)]
                        for i in range(spec.n_entities)}
        self.documents: list[Document] = []
        self.gold: list[GoldMention] = []
        self._doc_no = 0

    # -- lexicon -----------------------------------------------------------
    def lexicon_records(self):
        anchors: list[tuple[str, str, int]] = []
        occurrences: list[tuple[str, int]] = []
        first_bearers: dict[str, list[str]] = {}
        for eid in self.kb_ids:
            first, last = self.names[eid]
            links = 40 + self.rng.randrange(21)
            anchors.append((f"{first} {last}", eid, links))
            occurrences.append((f"{first} {last}", links + self.rng.randrange(1, 10)))
            first_bearers.setdefault(first, []).append(eid)
        for first, bearers in sorted(first_bearers.items()):
            if len(bearers) < 2:
                continue
            total = 0
            for rank, eid in enumerate(bearers):
                count = 3 * (rank + 1)
                anchors.append((first, eid, count))
                total += count
            # bare first names occur overwhelmingly outside anchors, so their
            # keyphraseness sits below any sensible candidate threshold and
            # they never produce truncated single-token links
            occurrences.append((first, total * 250))
        if self.kb_ids:
            for t, phrase in enumerate(HARD_TRAPS):
                target = self.kb_ids[t % len(self.kb_ids)]
                anchors.append((" ".join(phrase), target, 30))
                occurrences.append((" ".join(phrase), 33))
            for t, phrase in enumerate(SOFT_TRAPS):
                a = self.kb_ids[(2 * t) % len(self.kb_ids)]
                b = self.kb_ids[(2 * t + 1) % len(self.kb_ids)]
                counts = {a: 2}
                counts[b] = counts.get(b, 0) + 1
                for eid, count in sorted(counts.items()):
                    anchors.append((" ".join(phrase), eid, count))
                occurrences.append((" ".join(phrase), 5))
        return anchors, occurrences

    def entity_table(self) -> list[Entity]:
        table = []
        lo = max(1, int(self.spec.days * 0.6))
        for eid in self.kb_ids:
            creation_day = self.rng.randrange(lo, max(lo + 1, self.spec.days))
            table.append(Entity(eid, frozenset({self.classes[eid]}),
                                creation_day * 86400))
        return table

    # -- documents ---------------------------------------------------------
    def _emit(self, tokens: list[str], day: int, mentions: list[tuple[str, int]]) -> None:
        """Append a document; ``mentions`` holds (entity_id, token_index) of
        name starts measured on the whitespace token list."""
        text = " ".join(tokens)
        doc_id = f"d{self._doc_no:05d}"
        self._doc_no += 1
        ts = day * 86400 + self.rng.randrange(86400)
        doc = Document(doc_id, ts, text, self.rng.choice(("news", "social")))
        self.documents.append(doc)
        if mentions:
            sentence = corpus.segment_sentences(doc)[0]
            texts = sentence.texts
            for eid, _ in mentions:
                first, last = self.names[eid]
                for idx in range(len(texts) - 1):
                    if texts[idx] == first and texts[idx + 1] == last:
                        self.gold.append(GoldMention(doc_id, 0, idx, idx + 2,
                                                     eid, self.classes[eid]))
                        break
                else:
                    raise AssertionError(f"gold mention {eid} not found in {text!r}")

    def _clean_tokens(self, n_fillers: int, reply: bool) -> tuple[list[str], int]:
        """Sentence-case filler text; returns (tokens, min name position).

        The capitalized starter is a capitalized token labeled O, so
        capitalization alone never separates entity spans in training.
        """
        tokens = [self.rng.choice(FILLERS) for _ in range(n_fillers)]
        tokens[0] = tokens[0].capitalize()
        if self.rng.random() < 0.9:
            tokens.insert(self.rng.randrange(1, len(tokens) + 1),
                          self.rng.choice(PERSONAL_TOKENS))
        if reply:
            tokens.insert(0, "@" + self.rng.choice(FILLERS))
            return tokens, 3
        return tokens, 2

    def _insert_units(self, tokens: list[str],
                      units: list[tuple[str | None, list[str]]],
                      min_pos: int) -> list[tuple[str, int]]:
        """Insert multi-token units at separated positions, right to left.

        Positions are at least 2 apart in base coordinates, so no unit ever
        splits or touches another (capitalized units stay non-adjacent).
        """
        available = list(range(min_pos, len(tokens) + 1))
        chosen: list[int] = []
        self.rng.shuffle(available)
        for pos in available:
            if len(chosen) == len(units):
                break
            if all(abs(pos - p) >= 2 for p in chosen):
                chosen.append(pos)
        if len(chosen) < len(units):
            raise AssertionError("document too short to place all units")
        mentions = []
        for (eid, words), pos in sorted(zip(units, chosen), key=lambda x: -x[1]):
            tokens[pos:pos] = words
            if eid is not None:
                mentions.append((eid, 0))  # exact token index recovered in _emit
        return mentions

    def clean_doc(self, day: int, entities: list[str], long: bool = False) -> None:
        n = self.rng.randrange(20, 31) if long else self.rng.randrange(10, 17)
        tokens, min_pos = self._clean_tokens(n, reply=self.rng.random() < 0.5 and not long)
        if long:
            if self.rng.random() < 0.4:
                tokens.append("http://lnk.st/" + str(self.rng.randrange(100)))
            if self.rng.random() < 0.4:
                tokens.append("#" + self.rng.choice(FILLERS))
        units: list[tuple[str | None, list[str]]] = [
            (eid, list(self.names[eid])) for eid in entities]
        if self.rng.random() < 0.5:
            units.append((None, [self.rng.choice(CONFUSERS)]))
        mentions = self._insert_units(tokens, units, min_pos)
        self._emit(tokens, day, mentions)

    def noisy_doc(self, day: int) -> None:
        roll = self.rng.random()
        if roll < self.spec.extreme_junk_rate:
            # outlier junk sets the junk-feature maxima high, so typical junk
            # normalizes small; these documents are unlinkable by design
            tokens = [self.rng.choice(JUNK) for _ in range(6)]
            for _ in range(4 + self.rng.randrange(3)):
                tokens.append("@" + self.rng.choice(JUNK) + str(self.rng.randrange(10)))
            for _ in range(4):
                tokens.append("http://sp.am/" + str(self.rng.randrange(100)))
            for _ in range(4):
                tokens.append("#" + self.rng.choice(JUNK))
            self.rng.shuffle(tokens)
            self._emit(tokens, day, [])
            return
        base = [self.rng.choice(JUNK) for _ in range(4 + self.rng.randrange(4))]
        # repeats keep junk density low
        base += base[:2] * 2
        self.rng.shuffle(base)
        if self.rng.random() < 0.3:
            base.append("http://sp.am/" + str(self.rng.randrange(100)))
        if self.rng.random() < 0.3:
            base.append("#" + self.rng.choice(JUNK))
        trap_roll = self.rng.random()
        if trap_roll < self.spec.hard_trap_rate and HARD_TRAPS and self.kb_ids:
            phrase = HARD_TRAPS[self.rng.randrange(len(HARD_TRAPS))]
            del base[-2:]  # trap words replace junk so the length profile holds
            pos = self.rng.randrange(len(base) + 1)
            base[pos:pos] = list(phrase)
        elif (trap_roll < self.spec.hard_trap_rate + self.spec.soft_trap_rate
              and SOFT_TRAPS and self.kb_ids):
            phrase = SOFT_TRAPS[self.rng.randrange(len(SOFT_TRAPS))]
            del base[-2:]
            pos = self.rng.randrange(len(base) + 1)
            base[pos:pos] = list(phrase)
        else:
            # a lone trap word keeps pure junk unlinkable (anchors are pairs)
            # while exposing trap vocabulary to the tagger at test time
            word = self.rng.choice(HARD_TRAPS + SOFT_TRAPS)[self.rng.randrange(2)]
            base.insert(self.rng.randrange(len(base) + 1), word)
            base = self._break_trap_pairs(base)
        self._emit(base, day, [])

    @staticmethod
    def _break_trap_pairs(tokens: list[str]) -> list[str]:
        pairs = set(HARD_TRAPS) | set(SOFT_TRAPS)
        out = list(tokens)
        i = 0
        while i + 1 < len(out):
            if (out[i], out[i + 1]) in pairs:
                out.insert(i + 1, "rt")
            i += 1
        return out

    def run(self) -> SynCorpus:
        spec = self.spec
        anchors, occurrences = self.lexicon_records()
        entities = self.entity_table()
        # every held-out entity gets five dedicated mentioning documents
        for eid in self.heldout_ids:
            for _ in range(5):
                self.clean_doc(self.rng.randrange(spec.days), [eid])
        remaining = spec.n_docs - 5 * len(self.heldout_ids)
        all_ids = self.kb_ids + self.heldout_ids
        for _ in range(remaining):
            day = self.rng.randrange(spec.days) if spec.days else 0
            if self.rng.random() < spec.noise_rate:
                self.noisy_doc(day)
            elif all_ids:
                # one mention per document: a document never mixes a known
                # and an unknown entity, so ablation cannot inject capitalized
                # gold-O tokens into the pseudo-ground truth
                self.clean_doc(day, [self.rng.choice(all_ids)],
                               long=self.rng.random() < 0.25)
            else:
                self.clean_doc(day, [], long=self.rng.random() < 0.25)
        for plan in spec.burst_plan:
            for day in range(plan.start_day, plan.start_day + plan.length):
                for _ in range(plan.intensity):
                    self.clean_doc(day, [plan.entity])
        return SynCorpus(self.documents, anchors, occurrences, entities,
                         self.gold, list(self.heldout_ids))


def generate_corpus(spec: GeneratorSpec) -> SynCorpus:
    """Deterministic in-memory corpus for the given spec."""
    return _Generator(spec).run()


def generate(spec: GeneratorSpec, out_dir) -> SynCorpus:
    """Generate and write stream.jsonl, lexicon TSVs, and gold.jsonl."""
    syn = generate_corpus(spec)
    os.makedirs(out_dir, exist_ok=True)
    corpus.write_stream(os.path.join(out_dir, "stream.jsonl"), syn.documents)
    lexicon.write_lexicon_dir(out_dir, syn.anchor_records, syn.occurrence_records,
                              syn.entities)
    with open(os.path.join(out_dir, "gold.jsonl"), "w", encoding="utf-8") as fh:
        for g in syn.gold:
            fh.write(json.dumps({"doc_id": g.doc_id, "sentence": g.sentence,
                                 "start": g.start, "end": g.end,
                                 "entity": g.entity_id, "class": g.entity_class}) + "\n")
    return syn


def read_gold(path) -> list[GoldMention]:
    gold = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                gold.append(GoldMention(obj["doc_id"], obj["sentence"], obj["start"],
                                        obj["end"], obj["entity"], obj["class"]))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed gold record: {exc}") from exc
    return gold
