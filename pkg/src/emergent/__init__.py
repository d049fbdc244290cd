"""Emerging-entity discovery in timestamped document streams.

Pipeline stages: ingest a stream (:mod:`emergent.corpus`), link mentions of
known entities (:mod:`emergent.lexicon`, :mod:`emergent.linker`), turn the
links into sampled BIO pseudo-ground truth (:mod:`emergent.pgt`), train a
tagger that finds entities the knowledge base does not know yet
(:mod:`emergent.nerc`), analyze how entities emerge over time
(:mod:`emergent.emergence`), and evaluate retrospectively by ablating the
knowledge base (:mod:`emergent.evalharness`). :mod:`emergent.syngen`
generates deterministic synthetic corpora with known ground truth.
"""

__version__ = "0.1.0"
