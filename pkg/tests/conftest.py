import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from emergent.lexicon import Entity, build_lexicon  # noqa: E402


@pytest.fixture(scope="session")
def toy_lexicon():
    """Lexicon encoding the worked anchor statistics: 'Kendrick' is an anchor
    in 24 of 5037 occurrences (8 to the town, 2 to the rapper), while the full
    name is an anchor in 501 of 698."""
    anchors = [
        ("Kendrick Lamar", "Kendrick_Lamar", 501),
        ("Kendrick", "Kendrick_Idaho", 8),
        ("Kendrick", "Kendrick_Lamar", 2),
        ("Kendrick", "Kendrick_other", 14),
        ("A$AP Rocky", "ASAP_Rocky", 120),
        ("Brendan", "Brendan_p", 40),
    ]
    occurrences = [
        ("Kendrick Lamar", 698),
        ("Kendrick", 5037),
        ("A$AP Rocky", 150),
        ("Brendan", 60),
    ]
    entities = [
        Entity("Kendrick_Lamar", frozenset({"PER"})),
        Entity("Kendrick_Idaho", frozenset({"LOC"})),
        Entity("Kendrick_other", frozenset({"NONE"})),
        Entity("ASAP_Rocky", frozenset({"PER"})),
        Entity("Brendan_p", frozenset({"PER"})),
    ]
    return build_lexicon(anchors, occurrences, entities)
