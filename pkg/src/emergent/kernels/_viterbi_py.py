"""NumPy Viterbi decoder; the fallback twin of the compiled kernel."""

from __future__ import annotations

import numpy as np

_NEG = float("-inf")


def viterbi_decode(emissions: np.ndarray, start: np.ndarray, transitions: np.ndarray,
                   allowed_start: np.ndarray, allowed: np.ndarray) -> list[int]:
    """Best label path under first-order transition scores.

    emissions: (n, L) per-position label scores
    start: (L,) start scores, transitions: (L, L) prev-by-next scores
    allowed_start / allowed: 0/1 masks of legal start labels and transitions

    Ties resolve to the smallest label index (argmax takes the first
    maximum), so an all-zero model decodes every position to label 0.
    """
    emissions = np.asarray(emissions, dtype=np.float64)
    n, n_labels = emissions.shape
    if n == 0:
        return []
    start_mask = np.where(np.asarray(allowed_start, dtype=bool), 0.0, _NEG)
    trans_mask = np.where(np.asarray(allowed, dtype=bool), 0.0, _NEG)
    score = start + start_mask + emissions[0]
    back = np.zeros((n, n_labels), dtype=np.intp)
    step = transitions + trans_mask
    for i in range(1, n):
        cand = score[:, None] + step
        back[i] = np.argmax(cand, axis=0)
        score = cand[back[i], np.arange(n_labels)] + emissions[i]
    path = [0] * n
    path[-1] = int(np.argmax(score))
    for i in range(n - 1, 0, -1):
        path[i - 1] = int(back[i, path[i]])
    return path
