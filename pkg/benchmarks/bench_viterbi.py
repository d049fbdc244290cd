"""Compare the compiled Viterbi kernel against the NumPy fallback.

Usage: python3 benchmarks/bench_viterbi.py [repeats]

Decodes identical random batches through both backends, checks that the
paths agree, and reports per-call timings.
"""

import sys
import time

import numpy as np

from emergent import kernels
from emergent.kernels import _viterbi_py

try:
    from emergent.kernels import _viterbi
except ImportError:
    _viterbi = None


def make_batch(rng, n_items, n_tokens, n_labels):
    batch = []
    for _ in range(n_items):
        emissions = rng.normal(size=(n_tokens, n_labels))
        start = rng.normal(size=n_labels)
        trans = rng.normal(size=(n_labels, n_labels))
        allowed_start = np.ones(n_labels, dtype=np.uint8)
        allowed = (rng.random((n_labels, n_labels)) < 0.9).astype(np.uint8)
        allowed[:, 0] = 1
        batch.append((emissions, start, trans, allowed_start, allowed))
    return batch


def time_backend(decode, batch, repeats):
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        for instance in batch:
            decode(*instance)
        best = min(best, time.perf_counter() - started)
    return best / len(batch)


def main():
    repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 5
    rng = np.random.default_rng(7)
    print(f"active backend: {kernels.BACKEND}")
    if _viterbi is None:
        print("compiled kernel not built (pip install -e '.[accel]' && "
              "python3 setup.py build_ext --inplace); timing fallback only")
    print(f"{'tokens':>7} {'labels':>7} {'numpy us':>10} {'cython us':>10} {'speedup':>8}")
    for n_tokens, n_labels in ((10, 3), (40, 3), (40, 9), (120, 9), (120, 25)):
        batch = make_batch(rng, 200, n_tokens, n_labels)
        if _viterbi is not None:
            for instance in batch:
                expected = _viterbi_py.viterbi_decode(*instance)
                got = _viterbi.viterbi_decode(*instance)
                if expected != got:
                    raise SystemExit(f"backend mismatch on {n_tokens}x{n_labels}")
        numpy_time = time_backend(_viterbi_py.viterbi_decode, batch, repeats)
        if _viterbi is not None:
            cython_time = time_backend(_viterbi.viterbi_decode, batch, repeats)
            print(f"{n_tokens:>7} {n_labels:>7} {numpy_time * 1e6:>10.1f} "
                  f"{cython_time * 1e6:>10.1f} {numpy_time / cython_time:>7.1f}x")
        else:
            print(f"{n_tokens:>7} {n_labels:>7} {numpy_time * 1e6:>10.1f} {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
