"""Sequence-decoding kernels.

The compiled extension is preferred when it was built; otherwise the NumPy
implementation is selected at import time. Both implement the identical
first-order Viterbi recurrence with the same tie-breaking (lowest label
index wins), so decoding results never depend on the backend.
"""

try:
    from emergent.kernels._viterbi import viterbi_decode

    BACKEND = "cython"
except ImportError:
    from emergent.kernels._viterbi_py import viterbi_decode

    BACKEND = "numpy"

__all__ = ["viterbi_decode", "BACKEND"]
