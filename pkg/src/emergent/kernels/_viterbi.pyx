# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled Viterbi decoder; hot kernel of perceptron training and prediction.

Must stay behaviour-identical to ``_viterbi_py.viterbi_decode`` including
tie-breaking (smallest label index wins on equal scores).
"""

import numpy as np


def viterbi_decode(emissions, start, transitions, allowed_start, allowed):
    cdef double[:, ::1] em = np.ascontiguousarray(emissions, dtype=np.float64)
    cdef double[::1] st = np.ascontiguousarray(start, dtype=np.float64)
    cdef double[:, ::1] tr = np.ascontiguousarray(transitions, dtype=np.float64)
    cdef unsigned char[::1] ok0 = np.ascontiguousarray(allowed_start, dtype=np.uint8)
    cdef unsigned char[:, ::1] ok = np.ascontiguousarray(allowed, dtype=np.uint8)

    cdef Py_ssize_t n = em.shape[0]
    cdef Py_ssize_t L = em.shape[1]
    if n == 0:
        return []

    cdef double NEG = -np.inf
    score_arr = np.empty(L, dtype=np.float64)
    next_arr = np.empty(L, dtype=np.float64)
    back_arr = np.zeros((n, L), dtype=np.intp)
    cdef double[::1] score = score_arr
    cdef double[::1] nxt = next_arr
    cdef Py_ssize_t[:, ::1] back = back_arr

    cdef Py_ssize_t i, cur, prev, best_prev, last
    cdef double best, cand

    for cur in range(L):
        score[cur] = st[cur] + em[0, cur] if ok0[cur] else NEG

    for i in range(1, n):
        for cur in range(L):
            best = NEG
            best_prev = 0
            for prev in range(L):
                if not ok[prev, cur]:
                    continue
                cand = score[prev] + tr[prev, cur]
                if cand > best:
                    best = cand
                    best_prev = prev
            nxt[cur] = best + em[i, cur]
            back[i, cur] = best_prev
        for cur in range(L):
            score[cur] = nxt[cur]

    last = 0
    best = score[0]
    for cur in range(1, L):
        if score[cur] > best:
            best = score[cur]
            last = cur

    path = [0] * n
    path[n - 1] = last
    for i in range(n - 1, 0, -1):
        last = back[i, last]
        path[i - 1] = last
    return path
