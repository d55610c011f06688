# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled placement-value kernel.

Single C pass over the sort order: walk tie groups of the score vector and
assign each subject the exact count-based placement. Must stay bit-identical
to ``_rank_fallback.placement_values`` (same integer counts, one division).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def placement_values(scores, labels):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] s = np.ascontiguousarray(scores, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] lab = np.ascontiguousarray(labels, dtype=bool).view(np.uint8)
    cdef Py_ssize_t n = s.shape[0]
    if lab.shape[0] != n:
        raise ValueError("scores and labels must have equal length")
    cdef cnp.ndarray[cnp.intp_t, ndim=1] order = np.argsort(s, kind="stable")

    cdef Py_ssize_t n_pos = 0
    cdef Py_ssize_t i
    for i in range(n):
        n_pos += lab[i]
    cdef Py_ssize_t n_neg = n - n_pos

    cdef cnp.ndarray[cnp.float64_t, ndim=1] v_pos = np.empty(n_pos, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v_neg = np.empty(n_neg, dtype=np.float64)

    # Rank of each subject within its own class, in original order.
    cdef cnp.ndarray[cnp.intp_t, ndim=1] class_idx = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t pc = 0, nc = 0
    for i in range(n):
        if lab[i]:
            class_idx[i] = pc
            pc += 1
        else:
            class_idx[i] = nc
            nc += 1

    cdef Py_ssize_t start = 0, stop, k
    cdef Py_ssize_t cum_pos = 0, cum_neg = 0
    cdef Py_ssize_t pos_in, neg_in
    cdef Py_ssize_t oi
    cdef double vp, vn
    while start < n:
        stop = start
        pos_in = 0
        neg_in = 0
        while stop < n and s[order[stop]] == s[order[start]]:
            if lab[order[stop]]:
                pos_in += 1
            else:
                neg_in += 1
            stop += 1
        vp = (cum_neg + 0.5 * neg_in) / n_neg if n_neg > 0 else 0.0
        vn = ((n_pos - cum_pos - pos_in) + 0.5 * pos_in) / n_pos if n_pos > 0 else 0.0
        for k in range(start, stop):
            oi = order[k]
            if lab[oi]:
                v_pos[class_idx[oi]] = vp
            else:
                v_neg[class_idx[oi]] = vn
        cum_pos += pos_in
        cum_neg += neg_in
        start = stop
    return v_pos, v_neg
