"""Numba-compiled kernels. Same contracts as numpy_impl."""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def accumulate_postings(indptr, doc_ids, weights, term_ids, n_docs):
    scores = np.zeros(n_docs, dtype=np.float64)
    for i in range(term_ids.shape[0]):
        t = term_ids[i]
        for j in range(indptr[t], indptr[t + 1]):
            scores[doc_ids[j]] += weights[j]
    return scores


@numba.njit(cache=True)
def l2_sq(matrix, query):
    n, d = matrix.shape
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        acc = 0.0
        for j in range(d):
            diff = float(matrix[i, j]) - float(query[j])
            acc += diff * diff
        out[i] = acc
    return out


@numba.njit(cache=True)
def coverage_gains(covered, candidate_masks, term_idf):
    n, m = candidate_masks.shape
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        acc = 0.0
        for t in range(m):
            if candidate_masks[i, t] and not covered[t]:
                acc += term_idf[t]
        out[i] = acc
    return out
