"""Pure-numpy reference kernels.

These are the semantics of record: the accelerated implementations must agree
with them to tight float64 tolerance (summation order may differ).
"""

from __future__ import annotations

import numpy as np


def accumulate_postings(
    indptr: np.ndarray,
    doc_ids: np.ndarray,
    weights: np.ndarray,
    term_ids: np.ndarray,
    n_docs: int,
) -> np.ndarray:
    """Sum per-document weights over the postings of the given terms.

    ``indptr``/``doc_ids``/``weights`` form a CSR layout over terms: the
    postings of term t live in ``doc_ids[indptr[t]:indptr[t+1]]`` with
    matching ``weights``. Returns a dense float64 score per document.
    """
    scores = np.zeros(n_docs, dtype=np.float64)
    for t in term_ids:
        lo, hi = indptr[t], indptr[t + 1]
        np.add.at(scores, doc_ids[lo:hi], weights[lo:hi])
    return scores


def l2_sq(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance from ``query`` to every row of ``matrix``."""
    diff = matrix - query[None, :]
    return np.einsum("ij,ij->i", diff, diff, dtype=np.float64)


def coverage_gains(
    covered: np.ndarray, candidate_masks: np.ndarray, term_idf: np.ndarray
) -> np.ndarray:
    """Marginal coverage utility of each candidate given already-covered terms.

    ``candidate_masks`` is (n_candidates, n_terms) boolean; ``covered`` is a
    boolean vector over the same term axis; ``term_idf`` holds each term's
    weight. The gain of a candidate is the idf mass of the terms it covers
    that are not covered yet, summed over the gathered values in term-axis
    order: candidates covering equal masses must compare exactly equal so
    the caller's argmax tie falls to position rather than summation noise.
    """
    fresh = candidate_masks & ~covered[None, :]
    out = np.empty(fresh.shape[0], dtype=np.float64)
    for i in range(fresh.shape[0]):
        out[i] = np.add.reduce(term_idf[fresh[i]])
    return out
