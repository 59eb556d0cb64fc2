"""Sparse and dense retrieval over a prompt bank.

Two retrieval families live here:

* ``Bm25Index`` — lexical scoring over lowercased whitespace tokens of the
  source side, plus the idf-weighted term-coverage utility used by the
  budgeted greedy selector.
* ``EmbeddingStore`` — dense vectors in the EMB1 binary format with exact
  (brute-force) nearest-neighbour lookup under Euclidean distance.

Scores are computed by the kernels package (numba-accelerated with a numpy
fallback); everything here is layout and bookkeeping.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from icmt import kernels
from icmt.corpus import CorpusBank

_EMB1_MAGIC = b"EMB1"
_EMB1_HEADER = struct.Struct("<4sII")


def _bm25_tokens(text: str) -> list[str]:
    return text.lower().split()


class EmbeddingFormatError(Exception):
    """Malformed EMB1 file or ids sidecar."""


@dataclass(frozen=True)
class QueryProfile:
    """Distinct in-vocabulary terms of one query, with their idf weights.

    ``term_ids`` is sorted ascending; ``idf`` is aligned to it. Query terms
    outside the index vocabulary appear in no document, can never be covered,
    and are dropped.
    """

    term_ids: np.ndarray
    idf: np.ndarray


class Bm25Index:
    """BM25 index over (example_id, text) pairs.

    idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)), always positive. The
    per-(term, document) weight

        idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len/avglen))

    is precomputed at build time, so scoring a query is a sum over postings
    of its distinct terms. Queries are treated as term sets: repeating a
    query term does not change any score.
    """

    def __init__(
        self,
        pairs: Iterable[tuple[str, str]],
        k1: float = 1.2,
        b: float = 0.75,
    ):
        self.k1 = float(k1)
        self.b = float(b)
        ids: list[str] = []
        doc_terms: list[dict[str, int]] = []
        lengths: list[int] = []
        for example_id, text in pairs:
            tokens = _bm25_tokens(text)
            counts: dict[str, int] = {}
            for tok in tokens:
                counts[tok] = counts.get(tok, 0) + 1
            ids.append(example_id)
            doc_terms.append(counts)
            lengths.append(len(tokens))
        if not ids:
            raise ValueError("cannot build an index over zero documents")
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate example ids in index input")

        self._ids: tuple[str, ...] = tuple(ids)
        self._id_to_row = {ex_id: row for row, ex_id in enumerate(ids)}
        n_docs = len(ids)
        avg_len = sum(lengths) / n_docs
        self._avg_len = avg_len

        df: dict[str, int] = {}
        for counts in doc_terms:
            for term in counts:
                df[term] = df.get(term, 0) + 1
        self._vocab = {term: tid for tid, term in enumerate(sorted(df))}
        idf = np.empty(len(self._vocab), dtype=np.float64)
        for term, tid in self._vocab.items():
            d = df[term]
            idf[tid] = math.log(1.0 + (n_docs - d + 0.5) / (d + 0.5))
        self._idf = idf

        # CSR postings over terms, rows sorted by ascending doc row.
        postings: list[list[tuple[int, float]]] = [[] for _ in self._vocab]
        for row, counts in enumerate(doc_terms):
            denom_norm = self.k1 * (1.0 - self.b + self.b * lengths[row] / avg_len)
            for term, tf in counts.items():
                tid = self._vocab[term]
                weight = idf[tid] * tf * (self.k1 + 1.0) / (tf + denom_norm)
                postings[tid].append((row, weight))
        indptr = np.zeros(len(postings) + 1, dtype=np.int64)
        for tid, plist in enumerate(postings):
            indptr[tid + 1] = indptr[tid] + len(plist)
        doc_ids = np.empty(indptr[-1], dtype=np.int64)
        weights = np.empty(indptr[-1], dtype=np.float64)
        cursor = 0
        for plist in postings:
            for row, weight in plist:
                doc_ids[cursor] = row
                weights[cursor] = weight
                cursor += 1
        self._indptr = indptr
        self._doc_ids = doc_ids
        self._weights = weights

    @classmethod
    def from_bank(cls, bank: CorpusBank, k1: float = 1.2, b: float = 0.75) -> "Bm25Index":
        return cls(((ex.id, ex.source) for ex in bank), k1=k1, b=b)

    def __len__(self) -> int:
        return len(self._ids)

    @property
    def ids(self) -> tuple[str, ...]:
        return self._ids

    def idf(self, term: str) -> float:
        """idf of a vocabulary term; unseen terms get the df=0 value."""
        tid = self._vocab.get(term)
        if tid is None:
            n = len(self._ids)
            return math.log(1.0 + (n + 0.5) / 0.5)
        return float(self._idf[tid])

    def query_profile(self, query_text: str) -> QueryProfile:
        tids = sorted(
            {self._vocab[t] for t in _bm25_tokens(query_text) if t in self._vocab}
        )
        term_ids = np.asarray(tids, dtype=np.int64)
        return QueryProfile(term_ids=term_ids, idf=self._idf[term_ids])

    def score_all(self, query_text: str) -> np.ndarray:
        """Dense BM25 score of every indexed document against the query."""
        profile = self.query_profile(query_text)
        return kernels.accumulate_postings(
            self._indptr, self._doc_ids, self._weights, profile.term_ids, len(self._ids)
        )

    def topk(
        self, query_text: str, k: int, exclude_ids: Iterable[str] = ()
    ) -> list[tuple[str, float]]:
        """Top-k (id, score) by descending score, ties broken by ascending id."""
        if k < 0:
            raise ValueError("k must be >= 0")
        scores = self.score_all(query_text)
        excluded = set(exclude_ids)
        ranked = sorted(
            (
                (ex_id, float(scores[row]))
                for row, ex_id in enumerate(self._ids)
                if ex_id not in excluded
            ),
            key=lambda pair: (-pair[1], pair[0]),
        )
        return ranked[:k]

    def term_doc_mask(self, term_ids: np.ndarray) -> np.ndarray:
        """Boolean (n_docs, n_terms) matrix: does doc contain term?"""
        mask = np.zeros((len(self._ids), len(term_ids)), dtype=bool)
        for col, tid in enumerate(term_ids):
            lo, hi = self._indptr[tid], self._indptr[tid + 1]
            mask[self._doc_ids[lo:hi], col] = True
        return mask

    def rows_for(self, example_ids: Sequence[str]) -> np.ndarray:
        return np.asarray([self._id_to_row[i] for i in example_ids], dtype=np.int64)

    def coverage_utility(self, query_text: str, selected_ids: Sequence[str]) -> float:
        """idf mass of distinct query terms contained in at least one selected doc.

        Monotone and submodular in the selected set: adding a document never
        lowers the value, and the marginal gain of a fixed document shrinks
        (weakly) as the set grows.
        """
        profile = self.query_profile(query_text)
        if len(profile.term_ids) == 0 or not selected_ids:
            return 0.0
        mask = self.term_doc_mask(profile.term_ids)[self.rows_for(selected_ids)]
        covered = mask.any(axis=0)
        return float(profile.idf[covered].sum())


class CoverageUtility:
    """Incremental view of ``coverage_utility`` for greedy selection.

    Precomputes the doc x query-term containment mask once, then answers
    marginal-gain queries against the currently covered term set. The cache
    follows the greedy pattern (each call's selection extends the previous
    one by a single id) and falls back to a full recompute otherwise, so the
    results never depend on call order.
    """

    def __init__(self, index: Bm25Index, query_text: str):
        self._index = index
        profile = index.query_profile(query_text)
        # Ascending-idf term order: candidates covering equal idf mass then
        # sum identical value sequences and compare exactly equal, so greedy
        # argmax ties resolve by example id instead of summation noise.
        order = np.lexsort((profile.term_ids, profile.idf))
        self._profile = QueryProfile(
            term_ids=profile.term_ids[order], idf=profile.idf[order]
        )
        self._mask = index.term_doc_mask(self._profile.term_ids)
        self._cached_selection: tuple[str, ...] = ()
        self._covered = np.zeros(len(self._profile.term_ids), dtype=bool)

    def _covered_for(self, selected: Sequence[str]) -> np.ndarray:
        key = tuple(selected)
        if key == self._cached_selection:
            return self._covered
        if key[:-1] == self._cached_selection and len(key) >= 1:
            row = self._index.rows_for(key[-1:])[0]
            self._covered = self._covered | self._mask[row]
        else:
            rows = self._index.rows_for(key)
            self._covered = (
                self._mask[rows].any(axis=0)
                if len(rows)
                else np.zeros(len(self._profile.term_ids), dtype=bool)
            )
        self._cached_selection = key
        return self._covered

    def value(self, selected: Sequence[str]) -> float:
        covered = self._covered_for(selected)
        return float(self._profile.idf[covered].sum())

    def gains(self, selected: Sequence[str], candidates: Sequence[str]) -> np.ndarray:
        covered = self._covered_for(selected)
        cand_mask = self._mask[self._index.rows_for(candidates)]
        return kernels.coverage_gains(covered, cand_mask, self._profile.idf)


class EmbeddingStore:
    """Dense float32 vectors keyed by example id, with exact NN lookup.

    On-disk layout (EMB1): magic "EMB1", uint32-le row count N, uint32-le
    dimension D, then N*D float32-le values row-major. Ids live in a UTF-8
    sidecar (one per line; line i labels row i), by default at
    ``<path>.ids``.
    """

    def __init__(self, ids: Sequence[str], matrix: np.ndarray):
        matrix = np.ascontiguousarray(matrix, dtype=np.float32)
        if matrix.ndim != 2:
            raise ValueError("embedding matrix must be 2-D")
        if len(ids) != matrix.shape[0]:
            raise ValueError(
                f"{len(ids)} ids for {matrix.shape[0]} rows"
            )
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate ids in embedding store")
        self._ids: tuple[str, ...] = tuple(ids)
        self._matrix = matrix
        self._id_to_row = {ex_id: row for row, ex_id in enumerate(self._ids)}
        self._matrix64: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._ids)

    @property
    def dim(self) -> int:
        return int(self._matrix.shape[1])

    @property
    def ids(self) -> tuple[str, ...]:
        return self._ids

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def vector(self, example_id: str) -> np.ndarray:
        try:
            return self._matrix[self._id_to_row[example_id]]
        except KeyError:
            raise KeyError(f"no embedding for id {example_id!r}") from None

    def __contains__(self, example_id: str) -> bool:
        return example_id in self._id_to_row

    def nearest(
        self, query: np.ndarray, k: int, exclude_ids: Iterable[str] = ()
    ) -> list[tuple[str, float]]:
        """k nearest rows by Euclidean distance, ties broken by ascending id.

        Distances are compared squared (monotone in the Euclidean distance)
        and returned as Euclidean.
        """
        if k < 0:
            raise ValueError("k must be >= 0")
        query = np.asarray(query, dtype=np.float64)
        if query.shape != (self.dim,):
            raise ValueError(f"query shape {query.shape} != ({self.dim},)")
        if self._matrix64 is None:
            self._matrix64 = self._matrix.astype(np.float64)
        d2 = kernels.l2_sq(self._matrix64, query)
        excluded = set(exclude_ids)
        ranked = sorted(
            (
                (ex_id, float(d2[row]))
                for row, ex_id in enumerate(self._ids)
                if ex_id not in excluded
            ),
            key=lambda pair: (pair[1], pair[0]),
        )
        return [(ex_id, math.sqrt(dist)) for ex_id, dist in ranked[:k]]

    def save(self, path: str | Path, ids_path: str | Path | None = None) -> None:
        path = Path(path)
        ids_path = Path(ids_path) if ids_path is not None else _default_ids_path(path)
        n, d = self._matrix.shape
        with open(path, "wb") as fh:
            fh.write(_EMB1_HEADER.pack(_EMB1_MAGIC, n, d))
            fh.write(self._matrix.astype("<f4").tobytes(order="C"))
        with open(ids_path, "w", encoding="utf-8") as fh:
            for ex_id in self._ids:
                fh.write(ex_id + "\n")

    @classmethod
    def load(cls, path: str | Path, ids_path: str | Path | None = None) -> "EmbeddingStore":
        path = Path(path)
        ids_path = Path(ids_path) if ids_path is not None else _default_ids_path(path)
        blob = path.read_bytes()
        if len(blob) < _EMB1_HEADER.size:
            raise EmbeddingFormatError(f"{path}: truncated header")
        magic, n, d = _EMB1_HEADER.unpack_from(blob)
        if magic != _EMB1_MAGIC:
            raise EmbeddingFormatError(f"{path}: bad magic {magic!r}")
        if n == 0 or d == 0:
            raise EmbeddingFormatError(f"{path}: empty store (N={n}, D={d})")
        expected = _EMB1_HEADER.size + 4 * n * d
        if len(blob) != expected:
            raise EmbeddingFormatError(
                f"{path}: payload is {len(blob)} bytes, expected {expected}"
            )
        matrix = np.frombuffer(blob, dtype="<f4", offset=_EMB1_HEADER.size).reshape(n, d)
        ids = ids_path.read_text(encoding="utf-8").splitlines()
        if len(ids) != n:
            raise EmbeddingFormatError(
                f"{ids_path}: {len(ids)} ids for {n} rows"
            )
        if any(not ex_id for ex_id in ids):
            raise EmbeddingFormatError(f"{ids_path}: blank id line")
        return cls(ids, matrix.copy())


def _default_ids_path(path: Path) -> Path:
    return path.with_name(path.name + ".ids")
