"""Time the jitted kernels against the pure-numpy fallback.

Both implementations are imported directly, so a single run compares them
side by side regardless of the ICMT_PURE_NUMPY setting. Sizes default to a
realistic retrieval workload (tens of thousands of bank sentences); shrink
them with --scale for a quick smoke run.
"""

import argparse
import time

import numpy as np

from icmt.kernels import numpy_impl

try:
    from icmt.kernels import numba_impl
except ImportError:
    numba_impl = None


def build_postings(rng, n_terms, n_docs, avg_hits):
    indptr = [0]
    doc_ids = []
    weights = []
    for _ in range(n_terms):
        hits = int(rng.integers(1, avg_hits * 2))
        docs = rng.choice(n_docs, size=min(hits, n_docs), replace=False)
        doc_ids.extend(sorted(docs))
        weights.extend(rng.random(len(docs)) * 3.0)
        indptr.append(len(doc_ids))
    return (
        np.asarray(indptr, dtype=np.int64),
        np.asarray(doc_ids, dtype=np.int64),
        np.asarray(weights, dtype=np.float64),
    )


def bench(fn, args, repeat):
    fn(*args)  # warmup (and JIT compile on the numba side)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scale", type=float, default=1.0, help="shrink/grow workload sizes")
    ap.add_argument("--repeat", type=int, default=20, help="timed iterations (best-of)")
    args = ap.parse_args()

    rng = np.random.default_rng(7)
    n_docs = max(int(30000 * args.scale), 10)
    n_terms = max(int(5000 * args.scale), 4)
    dim = 256

    indptr, doc_ids, weights = build_postings(rng, n_terms, n_docs, avg_hits=40)
    query_terms = np.sort(rng.choice(n_terms, size=12, replace=False)).astype(np.int64)

    matrix = rng.standard_normal((n_docs, dim))
    query = rng.standard_normal(dim)

    n_query_terms = 24
    covered = rng.random(n_query_terms) < 0.3
    cand_masks = rng.random((max(int(500 * args.scale), 8), n_query_terms)) < 0.2
    idf = rng.random(n_query_terms) * 2.0

    workloads = [
        ("accumulate_postings", (indptr, doc_ids, weights, query_terms, n_docs)),
        ("l2_sq", (matrix, query)),
        ("coverage_gains", (covered, cand_masks, idf)),
    ]

    print(f"docs={n_docs} terms={n_terms} dim={dim} repeat={args.repeat} (best-of)")
    header = f"{'kernel':<22}{'numpy':>12}{'numba':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, call_args in workloads:
        t_np = bench(getattr(numpy_impl, name), call_args, args.repeat)
        if numba_impl is None:
            print(f"{name:<22}{t_np * 1e3:>10.3f}ms{'n/a':>12}{'n/a':>10}")
            continue
        t_nb = bench(getattr(numba_impl, name), call_args, args.repeat)
        print(
            f"{name:<22}{t_np * 1e3:>10.3f}ms{t_nb * 1e3:>10.3f}ms"
            f"{t_np / t_nb:>9.1f}x"
        )
    if numba_impl is None:
        print("numba is not installed; only the fallback path was timed")


if __name__ == "__main__":
    main()
