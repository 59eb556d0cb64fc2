"""Evaluation metrics: BLEU, word coverage, L2, perplexity, correlation, interference.

BLEU follows the standard mteval/13a evaluation chain exactly — lowercase,
13a tokenization, clipped n-gram precisions up to order 4 with NO effective-
order fallback, exponential smoothing of zero precisions, brevity penalty —
matching the signature ``nrefs:1|case:lower|eff:no|tok:13a|smooth:exp``.
Scores are in [0, 100]; conformance against reference-scorer outputs is
pinned by committed fixtures in the test suite.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from icmt.text import TokenScheme, tokenize_13a

_LOG_ZERO = -9999999999.0  # stand-in for ln(0); exp() of the mean underflows to 0


@dataclass(frozen=True)
class BleuConfig:
    lowercase: bool = True
    max_ngram: int = 4
    effective_order: bool = False
    smoothing: str = "exp"  # "exp" or "none"
    tokenizer: TokenScheme = TokenScheme.MTEVAL_13A

    def __post_init__(self) -> None:
        if self.max_ngram < 1:
            raise ValueError("max_ngram must be >= 1")
        if self.smoothing not in ("exp", "none"):
            raise ValueError(f"unknown smoothing {self.smoothing!r}")
        if self.tokenizer is not TokenScheme.MTEVAL_13A:
            raise ValueError("only 13a tokenization is supported")

    @property
    def signature(self) -> str:
        case = "lower" if self.lowercase else "mixed"
        eff = "yes" if self.effective_order else "no"
        return f"nrefs:1|case:{case}|eff:{eff}|tok:13a|smooth:{self.smoothing}"


DEFAULT_BLEU = BleuConfig()


def _bleu_tokens(text: str, cfg: BleuConfig) -> list[str]:
    if cfg.lowercase:
        text = text.lower()
    return list(tokenize_13a(text).tokens)


def _ngram_counts(tokens: Sequence[str], max_n: int) -> Counter:
    counts: Counter = Counter()
    for n in range(1, max_n + 1):
        for i in range(len(tokens) - n + 1):
            counts[tuple(tokens[i : i + n])] += 1
    return counts


def _my_log(x: float) -> float:
    return _LOG_ZERO if x == 0.0 else math.log(x)


def corpus_bleu(
    hypotheses: Sequence[str], references: Sequence[str], cfg: BleuConfig = DEFAULT_BLEU
) -> float:
    """Corpus BLEU over aligned hypothesis/reference lists, in [0, 100].

    With effective_order off (the default), any n-gram order with zero total
    (every hypothesis shorter than n tokens) zeroes the whole score.
    """
    if len(hypotheses) != len(references):
        raise ValueError(
            f"{len(hypotheses)} hypotheses vs {len(references)} references"
        )
    if not hypotheses:
        raise ValueError("need at least one sentence pair")

    max_n = cfg.max_ngram
    correct = [0] * max_n
    total = [0] * max_n
    sys_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_tokens = _bleu_tokens(hyp, cfg)
        ref_tokens = _bleu_tokens(ref, cfg)
        sys_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
        ref_counts = _ngram_counts(ref_tokens, max_n)
        hyp_counts = _ngram_counts(hyp_tokens, max_n)
        for ngram, count in hyp_counts.items():
            n = len(ngram)
            total[n - 1] += count
            correct[n - 1] += min(count, ref_counts.get(ngram, 0))

    return _compute_bleu(correct, total, sys_len, ref_len, cfg)


def _compute_bleu(
    correct: Sequence[int],
    total: Sequence[int],
    sys_len: int,
    ref_len: int,
    cfg: BleuConfig,
) -> float:
    max_n = cfg.max_ngram
    precisions = [0.0] * max_n
    smooth_mteval = 1.0
    effective_order = max_n
    for n in range(max_n):
        if total[n] == 0:
            break
        if cfg.effective_order:
            effective_order = n + 1
        if correct[n] == 0:
            if cfg.smoothing == "exp":
                smooth_mteval *= 2.0
                precisions[n] = 100.0 / (smooth_mteval * total[n])
            # smoothing "none": precision stays 0
        else:
            precisions[n] = 100.0 * correct[n] / total[n]

    if sys_len < ref_len:
        brevity_penalty = math.exp(1.0 - ref_len / sys_len) if sys_len > 0 else 0.0
    else:
        brevity_penalty = 1.0
    mean_log_precision = (
        sum(_my_log(p) for p in precisions[:effective_order]) / effective_order
    )
    return brevity_penalty * math.exp(mean_log_precision)


def sentence_bleu(
    hypothesis: str, reference: str, cfg: BleuConfig = DEFAULT_BLEU
) -> float:
    """BLEU of a single pair (exponential smoothing applies per config)."""
    return corpus_bleu([hypothesis], [reference], cfg)


def document_bleu_average(
    per_document: Sequence[tuple[Sequence[str], Sequence[str]]],
    cfg: BleuConfig = DEFAULT_BLEU,
) -> float:
    """Arithmetic mean of per-document corpus BLEU."""
    if not per_document:
        raise ValueError("need at least one document")
    return sum(corpus_bleu(h, r, cfg) for h, r in per_document) / len(per_document)


def coverage(prompt_sources: Iterable[str], test_source: str) -> float:
    """Fraction of the test sentence's distinct words found in the prompts.

    Word identity is lowercased whitespace tokens, counted as types: the
    measure is set coverage of the test vocabulary by the union of prompt
    vocabularies.
    """
    test_types = set(test_source.lower().split())
    if not test_types:
        raise ValueError("empty test source")
    prompt_types: set[str] = set()
    for src in prompt_sources:
        prompt_types.update(src.lower().split())
    return len(test_types & prompt_types) / len(test_types)


def mean_l2(prompt_vectors: Sequence[np.ndarray], test_vector: np.ndarray) -> float:
    """Mean Euclidean distance from each prompt vector to the test vector."""
    if len(prompt_vectors) == 0:
        raise ValueError("need at least one prompt vector")
    test = np.asarray(test_vector, dtype=np.float64)
    dists = []
    for vec in prompt_vectors:
        v = np.asarray(vec, dtype=np.float64)
        if v.shape != test.shape:
            raise ValueError(f"dimension mismatch: {v.shape} vs {test.shape}")
        dists.append(float(np.linalg.norm(v - test)))
    return float(np.mean(dists))


def conditional_perplexity(token_logprobs: Sequence[float]) -> float:
    """exp(-mean) of natural-log token probabilities."""
    if len(token_logprobs) == 0:
        raise ValueError("need at least one token logprob")
    arr = np.asarray(token_logprobs, dtype=np.float64)
    if np.any(arr > 0.0):
        raise ValueError("log probabilities must be <= 0")
    return float(np.exp(-arr.mean()))


def pearson_r(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise ValueError("need at least two points")
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    xd = x - x.mean()
    yd = y - y.mean()
    denom = math.sqrt(float(xd @ xd)) * math.sqrt(float(yd @ yd))
    if denom == 0.0:
        raise ValueError("constant input has no defined correlation")
    return float((xd @ yd) / denom)


@dataclass(frozen=True)
class InterferenceReport:
    """Proportions of sentences helped, hurt, and unaffected by prompting."""

    positive: float
    negative: float
    no_change: float

    def __post_init__(self) -> None:
        total = self.positive + self.negative + self.no_change
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"proportions sum to {total}, not 1")


def interference(
    zero_shot_sbleu: Sequence[float],
    prompted_sbleu: Sequence[float],
    tie_epsilon: float = 1e-4,
) -> InterferenceReport:
    """Classify per-sentence BLEU deltas (prompted - zeroshot) into
    positive / negative / no-change buckets and report proportions."""
    if len(zero_shot_sbleu) != len(prompted_sbleu):
        raise ValueError(
            f"length mismatch: {len(zero_shot_sbleu)} vs {len(prompted_sbleu)}"
        )
    if not zero_shot_sbleu:
        raise ValueError("need at least one sentence")
    pos = neg = tie = 0
    for zero, prompted in zip(zero_shot_sbleu, prompted_sbleu):
        delta = prompted - zero
        if delta > tie_epsilon:
            pos += 1
        elif delta < -tie_epsilon:
            neg += 1
        else:
            tie += 1
    n = len(zero_shot_sbleu)
    return InterferenceReport(positive=pos / n, negative=neg / n, no_change=tie / n)
