"""Prompt-set construction strategies.

Every op returns a ``PromptSet``: an ordered pick of bank examples plus the
metadata needed to reproduce it (strategy tag, per-item scores where the
strategy has them, word budget consumed, seed where randomness is involved).

Strategies are pure given (bank, ranker, seed), so per-test-sentence
selection can run concurrently without coordination.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Protocol, Sequence

import numpy as np

from icmt.corpus import CorpusBank, ParallelExample
from icmt.text import word_count


class Strategy(enum.Enum):
    RANDOM = "random"
    BM25 = "bm25"
    BM25S = "bm25s"
    NN = "nn"
    WINDOW = "window"
    STATIC = "static"
    SHUFFLE = "shuffle"
    ZEROSHOT = "zeroshot"


class BudgetMode(enum.Enum):
    # STRICT never exceeds the budget: only candidates that still fit are
    # considered, and selection stops when none fit. FAITHFUL reproduces the
    # textbook greedy loop (guard checked before adding), so the final item
    # may overshoot.
    STRICT = "strict"
    FAITHFUL = "faithful"


@dataclass(frozen=True)
class BudgetSpec:
    """Word-count budget for greedy selection.

    Cost is the source-side word count of each example; set ``count_target``
    to include target words in the cost as well (budget_used on the result
    stays source-side either way).
    """

    budget: int
    mode: BudgetMode = BudgetMode.STRICT
    count_target: bool = False

    def __post_init__(self) -> None:
        if self.budget < 0:
            raise ValueError("budget must be >= 0")


@dataclass(frozen=True)
class PromptSet:
    """Ordered prompt examples with selection metadata.

    ``budget_used`` is always the sum of source-side word counts over items.
    ``scores`` is per-item and aligned with ``items`` (similarity for top-k
    strategies, marginal utility for greedy ones), or None where the
    strategy has no natural score.
    """

    items: tuple[ParallelExample, ...]
    strategy: Strategy
    scores: tuple[float, ...] | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.scores is not None and len(self.scores) != len(self.items):
            raise ValueError("scores must align 1:1 with items")

    @property
    def budget_used(self) -> int:
        return sum(word_count(ex.source) for ex in self.items)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(ex.id for ex in self.items)

    def __len__(self) -> int:
        return len(self.items)


def zeroshot_prompt_set() -> PromptSet:
    return PromptSet(items=(), strategy=Strategy.ZEROSHOT)


def _candidates(bank: CorpusBank, exclude_ids: Iterable[str]) -> list[ParallelExample]:
    excluded = set(exclude_ids)
    return [ex for ex in bank if ex.id not in excluded]


def select_random(
    bank: CorpusBank, k: int, seed: int, exclude_ids: Iterable[str] = ()
) -> PromptSet:
    """k distinct examples drawn uniformly without replacement; order = draw order.

    Randomness comes from numpy's PCG64 stream seeded with ``seed``, so a
    given (bank, k, seed, exclusions) always yields the same set.
    """
    pool = _candidates(bank, exclude_ids)
    if k < 0:
        raise ValueError("k must be >= 0")
    if len(pool) < k:
        raise ValueError(f"need {k} candidates, bank offers {len(pool)}")
    rng = np.random.Generator(np.random.PCG64(seed))
    picks = rng.choice(len(pool), size=k, replace=False)
    return PromptSet(
        items=tuple(pool[i] for i in picks), strategy=Strategy.RANDOM, seed=seed
    )


def select_topk_similarity(
    bank: CorpusBank,
    ranked: Sequence[tuple[str, float]],
    k: int,
    strategy: Strategy,
) -> PromptSet:
    """Turn a ranker's (id, score) list into a PromptSet, most similar first."""
    if len(ranked) < k:
        raise ValueError(f"ranker returned {len(ranked)} candidates, need {k}")
    head = ranked[:k]
    return PromptSet(
        items=tuple(bank.get(ex_id) for ex_id, _ in head),
        strategy=strategy,
        scores=tuple(score for _, score in head),
    )


class SetUtility(Protocol):
    """Set function over example ids, exposed through marginal gains."""

    def value(self, selected: Sequence[str]) -> float: ...

    def gains(self, selected: Sequence[str], candidates: Sequence[str]) -> np.ndarray: ...


class ModularUtility:
    """Additive utility: the gain of an item never depends on the selection.

    Greedy under this utility is plain score-ordered packing (budget-
    constrained top-k retrieval when scores are similarity scores).
    """

    def __init__(self, scores: Mapping[str, float]):
        self._scores = dict(scores)

    def value(self, selected: Sequence[str]) -> float:
        return float(sum(self._scores[i] for i in selected))

    def gains(self, selected: Sequence[str], candidates: Sequence[str]) -> np.ndarray:
        return np.asarray([self._scores[c] for c in candidates], dtype=np.float64)


class FunctionUtility:
    """Adapter for a plain set-function callable f(ids) -> float."""

    def __init__(self, fn: Callable[[Sequence[str]], float]):
        self._fn = fn

    def value(self, selected: Sequence[str]) -> float:
        return float(self._fn(selected))

    def gains(self, selected: Sequence[str], candidates: Sequence[str]) -> np.ndarray:
        base = self.value(selected)
        sel = list(selected)
        return np.asarray(
            [self._fn(sel + [c]) - base for c in candidates], dtype=np.float64
        )


def select_greedy_budget(
    utility: SetUtility,
    budget: BudgetSpec | None,
    bank: CorpusBank,
    max_items: int | None = None,
    strategy: Strategy = Strategy.BM25S,
    exclude_ids: Iterable[str] = (),
) -> PromptSet:
    """Greedy argmax-of-marginal-utility selection under a word budget.

    Each round adds the candidate with the largest marginal utility (ties
    broken by ascending example id). Under a STRICT budget only candidates
    that still fit are considered and selection stops when none do; under
    FAITHFUL the guard is checked before adding, so the final pick may
    overshoot. ``max_items``, when given, caps the number of items
    independently of the budget (pass budget=None for a pure cardinality
    constraint).
    """
    if budget is None and max_items is None:
        raise ValueError("need a budget, a max_items cap, or both")
    pool = _candidates(bank, exclude_ids)
    if not pool:
        raise ValueError("no candidates to select from")

    def cost(ex: ParallelExample) -> int:
        c = word_count(ex.source)
        if budget is not None and budget.count_target:
            c += word_count(ex.target)
        return c

    remaining: dict[str, ParallelExample] = {ex.id: ex for ex in pool}
    selected: list[ParallelExample] = []
    gains_taken: list[float] = []
    used = 0

    while remaining:
        if max_items is not None and len(selected) >= max_items:
            break
        if budget is not None:
            if budget.mode is BudgetMode.STRICT:
                eligible = [i for i, ex in remaining.items() if used + cost(ex) <= budget.budget]
            else:
                if used >= budget.budget:
                    break
                eligible = list(remaining)
        else:
            eligible = list(remaining)
        if not eligible:
            break
        eligible.sort()  # ascending id → argmax ties resolve to the smallest id
        selected_ids = [ex.id for ex in selected]
        gains = utility.gains(selected_ids, eligible)
        best = int(np.argmax(gains))  # first maximum wins over the sorted ids
        chosen = remaining.pop(eligible[best])
        selected.append(chosen)
        gains_taken.append(float(gains[best]))
        used += cost(chosen)

    return PromptSet(
        items=tuple(selected), strategy=strategy, scores=tuple(gains_taken)
    )


def select_window(
    doc: CorpusBank,
    test_position: int,
    k: int,
    outdoc_bank: CorpusBank,
    seed: int,
) -> PromptSet:
    """The k gold pairs immediately preceding the test line, in document order.

    The window covers positions test_position-k .. test_position-1 (earliest
    first, most recent adjacent to the test line). When fewer than k
    preceding lines exist, the shortfall is drawn at random from
    ``outdoc_bank`` and placed before the in-document examples.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if len(doc) == 0:
        raise ValueError("empty document")
    doc_id = doc.examples[0].doc_id
    try:
        doc.at(doc_id, test_position)
    except KeyError:
        raise ValueError(f"position {test_position} not in document {doc_id!r}") from None
    in_window = [
        doc.at(doc_id, p) for p in range(max(0, test_position - k), test_position)
    ]
    shortfall = k - len(in_window)
    fills: tuple[ParallelExample, ...] = ()
    if shortfall > 0:
        fills = select_random(outdoc_bank, shortfall, seed).items
    return PromptSet(
        items=fills + tuple(in_window), strategy=Strategy.WINDOW, seed=seed
    )


def select_static(doc: CorpusBank, k: int) -> PromptSet:
    """The first k lines of the document, held fixed for every test line."""
    if k < 0:
        raise ValueError("k must be >= 0")
    ordered = sorted(doc.examples, key=lambda ex: ex.position)
    return PromptSet(items=tuple(ordered[:k]), strategy=Strategy.STATIC)


def shuffle_prompt_set(ps: PromptSet, seed: int) -> PromptSet:
    """Seeded permutation of a PromptSet's items (scores move along)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(len(ps.items))
    return PromptSet(
        items=tuple(ps.items[i] for i in order),
        strategy=Strategy.SHUFFLE,
        scores=None if ps.scores is None else tuple(ps.scores[i] for i in order),
        seed=seed,
    )


def window_budget(
    doc: CorpusBank, test_position: int, k: int, outdoc_bank: CorpusBank, seed: int
) -> int:
    """Word budget consumed by the moving window at this position."""
    return select_window(doc, test_position, k, outdoc_bank, seed).budget_used
