"""Experiment configuration shared by the runners and the CLI."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from icmt.prompting import PromptStyle
from icmt.selection import BudgetSpec


class ConfigError(Exception):
    """Bad or inconsistent experiment configuration (CLI exit code 2)."""


class Experiment(enum.Enum):
    DOMAIN_CROSSTABLE = "crosstable"
    DOC_LEVEL = "doclevel"
    BUDGET_MATCHED = "budget-match"
    SHUFFLE_ABLATION = "ablate-order"
    INTERFERENCE = "interference"


# Strategy tags understood by the document-level runners. The "-out" family
# retrieves from the out-of-document pool; the rest work within the document,
# restricted to lines strictly preceding the test line.
DOC_LEVEL_STRATEGIES = (
    "random-out",
    "nn-out",
    "bm25-out",
    "bm25s-out",
    "random-within",
    "window",
    "static",
    "shuffle",
)

BUDGET_MATCH_STRATEGIES = (
    "window",
    "bm25-within",
    "bm25s-within",
    "nn-within",
    "bm25-within-budget",
    "bm25s-within-budget",
    "nn-within-budget",
)

_RANDOMIZED = {"random-out", "random-within", "window", "shuffle"}


@dataclass(frozen=True)
class GenerationSource:
    kind: str  # "replay" | "live"
    location: str  # JSONL path | base URL

    def __post_init__(self) -> None:
        if self.kind not in ("replay", "live"):
            raise ConfigError(f"unknown generation source kind {self.kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Experiment
    generation: GenerationSource
    strategies: tuple[str, ...] = ()
    k: int = 5
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    length_filter: tuple[int, int] | None = None
    budget: BudgetSpec | None = None
    style: PromptStyle = field(default_factory=PromptStyle)
    lang_pair: tuple[str, str] = ("en", "fr")
    embeddings_path: str | None = None
    max_in_flight: int = 4
    retries: int = 2
    tie_epsilon: float = 1e-4

    def __post_init__(self) -> None:
        if self.k < 0:
            raise ConfigError("k must be >= 0")
        needs_seed = any(s in _RANDOMIZED for s in self.strategies) or (
            self.experiment is Experiment.DOMAIN_CROSSTABLE
        )
        if needs_seed and not self.seeds:
            raise ConfigError("randomized strategies need at least one seed")
        if self.length_filter is not None:
            lo, hi = self.length_filter
            if lo > hi:
                raise ConfigError(f"length_filter lower bound {lo} > upper bound {hi}")
        if self.max_in_flight < 1:
            raise ConfigError("max_in_flight must be >= 1")

    @property
    def primary_seed(self) -> int:
        return self.seeds[0] if self.seeds else 0

    def manifest_dict(self) -> dict:
        return {
            "experiment": self.experiment.value,
            "generation": {"kind": self.generation.kind, "location": self.generation.location},
            "strategies": list(self.strategies),
            "k": self.k,
            "seeds": list(self.seeds),
            "length_filter": None if self.length_filter is None else list(self.length_filter),
            "budget": None
            if self.budget is None
            else {
                "budget": self.budget.budget,
                "mode": self.budget.mode.value,
                "count_target": self.budget.count_target,
            },
            "style": {
                "instruction": self.style.instruction,
                "src_label": self.style.src_label,
                "tgt_label": self.style.tgt_label,
                "separator": self.style.separator.value,
            },
            "lang_pair": list(self.lang_pair),
            "embeddings_path": self.embeddings_path,
            "tie_epsilon": self.tie_epsilon,
        }
