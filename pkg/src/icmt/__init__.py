"""Prompt selection engine and evaluation harness for in-context machine translation."""

__version__ = "0.1.0"

from icmt.corpus import CorpusBank, DocumentSplit, ParallelExample
from icmt.selection import BudgetMode, BudgetSpec, PromptSet, Strategy

__all__ = [
    "BudgetMode",
    "BudgetSpec",
    "CorpusBank",
    "DocumentSplit",
    "ParallelExample",
    "PromptSet",
    "Strategy",
    "__version__",
]
