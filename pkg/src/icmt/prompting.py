"""Prompt rendering and hypothesis extraction.

The rendered prompt is one continuous string: an optional instruction line,
one line per example, and a final line holding the test source with the
target slot left open for the model to complete. Whitespace is pinned
exactly (single space after label colons, single newline between lines, no
trailing newline) so prompt hashes are stable across runs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from icmt.selection import PromptSet


class Separator(enum.Enum):
    LABELS = "labels"
    EQUALS = "equals"


@dataclass(frozen=True)
class PromptStyle:
    """How examples are joined into the model input.

    LABELS renders `<src_label>: <source> <tgt_label>: <target>` lines under
    an instruction line; EQUALS renders bare `<source> = <target>` lines with
    no instruction (labels are ignored).
    """

    instruction: str = "Translate English to French."
    src_label: str = "English"
    tgt_label: str = "French"
    separator: Separator = Separator.LABELS

    def __post_init__(self) -> None:
        if self.separator is Separator.LABELS:
            if not self.src_label or not self.tgt_label:
                raise ValueError("LABELS style needs non-empty labels")


EQUALS_STYLE = PromptStyle(instruction="", src_label="", tgt_label="", separator=Separator.EQUALS)


def render_prompt(style: PromptStyle, prompt_set: PromptSet, test_source: str) -> str:
    """Render the exact model input for a prompt set and test sentence."""
    if not test_source.strip():
        raise ValueError("empty test source")
    lines: list[str] = []
    if style.separator is Separator.LABELS:
        if style.instruction:
            lines.append(style.instruction)
        for ex in prompt_set.items:
            lines.append(
                f"{style.src_label}: {ex.source} {style.tgt_label}: {ex.target}"
            )
        lines.append(f"{style.src_label}: {test_source} {style.tgt_label}:")
    else:
        for ex in prompt_set.items:
            lines.append(f"{ex.source} = {ex.target}")
        lines.append(f"{test_source} =")
    return "\n".join(lines)


def render_scoring_context(style: PromptStyle, prompt_set: PromptSet, test_source: str) -> str:
    """Context string for /score requests: the rendered prompt itself.

    The continuation to score (the test translation, or the test source in
    source-perplexity mode) is passed separately; together they form the same
    byte stream the model would see during generation.
    """
    return render_prompt(style, prompt_set, test_source)


def source_scoring_pair(
    style: PromptStyle, prompt_set: PromptSet, test_source: str
) -> tuple[str, str]:
    """(context, continuation) for scoring the test SOURCE given the prompt.

    Concatenating the two reproduces the rendered prompt up to and including
    the test source (the open target slot is omitted — the model is asked how
    predictable the source line itself is in this context).
    """
    full = render_prompt(style, prompt_set, test_source)
    if style.separator is Separator.LABELS:
        suffix = f" {test_source} {style.tgt_label}:"
        context = full[: -len(suffix)]  # ends with "<src_label>:"
        continuation = f" {test_source}"
    else:
        suffix = f"{test_source} ="
        context = full[: -len(suffix)]  # ends with "\n" after the examples, or ""
        continuation = test_source
    return context, continuation


def extract_hypothesis(raw_generation: str, style: PromptStyle) -> str:
    """Cut the model continuation down to the hypothesis translation.

    Takes text up to the first newline; under LABELS also stops at the first
    `<src_label>:` (models often start the next example on the same line).
    Returns "" when nothing survives trimming — an empty hypothesis is
    scored as empty, never raised.
    """
    text = raw_generation.split("\n", 1)[0]
    if style.separator is Separator.LABELS:
        marker = f"{style.src_label}:"
        idx = text.find(marker)
        if idx != -1:
            text = text[:idx]
    return text.strip()
