"""A deterministic stand-in translator for building and serving fixtures.

The client mimics the real generate/score/embed surface closely enough to
drive every experiment runner, with two properties the tests lean on:

* fully deterministic — outputs depend only on the prompt text, so replay
  files built from it are stable across runs and machines;
* quality tracks prompt relevance — hypotheses are corruptions of the
  reference whose error rate shrinks as the prompt covers more of the test
  source, so strategy comparisons stay directionally meaningful.
"""

from __future__ import annotations

import hashlib
import random
import re

import numpy as np

from icmt.corpus import CorpusBank
from icmt.harness.generation import GenerationParams, GenerationRecord, prompt_hash
from icmt.metrics import coverage
from icmt.prompting import PromptStyle, Separator, extract_hypothesis

_DECOYS = ("zut", "alors", "bof", "hein", "truc", "machin")


def _labels_example_sources(prompt_text: str, style: PromptStyle) -> tuple[list[str], str]:
    """Pull (example sources, test source) back out of a rendered prompt."""
    lines = prompt_text.split("\n")
    if style.instruction:
        lines = lines[1:]
    if style.separator is Separator.LABELS:
        pat = re.compile(
            rf"^{re.escape(style.src_label)}: (.*) {re.escape(style.tgt_label)}:(?: (.*))?$"
        )
        sources = []
        test_source = ""
        for line in lines:
            m = pat.match(line)
            if not m:
                continue
            if m.group(2) is None and line.endswith(f" {style.tgt_label}:"):
                test_source = m.group(1)
            else:
                sources.append(m.group(1))
        return sources, test_source
    sources = []
    test_source = ""
    for line in lines:
        if line.endswith(" ="):
            test_source = line[:-2]
        elif " = " in line:
            sources.append(line.split(" = ", 1)[0])
    return sources, test_source


def _prompt_coverage(prompt_text: str, style: PromptStyle) -> float:
    sources, test_source = _labels_example_sources(prompt_text, style)
    if not sources or not test_source:
        return 0.0
    return coverage(sources, test_source)


def _corrupt(reference: str, rng: random.Random, dropout: float) -> str:
    out = []
    for word in reference.split():
        r = rng.random()
        if r < dropout:
            continue
        if r < dropout + 0.05:
            out.append(rng.choice(_DECOYS))
        else:
            out.append(word)
        if rng.random() < 0.03:
            out.append(rng.choice(_DECOYS))
    if not out and reference.split():
        out.append(reference.split()[0])
    return " ".join(out)


def feature_hash_embedding(text: str, dim: int = 16) -> np.ndarray:
    """Tiny bag-of-words embedding: tokens feature-hashed into `dim` buckets."""
    vec = np.zeros(dim, dtype=np.float32)
    for token in text.lower().split():
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        bucket = digest[0] % dim
        sign = 1.0 if digest[1] % 2 == 0 else -1.0
        vec[bucket] += sign
    return vec


class PseudoModelClient:
    """Implements the client surface against a known parallel bank."""

    def __init__(self, banks: list[CorpusBank], style: PromptStyle | None = None, dim: int = 16):
        self._style = style or PromptStyle()
        self._dim = dim
        self._target_by_source: dict[str, str] = {}
        for bank in banks:
            for ex in bank:
                self._target_by_source[ex.source] = ex.target

    # -- generation ---------------------------------------------------

    def generate(
        self, test_id: str, prompt_text: str, params: GenerationParams, style: PromptStyle
    ) -> GenerationRecord:
        key = prompt_hash(prompt_text)
        raw = self.raw_output(prompt_text, style)
        return GenerationRecord(
            test_id=test_id,
            prompt_hash=key,
            raw_output=raw,
            hypothesis=extract_hypothesis(raw, style),
            token_logprobs=None,
        )

    def raw_output(self, prompt_text: str, style: PromptStyle) -> str:
        _, test_source = _labels_example_sources(prompt_text, style)
        reference = self._target_by_source.get(test_source, "bruit blanc")
        cov = _prompt_coverage(prompt_text, style)
        rng = random.Random(int(prompt_hash(prompt_text)[:12], 16))
        dropout = 0.02 + 0.30 * (1.0 - cov)
        hyp = _corrupt(reference, rng, dropout)
        # every so often keep "generating" past the answer, like a model that
        # ignores the stop string; extraction has to cut this off
        if rng.random() < 0.2:
            return f"{hyp}\n{style.src_label}: {test_source} {style.tgt_label}: {hyp}"
        return hyp

    # -- scoring ------------------------------------------------------

    def score(self, context: str, continuation: str) -> list[float]:
        # re-append the trailing label so the text parses like a full prompt
        if self._style.separator is Separator.LABELS:
            as_prompt = f"{context}{continuation} {self._style.tgt_label}:"
        else:
            as_prompt = f"{context}{continuation} ="
        cov = _prompt_coverage(as_prompt, self._style)
        base = -(0.35 + 0.9 * (1.0 - cov))
        seed = int(prompt_hash(context + continuation)[:12], 16)
        rng = random.Random(seed)
        n = max(len(continuation.split()), 1)
        return [base + rng.uniform(-0.05, 0.05) for _ in range(n)]

    # -- embeddings ---------------------------------------------------

    def embed(self, texts: list[str]) -> tuple[int, np.ndarray]:
        mat = np.stack([feature_hash_embedding(t, self._dim) for t in texts])
        return self._dim, mat


class RecordingClient:
    """Wraps a client and keeps a replay row for every call it serves."""

    def __init__(self, inner: PseudoModelClient):
        self._inner = inner
        self.rows: dict[str, dict] = {}

    def generate(self, test_id, prompt_text, params, style):
        record = self._inner.generate(test_id, prompt_text, params, style)
        self.rows[record.prompt_hash] = {
            "prompt_hash": record.prompt_hash,
            "raw_output": record.raw_output,
        }
        return record

    def score(self, context, continuation):
        logprobs = self._inner.score(context, continuation)
        key = prompt_hash(context + continuation)
        self.rows[key] = {
            "prompt_hash": key,
            "raw_output": "",
            "token_logprobs": logprobs,
        }
        return logprobs

    def embed(self, texts):
        return self._inner.embed(texts)
