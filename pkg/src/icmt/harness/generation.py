"""Generation clients: live HTTP endpoint or deterministic replay from JSONL.

Wire protocol (JSON over HTTP):
  POST /generate {"prompt", "max_new_tokens", "stop", "greedy"}
      -> {"text": str, "token_logprobs": [float] | null}
  POST /score    {"context", "continuation"} -> {"token_logprobs": [float]}
  POST /embed    {"texts": [str]} -> {"dim": int, "vectors": [[float]]}

Replay files are JSONL, one record per line, keyed by ``prompt_hash`` =
lowercase hex SHA-256 of the UTF-8 prompt text. Scoring records use the same
convention with the hash taken over context + continuation concatenated.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import requests

from icmt.prompting import PromptStyle, extract_hypothesis


class GenerationError(Exception):
    """Generation could not produce a usable record (CLI exit code 3)."""


class ReplayMissError(GenerationError):
    def __init__(self, prompt_hash: str):
        super().__init__(f"replay file has no record for prompt_hash {prompt_hash}")
        self.prompt_hash = prompt_hash


def prompt_hash(prompt_text: str) -> str:
    return hashlib.sha256(prompt_text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class GenerationParams:
    max_new_tokens: int
    stop: tuple[str, ...] = ("\n",)
    greedy: bool = True


def default_max_new_tokens(source_text: str) -> int:
    # generous for translation: references rarely exceed 1.5x source length
    return int(1.5 * len(source_text.split())) + 10


@dataclass(frozen=True)
class GenerationRecord:
    test_id: str
    prompt_hash: str
    raw_output: str
    hypothesis: str
    token_logprobs: tuple[float, ...] | None = None
    latency_ms: float | None = None

    def to_json(self) -> dict:
        return {
            "test_id": self.test_id,
            "prompt_hash": self.prompt_hash,
            "raw_output": self.raw_output,
            "hypothesis": self.hypothesis,
            "token_logprobs": None
            if self.token_logprobs is None
            else list(self.token_logprobs),
            "latency_ms": self.latency_ms,
        }


class ReplayClient:
    """Replays stored generations; every lookup is by prompt hash.

    Fully deterministic: latency fields are dropped so a replayed experiment
    is byte-identical run to run.
    """

    def __init__(self, path: str | Path):
        self._path = Path(path)
        self._records: dict[str, dict] = {}
        with open(self._path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise GenerationError(
                        f"{self._path}:{line_no}: invalid JSON: {exc.msg}"
                    ) from None
                key = row.get("prompt_hash")
                if not key:
                    raise GenerationError(f"{self._path}:{line_no}: missing prompt_hash")
                self._records[key] = row

    def __len__(self) -> int:
        return len(self._records)

    def generate(
        self, test_id: str, prompt_text: str, params: GenerationParams, style: PromptStyle
    ) -> GenerationRecord:
        key = prompt_hash(prompt_text)
        row = self._records.get(key)
        if row is None:
            raise ReplayMissError(key)
        raw = row.get("raw_output", "")
        hyp = row.get("hypothesis")
        if hyp is None:
            hyp = extract_hypothesis(raw, style)
        logprobs = row.get("token_logprobs")
        return GenerationRecord(
            test_id=test_id,
            prompt_hash=key,
            raw_output=raw,
            hypothesis=hyp,
            token_logprobs=None if logprobs is None else tuple(logprobs),
        )

    def score(self, context: str, continuation: str) -> list[float]:
        key = prompt_hash(context + continuation)
        row = self._records.get(key)
        if row is None or row.get("token_logprobs") is None:
            raise ReplayMissError(key)
        return [float(x) for x in row["token_logprobs"]]

    def embed(self, texts: Sequence[str]) -> tuple[int, np.ndarray]:
        raise GenerationError(
            "replay mode has no /embed; pass an embeddings file instead"
        )


class LiveClient:
    """HTTP client for a running generation service, with bounded retries."""

    def __init__(
        self,
        base_url: str,
        retries: int = 2,
        timeout: float = 60.0,
        session: requests.Session | None = None,
    ):
        self._base = base_url.rstrip("/")
        self._retries = retries
        self._timeout = timeout
        self._session = session or requests.Session()

    def _post(self, route: str, body: dict) -> dict:
        last_error: Exception | None = None
        for attempt in range(self._retries + 1):
            try:
                resp = self._session.post(
                    f"{self._base}{route}", json=body, timeout=self._timeout
                )
            except requests.RequestException as exc:
                last_error = exc
                time.sleep(min(0.25 * (attempt + 1), 2.0))
                continue
            if resp.status_code >= 500:
                last_error = GenerationError(f"{route}: HTTP {resp.status_code}")
                time.sleep(min(0.25 * (attempt + 1), 2.0))
                continue
            if resp.status_code != 200:
                raise GenerationError(f"{route}: HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()
            except ValueError:
                raise GenerationError(f"{route}: response body is not JSON") from None
        raise GenerationError(f"{route}: exhausted retries: {last_error}")

    def generate(
        self, test_id: str, prompt_text: str, params: GenerationParams, style: PromptStyle
    ) -> GenerationRecord:
        started = time.monotonic()
        payload = self._post(
            "/generate",
            {
                "prompt": prompt_text,
                "max_new_tokens": params.max_new_tokens,
                "stop": list(params.stop),
                "greedy": params.greedy,
            },
        )
        elapsed_ms = (time.monotonic() - started) * 1000.0
        if not isinstance(payload.get("text"), str):
            raise GenerationError("/generate: missing or non-string 'text'")
        logprobs = payload.get("token_logprobs")
        if logprobs is not None and not isinstance(logprobs, list):
            raise GenerationError("/generate: 'token_logprobs' must be a list or null")
        raw = payload["text"]
        return GenerationRecord(
            test_id=test_id,
            prompt_hash=prompt_hash(prompt_text),
            raw_output=raw,
            hypothesis=extract_hypothesis(raw, style),
            token_logprobs=None if logprobs is None else tuple(float(x) for x in logprobs),
            latency_ms=elapsed_ms,
        )

    def score(self, context: str, continuation: str) -> list[float]:
        payload = self._post("/score", {"context": context, "continuation": continuation})
        logprobs = payload.get("token_logprobs")
        if not isinstance(logprobs, list):
            raise GenerationError("/score: missing 'token_logprobs' list")
        return [float(x) for x in logprobs]

    def embed(self, texts: Sequence[str]) -> tuple[int, np.ndarray]:
        payload = self._post("/embed", {"texts": list(texts)})
        dim = payload.get("dim")
        vectors = payload.get("vectors")
        if not isinstance(dim, int) or not isinstance(vectors, list):
            raise GenerationError("/embed: expected 'dim' int and 'vectors' list")
        matrix = np.asarray(vectors, dtype=np.float32)
        if matrix.ndim != 2 or matrix.shape != (len(texts), dim):
            raise GenerationError(
                f"/embed: got shape {matrix.shape}, expected ({len(texts)}, {dim})"
            )
        return dim, matrix


def make_client(kind: str, location: str, retries: int = 2):
    """kind is "replay" (location = JSONL path) or "live" (location = base URL)."""
    if kind == "replay":
        return ReplayClient(location)
    if kind == "live":
        return LiveClient(location, retries=retries)
    raise ValueError(f"unknown generation source kind {kind!r}")
