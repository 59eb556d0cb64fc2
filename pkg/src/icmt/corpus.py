"""Parallel corpus loading, domain tagging, and document splits.

A bank is an immutable ordered collection of source/target sentence pairs
with document provenance. Banks are built once (single-threaded) and are
safe for concurrent reads afterwards.

Interchange formats:
  TSV    one pair per line, ``doc_id<TAB>source<TAB>target`` (doc_id may be
         omitted, defaulting to "nodoc"); UTF-8, LF line endings, literal
         tabs inside fields are not representable.
  JSONL  one object per line with keys doc_id/source/target.

Well-known domain tags: "flores", "med", "mtnt", "ted"; any other non-empty
string names a custom domain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from icmt.text import word_count

DOMAIN_FLORES = "flores"
DOMAIN_MED = "med"
DOMAIN_MTNT = "mtnt"
DOMAIN_TED = "ted"

DEFAULT_DOC_ID = "nodoc"


class CorpusError(Exception):
    """Base class for corpus construction problems."""


class CorpusParseError(CorpusError):
    """A malformed input row; carries the 1-based line number."""

    def __init__(self, path: str | Path, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.line_no = line_no


class EmptyBankError(CorpusError):
    """Raised when an operation would produce a bank with no examples."""


@dataclass(frozen=True)
class ParallelExample:
    """One source/target sentence pair with document and domain provenance."""

    id: str
    doc_id: str
    position: int
    source: str
    target: str
    domain: str
    lang_pair: tuple[str, str]

    def __post_init__(self) -> None:
        if not self.id.strip():
            raise ValueError("empty example id")
        if not self.doc_id.strip():
            raise ValueError(f"example {self.id}: empty doc_id")
        if not self.source.strip():
            raise ValueError(f"example {self.id}: empty source")
        if not self.target.strip():
            raise ValueError(f"example {self.id}: empty target")
        if self.position < 0:
            raise ValueError(f"example {self.id}: negative position")

    @property
    def source_word_count(self) -> int:
        return word_count(self.source)


class CorpusBank:
    """Ordered, immutable collection of examples indexed by id and (doc_id, position)."""

    def __init__(self, examples: Iterable[ParallelExample]):
        self._examples: tuple[ParallelExample, ...] = tuple(examples)
        self._by_id: dict[str, ParallelExample] = {}
        self._by_doc_pos: dict[tuple[str, int], ParallelExample] = {}
        for ex in self._examples:
            if ex.id in self._by_id:
                raise CorpusError(f"duplicate example id {ex.id!r}")
            key = (ex.doc_id, ex.position)
            if key in self._by_doc_pos:
                raise CorpusError(f"duplicate position {key!r}")
            self._by_id[ex.id] = ex
            self._by_doc_pos[key] = ex

    def __len__(self) -> int:
        return len(self._examples)

    def __iter__(self) -> Iterator[ParallelExample]:
        return iter(self._examples)

    def __contains__(self, example_id: str) -> bool:
        return example_id in self._by_id

    @property
    def examples(self) -> tuple[ParallelExample, ...]:
        return self._examples

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(ex.id for ex in self._examples)

    def get(self, example_id: str) -> ParallelExample:
        try:
            return self._by_id[example_id]
        except KeyError:
            raise KeyError(f"unknown example id {example_id!r}") from None

    def at(self, doc_id: str, position: int) -> ParallelExample:
        try:
            return self._by_doc_pos[(doc_id, position)]
        except KeyError:
            raise KeyError(f"no example at ({doc_id!r}, {position})") from None

    def doc_ids(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for ex in self._examples:
            seen.setdefault(ex.doc_id, None)
        return tuple(seen)

    def document(self, doc_id: str) -> "CorpusBank":
        doc = [ex for ex in self._examples if ex.doc_id == doc_id]
        if not doc:
            raise KeyError(f"unknown doc_id {doc_id!r}")
        return CorpusBank(doc)


@dataclass
class DocumentSplit:
    """Test documents plus the pooled out-of-document prompt bank.

    ``within_doc_banks`` exposes, per test document, the lines available as
    in-document prompt candidates; it is the same truncated bank that is
    evaluated (callers restrict to positions before the test line).
    """

    test_docs: dict[str, CorpusBank]
    outdoc_bank: CorpusBank
    truncated_tail_count: int
    within_doc_banks: dict[str, CorpusBank] = field(init=False)

    def __post_init__(self) -> None:
        self.within_doc_banks = self.test_docs


def load_parallel_corpus(
    path: str | Path,
    format: str = "tsv",
    domain: str = DOMAIN_TED,
    lang_pair: tuple[str, str] = ("en", "fr"),
) -> CorpusBank:
    """Load a parallel corpus file into a bank.

    ``format`` is "tsv" or "jsonl". Positions are assigned in file order per
    doc_id. Raises ``CorpusParseError`` on malformed rows and
    ``EmptyBankError`` when the file holds no examples.
    """
    path = Path(path)
    fmt = format.lower()
    if fmt not in ("tsv", "jsonl"):
        raise ValueError(f"unknown corpus format {format!r}")

    examples: list[ParallelExample] = []
    positions: dict[str, int] = {}

    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if fmt == "tsv":
                doc_id, source, target = _parse_tsv_row(path, line_no, line)
            else:
                doc_id, source, target = _parse_jsonl_row(path, line_no, line)
            if not source.strip():
                raise CorpusParseError(path, line_no, "empty source field")
            if not target.strip():
                raise CorpusParseError(path, line_no, "empty target field")
            pos = positions.get(doc_id, 0)
            positions[doc_id] = pos + 1
            examples.append(
                ParallelExample(
                    id=f"{doc_id}:{pos}",
                    doc_id=doc_id,
                    position=pos,
                    source=source.strip(),
                    target=target.strip(),
                    domain=domain,
                    lang_pair=lang_pair,
                )
            )

    if not examples:
        raise EmptyBankError(f"{path}: no examples found")
    return CorpusBank(examples)


def _parse_tsv_row(path: Path, line_no: int, line: str) -> tuple[str, str, str]:
    fields = line.split("\t")
    if len(fields) == 3:
        doc_id, source, target = fields
        if not doc_id.strip():
            raise CorpusParseError(path, line_no, "empty doc_id field")
    elif len(fields) == 2:
        doc_id, (source, target) = DEFAULT_DOC_ID, fields
    else:
        raise CorpusParseError(
            path, line_no, f"expected 2 or 3 tab-separated fields, got {len(fields)}"
        )
    return doc_id.strip(), source, target


def _parse_jsonl_row(path: Path, line_no: int, line: str) -> tuple[str, str, str]:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusParseError(path, line_no, f"invalid JSON: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise CorpusParseError(path, line_no, "JSONL row is not an object")
    missing = [k for k in ("source", "target") if k not in obj]
    if missing:
        raise CorpusParseError(path, line_no, f"missing keys: {', '.join(missing)}")
    doc_id = str(obj.get("doc_id", DEFAULT_DOC_ID))
    return doc_id, str(obj["source"]), str(obj["target"])


def partition_ted(
    bank: CorpusBank, min_test_lines: int = 100, max_eval_lines: int = 120
) -> DocumentSplit:
    """Split a document-structured bank into test documents and an out-of-document bank.

    Documents with at least ``min_test_lines`` lines become test documents,
    truncated to their first ``max_eval_lines`` lines; shorter documents are
    pooled into the out-of-document prompt bank. Truncated tail lines are
    discarded (they are counted in ``truncated_tail_count`` so the partition
    reconciles exactly).
    """
    if min_test_lines < 1:
        raise ValueError("min_test_lines must be >= 1")
    if max_eval_lines < 1:
        raise ValueError("max_eval_lines must be >= 1")

    docs: dict[str, list[ParallelExample]] = {}
    for ex in bank:
        docs.setdefault(ex.doc_id, []).append(ex)
    for lines in docs.values():
        lines.sort(key=lambda ex: ex.position)

    test_docs: dict[str, CorpusBank] = {}
    outdoc: list[ParallelExample] = []
    truncated = 0
    for doc_id, lines in docs.items():
        if len(lines) >= min_test_lines:
            kept = lines[:max_eval_lines]
            truncated += len(lines) - len(kept)
            test_docs[doc_id] = CorpusBank(kept)
        else:
            outdoc.extend(lines)

    if not test_docs:
        raise CorpusError(
            f"no document reaches {min_test_lines} lines; cannot build a test split"
        )
    return DocumentSplit(
        test_docs=test_docs,
        outdoc_bank=CorpusBank(outdoc),
        truncated_tail_count=truncated,
    )


def filter_by_source_length(
    bank: CorpusBank, min_words: int, max_words: int
) -> CorpusBank:
    """Keep examples whose source has between min_words and max_words words, inclusive.

    Word counts use whitespace tokens of the raw source. Raises
    ``EmptyBankError`` if nothing survives (selection needs candidates).
    """
    if min_words > max_words:
        raise ValueError(f"min_words {min_words} > max_words {max_words}")
    kept = [ex for ex in bank if min_words <= ex.source_word_count <= max_words]
    if not kept:
        raise EmptyBankError(
            f"length filter ({min_words}, {max_words}) removed every example"
        )
    return CorpusBank(kept)
