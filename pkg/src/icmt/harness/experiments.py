"""Experiment runners.

Each runner walks its test set, selects prompts per test sentence, renders,
generates (live or replay), scores, and returns an ``ExperimentReport`` of
per-sentence rows plus aggregates. Aggregates are always a pure function of
the rows (``recompute_aggregates``), which is what makes reports verifiable
after the fact: loading a report re-derives every aggregate and compares.

Generation runs through a bounded thread pool (selection and scoring are
cheap; the model call is the bottleneck). Everything else is single-threaded
so output order is deterministic.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

import icmt
from icmt import kernels
from icmt.corpus import CorpusBank, DocumentSplit, filter_by_source_length
from icmt.harness.config import (
    BUDGET_MATCH_STRATEGIES,
    DOC_LEVEL_STRATEGIES,
    ConfigError,
    Experiment,
    ExperimentConfig,
)
from icmt.harness.generation import (
    GenerationParams,
    GenerationRecord,
    default_max_new_tokens,
)
from icmt.metrics import (
    conditional_perplexity,
    corpus_bleu,
    coverage,
    interference,
    mean_l2,
    pearson_r,
    sentence_bleu,
)
from icmt.prompting import render_prompt, source_scoring_pair
from icmt.retrieval import Bm25Index, CoverageUtility, EmbeddingStore
from icmt.selection import (
    BudgetMode,
    BudgetSpec,
    ModularUtility,
    PromptSet,
    Strategy,
    select_greedy_budget,
    select_random,
    select_static,
    select_topk_similarity,
    select_window,
    shuffle_prompt_set,
    zeroshot_prompt_set,
)


@dataclass(frozen=True)
class Row:
    """One scored (strategy, test sentence) outcome."""

    test_id: str
    strategy: str
    seed: int | None
    doc_id: str | None
    prompt_domain: str | None
    test_domain: str | None
    hypothesis: str
    reference: str
    sentence_bleu: float
    coverage: float | None
    l2: float | None
    perplexity: float | None
    budget_used: int
    budget_limit: int | None
    prompt_hash: str

    def to_json(self) -> dict:
        return {
            "test_id": self.test_id,
            "strategy": self.strategy,
            "seed": self.seed,
            "doc_id": self.doc_id,
            "prompt_domain": self.prompt_domain,
            "test_domain": self.test_domain,
            "hypothesis": self.hypothesis,
            "reference": self.reference,
            "sentence_bleu": self.sentence_bleu,
            "coverage": self.coverage,
            "l2": self.l2,
            "perplexity": self.perplexity,
            "budget_used": self.budget_used,
            "budget_limit": self.budget_limit,
            "prompt_hash": self.prompt_hash,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Row":
        return cls(**{k: obj[k] for k in cls.__dataclass_fields__})


def _row_sort_key(row: Row):
    return (
        row.strategy,
        row.prompt_domain or "",
        row.test_domain or "",
        row.doc_id or "",
        row.test_id,
        -1 if row.seed is None else row.seed,
    )


@dataclass
class ExperimentReport:
    rows: list[Row]
    aggregates: dict
    manifest: dict

    @classmethod
    def build(cls, rows: Iterable[Row], manifest: dict) -> "ExperimentReport":
        ordered = sorted(rows, key=_row_sort_key)
        return cls(
            rows=ordered,
            aggregates=recompute_aggregates(ordered, manifest),
            manifest=manifest,
        )


class ReportIntegrityError(Exception):
    """Stored aggregates do not match what the stored rows imply."""


def bank_checksum(bank: CorpusBank) -> str:
    digest = hashlib.sha256()
    for ex in bank:
        digest.update(f"{ex.id}\t{ex.source}\t{ex.target}\n".encode("utf-8"))
    return digest.hexdigest()


def build_manifest(cfg: ExperimentConfig, banks: dict[str, CorpusBank]) -> dict:
    return {
        "config": cfg.manifest_dict(),
        "data": {name: bank_checksum(bank) for name, bank in sorted(banks.items())},
        "versions": {
            "package": icmt.__version__,
            "numpy": np.__version__,
            "kernels": kernels.backend_name(),
        },
        "notes": {
            "coverage_aggregation": "per sentence, then per document, then across documents",
            "decoding": "greedy, stop at newline",
            "rng": "numpy PCG64 seeded per selection",
        },
    }


# ---------------------------------------------------------------------------
# aggregate recomputation (single code path used by build and verify-on-load)


def recompute_aggregates(rows: Sequence[Row], manifest: dict) -> dict:
    experiment = manifest["config"]["experiment"]
    if experiment == Experiment.DOMAIN_CROSSTABLE.value:
        return {"crosstable": _crosstable_cells(rows)}
    if experiment in (Experiment.DOC_LEVEL.value, Experiment.SHUFFLE_ABLATION.value):
        return {"per_strategy": _per_strategy_stats(rows)}
    if experiment == Experiment.BUDGET_MATCHED.value:
        return {"per_strategy": _per_strategy_stats(rows)}
    if experiment == Experiment.INTERFERENCE.value:
        tie_epsilon = manifest["config"]["tie_epsilon"]
        return {
            "per_strategy": _per_strategy_stats(rows),
            "interference": _interference_stats(rows, tie_epsilon),
        }
    raise ValueError(f"unknown experiment kind {experiment!r}")


def _group(rows: Sequence[Row], key) -> dict:
    grouped: dict = {}
    for row in rows:
        grouped.setdefault(key(row), []).append(row)
    return grouped


def _doc_bleu(rows: Sequence[Row]) -> float:
    by_doc = _group(rows, lambda r: r.doc_id or "")
    per_doc = [
        corpus_bleu([r.hypothesis for r in doc_rows], [r.reference for r in doc_rows])
        for _, doc_rows in sorted(by_doc.items())
    ]
    return float(np.mean(per_doc))


def _mean_or_none(values: list[float]) -> float | None:
    return float(np.mean(values)) if values else None


def _per_strategy_stats(rows: Sequence[Row]) -> dict:
    stats: dict = {}
    for tag, tag_rows in sorted(_group(rows, lambda r: r.strategy).items()):
        stats[tag] = {
            "doc_bleu": _doc_bleu(tag_rows),
            "mean_coverage": _mean_or_none(
                [r.coverage for r in tag_rows if r.coverage is not None]
            ),
            "mean_l2": _mean_or_none([r.l2 for r in tag_rows if r.l2 is not None]),
            "mean_budget_used": float(np.mean([r.budget_used for r in tag_rows])),
            "rows": len(tag_rows),
        }
    return stats


def _crosstable_cells(rows: Sequence[Row]) -> dict:
    cells: dict = {}
    by_cell = _group(rows, lambda r: (r.prompt_domain or "", r.test_domain or ""))
    for (pd, td), cell_rows in sorted(by_cell.items()):
        per_seed = []
        for _, seed_rows in sorted(
            _group(cell_rows, lambda r: -1 if r.seed is None else r.seed).items()
        ):
            per_seed.append(
                corpus_bleu(
                    [r.hypothesis for r in seed_rows],
                    [r.reference for r in seed_rows],
                )
            )
        cells.setdefault(pd, {})[td] = {
            "mean": float(np.mean(per_seed)),
            "std": float(np.std(per_seed)),
            "seeds": len(per_seed),
        }
    return cells


def _interference_stats(rows: Sequence[Row], tie_epsilon: float) -> dict:
    by_strategy = _group(rows, lambda r: r.strategy)
    zero_rows = {r.test_id: r for r in by_strategy.get("zeroshot", [])}
    out: dict = {}
    for tag, tag_rows in sorted(by_strategy.items()):
        if tag == "zeroshot":
            continue
        paired = [(zero_rows[r.test_id], r) for r in tag_rows if r.test_id in zero_rows]
        if not paired:
            continue
        report = interference(
            [z.sentence_bleu for z, _ in paired],
            [p.sentence_bleu for _, p in paired],
            tie_epsilon=tie_epsilon,
        )
        scored = [
            (r.perplexity, r.sentence_bleu)
            for r in tag_rows
            if r.perplexity is not None
        ]
        correlation = None
        if len(scored) >= 2:
            ppl = [p for p, _ in scored]
            sbl = [s for _, s in scored]
            if len(set(ppl)) > 1 and len(set(sbl)) > 1:
                correlation = pearson_r(ppl, sbl)
        out[tag] = {
            "positive": report.positive,
            "negative": report.negative,
            "no_change": report.no_change,
            "ppl_bleu_pearson": correlation,
        }
    return out


def verify_aggregates(report: ExperimentReport) -> None:
    expected = recompute_aggregates(report.rows, report.manifest)
    if expected != report.aggregates:
        raise ReportIntegrityError("aggregates do not match their rows")


def verify_row_scores(rows: Sequence[Row]) -> None:
    """Re-derive each row's sentence BLEU from its stored hypothesis/reference.

    Aggregates never read the per-row score directly, so this is the only
    check that catches a corrupted sentence_bleu column.
    """
    for row in rows:
        expected = sentence_bleu(row.hypothesis, row.reference)
        if row.sentence_bleu != expected:
            raise ReportIntegrityError(
                f"row {row.test_id}/{row.strategy}: stored sentence_bleu "
                f"{row.sentence_bleu!r} != recomputed {expected!r}"
            )


# ---------------------------------------------------------------------------
# shared machinery


def _generate_all(client, jobs: list[tuple[str, str, GenerationParams]], cfg, style) -> list[GenerationRecord]:
    def one(job: tuple[str, str, GenerationParams]) -> GenerationRecord:
        test_id, prompt_text, params = job
        return client.generate(test_id, prompt_text, params, style)

    if cfg.max_in_flight == 1 or len(jobs) <= 1:
        return [one(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=cfg.max_in_flight) as pool:
        return list(pool.map(one, jobs))


def _substore(store: EmbeddingStore, ids: Sequence[str]) -> EmbeddingStore:
    row_of = {ex_id: row for row, ex_id in enumerate(store.ids)}
    rows = np.asarray([row_of[i] for i in ids], dtype=np.int64)
    return EmbeddingStore(list(ids), store.matrix[rows])


def _load_embeddings(cfg: ExperimentConfig, client, banks: Sequence[CorpusBank]) -> EmbeddingStore | None:
    """Embedding store covering every id in ``banks``; None when not needed."""
    if cfg.embeddings_path is not None:
        store = EmbeddingStore.load(cfg.embeddings_path)
        missing = [ex.id for bank in banks for ex in bank if ex.id not in store]
        if missing:
            raise ConfigError(
                f"embeddings file lacks {len(missing)} ids (first: {missing[0]!r})"
            )
        return store
    if cfg.generation.kind == "live":
        ids: list[str] = []
        texts: list[str] = []
        seen: set[str] = set()
        for bank in banks:
            for ex in bank:
                if ex.id not in seen:
                    seen.add(ex.id)
                    ids.append(ex.id)
                    texts.append(ex.source)
        _, matrix = client.embed(texts)
        return EmbeddingStore(ids, matrix)
    return None


def _needs_embeddings(strategies: Iterable[str]) -> bool:
    return any(tag.startswith("nn") for tag in strategies)


def _prefix_bank(doc: CorpusBank, position: int) -> CorpusBank:
    return CorpusBank([ex for ex in doc if ex.position < position])


def _row_from_record(
    record: GenerationRecord,
    *,
    strategy: str,
    seed: int | None,
    doc_id: str | None,
    prompt_domain: str | None,
    test_domain: str | None,
    reference: str,
    test_source: str,
    ps: PromptSet,
    store: EmbeddingStore | None,
    perplexity: float | None = None,
    budget_limit: int | None = None,
) -> Row:
    prompt_sources = [ex.source for ex in ps.items]
    l2 = None
    if store is not None and len(ps.items) > 0:
        try:
            vectors = [store.vector(ex.id) for ex in ps.items]
            l2 = mean_l2(vectors, store.vector(record.test_id))
        except KeyError:
            l2 = None
    return Row(
        test_id=record.test_id,
        strategy=strategy,
        seed=seed,
        doc_id=doc_id,
        prompt_domain=prompt_domain,
        test_domain=test_domain,
        hypothesis=record.hypothesis,
        reference=reference,
        sentence_bleu=sentence_bleu(record.hypothesis, reference),
        coverage=coverage(prompt_sources, test_source),
        l2=l2,
        perplexity=perplexity,
        budget_used=ps.budget_used,
        budget_limit=budget_limit,
        prompt_hash=record.prompt_hash,
    )


# ---------------------------------------------------------------------------
# crosstable


def run_domain_crosstable(
    cfg: ExperimentConfig,
    banks: dict[str, CorpusBank],
    test_sets: dict[str, CorpusBank],
    client,
) -> ExperimentReport:
    """BLEU of every (prompt domain, test domain) pairing under random prompts."""
    if len(banks) < 2:
        raise ConfigError("crosstable needs at least two prompt domains")
    for domain, test_set in test_sets.items():
        if len(test_set) == 0:
            raise ConfigError(f"empty test set for domain {domain!r}")
        if domain not in banks:
            raise ConfigError(f"test domain {domain!r} has no prompt bank")

    prompt_banks: dict[str, CorpusBank] = {}
    for domain, bank in banks.items():
        prompt_banks[domain] = (
            filter_by_source_length(bank, *cfg.length_filter)
            if cfg.length_filter is not None
            else bank
        )

    rows: list[Row] = []
    for prompt_domain in sorted(prompt_banks):
        for test_domain in sorted(test_sets):
            test_bank = test_sets[test_domain]
            test_ids = set(test_bank.ids)
            for seed in cfg.seeds:
                ps = select_random(
                    prompt_banks[prompt_domain],
                    cfg.k,
                    seed,
                    exclude_ids=test_ids,
                )
                jobs = []
                for ex in test_bank:
                    prompt_text = render_prompt(cfg.style, ps, ex.source)
                    params = GenerationParams(
                        max_new_tokens=default_max_new_tokens(ex.source)
                    )
                    jobs.append((ex.id, prompt_text, params))
                records = _generate_all(client, jobs, cfg, cfg.style)
                for ex, record in zip(test_bank, records):
                    rows.append(
                        _row_from_record(
                            record,
                            strategy="random",
                            seed=seed,
                            doc_id=ex.doc_id,
                            prompt_domain=prompt_domain,
                            test_domain=test_domain,
                            reference=ex.target,
                            test_source=ex.source,
                            ps=ps,
                            store=None,
                        )
                    )

    manifest = build_manifest(
        cfg,
        {f"bank:{d}": b for d, b in banks.items()}
        | {f"test:{d}": t for d, t in test_sets.items()},
    )
    return ExperimentReport.build(rows, manifest)


# ---------------------------------------------------------------------------
# document-level strategy dispatch


def _select_for_tag(
    tag: str,
    *,
    doc: CorpusBank,
    position: int,
    k: int,
    outdoc: CorpusBank,
    out_index: Bm25Index,
    out_store: EmbeddingStore | None,
    full_store: EmbeddingStore | None,
    query: str,
    test_id: str,
    seed: int,
) -> PromptSet:
    if tag == "random-out":
        return select_random(outdoc, k, seed)
    if tag == "bm25-out":
        return select_topk_similarity(
            outdoc, out_index.topk(query, k), k, Strategy.BM25
        )
    if tag == "bm25s-out":
        return select_greedy_budget(
            CoverageUtility(out_index, query),
            budget=None,
            bank=outdoc,
            max_items=k,
            strategy=Strategy.BM25S,
        )
    if tag == "nn-out":
        if out_store is None or full_store is None:
            raise ConfigError("nn-out needs embeddings (file or live /embed)")
        ranked = out_store.nearest(full_store.vector(test_id), k)
        return select_topk_similarity(outdoc, ranked, k, Strategy.NN)
    if tag == "window":
        return select_window(doc, position, k, outdoc, seed)
    if tag == "shuffle":
        return shuffle_prompt_set(select_window(doc, position, k, outdoc, seed), seed)
    if tag == "static":
        ps = select_static(doc, k)
        kept = tuple(ex for ex in ps.items if ex.position < position)
        return PromptSet(items=kept, strategy=Strategy.STATIC)
    if tag == "random-within":
        prefix = _prefix_bank(doc, position)
        if len(prefix) >= k:
            return select_random(prefix, k, seed)
        fills = (
            select_random(outdoc, k - len(prefix), seed).items if k > len(prefix) else ()
        )
        drawn = (
            select_random(prefix, len(prefix), seed).items if len(prefix) else ()
        )
        return PromptSet(items=fills + drawn, strategy=Strategy.RANDOM, seed=seed)
    raise ConfigError(f"unknown document-level strategy {tag!r}")


def run_document_experiment(
    cfg: ExperimentConfig, split: DocumentSplit, client
) -> ExperimentReport:
    """Per-strategy document-level evaluation over a TED-style split.

    Emits exactly one row per (strategy, test sentence). Within-document
    strategies only ever see lines strictly preceding the test line.
    """
    strategies = cfg.strategies or DOC_LEVEL_STRATEGIES
    for tag in strategies:
        if tag not in DOC_LEVEL_STRATEGIES:
            raise ConfigError(f"unknown document-level strategy {tag!r}")
    outdoc = split.outdoc_bank
    if len(outdoc) == 0:
        raise ConfigError("empty out-of-document bank")
    out_index = Bm25Index.from_bank(outdoc)
    all_banks = [outdoc] + list(split.test_docs.values())
    full_store = (
        _load_embeddings(cfg, client, all_banks)
        if _needs_embeddings(strategies)
        else None
    )
    out_store = _substore(full_store, outdoc.ids) if full_store is not None else None
    seed = cfg.primary_seed

    rows: list[Row] = []
    for doc_id in sorted(split.test_docs):
        doc = split.test_docs[doc_id]
        for tag in strategies:
            jobs = []
            prompt_sets = []
            for ex in doc:
                ps = _select_for_tag(
                    tag,
                    doc=doc,
                    position=ex.position,
                    k=cfg.k,
                    outdoc=outdoc,
                    out_index=out_index,
                    out_store=out_store,
                    full_store=full_store,
                    query=ex.source,
                    test_id=ex.id,
                    seed=seed,
                )
                prompt_sets.append(ps)
                prompt_text = render_prompt(cfg.style, ps, ex.source)
                jobs.append(
                    (
                        ex.id,
                        prompt_text,
                        GenerationParams(
                            max_new_tokens=default_max_new_tokens(ex.source)
                        ),
                    )
                )
            records = _generate_all(client, jobs, cfg, cfg.style)
            for ex, ps, record in zip(doc, prompt_sets, records):
                rows.append(
                    _row_from_record(
                        record,
                        strategy=tag,
                        seed=seed,
                        doc_id=doc_id,
                        prompt_domain=None,
                        test_domain=None,
                        reference=ex.target,
                        test_source=ex.source,
                        ps=ps,
                        store=full_store,
                    )
                )

    manifest = build_manifest(
        cfg, {"outdoc": outdoc} | {f"doc:{d}": b for d, b in sorted(split.test_docs.items())}
    )
    return ExperimentReport.build(rows, manifest)


# ---------------------------------------------------------------------------
# budget-matched within-document retrieval


def _budget_matched_ps(
    tag: str,
    *,
    doc: CorpusBank,
    position: int,
    k: int,
    outdoc: CorpusBank,
    full_store: EmbeddingStore | None,
    query: str,
    test_id: str,
    seed: int,
    window_b: int,
) -> PromptSet:
    if tag == "window":
        return select_window(doc, position, k, outdoc, seed)
    prefix = _prefix_bank(doc, position)
    if len(prefix) == 0:
        strategy = Strategy.NN if tag.startswith("nn") else (
            Strategy.BM25S if tag.startswith("bm25s") else Strategy.BM25
        )
        return PromptSet(items=(), strategy=strategy)
    prefix_index = Bm25Index.from_bank(prefix)
    budgeted = tag.endswith("-budget")
    spec = BudgetSpec(window_b, BudgetMode.STRICT) if budgeted else None
    cap = None if budgeted else min(k, len(prefix))

    if tag.startswith("bm25s"):
        return select_greedy_budget(
            CoverageUtility(prefix_index, query),
            budget=spec,
            bank=prefix,
            max_items=cap,
            strategy=Strategy.BM25S,
        )
    if tag.startswith("bm25"):
        if budgeted:
            scores = prefix_index.score_all(query)
            utility = ModularUtility(dict(zip(prefix_index.ids, scores.tolist())))
            return select_greedy_budget(
                utility, budget=spec, bank=prefix, strategy=Strategy.BM25
            )
        return select_topk_similarity(
            prefix, prefix_index.topk(query, cap), cap, Strategy.BM25
        )
    if tag.startswith("nn"):
        if full_store is None:
            raise ConfigError("nn strategies need embeddings (file or live /embed)")
        prefix_store = _substore(full_store, prefix.ids)
        ranked = prefix_store.nearest(full_store.vector(test_id), len(prefix))
        if budgeted:
            utility = ModularUtility({ex_id: -dist for ex_id, dist in ranked})
            return select_greedy_budget(
                utility, budget=spec, bank=prefix, strategy=Strategy.NN
            )
        return select_topk_similarity(prefix, ranked, cap, Strategy.NN)
    raise ConfigError(f"unknown budget-match strategy {tag!r}")


def run_budget_matched(
    cfg: ExperimentConfig, split: DocumentSplit, client
) -> ExperimentReport:
    """Within-document retrieval with and without the moving window's budget.

    Per test sentence the window's own word budget is computed first; the
    budgeted variants then select under that budget in STRICT mode, so
    budget_used <= budget_limit on every budgeted row.
    """
    strategies = cfg.strategies or BUDGET_MATCH_STRATEGIES
    for tag in strategies:
        if tag not in BUDGET_MATCH_STRATEGIES:
            raise ConfigError(f"unknown budget-match strategy {tag!r}")
    outdoc = split.outdoc_bank
    if len(outdoc) == 0:
        raise ConfigError("empty out-of-document bank")
    all_banks = [outdoc] + list(split.test_docs.values())
    full_store = (
        _load_embeddings(cfg, client, all_banks)
        if _needs_embeddings(strategies)
        else None
    )
    seed = cfg.primary_seed

    rows: list[Row] = []
    for doc_id in sorted(split.test_docs):
        doc = split.test_docs[doc_id]
        window_budgets = {
            ex.position: select_window(doc, ex.position, cfg.k, outdoc, seed).budget_used
            for ex in doc
        }
        for tag in strategies:
            jobs = []
            prompt_sets = []
            for ex in doc:
                ps = _budget_matched_ps(
                    tag,
                    doc=doc,
                    position=ex.position,
                    k=cfg.k,
                    outdoc=outdoc,
                    full_store=full_store,
                    query=ex.source,
                    test_id=ex.id,
                    seed=seed,
                    window_b=window_budgets[ex.position],
                )
                prompt_sets.append(ps)
                jobs.append(
                    (
                        ex.id,
                        render_prompt(cfg.style, ps, ex.source),
                        GenerationParams(
                            max_new_tokens=default_max_new_tokens(ex.source)
                        ),
                    )
                )
            records = _generate_all(client, jobs, cfg, cfg.style)
            for ex, ps, record in zip(doc, prompt_sets, records):
                rows.append(
                    _row_from_record(
                        record,
                        strategy=tag,
                        seed=seed,
                        doc_id=doc_id,
                        prompt_domain=None,
                        test_domain=None,
                        reference=ex.target,
                        test_source=ex.source,
                        ps=ps,
                        store=full_store,
                        budget_limit=window_budgets[ex.position]
                        if tag.endswith("-budget")
                        else None,
                    )
                )

    manifest = build_manifest(
        cfg, {"outdoc": outdoc} | {f"doc:{d}": b for d, b in sorted(split.test_docs.items())}
    )
    return ExperimentReport.build(rows, manifest)


# ---------------------------------------------------------------------------
# interference (prompted vs zero-shot)


def run_interference(
    cfg: ExperimentConfig, split: DocumentSplit, client
) -> ExperimentReport:
    """Prompted-vs-zeroshot sentence BLEU deltas plus source perplexity.

    Every test sentence is generated once with an empty prompt and once per
    configured strategy; /score supplies natural-log probabilities of the
    source given each context for the perplexity column.
    """
    strategies = cfg.strategies or ("window",)
    for tag in strategies:
        if tag not in DOC_LEVEL_STRATEGIES:
            raise ConfigError(f"unknown document-level strategy {tag!r}")
    outdoc = split.outdoc_bank
    if len(outdoc) == 0:
        raise ConfigError("empty out-of-document bank")
    out_index = Bm25Index.from_bank(outdoc)
    all_banks = [outdoc] + list(split.test_docs.values())
    full_store = (
        _load_embeddings(cfg, client, all_banks)
        if _needs_embeddings(strategies)
        else None
    )
    out_store = _substore(full_store, outdoc.ids) if full_store is not None else None
    seed = cfg.primary_seed

    rows: list[Row] = []
    for doc_id in sorted(split.test_docs):
        doc = split.test_docs[doc_id]
        for tag in ("zeroshot",) + tuple(strategies):
            jobs = []
            prompt_sets = []
            for ex in doc:
                if tag == "zeroshot":
                    ps = zeroshot_prompt_set()
                else:
                    ps = _select_for_tag(
                        tag,
                        doc=doc,
                        position=ex.position,
                        k=cfg.k,
                        outdoc=outdoc,
                        out_index=out_index,
                        out_store=out_store,
                        full_store=full_store,
                        query=ex.source,
                        test_id=ex.id,
                        seed=seed,
                    )
                prompt_sets.append(ps)
                jobs.append(
                    (
                        ex.id,
                        render_prompt(cfg.style, ps, ex.source),
                        GenerationParams(
                            max_new_tokens=default_max_new_tokens(ex.source)
                        ),
                    )
                )
            records = _generate_all(client, jobs, cfg, cfg.style)
            for ex, ps, record in zip(doc, prompt_sets, records):
                context, continuation = source_scoring_pair(cfg.style, ps, ex.source)
                logprobs = client.score(context, continuation)
                ppl = conditional_perplexity(logprobs) if logprobs else None
                rows.append(
                    _row_from_record(
                        record,
                        strategy=tag,
                        seed=seed,
                        doc_id=doc_id,
                        prompt_domain=None,
                        test_domain=None,
                        reference=ex.target,
                        test_source=ex.source,
                        ps=ps,
                        store=full_store,
                        perplexity=ppl,
                    )
                )

    manifest = build_manifest(
        cfg, {"outdoc": outdoc} | {f"doc:{d}": b for d, b in sorted(split.test_docs.items())}
    )
    return ExperimentReport.build(rows, manifest)
