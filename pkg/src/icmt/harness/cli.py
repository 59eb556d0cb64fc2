"""Command-line entry point.

Subcommands map one-to-one onto the experiment runners, plus two utilities:
``select`` dumps prompt sets without generating, and ``score`` computes BLEU
over hypothesis/reference files.

Exit codes: 0 success, 2 configuration or data error, 3 generation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from icmt.corpus import CorpusError, load_parallel_corpus, partition_ted
from icmt.harness.config import (
    ConfigError,
    Experiment,
    ExperimentConfig,
    GenerationSource,
)
from icmt.harness.experiments import (
    run_budget_matched,
    run_document_experiment,
    run_domain_crosstable,
    run_interference,
)
from icmt.harness.generation import GenerationError, make_client
from icmt.harness.reports import emit_report
from icmt.metrics import DEFAULT_BLEU, corpus_bleu, sentence_bleu
from icmt.prompting import EQUALS_STYLE, PromptStyle
from icmt.retrieval import Bm25Index, CoverageUtility, EmbeddingStore
from icmt.selection import (
    BudgetMode,
    BudgetSpec,
    Strategy,
    select_greedy_budget,
    select_random,
    select_topk_similarity,
)


def _parse_seeds(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"bad seed list {text!r}") from None


def _parse_pair(text: str, flag: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"{flag} wants MIN,MAX, got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(f"{flag} wants integers, got {text!r}") from None


def _style_for(name: str) -> PromptStyle:
    if name == "labels":
        return PromptStyle()
    if name == "equals":
        return EQUALS_STYLE
    raise ConfigError(f"unknown style {name!r}")


def _generation_source(args: argparse.Namespace) -> GenerationSource:
    if args.replay and args.endpoint:
        raise ConfigError("pass either --replay or --endpoint, not both")
    if args.replay:
        return GenerationSource("replay", args.replay)
    if args.endpoint:
        return GenerationSource("live", args.endpoint)
    raise ConfigError("a generation source is required (--replay or --endpoint)")


def _add_generation_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--replay", help="replay JSONL path")
    parser.add_argument("--endpoint", help="live generation service base URL")
    parser.add_argument("--style", default="labels", choices=("labels", "equals"))
    parser.add_argument("--k", type=int, default=5, help="prompts per set")
    parser.add_argument("--seeds", default=None, help="comma-separated seeds")
    parser.add_argument("--out", default="icmt-report", help="report output directory")
    parser.add_argument("--lang-pair", default="en-fr")
    parser.add_argument("--max-in-flight", type=int, default=4)
    parser.add_argument("--retries", type=int, default=2)
    parser.add_argument(
        "--format", default="tsv", choices=("tsv", "jsonl"), help="corpus file format"
    )


def _add_doc_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--corpus", required=True, help="document-structured corpus")
    parser.add_argument("--strategies", default=None, help="comma-separated strategy tags")
    parser.add_argument("--embeddings", default=None, help="EMB1 embeddings path")
    parser.add_argument("--min-test-lines", type=int, default=100)
    parser.add_argument("--max-eval-lines", type=int, default=120)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icmt",
        description="Prompt selection and evaluation for in-context machine translation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_cross = sub.add_parser("crosstable", help="BLEU across prompt/test domain pairs")
    p_cross.add_argument(
        "--bank", action="append", default=[], metavar="DOMAIN=PATH", required=True
    )
    p_cross.add_argument(
        "--test", action="append", default=[], metavar="DOMAIN=PATH", required=True
    )
    p_cross.add_argument("--length-filter", default=None, metavar="MIN,MAX")
    _add_generation_flags(p_cross)

    for name, help_text in (
        ("doclevel", "document-level strategy comparison"),
        ("budget-match", "within-document retrieval under the window budget"),
        ("ablate-order", "window vs static vs shuffled-window"),
        ("interference", "prompted vs zero-shot deltas and source perplexity"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_doc_flags(p)
        _add_generation_flags(p)

    p_select = sub.add_parser("select", help="dump a prompt set without generating")
    p_select.add_argument("--corpus", required=True)
    p_select.add_argument(
        "--format", default="tsv", choices=("tsv", "jsonl"), help="corpus file format"
    )
    p_select.add_argument(
        "--strategy", required=True, choices=("random", "bm25", "bm25s", "nn")
    )
    p_select.add_argument("--k", type=int, default=5)
    p_select.add_argument("--seed", type=int, default=1)
    p_select.add_argument("--query", default=None, help="query text (bm25/bm25s)")
    p_select.add_argument("--query-id", default=None, help="query example id (nn)")
    p_select.add_argument("--embeddings", default=None, help="EMB1 path (nn)")
    p_select.add_argument("--budget", type=int, default=None, help="word budget")
    p_select.add_argument(
        "--budget-mode", default="strict", choices=("strict", "faithful")
    )

    p_score = sub.add_parser("score", help="BLEU over hypothesis/reference files")
    p_score.add_argument("--hypotheses", required=True)
    p_score.add_argument("--references", required=True)
    p_score.add_argument(
        "--sentence", action="store_true", help="print per-line sentence BLEU"
    )
    return parser


def _experiment_config(args: argparse.Namespace, experiment: Experiment) -> ExperimentConfig:
    default_seeds = "1,2,3,4,5" if experiment is Experiment.DOMAIN_CROSSTABLE else "1"
    seeds = _parse_seeds(args.seeds if args.seeds is not None else default_seeds)
    strategies = ()
    if getattr(args, "strategies", None):
        strategies = tuple(s.strip() for s in args.strategies.split(",") if s.strip())
    elif experiment is Experiment.SHUFFLE_ABLATION:
        strategies = ("window", "static", "shuffle")
    length_filter = None
    if getattr(args, "length_filter", None):
        length_filter = _parse_pair(args.length_filter, "--length-filter")
    lang = tuple(args.lang_pair.split("-"))
    if len(lang) != 2:
        raise ConfigError(f"bad --lang-pair {args.lang_pair!r}")
    return ExperimentConfig(
        experiment=experiment,
        generation=_generation_source(args),
        strategies=strategies,
        k=args.k,
        seeds=seeds,
        length_filter=length_filter,
        style=_style_for(args.style),
        lang_pair=lang,  # type: ignore[arg-type]
        embeddings_path=getattr(args, "embeddings", None),
        max_in_flight=args.max_in_flight,
        retries=args.retries,
    )


def _parse_domain_paths(pairs: list[str], flag: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for pair in pairs:
        domain, sep, path = pair.partition("=")
        if not sep or not domain or not path:
            raise ConfigError(f"{flag} wants DOMAIN=PATH, got {pair!r}")
        out[domain] = path
    return out


def _cmd_crosstable(args: argparse.Namespace) -> int:
    cfg = _experiment_config(args, Experiment.DOMAIN_CROSSTABLE)
    banks = {
        domain: load_parallel_corpus(path, format=args.format, domain=domain)
        for domain, path in _parse_domain_paths(args.bank, "--bank").items()
    }
    tests = {
        domain: load_parallel_corpus(path, format=args.format, domain=domain)
        for domain, path in _parse_domain_paths(args.test, "--test").items()
    }
    client = make_client(cfg.generation.kind, cfg.generation.location, cfg.retries)
    report = run_domain_crosstable(cfg, banks, tests, client)
    return _emit(report, args.out)


def _cmd_doc_family(args: argparse.Namespace, experiment: Experiment) -> int:
    cfg = _experiment_config(args, experiment)
    bank = load_parallel_corpus(args.corpus, format=args.format)
    split = partition_ted(
        bank, min_test_lines=args.min_test_lines, max_eval_lines=args.max_eval_lines
    )
    client = make_client(cfg.generation.kind, cfg.generation.location, cfg.retries)
    if experiment is Experiment.BUDGET_MATCHED:
        report = run_budget_matched(cfg, split, client)
    elif experiment is Experiment.INTERFERENCE:
        report = run_interference(cfg, split, client)
    else:
        report = run_document_experiment(cfg, split, client)
    return _emit(report, args.out)


def _emit(report, out_dir: str) -> int:
    written = emit_report(report, out_dir)
    for path in written:
        print(path)
    return 0


def _cmd_select(args: argparse.Namespace) -> int:
    bank = load_parallel_corpus(args.corpus, format=args.format)
    budget = (
        BudgetSpec(args.budget, BudgetMode(args.budget_mode))
        if args.budget is not None
        else None
    )
    if args.strategy == "random":
        ps = select_random(bank, args.k, args.seed)
    elif args.strategy in ("bm25", "bm25s"):
        if not args.query:
            raise ConfigError(f"--query is required for {args.strategy}")
        index = Bm25Index.from_bank(bank)
        if args.strategy == "bm25":
            ps = select_topk_similarity(
                bank, index.topk(args.query, args.k), args.k, Strategy.BM25
            )
        else:
            ps = select_greedy_budget(
                CoverageUtility(index, args.query),
                budget=budget,
                bank=bank,
                max_items=args.k,
                strategy=Strategy.BM25S,
            )
    else:  # nn
        if not args.embeddings or not args.query_id:
            raise ConfigError("nn needs --embeddings and --query-id")
        store = EmbeddingStore.load(args.embeddings)
        ranked = store.nearest(
            store.vector(args.query_id), args.k, exclude_ids=[args.query_id]
        )
        ps = select_topk_similarity(bank, ranked, args.k, Strategy.NN)
    print(
        json.dumps(
            {
                "strategy": ps.strategy.value,
                "ids": list(ps.ids),
                "sources": [ex.source for ex in ps.items],
                "scores": None if ps.scores is None else list(ps.scores),
                "budget_used": ps.budget_used,
                "seed": ps.seed,
            },
            sort_keys=True,
        )
    )
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    hyps = Path(args.hypotheses).read_text(encoding="utf-8").splitlines()
    refs = Path(args.references).read_text(encoding="utf-8").splitlines()
    if len(hyps) != len(refs):
        raise ConfigError(
            f"{len(hyps)} hypotheses vs {len(refs)} references"
        )
    if not hyps:
        raise ConfigError("empty input files")
    if args.sentence:
        for hyp, ref in zip(hyps, refs):
            print(f"{sentence_bleu(hyp, ref):.4f}")
    else:
        score = corpus_bleu(hyps, refs)
        print(f"BLEU = {score:.2f} ({DEFAULT_BLEU.signature})")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "crosstable":
            return _cmd_crosstable(args)
        if args.command == "doclevel":
            return _cmd_doc_family(args, Experiment.DOC_LEVEL)
        if args.command == "budget-match":
            return _cmd_doc_family(args, Experiment.BUDGET_MATCHED)
        if args.command == "ablate-order":
            return _cmd_doc_family(args, Experiment.SHUFFLE_ABLATION)
        if args.command == "interference":
            return _cmd_doc_family(args, Experiment.INTERFERENCE)
        if args.command == "select":
            return _cmd_select(args)
        if args.command == "score":
            return _cmd_score(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except GenerationError as exc:
        print(f"generation error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, CorpusError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
