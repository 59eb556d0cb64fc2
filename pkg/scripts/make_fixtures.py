#!/usr/bin/env python3
"""Regenerate the committed test fixtures under tests/fixtures/.

Everything here is deterministic: corpora come from the seeded synthetic
generator, embeddings from a feature-hash encoder, and replay rows from the
pseudo-model in tests/pseudomodel.py. Rerunning this script must be a no-op
diff unless the generators themselves changed.

Usage: python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

import numpy as np

from icmt.corpus import load_parallel_corpus, partition_ted
from icmt.harness.config import (
    BUDGET_MATCH_STRATEGIES,
    DOC_LEVEL_STRATEGIES,
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
from icmt.retrieval import EmbeddingStore
from pseudomodel import PseudoModelClient, RecordingClient, feature_hash_embedding
from synthcorpus import SynthConfig, build_domain_corpus, build_talk_corpus

FIXTURES = ROOT / "tests" / "fixtures"

DOC_CORPUS = FIXTURES / "doc_corpus.tsv"
EMBEDDINGS = FIXTURES / "embeddings.emb1"
REPLAY = FIXTURES / "replay.jsonl"
CROSS = {
    ("news", "bank"): FIXTURES / "cross_news_bank.tsv",
    ("news", "test"): FIXTURES / "cross_news_test.tsv",
    ("talks", "bank"): FIXTURES / "cross_talks_bank.tsv",
    ("talks", "test"): FIXTURES / "cross_talks_test.tsv",
}
EXPECTED_ROWS = FIXTURES / "expected_doclevel_rows.jsonl"
EXPECTED_AGG = FIXTURES / "expected_doclevel_aggregates.json"

SMALL = SynthConfig(
    seed=7,
    n_test_docs=3,
    test_doc_lines=(12, 12),
    n_outdoc_talks=8,
    outdoc_talk_lines=(5, 5),
)


def write_tsv(bank, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in bank:
            fh.write(f"{ex.doc_id}\t{ex.source}\t{ex.target}\n")


def base_config(experiment: Experiment, **kw) -> ExperimentConfig:
    defaults = dict(
        experiment=experiment,
        generation=GenerationSource("replay", str(REPLAY)),
        k=3,
        seeds=(1,),
        embeddings_path=str(EMBEDDINGS),
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)

    # --- corpora -----------------------------------------------------
    write_tsv(build_talk_corpus(SMALL), DOC_CORPUS)
    bank = load_parallel_corpus(DOC_CORPUS)  # reload: exactly what the CLI sees
    split = partition_ted(bank, min_test_lines=10, max_eval_lines=12)

    for (domain, role), path in CROSS.items():
        n = 40 if role == "bank" else 10
        seed = {"news": 11, "talks": 13}[domain] + (100 if role == "test" else 0)
        write_tsv(build_domain_corpus(domain, n, seed), path)
    cross_banks = {
        d: load_parallel_corpus(CROSS[(d, "bank")], domain=d) for d in ("news", "talks")
    }
    cross_tests = {
        d: load_parallel_corpus(CROSS[(d, "test")], domain=d) for d in ("news", "talks")
    }

    # --- embeddings ----------------------------------------------------
    all_ids: list[str] = []
    vectors: list[np.ndarray] = []
    for ex in bank:
        all_ids.append(ex.id)
        vectors.append(feature_hash_embedding(ex.source))
    store = EmbeddingStore(tuple(all_ids), np.stack(vectors))
    store.save(EMBEDDINGS)

    # --- replay rows from every experiment family ----------------------
    pseudo = PseudoModelClient([bank] + list(cross_banks.values()) + list(cross_tests.values()))
    client = RecordingClient(pseudo)

    doc_report = run_document_experiment(
        base_config(Experiment.DOC_LEVEL, strategies=DOC_LEVEL_STRATEGIES), split, client
    )
    run_budget_matched(
        base_config(Experiment.BUDGET_MATCHED, strategies=BUDGET_MATCH_STRATEGIES),
        split,
        client,
    )
    run_document_experiment(
        base_config(
            Experiment.SHUFFLE_ABLATION, strategies=("window", "static", "shuffle")
        ),
        split,
        client,
    )
    run_interference(
        base_config(Experiment.INTERFERENCE, strategies=("window", "bm25-out")),
        split,
        client,
    )
    run_domain_crosstable(
        base_config(
            Experiment.DOMAIN_CROSSTABLE, seeds=(1, 2), embeddings_path=None
        ),
        cross_banks,
        cross_tests,
        client,
    )

    with open(REPLAY, "w", encoding="utf-8") as fh:
        for key in sorted(client.rows):
            fh.write(json.dumps(client.rows[key], sort_keys=True) + "\n")

    # --- expected doclevel outputs (byte-level regression anchors) -----
    with open(EXPECTED_ROWS, "w", encoding="utf-8") as fh:
        for row in doc_report.rows:
            fh.write(json.dumps(row.to_json(), sort_keys=True) + "\n")
    with open(EXPECTED_AGG, "w", encoding="utf-8") as fh:
        json.dump(doc_report.aggregates, fh, indent=2, sort_keys=True)
        fh.write("\n")

    print(f"{DOC_CORPUS.name}: {len(bank)} examples, {len(split.test_docs)} test docs")
    print(f"{EMBEDDINGS.name}: {len(all_ids)} x {store.dim}")
    print(f"{REPLAY.name}: {len(client.rows)} rows")
    print(f"{EXPECTED_ROWS.name}: {len(doc_report.rows)} rows")


if __name__ == "__main__":
    main()
