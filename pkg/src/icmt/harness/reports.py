"""Report serialization: JSONL rows, CSV/Markdown tables, histogram, manifest.

Output is byte-deterministic for a fixed report: rows are pre-sorted, JSON
keys are sorted, floats print via repr (shortest round-trip) in JSON and with
fixed precision in the presentation tables, and nothing time-dependent is
written. ``load_report`` re-derives every aggregate from the stored rows and
refuses reports whose aggregates do not match.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from icmt.harness.experiments import (
    ExperimentReport,
    ReportIntegrityError,
    Row,
    recompute_aggregates,
    verify_row_scores,
)

HISTOGRAM_BUCKET_WIDTH = 5
_N_BUCKETS = 100 // HISTOGRAM_BUCKET_WIDTH


def _fmt(value: float | None, digits: int = 4) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


def emit_report(
    report: ExperimentReport,
    out_dir: str | Path,
    formats: tuple[str, ...] = ("jsonl", "csv", "md"),
) -> list[Path]:
    """Write the report under ``out_dir``; returns the files written.

    manifest.json and aggregates.json are always written; "jsonl" adds
    rows.jsonl, "csv" adds tables.csv and histogram.csv, "md" adds tables.md.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def write_text(name: str, text: str) -> None:
        path = out / name
        path.write_text(text, encoding="utf-8")
        written.append(path)

    write_text(
        "manifest.json", json.dumps(report.manifest, sort_keys=True, indent=2) + "\n"
    )
    write_text(
        "aggregates.json", json.dumps(report.aggregates, sort_keys=True, indent=2) + "\n"
    )
    if "jsonl" in formats:
        lines = [json.dumps(row.to_json(), sort_keys=True) for row in report.rows]
        write_text("rows.jsonl", "".join(line + "\n" for line in lines))
    if "csv" in formats:
        write_text("tables.csv", _tables_csv(report))
        write_text("histogram.csv", _histogram_csv(report))
    if "md" in formats:
        write_text("tables.md", _tables_md(report))
    return written


def _tables_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if "crosstable" in report.aggregates:
        writer.writerow(["prompt_domain", "test_domain", "mean", "std", "seeds"])
        cells = report.aggregates["crosstable"]
        for pd in sorted(cells):
            for td in sorted(cells[pd]):
                cell = cells[pd][td]
                writer.writerow(
                    [pd, td, _fmt(cell["mean"]), _fmt(cell["std"]), cell["seeds"]]
                )
    else:
        writer.writerow(
            ["strategy", "doc_bleu", "mean_coverage", "mean_l2", "mean_budget_used", "rows"]
        )
        stats = report.aggregates.get("per_strategy", {})
        for tag in sorted(stats):
            s = stats[tag]
            writer.writerow(
                [
                    tag,
                    _fmt(s["doc_bleu"]),
                    _fmt(s["mean_coverage"]),
                    _fmt(s["mean_l2"]),
                    _fmt(s["mean_budget_used"]),
                    s["rows"],
                ]
            )
        if "interference" in report.aggregates:
            writer.writerow([])
            writer.writerow(
                ["strategy", "positive", "negative", "no_change", "ppl_bleu_pearson"]
            )
            inter = report.aggregates["interference"]
            for tag in sorted(inter):
                s = inter[tag]
                writer.writerow(
                    [
                        tag,
                        _fmt(s["positive"]),
                        _fmt(s["negative"]),
                        _fmt(s["no_change"]),
                        _fmt(s["ppl_bleu_pearson"]),
                    ]
                )
    return buf.getvalue()


def _histogram_csv(report: ExperimentReport) -> str:
    """Width-5 sentence-BLEU buckets over all rows; 100 lands in the top bucket."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bucket_lo", "bucket_hi", "count"])
    if not report.rows:
        return buf.getvalue()
    counts = [0] * _N_BUCKETS
    for row in report.rows:
        bucket = min(int(row.sentence_bleu // HISTOGRAM_BUCKET_WIDTH), _N_BUCKETS - 1)
        counts[bucket] += 1
    for i, count in enumerate(counts):
        writer.writerow(
            [i * HISTOGRAM_BUCKET_WIDTH, (i + 1) * HISTOGRAM_BUCKET_WIDTH, count]
        )
    return buf.getvalue()


def _tables_md(report: ExperimentReport) -> str:
    lines: list[str] = []
    if "crosstable" in report.aggregates:
        cells = report.aggregates["crosstable"]
        test_domains = sorted({td for row in cells.values() for td in row})
        lines.append("| prompts \\ test | " + " | ".join(test_domains) + " |")
        lines.append("|" + " --- |" * (len(test_domains) + 1))
        for pd in sorted(cells):
            rendered = []
            for td in test_domains:
                cell = cells[pd].get(td)
                rendered.append(
                    "-" if cell is None else f"{cell['mean']:.2f} ({cell['std']:.2f})"
                )
            lines.append(f"| {pd} | " + " | ".join(rendered) + " |")
    else:
        lines.append("| strategy | doc BLEU | mean coverage | mean L2 | mean budget |")
        lines.append("| --- | --- | --- | --- | --- |")
        stats = report.aggregates.get("per_strategy", {})
        for tag in sorted(stats):
            s = stats[tag]
            lines.append(
                f"| {tag} | {_fmt(s['doc_bleu'], 2)} | {_fmt(s['mean_coverage'], 2)} "
                f"| {_fmt(s['mean_l2'], 2)} | {_fmt(s['mean_budget_used'], 1)} |"
            )
        if "interference" in report.aggregates:
            lines.append("")
            lines.append("| strategy | positive | negative | no change | Pearson r |")
            lines.append("| --- | --- | --- | --- | --- |")
            inter = report.aggregates["interference"]
            for tag in sorted(inter):
                s = inter[tag]
                lines.append(
                    f"| {tag} | {_fmt(s['positive'], 2)} | {_fmt(s['negative'], 2)} "
                    f"| {_fmt(s['no_change'], 2)} | {_fmt(s['ppl_bleu_pearson'], 2)} |"
                )
    return "\n".join(lines) + "\n"


def load_report(out_dir: str | Path) -> ExperimentReport:
    """Load an emitted report, verifying aggregates against the rows."""
    out = Path(out_dir)
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    aggregates = json.loads((out / "aggregates.json").read_text(encoding="utf-8"))
    rows = [
        Row.from_json(json.loads(line))
        for line in (out / "rows.jsonl").read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    expected = recompute_aggregates(rows, manifest)
    if expected != aggregates:
        raise ReportIntegrityError(
            f"{out}: stored aggregates do not match recomputation from rows"
        )
    verify_row_scores(rows)
    return ExperimentReport(rows=rows, aggregates=aggregates, manifest=manifest)
