"""Fixed-name output files: the full JSON report, the best-classifier
tables, the median-BAC grid, and the expertise scatter."""
from __future__ import annotations

import csv
import json
from pathlib import Path

from .learn.correlation import CorrelationResult
from .learn.evaluation import EvalReport, best_bac_per_participant

REPORT_JSON = "report.json"
TABLE_FILES = {"loro": "table_loro.csv", "holdout": "table_holdout.csv"}
MEDIANS_CSV = "medians.csv"
SCATTER_CSV = "scatter.csv"
CORRELATION_JSON = "correlation.json"
VALIDATION_JSON = "validation.json"


def _fmt(value) -> str:
    return "" if value is None else f"{value:.6f}"


def write_report_json(out_dir: Path, reports: dict[str, EvalReport], seed: int) -> Path:
    payload: dict = {"seed": seed, "protocols": {}}
    for protocol, report in reports.items():
        block = report.to_dict()
        if protocol == "loro":
            block["per_participant_best"] = best_bac_per_participant(report)
        payload["protocols"][protocol] = block
    path = out_dir / REPORT_JSON
    path.write_text(json.dumps(payload, indent=2, sort_keys=True))
    return path


def write_medians_csv(out_dir: Path, reports: dict[str, EvalReport],
                      configs: list[str], families: list[str]) -> Path:
    """Median-BAC grid: one row per (protocol, signal), one column per family."""
    path = out_dir / MEDIANS_CSV
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["protocol", "signal", *families])
        for protocol, report in reports.items():
            for config in configs:
                row = [protocol, config]
                for family in families:
                    row.append(_fmt(report.pair(config, family).median_bac))
                writer.writerow(row)
    return path


def write_best_table_csv(out_dir: Path, protocol: str, report: EvalReport,
                         configs: list[str], families: list[str]) -> Path:
    """Per signal: the family with the best median BAC and its macro metrics."""
    path = out_dir / TABLE_FILES[protocol]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["Signal", "Best Classifier", "Precision", "Recall", "F1", "BAC"])
        for config in configs:
            best_family, best_bac = None, None
            for family in families:
                bac = report.pair(config, family).median_bac
                if bac is not None and (best_bac is None or bac > best_bac):
                    best_family, best_bac = family, bac
            if best_family is None:
                writer.writerow([config, "", "", "", "", ""])
                continue
            macro = report.pair(config, best_family).macro_averages()
            writer.writerow(
                [config, best_family, _fmt(macro[0]), _fmt(macro[1]), _fmt(macro[2]), _fmt(best_bac)]
            )
    return path


def write_scatter_csv(out_dir: Path, rows: list[tuple[str, float, float]]) -> Path:
    """participant, gpa, best_bac triples for the expertise scatter plot."""
    path = out_dir / SCATTER_CSV
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["participant", "gpa", "best_bac"])
        for pid, gpa, bac in rows:
            writer.writerow([pid, _fmt(gpa), _fmt(bac)])
    return path


def write_correlation_json(out_dir: Path, result: CorrelationResult) -> Path:
    path = out_dir / CORRELATION_JSON
    path.write_text(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    return path
