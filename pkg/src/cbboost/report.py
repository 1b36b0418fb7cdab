"""BMP/CMP improvement reports over sweep summary tables.

A summary row is one (dataset, profile, loss) cell with a mean F1.  Baseline
cells are the cross-entropy runs; every other loss is class-balanced.  Per
dataset the report takes the best baseline cell (BMP), the best balanced cell
(CMP) and their difference, and also emits a long-format dataset/delta table
for plotting.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .errors import DataError, ParameterError
from .metrics import improvement

SUMMARY_HEADER = ["dataset", "profile", "loss", "f1_mean", "f1_std", "best_params_path", "status"]

BASELINE_LOSS = "ce"


@dataclass
class SummaryRow:
    dataset: str
    profile: str
    loss: str
    f1_mean: float
    f1_std: float
    best_params_path: str = ""
    status: str = "ok"

    def cell(self) -> str:
        return f"{self.profile}/{self.loss}"


@dataclass
class DatasetImprovement:
    dataset: str
    bmp: float
    cmp: float
    delta: float
    best_baseline_cell: str
    best_balanced_cell: str


@dataclass
class ImprovementReport:
    rows: list[DatasetImprovement]

    def deltas(self) -> dict[str, float]:
        return {r.dataset: r.delta for r in self.rows}


def read_summary_csv(path) -> list[SummaryRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != SUMMARY_HEADER:
            raise DataError(f"{path}: expected summary header {','.join(SUMMARY_HEADER)}")
        rows = []
        for record in reader:
            try:
                rows.append(
                    SummaryRow(
                        dataset=record["dataset"],
                        profile=record["profile"],
                        loss=record["loss"].lower(),
                        f1_mean=float(record["f1_mean"]) if record["f1_mean"] != "" else float("nan"),
                        f1_std=float(record["f1_std"]) if record["f1_std"] != "" else float("nan"),
                        best_params_path=record["best_params_path"],
                        status=record["status"],
                    )
                )
            except ValueError as exc:
                raise DataError(f"{path}: bad summary row {record}: {exc}") from None
    return rows


def write_summary_csv(rows: list[SummaryRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_HEADER)
        for r in rows:
            writer.writerow(
                [r.dataset, r.profile, r.loss, f"{r.f1_mean:.2f}", f"{r.f1_std:.2f}", r.best_params_path, r.status]
            )


def build_report(rows: list[SummaryRow]) -> ImprovementReport:
    """Group usable cells per dataset and apply the best-vs-best comparison."""
    ordered_datasets: list[str] = []
    grouped: dict[str, list[SummaryRow]] = {}
    for row in rows:
        if row.status != "ok":
            continue
        if row.dataset not in grouped:
            grouped[row.dataset] = []
            ordered_datasets.append(row.dataset)
        grouped[row.dataset].append(row)
    if not grouped:
        raise ParameterError("no usable summary rows")
    out = []
    for dataset in ordered_datasets:
        cells = grouped[dataset]
        baseline = [c for c in cells if c.loss == BASELINE_LOSS]
        balanced = [c for c in cells if c.loss != BASELINE_LOSS]
        if not baseline:
            raise ParameterError(f"dataset {dataset!r} has no baseline (ce) cells")
        if not balanced:
            raise ParameterError(f"dataset {dataset!r} has no class-balanced cells")
        result = improvement([c.f1_mean for c in baseline], [c.f1_mean for c in balanced])
        best_base = max(baseline, key=lambda c: (c.f1_mean, -cells.index(c)))
        best_bal = max(balanced, key=lambda c: (c.f1_mean, -cells.index(c)))
        out.append(
            DatasetImprovement(
                dataset=dataset,
                bmp=result.bmp,
                cmp=result.cmp,
                delta=result.delta,
                best_baseline_cell=best_base.cell(),
                best_balanced_cell=best_bal.cell(),
            )
        )
    return ImprovementReport(rows=out)


def write_report_csv(report: ImprovementReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "bmp", "cmp", "delta", "best_baseline_cell", "best_balanced_cell"])
        for r in report.rows:
            writer.writerow(
                [r.dataset, f"{r.bmp:.2f}", f"{r.cmp:.2f}", f"{r.delta:.2f}", r.best_baseline_cell, r.best_balanced_cell]
            )


def write_delta_csv(report: ImprovementReport, path) -> None:
    """Long-format dataset,delta table ready for external bar plotting."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "delta"])
        for r in report.rows:
            writer.writerow([r.dataset, f"{r.delta:.2f}"])
