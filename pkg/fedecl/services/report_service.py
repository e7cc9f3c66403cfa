"""Metrics CSV / JSON summary emission.

``metrics.csv`` columns, in order::

    method, seed, client, overall, head, mid, tail, acc_class_0 .. acc_class_{C-1}

``client`` is a client index, ``mean`` (client-macro average) or ``weighted``
(all clients' test samples pooled). Floats are written with ``repr`` so a
read-back reproduces every value; NaN is written as ``nan``.

``summary.json`` maps each method to the seed mean and population standard
deviation of its ``mean`` rows (``overall``, ``head``, ``mid``, ``tail``) and
of its ``weighted`` rows (``weighted_overall``), plus the seeds it covers.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, Field

from ..exceptions import FedECLError
from ..schemas.records import MetricsRecord
from ..utils.logging import get_logger

logger = get_logger("report")

BASE_COLUMNS = ["method", "seed", "client", "overall", "head", "mid", "tail"]
METRICS_FILE = "metrics.csv"
SUMMARY_FILE = "summary.json"
GAP_FILE = "class_gap.csv"


class StatSummary(BaseModel):
    mean: Optional[float] = None
    std: Optional[float] = None


class MethodSummary(BaseModel):
    seeds: List[int] = Field(default_factory=list)
    overall: StatSummary = Field(default_factory=StatSummary)
    head: StatSummary = Field(default_factory=StatSummary)
    mid: StatSummary = Field(default_factory=StatSummary)
    tail: StatSummary = Field(default_factory=StatSummary)
    weighted_overall: StatSummary = Field(default_factory=StatSummary)


class ReportSummary(BaseModel):
    methods: Dict[str, MethodSummary] = Field(default_factory=dict)


def _fmt(value: float) -> str:
    return repr(float(value))


def _stat(values: Sequence[float]) -> StatSummary:
    finite = [value for value in values if not math.isnan(value)]
    if not finite:
        return StatSummary()
    mean = sum(finite) / len(finite)
    variance = sum((value - mean) ** 2 for value in finite) / len(finite)
    return StatSummary(mean=mean, std=math.sqrt(variance))


def summarize(records: Sequence[MetricsRecord]) -> ReportSummary:
    summary = ReportSummary()
    for method in sorted({record.method for record in records}):
        means = sorted(
            (r for r in records if r.method == method and r.client == "mean"), key=lambda r: r.seed
        )
        weighted = [r for r in records if r.method == method and r.client == "weighted"]
        summary.methods[method] = MethodSummary(
            seeds=[r.seed for r in means],
            overall=_stat([r.overall for r in means]),
            head=_stat([r.head for r in means]),
            mid=_stat([r.mid for r in means]),
            tail=_stat([r.tail for r in means]),
            weighted_overall=_stat([r.overall for r in weighted]),
        )
    return summary


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise FedECLError(f"cannot write report file {path}: {exc.strerror}") from None


def metrics_csv_text(records: Sequence[MetricsRecord], num_classes: Optional[int] = None) -> str:
    if num_classes is None:
        num_classes = len(records[0].per_class) if records else 0
    lines = [",".join(BASE_COLUMNS + [f"acc_class_{c}" for c in range(num_classes)])]
    for record in records:
        cells = [record.method, str(record.seed), record.client]
        cells += [_fmt(getattr(record, name)) for name in ("overall", "head", "mid", "tail")]
        cells += [_fmt(value) for value in record.per_class]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def class_gap_rows(
    records: Sequence[MetricsRecord], method: str, baseline: str
) -> List[Tuple[int, int, float, float, float]]:
    """(seed, class, method acc, baseline acc, gap) from the client-macro rows."""
    rows = []
    means = {(r.method, r.seed): r for r in records if r.client == "mean"}
    for (name, seed), record in sorted(means.items(), key=lambda item: item[0][1]):
        if name != method or (baseline, seed) not in means:
            continue
        other = means[(baseline, seed)]
        for label, (ours, theirs) in enumerate(zip(record.per_class, other.per_class)):
            rows.append((seed, label, ours, theirs, ours - theirs))
    return rows


class ReportService:
    def __init__(self, directory: Path):
        self._directory = directory

    def emit_report(
        self,
        records: Sequence[MetricsRecord],
        num_classes: Optional[int] = None,
        gap: Optional[Tuple[str, str]] = None,
    ) -> Path:
        """Write ``metrics.csv`` and ``summary.json``; byte-stable for equal records."""
        _write(self._directory / METRICS_FILE, metrics_csv_text(records, num_classes))
        summary = summarize(records)
        _write(self._directory / SUMMARY_FILE, summary.model_dump_json(indent=2) + "\n")
        if gap is not None:
            method, baseline = gap
            lines = [f"seed,class,{method},{baseline},gap"]
            lines += [
                f"{seed},{label},{_fmt(ours)},{_fmt(theirs)},{_fmt(delta)}"
                for seed, label, ours, theirs, delta in class_gap_rows(records, method, baseline)
            ]
            _write(self._directory / GAP_FILE, "\n".join(lines) + "\n")
        logger.info(f"Report written to {self._directory} ({len(records)} metric rows)")
        return self._directory / METRICS_FILE


def read_metrics_csv(path: Path) -> List[MetricsRecord]:
    """Parse a ``metrics.csv``; row numbers in errors are 1-based file lines."""
    if not path.exists():
        raise FedECLError(f"metrics file not found: {path}")
    records = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or header[: len(BASE_COLUMNS)] != BASE_COLUMNS:
            raise FedECLError(f"not a metrics file: {path}")
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FedECLError(
                    f"{path}: row {row_number}: expected {len(header)} fields, found {len(row)}"
                )
            try:
                record = MetricsRecord(
                    method=row[0],
                    seed=int(row[1]),
                    client=row[2],
                    overall=float(row[3]),
                    head=float(row[4]),
                    mid=float(row[5]),
                    tail=float(row[6]),
                    per_class=[float(cell) for cell in row[7:]],
                )
            except ValueError:
                raise FedECLError(f"{path}: row {row_number}: non-numeric field") from None
            records.append(record)
    return records
