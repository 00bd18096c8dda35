"""Pixel-level overlap metrics and the batch CSV report."""
from __future__ import annotations

import csv
from dataclasses import astuple, dataclass

import numpy as np

from .errors import DimensionMismatch

METRIC_NAMES = ("ac", "se", "sp", "di", "ja")
CSV_HEADER = ("image",) + METRIC_NAMES


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricsReport:
    ac: float
    se: float
    sp: float
    di: float
    ja: float

    def as_tuple(self) -> tuple:
        return astuple(self)


def confusion(pred, gt) -> ConfusionCounts:
    """Pixel counts with lesion as the positive class."""
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    if pred.shape != gt.shape:
        raise DimensionMismatch(f"prediction {pred.shape} vs ground truth {gt.shape}")
    tp = int(np.count_nonzero(pred & gt))
    fp = int(np.count_nonzero(pred & ~gt))
    fn = int(np.count_nonzero(~pred & gt))
    return ConfusionCounts(tp, fp, pred.size - tp - fp - fn, fn)


def _ratio(num: int, den: int) -> float:
    # an empty class counts as perfectly recovered
    return 1.0 if den == 0 else num / den


def compute(c: ConfusionCounts) -> MetricsReport:
    return MetricsReport(
        ac=_ratio(c.tp + c.tn, c.total),
        se=_ratio(c.tp, c.tp + c.fn),
        sp=_ratio(c.tn, c.tn + c.fp),
        di=_ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn),
        ja=_ratio(c.tp, c.tp + c.fp + c.fn),
    )


def evaluate(pred, gt) -> MetricsReport:
    return compute(confusion(pred, gt))


def mean_report(reports) -> MetricsReport | None:
    reports = list(reports)
    if not reports:
        return None
    values = np.mean([r.as_tuple() for r in reports], axis=0)
    return MetricsReport(*map(float, values))


def write_report(path, rows) -> MetricsReport | None:
    """Write ``(image, MetricsReport | status string)`` rows plus a mean row.

    Status rows put their token in the first metric column and are left out
    of the mean. Returns the mean report (``None`` if nothing was scored).
    """
    rows = list(rows)
    scored = [r for _, r in rows if isinstance(r, MetricsReport)]
    mean = mean_report(scored)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(CSV_HEADER)
        for name, result in rows:
            if isinstance(result, MetricsReport):
                out.writerow([name] + [f"{v:.6f}" for v in result.as_tuple()])
            else:
                out.writerow([name, str(result)] + [""] * (len(METRIC_NAMES) - 1))
        if mean is not None:
            out.writerow(["mean"] + [f"{v:.6f}" for v in mean.as_tuple()])
    return mean


def read_report(path) -> dict:
    """Parse a report CSV into ``{image: MetricsReport | status}``."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            try:
                out[row["image"]] = MetricsReport(*(float(row[k]) for k in METRIC_NAMES))
            except ValueError:
                out[row["image"]] = row["ac"]
    return out


__all__ = [
    "ConfusionCounts", "MetricsReport", "confusion", "compute", "evaluate",
    "mean_report", "write_report", "read_report", "CSV_HEADER", "METRIC_NAMES",
]
