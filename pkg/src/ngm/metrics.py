"""Edge-recovery metrics: FPR, TPR, F1, MCC and normalized SHD.

Zero-denominator conventions: MCC = 0 if any factor of its denominator is 0;
F1 = 1 when tp = fp = fn = 0; FPR = 0 when fp + tn = 0; TPR = 1 when tp + fn = 0.
SHD for undirected graphs is insertions + deletions (no flips) divided by the
number of possible pairs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .graph import EdgeSetCollection

PER_NODE_MEAN = "per-node-mean"
POOLED = "pooled"
MODES = (PER_NODE_MEAN, POOLED)
METRIC_NAMES = ("fpr", "tpr", "f1", "shd", "mcc")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise InvalidInputError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp,
                               self.tn + other.tn, self.fn + other.fn)


@dataclass(frozen=True)
class MetricReport:
    fpr: float
    tpr: float
    f1: float
    shd: float
    mcc: float
    mode: str = PER_NODE_MEAN

    def values(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in METRIC_NAMES])


def confusion(pred: EdgeSetCollection, truth: EdgeSetCollection) -> list[ConfusionCounts]:
    """Per-node confusion counts over all d(d-1)/2 unordered pairs."""
    if pred.n != truth.n or pred.d != truth.d:
        raise InvalidInputError(
            f"shape mismatch: pred (n={pred.n}, d={pred.d}) vs truth (n={truth.n}, d={truth.d})")
    total = truth.d * (truth.d - 1) // 2
    out = []
    for p, t in zip(pred.edges, truth.edges):
        tp = len(p & t)
        fp = len(p) - tp
        fn = len(t) - tp
        out.append(ConfusionCounts(tp=tp, fp=fp, tn=total - tp - fp - fn, fn=fn))
    return out


def metrics(counts: ConfusionCounts, mode: str = PER_NODE_MEAN) -> MetricReport:
    tp, fp, tn, fn = counts.tp, counts.fp, counts.tn, counts.fn
    fpr = fp / (fp + tn) if fp + tn > 0 else 0.0
    tpr = tp / (tp + fn) if tp + fn > 0 else 1.0
    f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn > 0 else 1.0
    shd = (fp + fn) / counts.total if counts.total > 0 else 0.0
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt(denom) if denom > 0 else 0.0
    return MetricReport(fpr=fpr, tpr=tpr, f1=f1, shd=shd, mcc=mcc, mode=mode)


def replication_report(node_counts: list[ConfusionCounts], mode: str = PER_NODE_MEAN) -> MetricReport:
    """Collapse one replication's per-node counts into a single report."""
    if not node_counts:
        raise InvalidInputError("no nodes to aggregate")
    if mode == POOLED:
        total = node_counts[0]
        for c in node_counts[1:]:
            total = total + c
        return metrics(total, mode=POOLED)
    if mode != PER_NODE_MEAN:
        raise InvalidInputError(f"unknown aggregation mode {mode!r}")
    vals = np.mean([metrics(c).values() for c in node_counts], axis=0)
    return MetricReport(*vals.tolist(), mode=PER_NODE_MEAN)


def aggregate(replications, mode: str = PER_NODE_MEAN) -> tuple[MetricReport, MetricReport]:
    """Mean and standard error over replications.

    Parameters
    ----------
    replications : list of list of ConfusionCounts
        Per-node counts for each replication.
    mode : {"per-node-mean", "pooled"}

    Returns
    -------
    (mean, stderr) : tuple of MetricReport
    """
    if not replications:
        raise InvalidInputError("nothing to aggregate")
    rows = np.array([replication_report(r, mode).values() for r in replications])
    mean = rows.mean(axis=0)
    if rows.shape[0] > 1:
        se = rows.std(axis=0, ddof=1) / np.sqrt(rows.shape[0])
    else:
        se = np.zeros_like(mean)
    return MetricReport(*mean.tolist(), mode=mode), MetricReport(*se.tolist(), mode=mode)


def format_cell(mean: float, se: float) -> str:
    """Table cell in the ``0.921(0.027)`` style."""
    return f"{mean:.3f}({se:.3f})"

