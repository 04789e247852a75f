"""Reliability diagrams and calibration error metrics.

Predictions are binned by confidence (the max class probability) into M
uniform, right-closed bins over [0, 1]; a confidence of exactly 0 folds
into bin 1. ACE averages |mean confidence - mean accuracy| over non-empty
bins, MCE takes the maximum, so ACE <= MCE always.

The renderer writes a self-contained SVG (plus a CSV of the bin table) and
is byte-deterministic for identical input, so rendered artifacts can be
compared by hash.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError


@dataclass
class ReliabilityDiagram:
    m: int
    counts: np.ndarray            # per-bin prediction counts
    mean_confidence: np.ndarray   # NaN for empty bins
    mean_accuracy: np.ndarray     # NaN for empty bins

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.m + 1)

    @property
    def nonempty(self) -> np.ndarray:
        return self.counts > 0

    @property
    def m_plus(self) -> int:
        return int(self.nonempty.sum())


@dataclass
class CalibrationReport:
    ace: float
    mce: float
    diagram: ReliabilityDiagram


def confidences(probs: np.ndarray) -> np.ndarray:
    return np.asarray(probs, dtype=np.float64).max(axis=-1)


def bin_indices(conf: np.ndarray, m: int) -> np.ndarray:
    """1-based bin of each confidence: bin b covers ((b-1)/m, b/m]."""
    idx = np.ceil(np.asarray(conf, dtype=np.float64) * m).astype(np.int64)
    return np.clip(idx, 1, m)


def build_diagram(probs: np.ndarray, labels: np.ndarray, m: int = 10) -> ReliabilityDiagram:
    """Bin (probability vector, true label) pairs by confidence.

    probs is (n, K) rows in the simplex; correctness is argmax == label
    (argmax ties resolve to the lowest class index).
    """
    if m < 1:
        raise ValueError("bin count must be >= 1")
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if probs.ndim != 2 or len(probs) == 0:
        raise ValueError("need a non-empty (n, K) prediction array")
    if len(labels) != len(probs):
        raise ValueError("labels and predictions disagree in length")
    if np.any(probs < 0) or np.abs(probs.sum(axis=1) - 1.0).max() > 1e-6:
        raise ValidationError("prediction rows must lie in the simplex")

    conf = probs.max(axis=1)
    correct = (np.argmax(probs, axis=1) == labels).astype(np.float64)
    idx = bin_indices(conf, m) - 1
    counts = np.bincount(idx, minlength=m)
    # exactly-rounded sums keep the bin means order-invariant and make
    # constructed integer/decimal examples come out exact
    mean_conf = np.full(m, np.nan)
    mean_acc = np.full(m, np.nan)
    for b in range(m):
        if counts[b]:
            sel = idx == b
            mean_conf[b] = math.fsum(conf[sel]) / counts[b]
            mean_acc[b] = math.fsum(correct[sel]) / counts[b]
    return ReliabilityDiagram(m, counts, mean_conf, mean_acc)


def ace(diagram: ReliabilityDiagram) -> float:
    """Mean |confidence - accuracy| gap over non-empty bins."""
    mask = diagram.nonempty
    if not mask.any():
        raise ValueError("all bins are empty")
    gaps = np.abs(diagram.mean_confidence[mask] - diagram.mean_accuracy[mask])
    return float(gaps.mean())


def mce(diagram: ReliabilityDiagram) -> float:
    """Max |confidence - accuracy| gap over non-empty bins."""
    mask = diagram.nonempty
    if not mask.any():
        raise ValueError("all bins are empty")
    gaps = np.abs(diagram.mean_confidence[mask] - diagram.mean_accuracy[mask])
    return float(gaps.max())


def calibration_report(probs, labels, m: int = 10) -> CalibrationReport:
    diagram = build_diagram(probs, labels, m)
    return CalibrationReport(ace(diagram), mce(diagram), diagram)


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

_SVG_SIZE = 480
_SVG_MARGIN = 48


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def render_diagram(diagram: ReliabilityDiagram, path) -> tuple[Path, Path]:
    """Write the reliability bar chart as SVG and the bin table as CSV.

    Returns (svg_path, csv_path). Output bytes depend only on the diagram
    contents.
    """
    path = Path(path)
    svg_path = path if path.suffix == ".svg" else path.with_suffix(".svg")
    csv_path = svg_path.with_suffix(".csv")

    plot = _SVG_SIZE - 2 * _SVG_MARGIN

    def sx(v):
        return _SVG_MARGIN + v * plot

    def sy(v):
        return _SVG_SIZE - _SVG_MARGIN - v * plot

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_SIZE}" '
        f'height="{_SVG_SIZE}" viewBox="0 0 {_SVG_SIZE} {_SVG_SIZE}">',
        f'<rect width="{_SVG_SIZE}" height="{_SVG_SIZE}" fill="white"/>',
    ]
    edges = diagram.edges
    for b in range(diagram.m):
        if diagram.counts[b] == 0:
            continue
        acc_b = float(diagram.mean_accuracy[b])
        x0, x1 = sx(edges[b]), sx(edges[b + 1])
        parts.append(
            f'<rect x="{_fmt(x0)}" y="{_fmt(sy(acc_b))}" '
            f'width="{_fmt(x1 - x0)}" height="{_fmt(sy(0.0) - sy(acc_b))}" '
            f'fill="#7aa6c2" stroke="#2a4d69" stroke-width="1"/>')
        conf_b = float(diagram.mean_confidence[b])
        xm = (x0 + x1) / 2
        parts.append(
            f'<line x1="{_fmt(xm)}" y1="{_fmt(sy(acc_b))}" x2="{_fmt(xm)}" '
            f'y2="{_fmt(sy(conf_b))}" stroke="#c23b22" stroke-width="2"/>')
    parts.append(
        f'<line x1="{_fmt(sx(0.0))}" y1="{_fmt(sy(0.0))}" x2="{_fmt(sx(1.0))}" '
        f'y2="{_fmt(sy(1.0))}" stroke="#444444" stroke-width="1" '
        f'stroke-dasharray="6,4"/>')
    # axes and ticks
    parts.append(
        f'<line x1="{_fmt(sx(0.0))}" y1="{_fmt(sy(0.0))}" x2="{_fmt(sx(1.0))}" '
        f'y2="{_fmt(sy(0.0))}" stroke="black" stroke-width="1"/>')
    parts.append(
        f'<line x1="{_fmt(sx(0.0))}" y1="{_fmt(sy(0.0))}" x2="{_fmt(sx(0.0))}" '
        f'y2="{_fmt(sy(1.0))}" stroke="black" stroke-width="1"/>')
    for tick in np.linspace(0.0, 1.0, 6):
        parts.append(
            f'<text x="{_fmt(sx(tick))}" y="{_fmt(sy(0.0) + 18)}" font-size="11" '
            f'text-anchor="middle" font-family="sans-serif">{_fmt(tick)}</text>')
        parts.append(
            f'<text x="{_fmt(sx(0.0) - 8)}" y="{_fmt(sy(tick) + 4)}" font-size="11" '
            f'text-anchor="end" font-family="sans-serif">{_fmt(tick)}</text>')
    parts.append(
        f'<text x="{_fmt(sx(0.5))}" y="{_SVG_SIZE - 8}" font-size="13" '
        f'text-anchor="middle" font-family="sans-serif">confidence</text>')
    parts.append(
        f'<text x="14" y="{_fmt(sy(0.5))}" font-size="13" text-anchor="middle" '
        f'font-family="sans-serif" transform="rotate(-90 14 {_fmt(sy(0.5))})">'
        f'accuracy</text>')
    parts.append("</svg>")
    svg_path.write_bytes(("\n".join(parts) + "\n").encode("ascii"))

    lines = ["bin_index,lo,hi,count,mean_confidence,mean_accuracy"]
    for b in range(diagram.m):
        if diagram.counts[b] > 0:
            c = _fmt(float(diagram.mean_confidence[b]))
            a = _fmt(float(diagram.mean_accuracy[b]))
        else:
            c = a = ""
        lines.append(f"{b + 1},{_fmt(edges[b])},{_fmt(edges[b + 1])},"
                     f"{diagram.counts[b]},{c},{a}")
    csv_path.write_bytes(("\n".join(lines) + "\n").encode("ascii"))
    return svg_path, csv_path


def write_report(report: CalibrationReport, path, diagram_path=None):
    """Structured-text calibration report (stable key: value lines)."""
    lines = [
        f"ace: {report.ace:.6f}",
        f"mce: {report.mce:.6f}",
        f"bins: {report.diagram.m}",
        f"nonempty_bins: {report.diagram.m_plus}",
        f"predictions: {int(report.diagram.counts.sum())}",
    ]
    if diagram_path is not None:
        lines.append(f"diagram: {diagram_path}")
    Path(path).write_text("\n".join(lines) + "\n")
