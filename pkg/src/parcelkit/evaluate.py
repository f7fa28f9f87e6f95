"""Boundary accuracy against a buffered 1-pixel reference.

Counts are pixel-wise between the rasterized prediction and the *buffered*
reference. Recall is multiplied by the buffer width to bring the buffered
reference length back to that of the 1-pixel original, so it may exceed 100.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ParameterError, UndefinedMetricError
from .raster import RasterGrid, dilate
from .vectorize import Polygon

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn_: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn_ + self.tn


@dataclass(frozen=True)
class EvalConfig:
    buffer_width: int
    width: int | None = None
    height: int | None = None

    def __post_init__(self):
        if int(self.buffer_width) != self.buffer_width or self.buffer_width < 1:
            raise ParameterError(f"buffer width must be a positive integer, got {self.buffer_width}")


@dataclass
class EvalReport:
    precision: float | None
    recall: float | None
    fscore: float | None
    counts: ConfusionCounts
    buffer_width: int
    method_label: str = ""
    recall_over_100: bool = False
    errors: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        def r(x):
            return None if x is None else round(x, 2)

        return {
            "label": self.method_label,
            "buffer_width": self.buffer_width,
            "precision": r(self.precision),
            "recall": r(self.recall),
            "fscore": r(self.fscore),
            "recall_over_100": self.recall_over_100,
            "tp": self.counts.tp,
            "fp": self.counts.fp,
            "fn": self.counts.fn_,
            "tn": self.counts.tn,
            "errors": "; ".join(self.errors),
        }

    def to_keyvalue(self) -> str:
        lines = []
        for k, v in self.as_dict().items():
            if v is None:
                v = "nan"
            elif isinstance(v, bool):
                v = str(v).lower()
            elif isinstance(v, float):
                v = f"{v:.2f}"
            lines.append(f"{k}={v}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        def pct(x):
            return "undefined" if x is None else f"{x:6.2f} %"

        c = self.counts
        lines = [
            f"evaluation: {self.method_label or '(unlabelled)'}",
            f"  buffer width : {self.buffer_width} px",
            f"  precision    : {pct(self.precision)}",
            f"  recall       : {pct(self.recall)}" + ("  (> 100: BF-scaled)" if self.recall_over_100 else ""),
            f"  f-score      : {pct(self.fscore)}",
            f"  TP={c.tp} FP={c.fp} FN={c.fn_} TN={c.tn}",
        ]
        lines += [f"  error: {e}" for e in self.errors]
        return "\n".join(lines) + "\n"


def _line_pixels(x0: int, y0: int, x1: int, y1: int) -> tuple[np.ndarray, np.ndarray]:
    n = max(abs(x1 - x0), abs(y1 - y0))
    if n == 0:
        return np.array([x0]), np.array([y0])
    s = np.arange(n + 1) / n
    # exact for the integer stepping axis; rint ties go to even
    xs = np.rint(x0 + (x1 - x0) * s).astype(np.int64)
    ys = np.rint(y0 + (y1 - y0) * s).astype(np.int64)
    return xs, ys


def rasterize_boundaries(polys: Sequence[Polygon], width: int, height: int) -> RasterGrid:
    """Draw every polygon edge as a 1-pixel digital line.

    Vertex ``(x, y)`` maps to pixel ``[round(y), round(x)]``, clamped into the
    frame. Corners on the far image edge (``x == width`` or ``y == height``)
    are expected for traced rings; anything farther out triggers a warning.
    """
    out = np.zeros((height, width), dtype=np.uint8)
    clamped = 0
    for poly in polys:
        xy = poly.coords()
        clamped += int(np.count_nonzero((xy < 0).any(axis=1) | (xy[:, 0] > width) | (xy[:, 1] > height)))
        cv = np.rint(xy).astype(np.int64)
        np.clip(cv[:, 0], 0, width - 1, out=cv[:, 0])
        np.clip(cv[:, 1], 0, height - 1, out=cv[:, 1])
        for k in range(len(cv)):
            (x0, y0), (x1, y1) = cv[k], cv[(k + 1) % len(cv)]
            xs, ys = _line_pixels(int(x0), int(y0), int(x1), int(y1))
            out[ys, xs] = 1
    if clamped:
        warnings.warn(f"{clamped} polygon vertices outside the {width}x{height} frame were clamped",
                      stacklevel=2)
    return RasterGrid(out, "binary")


def buffer_reference(ref_boundary: RasterGrid, buffer_width: int) -> RasterGrid:
    """Thicken a 1-px reference to ``buffer_width`` px: Euclidean dilation by (w-1)/2."""
    if buffer_width < 1:
        raise ParameterError(f"buffer width must be >= 1, got {buffer_width}")
    return dilate(ref_boundary, (buffer_width - 1) / 2.0)


def confusion(pred: RasterGrid, buffered_ref: RasterGrid) -> ConfusionCounts:
    if pred.shape != buffered_ref.shape:
        raise ParameterError(f"dimension mismatch: prediction {pred.shape} vs reference {buffered_ref.shape}")
    p = pred.values != 0
    r = buffered_ref.values != 0
    tp = int(np.count_nonzero(p & r))
    fp = int(np.count_nonzero(p & ~r))
    fn_ = int(np.count_nonzero(~p & r))
    tn = int(p.size) - tp - fp - fn_
    return ConfusionCounts(tp, fp, fn_, tn)


def precision(c: ConfusionCounts) -> float:
    if c.tp + c.fp == 0:
        raise UndefinedMetricError("precision undefined: no predicted boundary pixels")
    return 100.0 * c.tp / (c.tp + c.fp)


def recall(c: ConfusionCounts, bf: int) -> float:
    """``100 * bf * tp / (tp + fn)``; not clamped, may exceed 100."""
    if bf < 1:
        raise ParameterError(f"buffer width must be >= 1, got {bf}")
    if c.tp + c.fn_ == 0:
        raise UndefinedMetricError("recall undefined: empty reference")
    return 100.0 * bf * c.tp / (c.tp + c.fn_)


def fscore(p: float, r: float) -> float:
    if p + r == 0:
        raise UndefinedMetricError("f-score undefined: precision + recall = 0")
    return 2.0 * p * r / (p + r)


def evaluate_full(pred_polys: Sequence[Polygon], ref_boundary: RasterGrid,
                  cfg: EvalConfig, label: str = "") -> EvalReport:
    """Rasterize, buffer, count and score. Undefined metrics are recorded in ``errors``."""
    h, w = ref_boundary.shape
    if (cfg.width, cfg.height) != (None, None) and (cfg.width, cfg.height) != (w, h):
        raise ParameterError(f"evaluation frame {cfg.width}x{cfg.height} does not match reference {w}x{h}")
    pred = rasterize_boundaries(pred_polys, w, h)
    buffered = buffer_reference(ref_boundary, cfg.buffer_width)
    c = confusion(pred, buffered)
    if c.tp + c.fn_ != buffered.count() or c.tp + c.fp != pred.count():
        raise AssertionError(f"confusion identity violated: {c}")

    errors = []
    p = r = f = None
    try:
        p = precision(c)
    except UndefinedMetricError as exc:
        errors.append(str(exc))
    try:
        r = recall(c, cfg.buffer_width)
    except UndefinedMetricError as exc:
        errors.append(str(exc))
    if p is not None and r is not None:
        try:
            f = fscore(p, r)
        except UndefinedMetricError as exc:
            errors.append(str(exc))
    over = r is not None and r > 100.0
    if over:
        log.info("recall %.2f exceeds 100 at buffer width %d", r, cfg.buffer_width)
    return EvalReport(p, r, f, c, int(cfg.buffer_width), label, over, errors)
