"""Polygon-set clean-up: area filter, nested removal, simplification."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import geometry
from .errors import ParameterError, ParcelError
from .vectorize import Polygon

log = logging.getLogger(__name__)

METHODS = ("pocket_based", "douglas_peucker")
_METHOD_ALIASES = {"pocket": "pocket_based", "dp": "douglas_peucker"}


@dataclass(frozen=True)
class SimplifyParams:
    """Simplifier choice. ``t`` is used by pocket_based, ``epsilon`` by douglas_peucker.

    ``iterate`` re-applies pocket simplification until nothing changes.
    """

    method: str
    t: float | None = None
    epsilon: float | None = None
    iterate: bool = False

    def __post_init__(self):
        method = _METHOD_ALIASES.get(self.method, self.method)
        if method not in METHODS:
            raise ParameterError(f"unknown simplification method {self.method!r}")
        object.__setattr__(self, "method", method)
        if method == "pocket_based" and (self.t is None or not self.t >= 1):
            raise ParameterError(f"pocket_based simplification needs t >= 1, got {self.t}")
        if method == "douglas_peucker" and (self.epsilon is None or not self.epsilon >= 0):
            raise ParameterError(f"douglas_peucker needs epsilon >= 0, got {self.epsilon}")


@dataclass(frozen=True)
class PostprocessConfig:
    gsd: float
    min_area: float
    simplify: SimplifyParams

    def __post_init__(self):
        if not self.gsd > 0:
            raise ParameterError(f"gsd must be > 0, got {self.gsd}")
        if not self.min_area >= 0:
            raise ParameterError(f"min_area must be >= 0, got {self.min_area}")


def area_filter(polys: Sequence[Polygon], min_area: float, gsd: float) -> list[Polygon]:
    """Keep polygons whose ground area (px^2 * gsd^2) is at least ``min_area`` m^2."""
    if not gsd > 0:
        raise ParameterError(f"gsd must be > 0, got {gsd}")
    return [p for p in polys if geometry.area(p) * gsd * gsd >= min_area]


def _bbox(p: Polygon) -> np.ndarray:
    v = p.coords()
    return np.concatenate([v.min(axis=0), v.max(axis=0)])


def nested_filter(polys: Sequence[Polygon]) -> list[Polygon]:
    """Drop every polygon lying inside a larger one of the same set.

    "Inside" means every vertex is inside or on the boundary of the other
    polygon. Containment is judged against the original set, so in a chain
    A in B in C only C survives. Two identical rings keep the earlier one.
    """
    n = len(polys)
    areas = [geometry.area(p) for p in polys]
    boxes = [_bbox(p) for p in polys]
    coords = [p.coords() for p in polys]
    out = []
    for i, p in enumerate(polys):
        contained = False
        for j, q in enumerate(polys):
            if i == j:
                continue
            if areas[j] < areas[i] or (areas[j] == areas[i] and j > i):
                continue
            bi, bj = boxes[i], boxes[j]
            if np.any(bi[:2] < bj[:2]) or np.any(bi[2:] > bj[2:]):
                continue
            if np.all(geometry.locate_points(coords[i], q) >= 0):
                if areas[j] == areas[i] and not np.all(geometry.locate_points(coords[j], p) >= 0):
                    continue
                contained = True
                break
        if not contained:
            out.append(p)
    return out


def simplify_polygon(poly: Polygon, params: SimplifyParams) -> Polygon:
    if params.method == "pocket_based":
        if params.iterate:
            return geometry.pocket_simplify_iterated(poly, params.t)
        return geometry.pocket_simplify(poly, params.t)
    return geometry.douglas_peucker(poly, params.epsilon)


def simplify_all(polys: Sequence[Polygon], params: SimplifyParams) -> list[Polygon]:
    """Simplify each polygon independently.

    A polygon whose simplification fails is passed through unchanged with an
    ``error:...`` flag, so one bad ring never aborts the batch.
    """
    out = []
    for p in polys:
        try:
            out.append(simplify_polygon(p, params))
        except ParcelError as exc:
            log.warning("polygon %s not simplified: %s", p.id, exc)
            out.append(p.replace(p.vertices, f"error:{type(exc).__name__}: {exc}"))
    return out


@dataclass
class StepReport:
    name: str
    in_count: int
    out_count: int
    changed: int = 0

    def line(self) -> str:
        return f"{self.name} in={self.in_count} out={self.out_count} changed={self.changed}"


@dataclass
class PostprocessReport:
    steps: list[StepReport] = field(default_factory=list)

    def to_text(self) -> str:
        return "".join(s.line() + "\n" for s in self.steps)

    def __getitem__(self, name: str) -> StepReport:
        for s in self.steps:
            if s.name == name:
                return s
        raise KeyError(name)


def run_postprocess(polys: Sequence[Polygon],
                    cfg: PostprocessConfig) -> tuple[list[Polygon], PostprocessReport]:
    """Area filter, then nested removal, then simplification."""
    report = PostprocessReport()
    polys = list(polys)

    kept = area_filter(polys, cfg.min_area, cfg.gsd)
    report.steps.append(StepReport("area_filter", len(polys), len(kept), len(polys) - len(kept)))

    outer = nested_filter(kept)
    report.steps.append(StepReport("nested_filter", len(kept), len(outer), len(kept) - len(outer)))

    simple = simplify_all(outer, cfg.simplify)
    changed = sum(a.vertices != b.vertices for a, b in zip(outer, simple))
    report.steps.append(StepReport("simplify", len(outer), len(simple), changed))
    for step in report.steps:
        log.info(step.line())
    return simple, report
