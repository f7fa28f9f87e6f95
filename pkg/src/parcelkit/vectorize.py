"""Binary field mask -> outer boundary polygons on the pixel-corner lattice.

Coordinates are ``(x, y)`` with the origin at the top-left image corner and
``y`` growing downwards, exactly as in the files. Pixel ``[row, col]``
occupies the unit square ``[col, col+1] x [row, row+1]``. Rings are oriented
so the shoelace sum over the raw numbers is positive, i.e. counter-clockwise
when the numbers are plotted with the y axis pointing up (and clockwise as
seen on screen).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np
from scipy import ndimage

from .errors import ParameterError
from .raster import RasterGrid

Point = tuple[float, float]
PolygonId = Union[int, str, None]

_FOUR = ndimage.generate_binary_structure(2, 1)
_EIGHT = np.ones((3, 3), dtype=bool)


def _num(v):
    v = float(v) if not isinstance(v, (int, np.integer)) else int(v)
    if isinstance(v, float) and v.is_integer():
        return int(v)
    return v


@dataclass(frozen=True)
class Polygon:
    """Closed vertex ring; the closing edge last -> first is implicit.

    ``flags`` carries processing notes (e.g. ``"over_simplified"``) and does
    not take part in equality.
    """

    vertices: tuple[Point, ...]
    id: PolygonId = None
    flags: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        verts = tuple((_num(x), _num(y)) for x, y in self.vertices)
        if len(verts) < 3:
            raise ParameterError(f"polygon needs >= 3 vertices, got {len(verts)}")
        for i, v in enumerate(verts):
            if v == verts[i - 1]:
                raise ParameterError(f"polygon has repeated consecutive vertex {v} at index {i}")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "flags", tuple(self.flags))

    def __len__(self):
        return len(self.vertices)

    def coords(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=np.float64)

    def replace(self, vertices: Iterable[Point], *flags: str) -> "Polygon":
        """Same id and flags, new vertices; ``flags`` are appended."""
        return Polygon(tuple(vertices), self.id, self.flags + flags)


_DIRS = {(1, 0): 0, (0, 1): 1, (-1, 0): 2, (0, -1): 3}
_DIR_VECS = [(1, 0), (0, 1), (-1, 0), (0, -1)]


def _boundary_edges(region: np.ndarray) -> dict[tuple[int, int], list[int]]:
    """Directed unit edges between region and non-region, interior on the left.

    "Left" is in the y-up reading of the raw coordinates, which makes traced
    rings come out with positive signed area.
    """
    h, w = region.shape
    p = np.zeros((h + 2, w + 2), dtype=bool)
    p[1:-1, 1:-1] = region
    inner = p[1:-1, 1:-1]
    out: dict[tuple[int, int], list[int]] = {}

    def add(rows, cols, dx, dy, ox, oy):
        d = _DIRS[(dx, dy)]
        for r, c in zip(rows.tolist(), cols.tolist()):
            out.setdefault((c + ox, r + oy), []).append(d)

    # top side of pixel: (c, r) -> (c+1, r)
    r, c = np.nonzero(inner & ~p[:-2, 1:-1])
    add(r, c, 1, 0, 0, 0)
    # right side: (c+1, r) -> (c+1, r+1)
    r, c = np.nonzero(inner & ~p[1:-1, 2:])
    add(r, c, 0, 1, 1, 0)
    # bottom side: (c+1, r+1) -> (c, r+1)
    r, c = np.nonzero(inner & ~p[2:, 1:-1])
    add(r, c, -1, 0, 1, 1)
    # left side: (c, r+1) -> (c, r)
    r, c = np.nonzero(inner & ~p[1:-1, :-2])
    add(r, c, 0, -1, 0, 1)
    return out


def _trace_loop(edges: dict[tuple[int, int], list[int]],
                start: tuple[int, int]) -> list[tuple[int, int]]:
    """Follow directed edges from ``start`` (leaving rightwards) back to it.

    Returns the corner vertices with collinear runs merged. ``start`` must be
    the top-left corner of the region's first pixel in raster order, which has
    exactly one outgoing edge. Where two edges leave the same corner (diagonal
    pixels touching at a point) the walk takes the left turn and keeps hugging
    the current pixel: regions are 4-connected, so diagonal neighbours are
    not joined through the corner.
    """
    verts = [start]
    pos, d = start, 0
    edges[start].remove(0)
    while True:
        dx, dy = _DIR_VECS[d]
        pos = (pos[0] + dx, pos[1] + dy)
        if pos == start:
            return verts
        outs = edges.get(pos)
        if not outs:
            raise RuntimeError(f"boundary trace broke at {pos}")
        left = (d + 1) % 4
        nd = left if len(outs) > 1 and left in outs else outs[0]
        outs.remove(nd)
        if nd != d:
            verts.append(pos)
        d = nd


def extract_polygons(field_mask: RasterGrid) -> list[Polygon]:
    """Trace one outer ring per 4-connected region of 1-pixels.

    Holes are ignored. Polygons are ordered by the raster position (row, then
    column) of each region's first pixel and get ids ``0, 1, 2, ...`` in that
    order. A single pixel yields its unit square.
    """
    if field_mask.kind != "binary":
        raise ParameterError("extract_polygons expects a binary grid")
    mask = field_mask.values.astype(bool)
    labels, n = ndimage.label(mask, structure=_FOUR)
    polys = []
    for lab, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        sub = labels[sl] == lab
        # background is 8-connected, so holes are computed with the 8-structure
        filled = ndimage.binary_fill_holes(sub, structure=_EIGHT)
        y0, x0 = sl[0].start, sl[1].start
        edges = _boundary_edges(filled)
        # first pixel in raster order: its top edge starts the ring
        r, c = np.argwhere(filled)[0]
        ring = _trace_loop(edges, (int(c), int(r)))
        leftover = sum(len(v) for v in edges.values())
        if leftover:
            raise RuntimeError(f"region {lab}: {leftover} boundary edges left after tracing")
        polys.append(Polygon(tuple((x + x0, y + y0) for x, y in ring), len(polys)))
    return polys


def rasterize_polygon(poly: Polygon, width: int, height: int) -> np.ndarray:
    """Boolean mask of pixels whose centres fall inside ``poly`` (even-odd rule)."""
    v = poly.coords()
    x1, y1 = v[:, 0], v[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    cy = np.arange(height) + 0.5
    cx = np.arange(width) + 0.5
    inside = np.zeros((height, width), dtype=bool)
    for a, b, c, d in zip(x1, y1, x2, y2):
        if b == d:
            continue
        rows = (cy >= min(b, d)) & (cy < max(b, d))
        if not rows.any():
            continue
        xs = a + (cy[rows] - b) * (c - a) / (d - b)
        inside[rows] ^= cx[None, :] < xs[:, None]
    return inside
