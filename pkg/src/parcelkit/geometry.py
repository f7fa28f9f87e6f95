"""Areas, hulls, pockets and the two polygon simplifiers.

All functions take and return :class:`~parcelkit.vectorize.Polygon`. Rings
with positive signed area are called counter-clockwise (CCW) throughout; see
:mod:`parcelkit.vectorize` for how that maps onto image coordinates.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateInputError, DegenerateOutputError, ParameterError
from .vectorize import Point, Polygon

EPS = 1e-9


def _cross(o: Point, a: Point, b: Point) -> float:
    # exact for integer lattice coordinates
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _orient(o: Point, a: Point, b: Point) -> int:
    c = _cross(o, a, b)
    if c > EPS:
        return 1
    if c < -EPS:
        return -1
    return 0


def signed_area(poly: Polygon) -> float:
    """Shoelace area; positive for CCW rings."""
    v = poly.coords()
    x, y = v[:, 0], v[:, 1]
    s = np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)
    return float(s) / 2.0


def area(poly: Polygon) -> float:
    return abs(signed_area(poly))


def perimeter(poly: Polygon) -> float:
    """Sum of edge lengths including the closing edge."""
    v = poly.coords()
    return float(np.sum(np.hypot(*(np.roll(v, -1, axis=0) - v).T)))


def _edge_lengths(verts: Sequence[Point]) -> list[float]:
    n = len(verts)
    return [math.dist(verts[i], verts[(i + 1) % n]) for i in range(n)]


def hull_points(points: Sequence[Point]) -> list[Point]:
    """Monotone-chain strict convex hull, CCW, starting at the lowest (x, y).

    Collinear points on hull edges are dropped. Raises
    :class:`DegenerateInputError` when all points are collinear.
    """
    pts = sorted(set(points))
    if len(pts) < 3:
        raise DegenerateInputError("convex hull needs >= 3 distinct points")
    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and _orient(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _orient(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateInputError("all vertices are collinear")
    return hull


def convex_hull(poly: Polygon) -> Polygon:
    """Strict convex hull of the polygon's vertices as a CCW polygon."""
    return Polygon(tuple(hull_points(poly.vertices)), poly.id)


def is_convex(poly: Polygon) -> bool:
    """True when every turn has the same orientation (no zero turns allowed)."""
    v = poly.vertices
    n = len(v)
    signs = {_orient(v[i - 1], v[i], v[(i + 1) % n]) for i in range(n)}
    return signs == {1} or signs == {-1}


def is_simple(poly: Polygon, chunk: int = 512) -> bool:
    """No two edges cross or overlap.

    Non-adjacent edges may share an endpoint that is a vertex of both (rings
    traced from pixel masks pass through the same corner twice where two
    diagonal pixels touch); any other contact, including a vertex resting on
    the interior of another edge, makes the ring non-simple.
    """
    v = poly.coords()
    n = len(v)
    a = v
    b = np.roll(v, -1, axis=0)
    lo = np.minimum(a, b) - EPS
    hi = np.maximum(a, b) + EPS

    # candidate pairs i < j whose bounding boxes meet
    ii, jj = [], []
    for s in range(0, n, chunk):
        i = np.arange(s, min(s + chunk, n))[:, None]
        hit = ((lo[i, 0] <= hi[None, :, 0]) & (lo[None, :, 0] <= hi[i, 0]) &
               (lo[i, 1] <= hi[None, :, 1]) & (lo[None, :, 1] <= hi[i, 1]))
        hit &= np.arange(n)[None, :] > i
        ci, cj = np.nonzero(hit)
        ii.append(ci + s)
        jj.append(cj)
    i = np.concatenate(ii)
    j = np.concatenate(jj)
    if len(i) == 0:
        return True

    def orient(p, q, r):
        c = (q[:, 0] - p[:, 0]) * (r[:, 1] - p[:, 1]) - (q[:, 1] - p[:, 1]) * (r[:, 0] - p[:, 0])
        return np.where(c > EPS, 1, np.where(c < -EPS, -1, 0))

    def on_seg(p, q, r):
        # r assumed collinear with p-q: is it inside the segment's box
        return np.all((np.minimum(p, q) - EPS <= r) & (r <= np.maximum(p, q) + EPS), axis=1)

    def same(p, q):
        return np.all(np.abs(p - q) <= EPS, axis=1)

    p1, p2, q1, q2 = a[i], b[i], a[j], b[j]
    adjacent = (j == i + 1) | ((i == 0) & (j == n - 1))
    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    proper = (o1 * o2 < 0) & (o3 * o4 < 0)
    shared = same(p1, q1) | same(p1, q2) | same(p2, q1) | same(p2, q2)
    touch = (((o1 == 0) & on_seg(p1, p2, q1)) | ((o2 == 0) & on_seg(p1, p2, q2)) |
             ((o3 == 0) & on_seg(q1, q2, p1)) | ((o4 == 0) & on_seg(q1, q2, p2)))
    collinear_overlap = (o1 == 0) & (o2 == 0) & _overlap_length(p1, p2, q1, q2)
    bad_nonadj = ~adjacent & (proper | (touch & ~shared) | collinear_overlap)
    # adjacent edges may only share their common vertex
    bad_adj = adjacent & collinear_overlap & _folds_back(p1, p2, q1, q2)
    return not (np.any(bad_nonadj) or np.any(bad_adj))


def _overlap_length(p1, p2, q1, q2):
    # for collinear segment pairs: do they share more than a single point
    d = p2 - p1
    dd = np.sum(d * d, axis=-1)
    tq1 = np.sum((q1 - p1) * d, axis=-1) / dd
    tq2 = np.sum((q2 - p1) * d, axis=-1) / dd
    lo = np.maximum(0.0, np.minimum(tq1, tq2))
    hi = np.minimum(1.0, np.maximum(tq1, tq2))
    return (hi - lo) * np.sqrt(dd) > EPS


def _folds_back(p1, p2, q1, q2):
    # collinear adjacent edges overlap iff their directions oppose
    d1 = p2 - p1
    d2 = q2 - q1
    return np.sum(d1 * d2, axis=-1) < 0


@dataclass(frozen=True)
class Pocket:
    """A convex-hull edge that is not an edge of the polygon.

    ``chord_length`` is the hull edge's length; ``path_length`` the length of
    the polygon boundary walked forward from ``start_index`` to ``end_index``.
    """

    start_index: int
    end_index: int
    chord_length: float
    path_length: float

    def interior_indices(self, n: int) -> list[int]:
        """Polygon vertex indices strictly between the two endpoints."""
        out = []
        i = (self.start_index + 1) % n
        while i != self.end_index:
            out.append(i)
            i = (i + 1) % n
        return out


def _hull_hits(poly: Polygon) -> list[int]:
    """Indices where the forward boundary walk meets the hull vertices, in hull order."""
    verts = poly.vertices
    n = len(verts)
    hull = hull_points(verts)
    if signed_area(poly) < 0:
        hull = [hull[0]] + hull[:0:-1]
    start = verts.index(hull[0])
    hits, k = [start], 1
    for step in range(1, n):
        i = (start + step) % n
        if k < len(hull) and verts[i] == hull[k]:
            hits.append(i)
            k += 1
    if k != len(hull):
        raise DegenerateInputError("boundary does not visit the hull vertices in order")
    return hits


def find_pockets(poly: Polygon, *, validate: bool = True) -> list[Pocket]:
    """All pockets of ``poly``, in boundary order.

    The path of a pocket is the boundary stretch between two consecutive hull
    vertices, i.e. the concave excursion that touches no other hull vertex.
    Works for either ring orientation; indices refer to ``poly.vertices``.
    """
    if validate and not is_simple(poly):
        raise DegenerateInputError("pocket search needs a simple polygon")
    verts = poly.vertices
    n = len(verts)
    lengths = _edge_lengths(verts)
    hits = _hull_hits(poly)
    pockets = []
    for a, b in zip(hits, hits[1:] + hits[:1]):
        if (b - a) % n == 1:
            continue
        path, i = 0.0, a
        while i != b:
            path += lengths[i]
            i = (i + 1) % n
        pockets.append(Pocket(a, b, math.dist(verts[a], verts[b]), path))
    return pockets


def _drop_repeats(verts: list[Point]) -> list[Point]:
    out: list[Point] = []
    for v in verts:
        if not out or out[-1] != v:
            out.append(v)
    while len(out) > 1 and out[0] == out[-1]:
        out.pop()
    return out


def pocket_simplify(poly: Polygon, t: float, *, validate: bool = True) -> Polygon:
    """Replace every pocket whose boundary path is shorter than ``t`` x its chord.

    Pockets are found once on the input. A pocket with
    ``path_length < t * chord_length`` has its interior vertices deleted so the
    chord becomes an edge; otherwise its path is kept verbatim. Hull vertices
    are never removed. ``t = 1`` leaves the polygon unchanged and ``t = inf``
    returns its convex hull (in the input's vertex order).
    """
    if not t >= 1:
        raise ParameterError(f"t must be >= 1, got {t}")
    n = len(poly)
    drop = set()
    for p in find_pockets(poly, validate=validate):
        if p.path_length < t * p.chord_length:
            drop.update(p.interior_indices(n))
    if not drop:
        return poly
    kept = _drop_repeats([v for i, v in enumerate(poly.vertices) if i not in drop])
    if len(kept) < 3:
        raise DegenerateOutputError(f"pocket simplification left {len(kept)} vertices")
    return poly.replace(kept)


def pocket_simplify_iterated(poly: Polygon, t: float, max_rounds: int = 100) -> Polygon:
    """Apply :func:`pocket_simplify` until the polygon stops changing."""
    for _ in range(max_rounds):
        nxt = pocket_simplify(poly, t)
        if nxt.vertices == poly.vertices:
            break
        poly = nxt
    return poly


def _seg_dist(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from each row of ``pts`` to the closed segment a-b."""
    d = b - a
    dd = float(np.dot(d, d))
    if dd == 0.0:
        return np.hypot(*(pts - a).T)
    u = np.clip(((pts - a) @ d) / dd, 0.0, 1.0)
    proj = a + u[:, None] * d
    return np.hypot(*(pts - proj).T)


def simplify_chain(points: Sequence[Point] | np.ndarray, epsilon: float) -> list[int]:
    """Douglas-Peucker on an open polyline; returns the kept indices (sorted).

    A vertex is kept when it lies farther than ``epsilon`` from the segment
    joining the current endpoints. Distances are to the segment, not the
    infinite line, so every dropped vertex is within ``epsilon`` of the output.
    """
    if epsilon < 0:
        raise ParameterError(f"epsilon must be >= 0, got {epsilon}")
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    if n <= 2:
        return list(range(n))
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        a, b = stack.pop()
        if b - a < 2:
            continue
        d = _seg_dist(pts[a + 1:b], pts[a], pts[b])
        k = int(np.argmax(d))
        if d[k] > epsilon:
            m = a + 1 + k
            keep[m] = True
            stack.append((m, b))
            stack.append((a, m))
    return np.flatnonzero(keep).tolist()


def farthest_pair(points: Sequence[Point]) -> tuple[int, int]:
    """Indices ``i < j`` of the two mutually farthest vertices (first pair on ties)."""
    v = np.asarray(points, dtype=np.float64)
    best, bi, bj = -1.0, 0, 1
    for i in range(len(v) - 1):
        d = np.sum((v[i + 1:] - v[i]) ** 2, axis=1)
        k = int(np.argmax(d))
        if d[k] > best:
            best, bi, bj = float(d[k]), i, i + 1 + k
    return bi, bj


def douglas_peucker(poly: Polygon, epsilon: float) -> Polygon:
    """Douglas-Peucker for closed rings.

    The ring is split at its two mutually farthest vertices, each half is
    simplified as an open chain and the halves are rejoined in the original
    vertex order. If fewer than 3 vertices survive, the result is the triangle
    of the two split vertices and the vertex farthest from their chord, and
    the polygon is flagged ``"over_simplified"``.
    """
    if epsilon < 0:
        raise ParameterError(f"epsilon must be >= 0, got {epsilon}")
    verts = poly.vertices
    n = len(verts)
    i, j = farthest_pair(verts)
    first = list(range(i, j + 1))
    second = list(range(j, n)) + list(range(0, i + 1))
    kept = set()
    for chain in (first, second):
        kept.update(chain[k] for k in simplify_chain([verts[c] for c in chain], epsilon))
    order = sorted(kept)
    out = _drop_repeats([verts[k] for k in order])
    if len(out) >= 3:
        if len(out) == n:
            return poly
        return poly.replace(out)
    v = poly.coords()
    d = _seg_dist(v, v[i], v[j])
    k = int(np.argmax(d))
    if d[k] <= EPS:
        raise DegenerateInputError("all vertices are collinear")
    tri = [verts[x] for x in sorted((i, j, k))]
    return poly.replace(tri, "over_simplified")


class Location(str, enum.Enum):
    INSIDE = "inside"
    ON_BOUNDARY = "on_boundary"
    OUTSIDE = "outside"


def point_in_polygon(pt: Point, poly: Polygon) -> Location:
    """Ray casting towards +x with explicit boundary detection."""
    px, py = pt
    verts = poly.vertices
    n = len(verts)
    inside = False
    for k in range(n):
        x1, y1 = verts[k]
        x2, y2 = verts[(k + 1) % n]
        if (abs(_cross((x1, y1), (x2, y2), (px, py))) <= EPS
                and min(x1, x2) - EPS <= px <= max(x1, x2) + EPS
                and min(y1, y2) - EPS <= py <= max(y1, y2) + EPS):
            return Location.ON_BOUNDARY
        # half-open rule on y counts a vertex exactly once
        if (y1 > py) != (y2 > py):
            xi = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if xi > px:
                inside = not inside
    return Location.INSIDE if inside else Location.OUTSIDE


def locate_points(points: np.ndarray, poly: Polygon) -> np.ndarray:
    """Vectorised :func:`point_in_polygon`: 1 inside, 0 on boundary, -1 outside."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    v = poly.coords()
    x1, y1 = v[:, 0][None, :], v[:, 1][None, :]
    x2, y2 = np.roll(v[:, 0], -1)[None, :], np.roll(v[:, 1], -1)[None, :]
    px, py = pts[:, 0][:, None], pts[:, 1][:, None]
    cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
    on = ((np.abs(cross) <= EPS)
          & (np.minimum(x1, x2) - EPS <= px) & (px <= np.maximum(x1, x2) + EPS)
          & (np.minimum(y1, y2) - EPS <= py) & (py <= np.maximum(y1, y2) + EPS)).any(axis=1)
    straddle = (y1 > py) != (y2 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
    crossings = np.count_nonzero(straddle & (xi > px), axis=1)
    return np.where(on, 0, np.where(crossings % 2 == 1, 1, -1))
