"""GeoJSON FeatureCollection read/write for polygon sets.

Output is canonical so that write -> read -> write is byte-stable:
coordinates rounded to 6 decimals (integral values written as integers),
features sorted by id, keys in fixed order, closing vertex repeated as
GeoJSON requires.

An optional GDAL-style affine geotransform ``(x0, dx, rx, y0, ry, dy)`` maps
pixel ``(x, y)`` to ``(x0 + x*dx + y*rx, y0 + x*ry + y*dy)``. It is stored on
the collection as ``"pixel_geotransform"`` and inverted again on reading, so
the library always works in pixel coordinates.
"""

from __future__ import annotations

import json
import os
from typing import Sequence

import numpy as np

from .errors import FormatError, ParameterError
from .imageio import atomic_write
from .vectorize import Polygon

PRECISION = 6

Geotransform = tuple[float, float, float, float, float, float]


def _fmt(v: float):
    v = round(float(v), PRECISION)
    if v.is_integer():
        return int(v)
    return v


def _apply(gt: Geotransform, pts: np.ndarray) -> np.ndarray:
    x0, dx, rx, y0, ry, dy = gt
    return np.column_stack([x0 + pts[:, 0] * dx + pts[:, 1] * rx,
                            y0 + pts[:, 0] * ry + pts[:, 1] * dy])


def _invert(gt: Geotransform, pts: np.ndarray) -> np.ndarray:
    x0, dx, rx, y0, ry, dy = gt
    m = np.array([[dx, rx], [ry, dy]], dtype=np.float64)
    if abs(np.linalg.det(m)) < 1e-15:
        raise ParameterError("geotransform is singular")
    return np.linalg.solve(m, (pts - [x0, y0]).T).T


def _sort_key(p: Polygon):
    if isinstance(p.id, int):
        return (0, p.id, "")
    return (1, 0, str(p.id))


def to_feature_collection(polys: Sequence[Polygon], geotransform: Geotransform | None = None,
                          properties: dict | None = None) -> dict:
    features = []
    for p in sorted(polys, key=_sort_key):
        # area from the rounded ring, so a re-read polygon reports the same value
        pts = np.round(p.coords(), PRECISION)
        area = abs(float(np.dot(pts[:, 0], np.roll(pts[:, 1], -1))
                         - np.dot(pts[:, 1], np.roll(pts[:, 0], -1)))) / 2
        if geotransform is not None:
            pts = _apply(geotransform, pts)
        ring = [[_fmt(x), _fmt(y)] for x, y in pts]
        ring.append(ring[0])
        props = {"id": p.id, "area_px": _fmt(area)}
        if p.flags:
            props["flags"] = list(p.flags)
        features.append({
            "type": "Feature",
            "properties": props,
            "geometry": {"type": "Polygon", "coordinates": [ring]},
        })
    fc = {"type": "FeatureCollection"}
    if properties:
        fc["properties"] = properties
    if geotransform is not None:
        fc["pixel_geotransform"] = [float(g) for g in geotransform]
    fc["features"] = features
    return fc


def dumps(polys: Sequence[Polygon], geotransform: Geotransform | None = None,
          properties: dict | None = None) -> str:
    """Canonical text: collection members first, then one feature per line."""
    fc = to_feature_collection(polys, geotransform, properties)
    features = fc.pop("features")
    head = ",\n".join(f"{json.dumps(k)}: {_compact(v)}" for k, v in fc.items())
    body = ",\n".join(_compact(f) for f in features)
    return "{\n" + head + ',\n"features": [\n' + body + ("\n" if body else "") + "]\n}\n"


def _compact(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def write(path: str | os.PathLike, polys: Sequence[Polygon],
          geotransform: Geotransform | None = None, properties: dict | None = None) -> None:
    atomic_write(path, dumps(polys, geotransform, properties))


def loads(text: str) -> list[Polygon]:
    """Parse a FeatureCollection of Polygon features (outer rings only).

    Errors name the JSON line/column or the offending feature index.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise FormatError("top-level object is not a FeatureCollection")
    feats = doc.get("features")
    if not isinstance(feats, list):
        raise FormatError("FeatureCollection has no 'features' list")
    gt = doc.get("pixel_geotransform")
    if gt is not None and (not isinstance(gt, list) or len(gt) != 6):
        raise FormatError("pixel_geotransform must be a list of 6 numbers")
    if gt is not None:
        try:
            _invert(tuple(gt), np.zeros((1, 2)))
        except (ParameterError, TypeError) as exc:
            raise FormatError(f"pixel_geotransform: {exc}") from None
    polys = []
    for i, f in enumerate(feats):
        try:
            geom = f["geometry"]
            if geom["type"] != "Polygon":
                raise FormatError(f"geometry type {geom['type']!r} is not Polygon")
            ring = geom["coordinates"][0]
            pts = np.asarray(ring, dtype=np.float64)
            if pts.ndim != 2 or pts.shape[1] != 2:
                raise FormatError("ring must be a list of [x, y] pairs")
            if gt is not None:
                pts = _invert(tuple(gt), pts)
                pts = np.round(pts, PRECISION)
            verts = [(_fmt(x), _fmt(y)) for x, y in pts]
            if len(verts) > 1 and verts[0] == verts[-1]:
                verts.pop()
            props = f.get("properties") or {}
            polys.append(Polygon(verts, props.get("id", i), tuple(props.get("flags", ()))))
        except FormatError as exc:
            raise FormatError(f"feature {i}: {exc}") from None
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise FormatError(f"feature {i}: malformed polygon ({exc})") from None
    return polys


def read(path: str | os.PathLike) -> list[Polygon]:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def to_wkt(polys: Sequence[Polygon]) -> str:
    """One ``POLYGON ((...))`` line per polygon, pixel coordinates."""
    lines = []
    for p in sorted(polys, key=_sort_key):
        pts = list(p.vertices) + [p.vertices[0]]
        body = ", ".join(f"{_fmt(x)} {_fmt(y)}" for x, y in pts)
        lines.append(f"POLYGON (({body}))")
    return "\n".join(lines) + ("\n" if lines else "")
