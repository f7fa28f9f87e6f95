"""Raster stages: tiling, overlap aggregation, Otsu, Canny and dilation.

Grids are stored as 2-D numpy arrays indexed ``[row, col]`` (``[y, x]``),
origin at the top-left pixel.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np
from scipy import ndimage

from .errors import CoverageWarning, ParameterError

KINDS = ("probability", "binary", "edge")


@dataclass(frozen=True, eq=False)
class RasterGrid:
    """A 2-D scalar field tagged with what its values mean.

    ``probability`` grids hold floats in [0, 1]; ``binary`` and ``edge``
    grids hold 0/1 as ``uint8``. The array is made read-only on construction.
    """

    values: np.ndarray
    kind: str = "probability"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown grid kind {self.kind!r}")
        arr = np.asarray(self.values)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ParameterError(f"grid must be a non-empty 2-D array, got shape {arr.shape}")
        if self.kind == "probability":
            arr = np.array(arr, dtype=np.float64)
            if not np.all((arr >= 0.0) & (arr <= 1.0)):
                raise ParameterError("probability grid values must lie in [0, 1]")
        else:
            if not np.all((arr == 0) | (arr == 1)):
                raise ParameterError(f"{self.kind} grid values must be 0 or 1")
            arr = np.array(arr, dtype=np.uint8)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def count(self) -> int:
        """Number of nonzero pixels."""
        return int(np.count_nonzero(self.values))

    def __eq__(self, other):
        if not isinstance(other, RasterGrid):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Patch:
    """A window-sized grid cut from a larger image at ``(origin_x, origin_y)``."""

    origin_x: int
    origin_y: int
    grid: RasterGrid


class AggregationMode(str, enum.Enum):
    MAX = "max"
    AVERAGE = "average"
    SUM = "sum"
    HARMONIC_MEAN = "harmonic_mean"

    @classmethod
    def parse(cls, name: str) -> "AggregationMode":
        aliases = {"avg": "average", "mean": "average", "hmean": "harmonic_mean"}
        key = aliases.get(name.lower(), name.lower())
        try:
            return cls(key)
        except ValueError:
            raise ParameterError(f"unknown aggregation mode {name!r}") from None


def _origins(dim: int, window: int, stride: int) -> list[int]:
    if dim <= window:
        return [0]
    # lattice 0, s, 2s, ... with the last window pulled flush to the edge
    return list(range(0, dim - window, stride)) + [dim - window]


def patchify(image: RasterGrid, window: int, stride: int) -> list[Patch]:
    """Cut ``image`` into overlapping ``window`` x ``window`` patches.

    Origins follow the lattice ``0, stride, 2*stride, ...``; the final row and
    column of patches is clamped so that it ends exactly on the image edge.
    An image smaller than the window along an axis yields one patch there,
    zero-padded to the full window.
    """
    if window <= 0:
        raise ParameterError(f"window must be positive, got {window}")
    if not 0 < stride <= window:
        raise ParameterError(f"stride must satisfy 0 < stride <= window, got {stride}")
    h, w = image.shape
    patches = []
    for oy in _origins(h, window, stride):
        for ox in _origins(w, window, stride):
            tile = image.values[oy:oy + window, ox:ox + window]
            if tile.shape != (window, window):
                padded = np.zeros((window, window), dtype=image.values.dtype)
                padded[:tile.shape[0], :tile.shape[1]] = tile
                tile = padded
            patches.append(Patch(ox, oy, RasterGrid(tile, image.kind)))
    return patches


def aggregate_patches(patches: Sequence[Patch], out_width: int, out_height: int,
                      mode: AggregationMode | str = AggregationMode.AVERAGE) -> RasterGrid:
    """Reassemble patch outputs into a single probability grid.

    Overlapping values are combined per pixel by ``mode``. ``sum`` is clipped
    to 1 so the result stays a probability grid; the harmonic mean of any set
    containing 0 is 0. Pixels no patch covers are set to 0 and reported via a
    :class:`CoverageWarning`. Patch parts falling outside the output frame
    (zero padding) are dropped.
    """
    mode = AggregationMode.parse(mode) if isinstance(mode, str) else mode
    if not patches:
        raise ParameterError("no patches to aggregate")
    shape = (out_height, out_width)
    count = np.zeros(shape, dtype=np.int64)
    if mode is AggregationMode.MAX:
        acc = np.full(shape, -np.inf)
    else:
        acc = np.zeros(shape)
    has_zero = np.zeros(shape, dtype=bool)

    # sequential accumulation in patch order keeps float results reproducible
    for p in patches:
        x0, y0 = p.origin_x, p.origin_y
        if x0 < 0 or y0 < 0 or x0 >= out_width or y0 >= out_height:
            raise ParameterError(f"patch origin ({x0}, {y0}) outside the output frame")
        ph = min(p.grid.height, out_height - y0)
        pw = min(p.grid.width, out_width - x0)
        vals = p.grid.values[:ph, :pw].astype(np.float64)
        sl = (slice(y0, y0 + ph), slice(x0, x0 + pw))
        count[sl] += 1
        if mode is AggregationMode.MAX:
            np.maximum(acc[sl], vals, out=acc[sl])
        elif mode is AggregationMode.HARMONIC_MEAN:
            zero = vals == 0.0
            has_zero[sl] |= zero
            acc[sl] += np.where(zero, 0.0, 1.0 / np.where(zero, 1.0, vals))
        else:
            acc[sl] += vals

    covered = count > 0
    out = np.zeros(shape)
    if mode is AggregationMode.MAX:
        out[covered] = acc[covered]
    elif mode is AggregationMode.AVERAGE:
        out[covered] = acc[covered] / count[covered]
    elif mode is AggregationMode.SUM:
        out[covered] = np.minimum(acc[covered], 1.0)
    else:
        ok = covered & ~has_zero
        out[ok] = count[ok] / acc[ok]
    uncovered = int(shape[0] * shape[1] - np.count_nonzero(covered))
    if uncovered:
        warnings.warn(f"{uncovered} output pixels not covered by any patch; set to 0",
                      CoverageWarning, stacklevel=2)
    # 1/(1/v) can overshoot 1 by an ulp
    return RasterGrid(np.clip(out, 0.0, 1.0), "probability")


class OtsuResult(NamedTuple):
    threshold: float
    degenerate: bool
    bin_index: int


N_BINS = 256


def histogram_bins(values: np.ndarray) -> np.ndarray:
    """Map values in [0, 1] to 256 bins; bin ``k`` holds ``(k/256, (k+1)/256]``.

    Bin 0 also holds 0. The half-open-on-the-left convention makes "bins <= k"
    coincide exactly with ``value <= (k+1)/256``, i.e. with :func:`binarize`.
    """
    idx = np.ceil(np.asarray(values, dtype=np.float64) * N_BINS).astype(np.int64) - 1
    return np.clip(idx, 0, N_BINS - 1)


def otsu_threshold(mask: RasterGrid) -> OtsuResult:
    """Pick the binarization threshold maximizing between-class variance.

    The score for split ``k`` (classes = bins ``<= k`` and ``> k``) is evaluated
    in exact integer arithmetic over bin indices, so ties resolve to the lowest
    bin deterministically. A mask whose values all fall in a single bin is
    degenerate; its threshold is the mask maximum, so binarizing gives all 0.
    """
    if mask.kind != "probability":
        raise ParameterError("otsu_threshold expects a probability grid")
    hist = np.bincount(histogram_bins(mask.values).ravel(), minlength=N_BINS)
    if np.count_nonzero(hist) <= 1:
        return OtsuResult(float(mask.values.max()), True, -1)

    counts = [int(c) for c in hist]
    total_n = sum(counts)
    total_s = sum(k * c for k, c in enumerate(counts))
    best_k, best = -1, Fraction(-1)
    n0 = s0 = 0
    for k in range(N_BINS - 1):
        n0 += counts[k]
        s0 += k * counts[k]
        n1 = total_n - n0
        if n0 == 0 or n1 == 0:
            continue
        # w0*w1*(m0-m1)^2 up to the constant factor 1/N^2
        score = Fraction((s0 * n1 - (total_s - s0) * n0) ** 2, n0 * n1)
        if score > best:
            best_k, best = k, score
    return OtsuResult((best_k + 1) / N_BINS, False, best_k)


def binarize(mask: RasterGrid, threshold: float) -> RasterGrid:
    """1 where ``value > threshold`` (strict), else 0."""
    if not 0.0 <= threshold <= 1.0:
        raise ParameterError(f"threshold must lie in [0, 1], got {threshold}")
    return RasterGrid((mask.values > threshold).astype(np.uint8), "binary")


_EIGHT = np.ones((3, 3), dtype=bool)


def canny_edges(mask: RasterGrid, sigma: float = 1.0, low: float = 0.1,
                high: float = 0.3) -> RasterGrid:
    """Canny edge map of ``mask``.

    Gaussian smoothing (skipped for ``sigma == 0``), 3x3 Sobel gradients scaled
    so that a unit step has magnitude 1, non-maximum suppression along the
    gradient direction quantized to 0/45/90/135 degrees, and 8-connected
    hysteresis between ``low`` and ``high``.

    On a plateau of equal magnitudes across the gradient (an ideal step spans
    two pixels), NMS keeps the pixel strictly greater than its neighbour on
    the negative side, which leaves a 1-pixel wide line.
    """
    if sigma < 0:
        raise ParameterError(f"sigma must be >= 0, got {sigma}")
    if not 0 <= low <= high:
        raise ParameterError(f"need 0 <= low <= high, got low={low}, high={high}")
    img = mask.values.astype(np.float64)
    if sigma > 0:
        img = ndimage.gaussian_filter(img, sigma, mode="nearest")
    gx = ndimage.sobel(img, axis=1, mode="nearest") / 4.0
    gy = ndimage.sobel(img, axis=0, mode="nearest") / 4.0
    mag = np.hypot(gx, gy)

    # direction modulo 180 degrees, quantized to 4 sectors
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    sector = (np.floor((angle + 22.5) / 45.0).astype(np.int64)) % 4
    # (dy, dx) step along the gradient for each sector
    steps = ((0, 1), (1, 1), (1, 0), (1, -1))
    padded = np.pad(mag, 1, mode="constant")
    h, w = mag.shape
    keep = np.zeros(mag.shape, dtype=bool)
    for s, (dy, dx) in enumerate(steps):
        ahead = padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
        behind = padded[1 - dy:1 - dy + h, 1 - dx:1 - dx + w]
        sel = sector == s
        keep |= sel & (mag > behind) & (mag >= ahead)
    keep &= mag > 0

    strong = keep & (mag >= high)
    weak = keep & (mag >= low)
    labels, n = ndimage.label(weak, structure=_EIGHT)
    if n == 0:
        return RasterGrid(np.zeros(mag.shape, dtype=np.uint8), "edge")
    has_strong = np.zeros(n + 1, dtype=bool)
    has_strong[labels[strong]] = True
    has_strong[0] = False
    return RasterGrid(has_strong[labels].astype(np.uint8), "edge")


def dilate(mask: RasterGrid, radius: float) -> RasterGrid:
    """Euclidean dilation: a pixel is set iff some set pixel centre is within ``radius``."""
    if radius < 0:
        raise ParameterError(f"radius must be >= 0, got {radius}")
    src = mask.values != 0
    if radius == 0 or not src.any():
        return RasterGrid(src.astype(np.uint8), "binary")
    # exact squared distances from the nearest-feature indices
    _, (iy, ix) = ndimage.distance_transform_edt(~src, return_indices=True)
    yy, xx = np.indices(src.shape)
    d2 = (yy - iy) ** 2 + (xx - ix) ** 2
    return RasterGrid((d2 <= radius * radius).astype(np.uint8), "binary")
