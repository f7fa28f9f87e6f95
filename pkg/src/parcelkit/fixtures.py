"""Synthetic k x k farm grids with a known 1-pixel reference boundary."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ParameterError
from .raster import RasterGrid


@dataclass(frozen=True)
class FarmFixture:
    probability: RasterGrid
    reference: RasterGrid
    field: RasterGrid
    flipped_fraction: float


def farm_grid(size: int = 1000, k: int = 5, seed: int = 0, gap: int = 3,
              band: int = 2, flip_rate: float = 0.15, max_flipped: float = 0.05, spread: float = 0.15,
              height: int | None = None) -> FarmFixture:
    """Rectangular farms separated by ``gap``-pixel strips around 1-px grid lines.

    The reference is the set of grid lines, image border included. The
    probability mask mimics a network output: half-normal values (sd
    ``spread``) peaked at 1 on farms and at 0 on the strips. Pixels within
    ``band`` px of a strip edge, reference line excluded, swap class
    (``v -> 1 - v``) with probability ``flip_rate``, capped so at most ``max_flipped`` of all pixels change.
    """
    width = size
    height = size if height is None else height
    if k < 1 or gap < 1 or gap % 2 == 0:
        raise ParameterError("need k >= 1 and an odd gap >= 1")
    if min(width, height) < k * (gap + 2):
        raise ParameterError(f"{width}x{height} frame too small for {k}x{k} farms")
    rng = np.random.default_rng(seed)
    xs = np.rint(np.linspace(0, width - 1, k + 1)).astype(int)
    ys = np.rint(np.linspace(0, height - 1, k + 1)).astype(int)

    ref = np.zeros((height, width), dtype=bool)
    ref[:, xs] = True
    ref[ys, :] = True
    half = gap // 2
    strip = ndimage.binary_dilation(ref, structure=np.ones((2 * half + 1, 2 * half + 1), bool)) \
        if half else ref.copy()
    field = ~strip

    dev = np.minimum(np.abs(rng.normal(0.0, spread, field.shape)), 1.0)
    prob = np.where(field, 1.0 - dev, dev)
    near = ndimage.binary_dilation(strip, iterations=band) & ~ndimage.binary_erosion(
        strip, iterations=band, border_value=1)
    # the centre line itself never flips, so noise cannot bridge two farms
    candidates = np.flatnonzero(near & ~ref & (rng.random(field.shape) < flip_rate))
    cap = int(max_flipped * field.size)
    if len(candidates) > cap:
        candidates = rng.choice(candidates, cap, replace=False)
    flat = prob.ravel()
    flat[candidates] = 1.0 - flat[candidates]
    # quantize like an 8-bit mask so files round-trip exactly
    prob = np.rint(flat.reshape(field.shape) * 255) / 255
    return FarmFixture(
        RasterGrid(prob, "probability"),
        RasterGrid(ref.astype(np.uint8), "binary"),
        RasterGrid(field.astype(np.uint8), "binary"),
        len(candidates) / field.size,
    )
