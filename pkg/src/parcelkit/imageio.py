"""Mask file I/O: 8-bit PNG and plain/raw PGM (P2/P5) in, raw PGM out."""

from __future__ import annotations

import os
import re
import tempfile
from pathlib import Path

import numpy as np

from .errors import FormatError
from .raster import RasterGrid

_TOKEN = re.compile(rb"#[^\n]*\n?|\s+|(\S+)")


def _header_tokens(data: bytes, n: int) -> tuple[list[bytes], int]:
    """First ``n`` header tokens of a PGM file, skipping comments.

    Returns the tokens and the offset just past the single whitespace byte
    that terminates the last one.
    """
    tokens, pos = [], 0
    while len(tokens) < n:
        m = _TOKEN.match(data, pos)
        if m is None or m.end() == pos:
            raise FormatError("truncated PGM header")
        if m.group(1) is not None:
            tokens.append(m.group(1))
        pos = m.end()
    return tokens, pos + 1


def parse_pgm(data: bytes) -> tuple[np.ndarray, int]:
    """Decode P2 or P5 bytes; returns ``(uint16 array, maxval)``."""
    tokens, pos = _header_tokens(data, 4)
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"not a PGM file (magic {magic!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError:
        raise FormatError("non-integer PGM header field") from None
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise FormatError(f"bad PGM header: {width}x{height}, maxval {maxval}")
    n = width * height
    if magic == b"P5":
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raw = data[pos:pos + n * dtype.itemsize]
        if len(raw) < n * dtype.itemsize:
            raise FormatError("truncated PGM raster")
        arr = np.frombuffer(raw, dtype=dtype).astype(np.uint16)
    else:
        body = re.sub(rb"#[^\n]*", b"", data[pos - 1:]).split()
        if len(body) < n:
            raise FormatError("truncated PGM raster")
        try:
            arr = np.array([int(t) for t in body[:n]], dtype=np.uint16)
        except ValueError:
            raise FormatError("non-integer PGM sample") from None
    if arr.max(initial=0) > maxval:
        raise FormatError("PGM sample exceeds maxval")
    return arr.reshape(height, width), maxval


def read_mask(path: str | os.PathLike, kind: str = "probability") -> RasterGrid:
    """Read a grayscale mask; probability = value / maxval (255 for PNG).

    ``kind="binary"`` thresholds at half scale, so 0/255 masks map to 0/1.
    """
    path = Path(path)
    data = path.read_bytes()
    if data[:2] in (b"P2", b"P5"):
        arr, maxval = parse_pgm(data)
    elif data[:8] == b"\x89PNG\r\n\x1a\n":
        from PIL import Image

        with Image.open(path) as im:
            if im.mode not in ("L", "1", "P"):
                raise FormatError(f"{path}: expected single-band 8-bit PNG, got mode {im.mode}")
            arr = np.asarray(im.convert("L"), dtype=np.uint16)
        maxval = 255
    else:
        raise FormatError(f"{path}: unsupported mask format")
    prob = arr.astype(np.float64) / maxval
    if kind == "probability":
        return RasterGrid(prob, "probability")
    return RasterGrid((prob >= 0.5).astype(np.uint8), kind)


def encode_pgm(values: np.ndarray) -> bytes:
    """Raw P5 encoding of an 8-bit array."""
    arr = np.ascontiguousarray(values, dtype=np.uint8)
    h, w = arr.shape
    return b"P5\n%d %d\n255\n" % (w, h) + arr.tobytes()


def atomic_write(path: str | os.PathLike, data: bytes | str) -> None:
    """Write via a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_mask(path: str | os.PathLike, grid: RasterGrid) -> None:
    """Write a grid as P5. Binary/edge pixels become 0 or 255; probabilities are scaled and rounded."""
    if grid.kind == "probability":
        vals = np.rint(grid.values * 255.0)
    else:
        vals = grid.values.astype(np.uint16) * 255
    atomic_write(path, encode_pgm(vals))
