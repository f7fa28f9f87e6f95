import numpy as np
import pytest
from PIL import Image

from parcelkit import errors
from parcelkit.imageio import encode_pgm, parse_pgm, read_mask, write_mask
from parcelkit.raster import RasterGrid


def test_plain_pgm_with_comments(tmp_path):
    f = tmp_path / "m.pgm"
    f.write_bytes(b"P2\n# made by hand\n3 2\n# max\n10\n0 5 10\n10 5 0\n")
    g = read_mask(f)
    np.testing.assert_allclose(g.values, [[0, 0.5, 1], [1, 0.5, 0]])


def test_raw_pgm_round_trip(tmp_path):
    vals = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
    f = tmp_path / "m.pgm"
    f.write_bytes(encode_pgm(vals))
    arr, maxval = parse_pgm(f.read_bytes())
    assert maxval == 255
    np.testing.assert_array_equal(arr, vals)


def test_sixteen_bit_pgm():
    data = b"P5 2 1 65535\n" + np.array([0, 65535], dtype=">u2").tobytes()
    arr, maxval = parse_pgm(data)
    assert maxval == 65535 and arr.tolist() == [[0, 65535]]


def test_png(tmp_path):
    f = tmp_path / "m.png"
    Image.fromarray(np.array([[0, 255], [51, 0]], dtype=np.uint8)).save(f)
    g = read_mask(f)
    np.testing.assert_allclose(g.values, [[0, 1], [0.2, 0]])
    assert read_mask(f, "binary").values.tolist() == [[0, 1], [0, 0]]


def test_write_then_read_probability(tmp_path):
    g = RasterGrid(np.array([[0, 1 / 255, 1]]), "probability")
    write_mask(tmp_path / "p.pgm", g)
    np.testing.assert_allclose(read_mask(tmp_path / "p.pgm").values, g.values)


def test_write_binary_scales_to_255(tmp_path):
    write_mask(tmp_path / "b.pgm", RasterGrid(np.array([[0, 1]], np.uint8), "binary"))
    assert parse_pgm((tmp_path / "b.pgm").read_bytes())[0].tolist() == [[0, 255]]


@pytest.mark.parametrize("data", [b"P6\n1 1\n255\n\x00", b"P5\n2 2\n255\n\x00", b"P2\n2 1\n10\n3 11\n",
                                  b"P2\n2 x\n10\n"])
def test_malformed_pgm(data):
    with pytest.raises(errors.FormatError):
        parse_pgm(data)


def test_unknown_format(tmp_path):
    f = tmp_path / "m.txt"
    f.write_text("hello")
    with pytest.raises(errors.FormatError):
        read_mask(f)
