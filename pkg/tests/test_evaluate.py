import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from parcelkit import errors
from parcelkit.evaluate import (ConfusionCounts, _line_pixels, EvalConfig, buffer_reference, confusion,
                                evaluate_full, fscore, precision, rasterize_boundaries, recall)
from parcelkit.raster import RasterGrid
from parcelkit.vectorize import Polygon
from oracles import brute_dilate

SQ = Polygon(((5, 5), (9, 5), (9, 9), (5, 9)))


def binary(a):
    return RasterGrid(np.asarray(a, dtype=np.uint8), "binary")


def outline():
    m = np.zeros((14, 14), np.uint8)
    m[5, 5:10] = m[9, 5:10] = m[5:10, 5] = m[5:10, 9] = 1
    return m


class TestRasterize:
    def test_empty(self):
        assert rasterize_boundaries([], 10, 10).count() == 0

    def test_square_outline(self):
        sq = Polygon(((0, 0), (4, 0), (4, 4), (0, 4)))
        out = rasterize_boundaries([sq], 10, 10).values
        assert out.sum() == 16
        assert out[0, :5].all() and out[4, :5].all() and out[:5, 0].all() and out[:5, 4].all()

    def test_diagonal(self):
        xs, ys = _line_pixels(0, 0, 5, 5)
        assert list(zip(xs.tolist(), ys.tolist())) == [(i, i) for i in range(6)]
        tri = Polygon(((0, 0), (5, 5), (0, 5)))
        out = rasterize_boundaries([tri], 10, 10).values
        assert all(out[i, i] for i in range(6))

    def test_out_of_frame_clamped_with_warning(self):
        with pytest.warns(UserWarning, match="clamped"):
            out = rasterize_boundaries([Polygon(((0, 0), (20, 0), (0, 3)))], 10, 10)
        assert out.values[0, 9] == 1


class TestBuffer:
    def test_width_one_identity(self):
        m = outline()
        np.testing.assert_array_equal(buffer_reference(binary(m), 1).values, m)

    def test_width_five_line_is_five_thick(self):
        m = np.zeros((15, 20), np.uint8)
        m[7, 2:18] = 1
        out = buffer_reference(binary(m), 5).values
        assert out[:, 10].sum() == 5

    def test_width_six_radius(self):
        m = np.zeros((15, 20), np.uint8)
        m[7, 2:18] = 1
        out = buffer_reference(binary(m), 6).values
        np.testing.assert_array_equal(out.astype(bool), brute_dilate(m, 2.5))
        assert out[:, 10].sum() == 5

    def test_bad_width(self):
        with pytest.raises(errors.ParameterError):
            buffer_reference(binary(outline()), 0)

    @given(arrays(np.bool_, (7, 8)), st.sampled_from([1, 2, 5, 6]))
    @settings(max_examples=40, deadline=None)
    def test_matches_bruteforce(self, m, w):
        out = buffer_reference(binary(m), w).values.astype(bool)
        np.testing.assert_array_equal(out, brute_dilate(m, (w - 1) / 2))


class TestConfusion:
    def test_constructed_fixture(self):
        ref = np.zeros(100, np.uint8)
        ref[:30] = 1
        pred = np.zeros(100, np.uint8)
        pred[15:35] = 1
        c = confusion(binary(pred.reshape(10, 10)), binary(ref.reshape(10, 10)))
        assert c == ConfusionCounts(15, 5, 15, 65)
        assert precision(c) == 75

    def test_perfect_and_empty(self):
        m = binary(outline())
        assert confusion(m, m).fp == confusion(m, m).fn_ == 0
        c = confusion(binary(np.zeros((14, 14))), m)
        assert (c.tp, c.fp, c.fn_) == (0, 0, 16)

    def test_shape_mismatch(self):
        with pytest.raises(errors.ParameterError):
            confusion(binary(np.zeros((3, 3))), binary(np.zeros((3, 4))))


class TestMetrics:
    def test_precision(self):
        assert precision(ConfusionCounts(60, 40, 0, 0)) == 60
        assert precision(ConfusionCounts(0, 5, 3, 0)) == 0
        with pytest.raises(errors.UndefinedMetricError):
            precision(ConfusionCounts(0, 0, 5, 5))

    def test_recall(self):
        assert recall(ConfusionCounts(10, 0, 50, 0), 6) == 100
        assert recall(ConfusionCounts(10, 0, 50, 0), 1) == pytest.approx(16.67, abs=0.005)
        assert recall(ConfusionCounts(15, 0, 15, 0), 5) == 250
        with pytest.raises(errors.UndefinedMetricError):
            recall(ConfusionCounts(0, 3, 0, 0), 5)

    @pytest.mark.parametrize("p,r,f", [(60, 85, 70.34), (72, 95, 81.92)])
    def test_fscore_table_rows(self, p, r, f):
        assert fscore(p, r) == pytest.approx(f, abs=0.005)

    def test_fscore_equal_inputs(self):
        assert fscore(42.0, 42.0) == pytest.approx(42.0)
        with pytest.raises(errors.UndefinedMetricError):
            fscore(0, 0)

    @given(st.floats(0, 100), st.floats(0, 300))
    def test_fscore_properties(self, p, r):
        if p + r == 0:
            return
        assert fscore(p, r) == pytest.approx(fscore(r, p))
        assert fscore(p, r) <= max(p, r) + 1e-9
        if r <= 100:
            assert 0 <= fscore(p, r) <= 100 + 1e-9

    @given(st.integers(0, 50), st.integers(1, 50), st.integers(1, 10))
    def test_recall_scales_with_bf(self, tp, fn_, bf):
        c = ConfusionCounts(tp, 0, fn_, 0)
        assert recall(c, bf) == pytest.approx(bf * recall(c, 1))


class TestEvaluateFull:
    def test_identity_width_one(self):
        rep = evaluate_full([SQ], binary(outline()), EvalConfig(1))
        assert (rep.precision, rep.recall, rep.fscore) == (100, 100, 100)
        assert not rep.recall_over_100

    def test_identity_width_five_flags_recall(self):
        rep = evaluate_full([SQ], binary(outline()), EvalConfig(5), "sq")
        assert rep.precision == 100
        # 5 * 16 / 69 buffered pixels, frozen from the brute-force dilation
        assert rep.counts.tp + rep.counts.fn_ == 69
        assert rep.recall == pytest.approx(115.94, abs=0.005)
        assert rep.recall_over_100

    def test_empty_prediction_records_error(self):
        rep = evaluate_full([], binary(outline()), EvalConfig(5))
        assert rep.precision is None and rep.fscore is None
        assert any("precision undefined" in e for e in rep.errors)
        assert "precision=nan" in rep.to_keyvalue()

    def test_frame_mismatch(self):
        with pytest.raises(errors.ParameterError):
            evaluate_full([SQ], binary(outline()), EvalConfig(5, width=20, height=20))

    def test_keyvalue_format(self):
        rep = evaluate_full([SQ], binary(outline()), EvalConfig(5), "sq")
        kv = dict(line.split("=", 1) for line in rep.to_keyvalue().splitlines())
        assert kv["recall"] == "115.94" and kv["recall_over_100"] == "true" and kv["label"] == "sq"

    @given(arrays(np.bool_, (10, 10)), st.integers(0, 2**31))
    @settings(max_examples=40, deadline=None)
    def test_buffer_monotonicity(self, ref, seed):
        rng = np.random.default_rng(seed)
        pred = rng.random((10, 10)) < 0.3
        prev = None
        for w in range(1, 8):
            c = confusion(binary(pred), buffer_reference(binary(ref), w))
            if prev is not None:
                assert c.tp >= prev.tp and c.fp <= prev.fp
            prev = c
