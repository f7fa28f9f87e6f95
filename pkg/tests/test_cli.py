import json

import numpy as np
import pytest
from PIL import Image

from parcelkit import config, errors, geojson
from parcelkit.cli import main
from parcelkit.geometry import area
from parcelkit.imageio import encode_pgm, read_mask
from parcelkit.vectorize import Polygon

PP = ["--gsd", "1", "--min-area", "50"]


@pytest.fixture(scope="module")
def scene(tmp_path_factory):
    d = tmp_path_factory.mktemp("scene")
    assert main(["gen-fixture", "--size", "240", "--k", "3", "--seed", "2", "--tiles",
                 "--window", "100", "--stride", "50", "--out-dir", str(d)]) == 0
    return d


def write_pgm(path, arr):
    path.write_bytes(encode_pgm(np.asarray(arr, dtype=np.uint8)))
    return path


class TestConfig:
    def test_defaults_and_flag_precedence(self, tmp_path):
        f = tmp_path / "c.toml"
        f.write_text('[raster]\nwindow = 300\nstride = 100\n[postprocess]\ngsd = 0.5\n'
                     'min_area = 10\nmethod = "dp"\nepsilon = 1.5\n')
        merged = config.merge(config.load_file(f), {"raster.stride": 150, "postprocess.epsilon": None})
        cfg = config.build(merged)
        assert (cfg.window, cfg.stride) == (300, 150)
        assert cfg.postprocess.simplify.method == "douglas_peucker"
        assert cfg.postprocess.simplify.epsilon == 1.5
        assert "# raster.stride = 150" in cfg.echo()

    def test_paper_defaults(self):
        cfg = config.build(config.merge({}, {}))
        assert (cfg.window, cfg.stride, cfg.aggregation.value) == (400, 200, "average")
        assert cfg.postprocess is None and cfg.canny is None

    def test_unknown_key(self, tmp_path):
        f = tmp_path / "c.toml"
        f.write_text("[raster]\nwindoww = 3\n")
        with pytest.raises(errors.ParameterError, match="unknown setting raster.windoww"):
            config.load_file(f)

    def test_postprocess_needs_explicit_values(self):
        with pytest.raises(errors.ParameterError, match="postprocess.gsd"):
            config.build(config.merge({}, {}), need_postprocess=True)
        with pytest.raises(errors.ParameterError, match="t >= 1"):
            config.build(config.merge({}, {"postprocess.gsd": 1, "postprocess.min_area": 0,
                                           "postprocess.method": "pocket"}))

    def test_incomplete_canny(self):
        with pytest.raises(errors.ParameterError, match="canny"):
            config.build(config.merge({}, {"canny.sigma": 1.0}))


class TestVectorize:
    def test_all_zero(self, tmp_path):
        src = write_pgm(tmp_path / "z.pgm", np.zeros((8, 8)))
        assert main(["vectorize", str(src), "--out-dir", str(tmp_path)]) == 0
        assert json.loads((tmp_path / "polygons.geojson").read_text())["features"] == []

    def test_block(self, tmp_path):
        m = np.zeros((8, 8))
        m[2:5, 3:6] = 255
        src = write_pgm(tmp_path / "b.pgm", m)
        assert main(["vectorize", str(src), "--out-dir", str(tmp_path)]) == 0
        (p,) = geojson.read(tmp_path / "polygons.geojson")
        assert p.vertices == ((3, 2), (6, 2), (6, 5), (3, 5))
        doc = json.loads((tmp_path / "polygons.geojson").read_text())
        assert doc["features"][0]["properties"]["area_px"] == 9
        assert doc["properties"]["frame"] == {"width": 8, "height": 8}

    def test_png_two_blobs(self, tmp_path):
        m = np.full((20, 20), 10, np.uint8)
        m[2:7, 2:7] = 240
        m[10:18, 9:15] = 230
        Image.fromarray(m).save(tmp_path / "blobs.png")
        assert main(["vectorize", str(tmp_path / "blobs.png"), "--out-dir", str(tmp_path), "--wkt"]) == 0
        assert len(geojson.read(tmp_path / "polygons.geojson")) == 2
        assert (tmp_path / "polygons.wkt").read_text().count("POLYGON") == 2

    def test_missing_file(self, tmp_path, capsys):
        assert main(["vectorize", str(tmp_path / "nope.pgm"), "--out-dir", str(tmp_path)]) == 3
        assert "[read]" in capsys.readouterr().err

    def test_bad_file(self, tmp_path):
        (tmp_path / "x.pgm").write_bytes(b"P5\n3 3\n255\n")
        assert main(["vectorize", str(tmp_path / "x.pgm"), "--out-dir", str(tmp_path)]) == 3

    def test_tile_directory(self, scene, tmp_path):
        assert main(["vectorize", str(scene / "tiles"), "--agg", "hmean", "--out-dir", str(tmp_path)]) == 0
        assert main(["vectorize", str(scene / "mask.pgm"), "--out", str(tmp_path / "whole.geojson")]) == 0
        tiles = geojson.read(tmp_path / "polygons.geojson")
        whole = geojson.read(tmp_path / "whole.geojson")
        assert tiles == whole
        # raw tracing keeps the noise specks; the farms are the large rings
        assert sum(area(p) >= 1000 for p in whole) == 9

    def test_canny_intermediates(self, scene, tmp_path):
        assert main(["vectorize", str(scene / "mask.pgm"), "--canny", "1", "0.1", "0.3",
                     "--keep-intermediates", "--out-dir", str(tmp_path)]) == 0
        edges = read_mask(tmp_path / "edges.pgm", "binary")
        assert edges.count() > 0 and (tmp_path / "binary.pgm").exists()


class TestPostprocess:
    def test_report_and_output(self, tmp_path):
        polys = [
            [(0, 0), (40, 0), (40, 40), (21, 40), (20, 38), (19, 40), (0, 40)],
            [(10, 10), (20, 10), (20, 20), (10, 20)],
            [(100, 100), (103, 100), (103, 103), (100, 103)],
        ]
        geojson.write(tmp_path / "in.geojson", [Polygon(tuple(v), i) for i, v in enumerate(polys)])
        assert main(["postprocess", str(tmp_path / "in.geojson"), *PP, "--simplify", "pocket",
                     "--t", "1.5", "--out-dir", str(tmp_path)]) == 0
        (out,) = geojson.read(tmp_path / "parcels.geojson")
        assert len(out) == 4
        report = (tmp_path / "postprocess_report.txt").read_text()
        assert "area_filter in=3 out=2 changed=1" in report
        assert "nested_filter in=2 out=1 changed=1" in report
        assert "# postprocess.t = 1.5" in report

    def test_missing_t_is_config_error(self, tmp_path):
        geojson.write(tmp_path / "in.geojson", [])
        assert main(["postprocess", str(tmp_path / "in.geojson"), *PP, "--simplify", "pocket",
                     "--out-dir", str(tmp_path)]) == 2

    def test_malformed_geojson(self, tmp_path, capsys):
        (tmp_path / "bad.geojson").write_text('{"type": "FeatureCollection",\n"features": [}')
        assert main(["postprocess", str(tmp_path / "bad.geojson"), *PP, "--simplify", "dp",
                     "--epsilon", "1", "--out-dir", str(tmp_path)]) == 3
        assert "line 2" in capsys.readouterr().err

    def test_clean_input_byte_stable(self, tmp_path):
        geojson.write(tmp_path / "in.geojson", [Polygon(((0, 0), (20, 0), (20, 20), (0, 20)), 0)])
        assert main(["postprocess", str(tmp_path / "in.geojson"), *PP, "--simplify", "dp",
                     "--epsilon", "1", "--out", str(tmp_path / "out.geojson")]) == 0
        assert (tmp_path / "out.geojson").read_bytes() == (tmp_path / "in.geojson").read_bytes()


class TestEvaluateAndPipeline:
    def test_prediction_equals_reference(self, tmp_path):
        ref = np.zeros((10, 10), np.uint8)
        ref[2, 2:7] = ref[6, 2:7] = ref[2:7, 2] = ref[2:7, 6] = 255
        write_pgm(tmp_path / "ref.pgm", ref)
        geojson.write(tmp_path / "p.geojson", [Polygon(((2, 2), (6, 2), (6, 6), (2, 6)), 0)])
        assert main(["evaluate", str(tmp_path / "p.geojson"), str(tmp_path / "ref.pgm"),
                     "--buffer", "1", "--out-dir", str(tmp_path)]) == 0
        kv = (tmp_path / "eval_metrics.txt").read_text()
        assert "precision=100.00\nrecall=100.00\nfscore=100.00" in kv

    def test_empty_prediction_exit_4(self, tmp_path):
        write_pgm(tmp_path / "ref.pgm", np.eye(5) * 255)
        geojson.write(tmp_path / "p.geojson", [])
        assert main(["evaluate", str(tmp_path / "p.geojson"), str(tmp_path / "ref.pgm"),
                     "--buffer", "5", "--out-dir", str(tmp_path)]) == 4
        assert "precision=nan" in (tmp_path / "eval_metrics.txt").read_text()

    def test_frame_mismatch(self, scene, tmp_path, capsys):
        assert main(["vectorize", str(scene / "mask.pgm"), "--out-dir", str(tmp_path)]) == 0
        write_pgm(tmp_path / "small.pgm", np.zeros((100, 100)))
        assert main(["evaluate", str(tmp_path / "polygons.geojson"), str(tmp_path / "small.pgm"),
                     "--buffer", "5", "--out-dir", str(tmp_path)]) == 2
        assert "does not match" in capsys.readouterr().err

    def test_missing_buffer_is_config_error(self, tmp_path):
        geojson.write(tmp_path / "p.geojson", [])
        assert main(["evaluate", str(tmp_path / "p.geojson"), "ref.pgm", "--out-dir", str(tmp_path)]) == 2

    def test_pipeline_missing_reference(self, scene, tmp_path):
        assert main(["pipeline", str(scene / "mask.pgm"), *PP, "--simplify", "pocket", "--t", "2",
                     "--buffer", "5", "--out-dir", str(tmp_path)]) == 2

    def test_pipeline_full(self, scene, tmp_path):
        assert main(["pipeline", str(scene / "mask.pgm"), "--reference", str(scene / "reference.pgm"),
                     *PP, "--simplify", "pocket", "--t", "2", "--buffer", "5", "--keep-intermediates",
                     "--label", "pocket t=2", "--out-dir", str(tmp_path)]) == 0
        for name in ("parcels.geojson", "polygons.geojson", "binary.pgm", "postprocess_report.txt",
                     "eval_report.txt", "eval_metrics.txt"):
            assert (tmp_path / name).exists(), name
        kv = dict(line.split("=", 1) for line in (tmp_path / "eval_metrics.txt").read_text().splitlines())
        assert float(kv["precision"]) >= 95
        assert kv["label"] == "pocket t=2"

    def test_pocket_and_dp_vertex_counts_differ(self, scene, tmp_path, caplog):
        counts = {}
        for method, extra in (("pocket", ["--t", "1.5"]), ("dp", ["--epsilon", "2"])):
            out = tmp_path / method
            with caplog.at_level("INFO", logger="parcelkit"):
                assert main(["pipeline", str(scene / "mask.pgm"), *PP, "--simplify", method, *extra,
                             "--out-dir", str(out)]) == 0
            counts[method] = sum(len(p) for p in geojson.read(out / "parcels.geojson"))
        assert counts["pocket"] != counts["dp"]
        assert sum("vertices:" in r.getMessage() for r in caplog.records) == 2

    def test_compare_grid(self, scene, tmp_path, capsys):
        assert main(["compare", str(scene / "mask.pgm"), str(scene / "reference.pgm"), *PP,
                     "--t", "2", "--epsilon", "2", "--out-dir", str(tmp_path)]) == 0
        table = capsys.readouterr().out.splitlines()
        rows = [line for line in table if "pixel" in line]
        assert [(r.split("|")[0].strip(), r.split("|")[1].strip()) for r in rows] == [
            ("5 pixel", "Douglas-Peucker"), ("5 pixel", "Pocket-based"),
            ("6 pixel", "Douglas-Peucker"), ("6 pixel", "Pocket-based")]

    def test_compare_needs_both_parameters(self, scene, tmp_path):
        assert main(["compare", str(scene / "mask.pgm"), str(scene / "reference.pgm"), *PP,
                     "--t", "2", "--out-dir", str(tmp_path)]) == 2
