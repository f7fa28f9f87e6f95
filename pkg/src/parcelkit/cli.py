"""Command-line front end: ``parcelkit <command> ...``.

Exit codes: 0 success, 2 configuration error, 3 I/O or format error,
4 undefined metric.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
import warnings
from pathlib import Path

from . import config as config_mod
from . import geojson
from .errors import FormatError, ParameterError, UndefinedMetricError
from .evaluate import EvalConfig, EvalReport, evaluate_full
from .fixtures import farm_grid
from .imageio import atomic_write, read_mask, write_mask
from .postprocess import PostprocessConfig, SimplifyParams, run_postprocess
from .raster import (Patch, RasterGrid, aggregate_patches, binarize, canny_edges,
                     otsu_threshold, patchify)
from .vectorize import extract_polygons

log = logging.getLogger("parcelkit")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_METRIC = 0, 2, 3, 4

_TILE = re.compile(r"tile_(\d+)_(\d+)\.(pgm|png)$")


class StageError(Exception):
    """Wraps an error with the pipeline stage it came from."""

    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage
        self.cause = exc


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ParameterError, FormatError, UndefinedMetricError, OSError) as exc:
        raise StageError(name, exc) from exc


def load_probability(path: Path, cfg: config_mod.PipelineConfig) -> RasterGrid:
    """A single mask file, or a directory of ``tile_<x>_<y>`` patch masks.

    Tiles are recombined with the configured aggregation mode. The frame size
    comes from ``frame.json`` in the directory when present, else from the
    tile extents.
    """
    if not path.is_dir():
        return read_mask(path)
    patches = []
    for f in sorted(path.iterdir()):
        m = _TILE.match(f.name)
        if m:
            patches.append(Patch(int(m.group(1)), int(m.group(2)), read_mask(f)))
    if not patches:
        raise FormatError(f"{path}: no tile_<x>_<y>.pgm/png files")
    frame = path / "frame.json"
    if frame.exists():
        size = json.loads(frame.read_text())
        w, h = int(size["width"]), int(size["height"])
    else:
        w = max(p.origin_x + p.grid.width for p in patches)
        h = max(p.origin_y + p.grid.height for p in patches)
    log.info("aggregating %d tiles into %dx%d (%s)", len(patches), w, h, cfg.aggregation.value)
    return aggregate_patches(patches, w, h, cfg.aggregation)


def vectorize_mask(prob: RasterGrid, cfg: config_mod.PipelineConfig, out_dir: Path | None = None):
    """Otsu -> binarize -> trace, optionally writing the intermediate rasters."""
    otsu = otsu_threshold(prob)
    if otsu.degenerate:
        log.warning("mask is single-valued; Otsu threshold degenerate at %.4f", otsu.threshold)
    field = binarize(prob, otsu.threshold)
    if out_dir is not None and cfg.keep_intermediates:
        write_mask(out_dir / "binary.pgm", field)
    if cfg.canny is not None:
        edges = canny_edges(field, *cfg.canny)
        if out_dir is not None and cfg.keep_intermediates:
            write_mask(out_dir / "edges.pgm", edges)
    polys = extract_polygons(field)
    log.info("otsu threshold %.6f, %d polygons traced", otsu.threshold, len(polys))
    return polys, otsu.threshold


def _collection_props(frame: tuple[int, int] | None, extra: dict | None = None) -> dict:
    props = {}
    if frame is not None:
        props["frame"] = {"width": frame[0], "height": frame[1]}
    if extra:
        props.update(extra)
    return props


def _write_polys(path: Path, polys, cfg, frame):
    geojson.write(path, polys, cfg.geotransform, _collection_props(frame))
    if cfg.wkt:
        atomic_write(path.with_suffix(".wkt"), geojson.to_wkt(polys))


def _read_frame(path: Path) -> tuple[int, int] | None:
    doc = json.loads(path.read_text(encoding="utf-8"))
    fr = (doc.get("properties") or {}).get("frame")
    if fr:
        return int(fr["width"]), int(fr["height"])
    return None


def cmd_vectorize(args, cfg) -> int:
    prob = _stage("read", load_probability, Path(args.mask), cfg)
    out = Path(args.out) if args.out else Path(args.out_dir) / "polygons.geojson"
    polys, _ = _stage("vectorize", vectorize_mask, prob, cfg, out.parent)
    _stage("write", _write_polys, out, polys, cfg, (prob.width, prob.height))
    print(out)
    return EXIT_OK


def _postprocess_report(report, cfg) -> str:
    return cfg.echo() + report.to_text()


def cmd_postprocess(args, cfg) -> int:
    src = Path(args.geojson)
    polys = _stage("read", geojson.read, src)
    frame = _stage("read", _read_frame, src)
    out, report = _stage("postprocess", run_postprocess, polys, cfg.postprocess)
    out_dir = Path(args.out_dir)
    dst = Path(args.out) if args.out else out_dir / "parcels.geojson"
    _stage("write", _write_polys, dst, out, cfg, frame)
    _stage("write", atomic_write, dst.parent / "postprocess_report.txt", _postprocess_report(report, cfg))
    print(dst)
    return EXIT_OK


def _check_frame(polys, frame, ref: RasterGrid):
    w, h = ref.width, ref.height
    if frame is not None and frame != (w, h):
        raise ParameterError(f"prediction frame {frame[0]}x{frame[1]} does not match reference {w}x{h}")
    for p in polys:
        v = p.coords()
        if v.min() < 0 or v[:, 0].max() > w or v[:, 1].max() > h:
            raise ParameterError(f"polygon {p.id} extends beyond the {w}x{h} reference frame")


def _write_eval(out_dir: Path, report: EvalReport, cfg, stem="eval"):
    atomic_write(out_dir / f"{stem}_report.txt", cfg.echo() + report.to_text())
    atomic_write(out_dir / f"{stem}_metrics.txt", report.to_keyvalue())


def cmd_evaluate(args, cfg) -> int:
    src = Path(args.geojson)
    polys = _stage("read", geojson.read, src)
    frame = _stage("read", _read_frame, src)
    ref = _stage("read", read_mask, Path(args.reference), "binary")
    _stage("evaluate", _check_frame, polys, frame, ref)
    report = _stage("evaluate", evaluate_full, polys, ref, cfg.eval, cfg.label)
    _stage("write", _write_eval, Path(args.out_dir), report, cfg)
    sys.stdout.write(report.to_text())
    return EXIT_METRIC if report.errors else EXIT_OK


def cmd_pipeline(args, cfg) -> int:
    if cfg.eval is not None and not args.reference:
        raise ParameterError("evaluation requested (buffer set) but no --reference given")
    if args.reference and cfg.eval is None:
        raise ParameterError("--reference given but no --buffer width")
    out_dir = Path(args.out_dir)
    prob = _stage("read", load_probability, Path(args.mask), cfg)
    frame = (prob.width, prob.height)
    polys, _ = _stage("vectorize", vectorize_mask, prob, cfg, out_dir)
    if cfg.keep_intermediates:
        _stage("write", _write_polys, out_dir / "polygons.geojson", polys, cfg, frame)
    out, report = _stage("postprocess", run_postprocess, polys, cfg.postprocess)
    log.info("vertices: %d traced -> %d simplified (%s)", sum(len(p) for p in polys),
             sum(len(p) for p in out), cfg.postprocess.simplify.method)
    _stage("write", _write_polys, out_dir / "parcels.geojson", out, cfg, frame)
    _stage("write", atomic_write, out_dir / "postprocess_report.txt", _postprocess_report(report, cfg))
    status = EXIT_OK
    if args.reference:
        ref = _stage("read", read_mask, Path(args.reference), "binary")
        _stage("evaluate", _check_frame, out, frame, ref)
        rep = _stage("evaluate", evaluate_full, out, ref, cfg.eval, cfg.label)
        _stage("write", _write_eval, out_dir, rep, cfg)
        sys.stdout.write(rep.to_text())
        if rep.errors:
            status = EXIT_METRIC
    print(out_dir / "parcels.geojson")
    return status


def comparison_table(rows: list[EvalReport]) -> str:
    """Buffer width x method grid with precision / recall / F-score columns."""
    def cell(x):
        return "   n/a" if x is None else f"{x:6.2f}"

    head = f"{'Buffer width':<13}| {'Method':<16}| {'Precision':>9} | {'Recall':>9} | {'F-Score':>9}"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(f"{str(r.buffer_width) + ' pixel':<13}| {r.method_label:<16}| "
                     f"{cell(r.precision):>9} | {cell(r.recall):>9} | {cell(r.fscore):>9}")
    return "\n".join(lines) + "\n"


_METHOD_NAMES = {"douglas_peucker": "Douglas-Peucker", "pocket_based": "Pocket-based"}


def cmd_compare(args, cfg) -> int:
    pp = cfg.postprocess
    if "postprocess.t" not in cfg.values or "postprocess.epsilon" not in cfg.values:
        raise ParameterError("compare needs both --t and --epsilon")
    out_dir = Path(args.out_dir)
    prob = _stage("read", load_probability, Path(args.mask), cfg)
    ref = _stage("read", read_mask, Path(args.reference), "binary")
    polys, _ = _stage("vectorize", vectorize_mask, prob, cfg, out_dir)
    widths = [int(w) for w in args.buffers.split(",")]
    methods = [
        SimplifyParams("douglas_peucker", epsilon=float(cfg.values["postprocess.epsilon"])),
        SimplifyParams("pocket_based", t=float(cfg.values["postprocess.t"]), iterate=pp.simplify.iterate),
    ]
    simplified = {}
    for m in methods:
        out, _ = _stage("postprocess", run_postprocess, polys, PostprocessConfig(pp.gsd, pp.min_area, m))
        _stage("evaluate", _check_frame, out, (prob.width, prob.height), ref)
        simplified[m.method] = out
        _stage("write", _write_polys, out_dir / f"parcels_{m.method}.geojson", out, cfg,
               (prob.width, prob.height))
    rows = []
    for w in widths:
        for m in methods:
            rep = _stage("evaluate", evaluate_full, simplified[m.method], ref, EvalConfig(w),
                         _METHOD_NAMES[m.method])
            rows.append(rep)
            _stage("write", _write_eval, out_dir, rep, cfg, f"eval_{m.method}_{w}px")
    table = comparison_table(rows)
    _stage("write", atomic_write, out_dir / "compare.txt", cfg.echo() + table)
    sys.stdout.write(table)
    return EXIT_METRIC if any(r.errors for r in rows) else EXIT_OK


def cmd_gen_fixture(args, cfg) -> int:
    fx = farm_grid(args.size, args.k, args.seed, gap=args.gap, flip_rate=args.flip_rate)
    out_dir = Path(args.out_dir)
    write_mask(out_dir / "mask.pgm", fx.probability)
    write_mask(out_dir / "reference.pgm", fx.reference)
    write_mask(out_dir / "field.pgm", fx.field)
    if args.tiles:
        tiles = out_dir / "tiles"
        for p in patchify(fx.probability, cfg.window, cfg.stride):
            write_mask(tiles / f"tile_{p.origin_x}_{p.origin_y}.pgm", p.grid)
        atomic_write(tiles / "frame.json",
                     json.dumps({"width": fx.probability.width, "height": fx.probability.height}) + "\n")
    print(f"{out_dir}: {args.size}x{args.size}, {args.k}x{args.k} farms, "
          f"{100 * fx.flipped_fraction:.2f}% pixels flipped")
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser, *, postprocess=False, evaluate=False):
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--out-dir", default=".", help="output directory (default: .)")
    p.add_argument("--window", type=int, help="patch window, px (default 400)")
    p.add_argument("--stride", type=int, help="patch stride, px (default 200)")
    p.add_argument("--agg", choices=["max", "avg", "sum", "hmean"], help="tile aggregation mode")
    p.add_argument("--canny", nargs=3, type=float, metavar=("SIGMA", "LOW", "HIGH"),
                   help="also compute a Canny edge map")
    p.add_argument("--geotransform", nargs=6, type=float, metavar="G",
                   help="affine pixel -> map transform applied to written GeoJSON")
    p.add_argument("--keep-intermediates", action="store_true", default=None)
    p.add_argument("--wkt", action="store_true", default=None, help="also write WKT next to GeoJSON")
    p.add_argument("-v", "--verbose", action="count", default=0)
    if postprocess:
        p.add_argument("--gsd", type=float, help="ground sample distance, m/px")
        p.add_argument("--min-area", type=float, help="minimum parcel area, m^2")
        p.add_argument("--simplify", choices=["pocket", "dp"], help="simplification method")
        p.add_argument("--t", type=float, help="pocket threshold ratio (>= 1)")
        p.add_argument("--epsilon", type=float, help="Douglas-Peucker tolerance, px")
        p.add_argument("--iterate", action="store_true", default=None,
                       help="repeat pocket simplification until it stops changing")
    if evaluate:
        p.add_argument("--buffer", type=int, help="reference buffer width, px")
        p.add_argument("--label", help="method label for reports")


_FLAG_KEYS = {
    "window": "raster.window", "stride": "raster.stride", "agg": "raster.aggregation",
    "gsd": "postprocess.gsd", "min_area": "postprocess.min_area", "simplify": "postprocess.method",
    "t": "postprocess.t", "epsilon": "postprocess.epsilon", "iterate": "postprocess.iterate",
    "buffer": "evaluate.buffer", "label": "evaluate.label",
    "geotransform": "output.geotransform", "keep_intermediates": "output.keep_intermediates",
    "wkt": "output.wkt",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="parcelkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("vectorize", help="probability mask -> polygons GeoJSON")
    p.add_argument("mask", help="mask file (PGM/PNG) or directory of tile_<x>_<y> masks")
    p.add_argument("--out", help="output GeoJSON (default: OUT_DIR/polygons.geojson)")
    _add_common(p)

    p = sub.add_parser("postprocess", help="area filter, nested removal, simplification")
    p.add_argument("geojson")
    p.add_argument("--out", help="output GeoJSON (default: OUT_DIR/parcels.geojson)")
    _add_common(p, postprocess=True)

    p = sub.add_parser("evaluate", help="buffered precision / recall / F-score")
    p.add_argument("geojson")
    p.add_argument("reference", help="1-px reference boundary mask")
    _add_common(p, evaluate=True)

    p = sub.add_parser("pipeline", help="vectorize + postprocess (+ evaluate)")
    p.add_argument("mask")
    p.add_argument("--reference", help="1-px reference boundary mask")
    _add_common(p, postprocess=True, evaluate=True)

    p = sub.add_parser("compare", help="buffer width x method comparison grid")
    p.add_argument("mask")
    p.add_argument("reference")
    p.add_argument("--buffers", default="5,6", help="comma-separated buffer widths (default 5,6)")
    _add_common(p, postprocess=True, evaluate=True)

    p = sub.add_parser("gen-fixture", help="write a synthetic farm-grid test scene")
    p.add_argument("--size", type=int, default=1000)
    p.add_argument("--k", type=int, default=5, help="farms per side")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gap", type=int, default=3, help="strip width between farms, px (odd)")
    p.add_argument("--flip-rate", type=float, default=0.15)
    p.add_argument("--tiles", action="store_true", help="also write window/stride tiles")
    _add_common(p)
    return parser


_COMMANDS = {
    "vectorize": (cmd_vectorize, False, False),
    "postprocess": (cmd_postprocess, True, False),
    "evaluate": (cmd_evaluate, False, True),
    "pipeline": (cmd_pipeline, True, False),
    "compare": (cmd_compare, True, False),
    "gen-fixture": (cmd_gen_fixture, False, False),
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    fn, need_pp, need_eval = _COMMANDS[args.command]
    try:
        flags = {key: getattr(args, attr) for attr, key in _FLAG_KEYS.items() if hasattr(args, attr)}
        if flags.get("raster.aggregation"):
            flags["raster.aggregation"] = {"avg": "average", "hmean": "harmonic_mean"}.get(
                flags["raster.aggregation"], flags["raster.aggregation"])
        if getattr(args, "canny", None):
            flags.update(zip(("canny.sigma", "canny.low", "canny.high"), args.canny))
        if flags.get("output.geotransform"):
            flags["output.geotransform"] = list(flags["output.geotransform"])
        file_values = config_mod.load_file(args.config) if args.config else {}
        if args.command == "compare":
            # both methods run; the method setting itself is irrelevant
            flags["postprocess.method"] = "pocket_based"
        cfg = config_mod.build(config_mod.merge(file_values, flags),
                               need_postprocess=need_pp, need_eval=need_eval)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return fn(args, cfg)
    except StageError as exc:
        print(f"parcelkit: {exc}", file=sys.stderr)
        return _exit_for(exc.cause)
    except (ParameterError, FormatError, UndefinedMetricError, OSError) as exc:
        print(f"parcelkit: {exc}", file=sys.stderr)
        return _exit_for(exc)


def _exit_for(exc: BaseException) -> int:
    if isinstance(exc, UndefinedMetricError):
        return EXIT_METRIC
    if isinstance(exc, (FormatError, OSError)):
        return EXIT_IO
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
