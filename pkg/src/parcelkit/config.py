"""Pipeline configuration: TOML file + command-line overrides.

File layout (every section optional)::

    [raster]
    window = 400
    stride = 200
    aggregation = "average"      # max | average | sum | harmonic_mean

    [canny]                      # edge map is produced only when this is set
    sigma = 1.0
    low = 0.1
    high = 0.3

    [postprocess]
    gsd = 0.5                    # m / px
    min_area = 100               # m^2
    method = "pocket"            # pocket | dp
    t = 2.0
    epsilon = 2.0
    iterate = false

    [evaluate]
    buffer = 5
    label = "pocket t=2"

    [output]
    geotransform = [0, 1, 0, 0, 0, 1]
    keep_intermediates = false
    wkt = false

Only window and stride have defaults; everything else must be given
explicitly when the stage that needs it runs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ParameterError
from .evaluate import EvalConfig
from .postprocess import PostprocessConfig, SimplifyParams
from .raster import AggregationMode

DEFAULTS = {
    "raster.window": 400,
    "raster.stride": 200,
    "raster.aggregation": "average",
}

KNOWN = set(DEFAULTS) | {
    "canny.sigma", "canny.low", "canny.high",
    "postprocess.gsd", "postprocess.min_area", "postprocess.method",
    "postprocess.t", "postprocess.epsilon", "postprocess.iterate",
    "evaluate.buffer", "evaluate.label",
    "output.geotransform", "output.keep_intermediates", "output.wkt",
}


def load_file(path: str | os.PathLike) -> dict[str, Any]:
    """Flatten a TOML config into ``{"section.key": value}``."""
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ParameterError(f"{path}: {exc}") from None
    flat = {}
    for section, body in doc.items():
        if not isinstance(body, dict):
            raise ParameterError(f"{path}: top-level key {section!r} must be a [section]")
        for key, value in body.items():
            name = f"{section}.{key}"
            if name not in KNOWN:
                raise ParameterError(f"{path}: unknown setting {name}")
            flat[name] = value
    return flat


def merge(file_values: dict[str, Any], flag_values: dict[str, Any]) -> dict[str, Any]:
    """Defaults < file < flags; ``None`` flags mean "not given"."""
    out = dict(DEFAULTS)
    out.update(file_values)
    out.update({k: v for k, v in flag_values.items() if v is not None})
    return out


@dataclass
class PipelineConfig:
    window: int = 400
    stride: int = 200
    aggregation: AggregationMode = AggregationMode.AVERAGE
    canny: tuple[float, float, float] | None = None
    postprocess: PostprocessConfig | None = None
    eval: EvalConfig | None = None
    label: str = ""
    geotransform: tuple[float, ...] | None = None
    keep_intermediates: bool = False
    wkt: bool = False
    values: dict[str, Any] = field(default_factory=dict, repr=False)

    def echo(self) -> str:
        """The effective settings as ``key = value`` lines, sorted."""
        return "".join(f"# {k} = {self.values[k]!r}\n" for k in sorted(self.values))


def _num(values, key, kind=float):
    try:
        return kind(values[key])
    except (TypeError, ValueError):
        raise ParameterError(f"{key} must be a number, got {values[key]!r}") from None


def build(values: dict[str, Any], *, need_postprocess: bool = False,
          need_eval: bool = False) -> PipelineConfig:
    """Validate merged settings into a :class:`PipelineConfig`.

    ``need_*`` make the corresponding section mandatory; otherwise it is
    built only if any of its keys is present.
    """
    cfg = PipelineConfig(values=dict(values))
    cfg.window = _num(values, "raster.window", int)
    cfg.stride = _num(values, "raster.stride", int)
    if cfg.window <= 0 or not 0 < cfg.stride <= cfg.window:
        raise ParameterError(f"need window > 0 and 0 < stride <= window, got {cfg.window}/{cfg.stride}")
    cfg.aggregation = AggregationMode.parse(str(values["raster.aggregation"]))

    canny_keys = ("canny.sigma", "canny.low", "canny.high")
    if any(k in values for k in canny_keys):
        missing = [k for k in canny_keys if k not in values]
        if missing:
            raise ParameterError(f"canny settings incomplete, missing {', '.join(missing)}")
        cfg.canny = tuple(_num(values, k) for k in canny_keys)

    pp_keys = [k for k in values if k.startswith("postprocess.")]
    if need_postprocess or pp_keys:
        for k in ("postprocess.gsd", "postprocess.min_area", "postprocess.method"):
            if k not in values:
                raise ParameterError(f"missing required setting {k}")
        method = str(values["postprocess.method"])
        t = _num(values, "postprocess.t") if "postprocess.t" in values else None
        eps = _num(values, "postprocess.epsilon") if "postprocess.epsilon" in values else None
        params = SimplifyParams(method, t=t, epsilon=eps,
                                iterate=bool(values.get("postprocess.iterate", False)))
        cfg.postprocess = PostprocessConfig(_num(values, "postprocess.gsd"),
                                            _num(values, "postprocess.min_area"), params)

    if need_eval or "evaluate.buffer" in values:
        if "evaluate.buffer" not in values:
            raise ParameterError("missing required setting evaluate.buffer")
        cfg.eval = EvalConfig(_num(values, "evaluate.buffer", int))
    cfg.label = str(values.get("evaluate.label", ""))

    gt = values.get("output.geotransform")
    if gt is not None:
        if isinstance(gt, str):
            gt = [p for p in gt.replace(",", " ").split() if p]
        if len(gt) != 6:
            raise ParameterError("output.geotransform needs 6 numbers")
        try:
            cfg.geotransform = tuple(float(g) for g in gt)
        except ValueError:
            raise ParameterError("output.geotransform needs 6 numbers") from None
    cfg.keep_intermediates = bool(values.get("output.keep_intermediates", False))
    cfg.wkt = bool(values.get("output.wkt", False))
    return cfg
