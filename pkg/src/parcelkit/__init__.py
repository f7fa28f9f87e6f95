"""Cadastral parcel polygons from field-probability masks.

Raster stages (:mod:`.raster`), tracing (:mod:`.vectorize`), geometry and
pocket-based simplification (:mod:`.geometry`), polygon-set clean-up
(:mod:`.postprocess`) and buffered boundary evaluation (:mod:`.evaluate`).
"""

from .errors import (CoverageWarning, DegenerateInputError, DegenerateOutputError, FormatError,
                     ParameterError, ParcelError, UndefinedMetricError)
from .evaluate import (ConfusionCounts, EvalConfig, EvalReport, buffer_reference, confusion,
                       evaluate_full, fscore, precision, rasterize_boundaries, recall)
from .fixtures import FarmFixture, farm_grid
from .geometry import (Location, Pocket, area, convex_hull, douglas_peucker, find_pockets,
                       perimeter, pocket_simplify, point_in_polygon, signed_area)
from .postprocess import (PostprocessConfig, SimplifyParams, area_filter, nested_filter,
                          run_postprocess, simplify_all)
from .raster import (AggregationMode, Patch, RasterGrid, aggregate_patches, binarize,
                     canny_edges, dilate, otsu_threshold, patchify)
from .vectorize import Polygon, extract_polygons

__version__ = "0.1.0"
