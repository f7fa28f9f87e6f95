# From a probability mask to field polygons
#
# A segmentation network sees a large scene one window at a time. Here a
# synthetic 600 x 600 scene stands in for its output: 4 x 4 rectangular farms
# separated by thin strips, with noise near every strip.

import numpy as np

from parcelkit import (aggregate_patches, binarize, extract_polygons, farm_grid, otsu_threshold,
                       patchify)
from parcelkit.geometry import area

scene = farm_grid(size=600, k=4, seed=3)
prob = scene.probability
print("mask", prob.shape, "values in", prob.values.min(), "..", prob.values.max())
print("flipped pixels: %.2f %%" % (100 * scene.flipped_fraction))

# Cut into 400 px windows every 200 px, as the network would see it.

patches = patchify(prob, window=400, stride=200)
print(len(patches), "patches at", sorted({(p.origin_x, p.origin_y) for p in patches}))

# Put the pieces back. The patches are exact copies of the scene, so max,
# average and harmonic mean return it unchanged. Sum adds the overlaps up and
# clips at 1, which is why it drifts.

for mode in ("max", "average", "sum", "harmonic_mean"):
    back = aggregate_patches(patches, prob.width, prob.height, mode)
    print("%-14s max abs diff to the original: %g" % (mode, np.abs(back.values - prob.values).max()))

# Otsu picks the threshold between the two populations of the histogram.

otsu = otsu_threshold(prob)
field = binarize(prob, otsu.threshold)
print("Otsu threshold %.4f (bin %d), %d field pixels" % (otsu.threshold, otsu.bin_index, field.count()))

# Each 4-connected field region becomes one ring on the pixel-corner lattice.

polys = extract_polygons(field)
sizes = sorted((area(p) for p in polys), reverse=True)
print(len(polys), "rings traced;", "largest areas:", sizes[:4], "smallest:", sizes[-3:])
print("farm 0 has", len(polys[0]), "vertices, starting", polys[0].vertices[:4])
