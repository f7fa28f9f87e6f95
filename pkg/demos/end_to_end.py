# The whole chain on a synthetic scene
#
# Mask in, parcels out, scored against the known layout. The same run is
# available from the shell:
#
#   parcelkit gen-fixture --size 1000 --k 5 --seed 0 --out-dir scene
#   parcelkit pipeline scene/mask.pgm --reference scene/reference.pgm \
#       --gsd 1 --min-area 100 --simplify pocket --t 2 --buffer 5 --out-dir run

from parcelkit import (EvalConfig, PostprocessConfig, SimplifyParams, binarize, evaluate_full,
                       extract_polygons, farm_grid, otsu_threshold, run_postprocess)

scene = farm_grid(size=1000, k=5, seed=0)
field = binarize(scene.probability, otsu_threshold(scene.probability).threshold)
traced = extract_polygons(field)
print(len(traced), "rings traced,", sum(len(p) for p in traced), "vertices")

for label, params in (("Douglas-Peucker", SimplifyParams("dp", epsilon=2.0)),
                      ("Pocket-based", SimplifyParams("pocket", t=2.0))):
    parcels, report = run_postprocess(traced, PostprocessConfig(gsd=1.0, min_area=100, simplify=params))
    print("\n" + label)
    print(report.to_text(), end="")
    print(len(parcels), "parcels,", sum(len(p) for p in parcels), "vertices")
    for w in (5, 6):
        rep = evaluate_full(parcels, scene.reference, EvalConfig(w), label)
        print("  %d px buffer: precision %.2f  recall %.2f  F %.2f" % (w, rep.precision, rep.recall, rep.fscore))
