# Scoring boundaries against a buffered reference
#
# A predicted outline rarely lands on the exact pixel of a hand-drawn 1 px
# reference line. The reference is therefore thickened to a buffer of w pixels
# before counting. Recall is multiplied back by w, which is why it can climb
# above 100 when the prediction covers more than the plain line.

import numpy as np

from parcelkit import EvalConfig, Polygon, RasterGrid, evaluate_full
from parcelkit.evaluate import buffer_reference, fscore, rasterize_boundaries

ref = np.zeros((40, 40), np.uint8)
ref[10, 10:31] = ref[30, 10:31] = ref[10:31, 10] = ref[10:31, 30] = 1
ref = RasterGrid(ref, "binary")

# A prediction shifted one pixel down and right of the truth.

pred = [Polygon(((11, 11), (31, 11), (31, 31), (11, 31)), "shifted")]
print("predicted boundary pixels:", rasterize_boundaries(pred, 40, 40).count())

for w in (1, 3, 5, 6):
    print("width %d: buffered reference %3d px" % (w, buffer_reference(ref, w).count()), end="  ")
    rep = evaluate_full(pred, ref, EvalConfig(w), "shifted")
    print("P=%6.2f R=%6.2f F=%6.2f%s" % (rep.precision, rep.recall, rep.fscore,
                                        "  (recall above 100)" if rep.recall_over_100 else ""))

# The F-score is the plain harmonic mean. The published precision/recall pairs
# reproduce their F column:

for p, r in ((60, 85), (67, 87), (66, 95), (72, 95)):
    print("P=%d R=%d -> F=%.2f" % (p, r, fscore(p, r)))
