# Simplifying a ragged field edge
#
# Traced boundaries follow every stair step of the pixels. Two ways of tidying
# them are compared: pocket replacement, which only ever cuts concave notches
# off towards the convex hull, and Douglas-Peucker, which drops vertices that
# lie close to a coarser outline.

import math

from parcelkit import Polygon, douglas_peucker, find_pockets, pocket_simplify
from parcelkit.geometry import area, convex_hull, perimeter

# An L-shape has exactly one pocket: the notch at (1, 1).

L = Polygon(((0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)))
(pocket,) = find_pockets(L)
print("pocket chord %.4f, boundary path %.4f" % (pocket.chord_length, pocket.path_length))

# The notch is filled when the path is shorter than t times the chord.

for t in (1.2, 1.5):
    out = pocket_simplify(L, t)
    print("t=%.1f ->" % t, out.vertices)

# A farm edge with small noise: a long straight side with three bumps inward.

side = [(0, 0), (60, 0), (60, 40), (44, 40), (43, 38), (42, 40), (25, 40), (24, 39),
        (22, 39), (21, 40), (9, 40), (8, 37), (7, 40), (0, 40)]
farm = Polygon(tuple(side))
print("\ninput: %d vertices, area %g, perimeter %.2f" % (len(farm), area(farm), perimeter(farm)))

for t in (1.01, 1.1, 2.0, math.inf):
    out = pocket_simplify(farm, t)
    print("pocket t=%-5s %2d vertices, area %g" % (t, len(out), area(out)))

for eps in (0.5, 1.5, 3.0):
    out = douglas_peucker(farm, eps)
    print("DP eps=%-4s    %2d vertices, area %g" % (eps, len(out), area(out)))

# Pocket replacement never leaves the hull and never shrinks the parcel.

print("\nhull area", area(convex_hull(farm)))
