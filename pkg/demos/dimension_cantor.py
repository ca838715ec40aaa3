"""
Dimension of the points that never fall in
==========================================

Removing a small hole around ``z = 1/4`` from the Cantor set leaves a
survivor set of slightly smaller Hausdorff dimension. The dimension drop,
divided by the mass of the hole under the measure of maximal dimension,
tends to ``(3/4) / log 3``.
"""
import math
from fractions import Fraction

from escrate import (bowen_root, cantor_map, dimension_sweep, encode_point,
                     standard_hole_family)

###############################################################################
# Dimension of the whole repeller
# -------------------------------
# The dimension is the zero of the pressure of ``-t log|f'|``.

cantor = cantor_map()
s_full = bowen_root(cantor)
print(f"s = {s_full:.12f}, log2/log3 = {math.log(2) / math.log(3):.12f}")

###############################################################################
# Survivor dimensions
# -------------------
# Each survivor dimension is again a pressure zero, now for the system with
# the hole cylinder deleted.

z = encode_point(cantor, Fraction(1, 4), 64)
family = standard_hole_family(cantor.subshift, z, 12)
rows = dimension_sweep(cantor, family, range(2, 13))
for r in rows:
    print(f"n={r.n:2d}  s_n={r.s_n:.8f}  (s - s_n)/mu={r.ratio:.6f}")
print("predicted:", rows[-1].predicted)
