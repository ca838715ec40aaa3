"""
Escape through a shrinking hole in the middle-thirds Cantor set
===============================================================

The map ``x -> 3x mod 1`` restricted to the Cantor set, with the
uniform (Bernoulli 1/2) measure, loses mass through a hole at ``z = 1/4``.
The point 1/4 has ternary expansion ``0.020202...``, so it is periodic
with period 2 and the escape rate divided by the measure of the hole should
approach ``1 - 1/2**2 = 3/4`` as the hole shrinks.
"""
import math
from fractions import Fraction

from escrate import (Potential, cantor_map, encode_point, escape_sweep,
                     standard_hole_family)

###############################################################################
# Encode the centre
# -----------------
# The geometric point is turned into a symbol sequence by iterating the map
# in exact rational arithmetic. A repeated orbit point gives the period.

cantor = cantor_map()
z = encode_point(cantor, Fraction(1, 4), 64)
print("itinerary of 1/4:", z)

###############################################################################
# Holes and potential
# -------------------
# The n-th hole is the cylinder of the first n symbols of z. The potential
# ``-log 2`` gives every n-cylinder mass ``2**-n``.

s = cantor.subshift
phi = Potential.constant(s, -math.log(2))
family = standard_hole_family(s, z, 14)

###############################################################################
# Sweep
# -----
# ``ratio`` is the escape rate over the hole measure and ``gap_ratio`` the
# same limit read off the eigenvalue drop.

sweep = escape_sweep(s, phi, family, range(2, 15))
print(f"{'n':>3} {'mu(U_n)':>12} {'ratio':>10} {'gap form':>10}")
for r in sweep.rows:
    print(f"{r.n:3d} {r.mu_hole:12.4e} {r.ratio:10.6f} {r.gap_ratio:10.6f}")

print("predicted limit:", sweep.report["predicted"])
print("final deviation:", sweep.report["deviation"])
