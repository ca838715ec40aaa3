"""
How much entropy does a hole remove?
====================================

With the maximal-entropy measure the pressure of the survivor system is its
topological entropy. Around a fixed point the entropy drop per unit hole
mass tends to ``1 - 2**-p`` for a centre of prime period p on the full
2-shift, and to 1 around a point that is not periodic.
"""
import math

from escrate import (Potential, Subshift, SymbolicPoint, champernowne_digits,
                     pressure_gap_ratio, standard_hole_family)

s = Subshift.full(2)
zero = Potential.constant(s, 0.0)

centres = {
    "0^inf": SymbolicPoint.periodic((1,)),
    "(01)^inf": SymbolicPoint.periodic((0, 1)),
    "(001)^inf": SymbolicPoint.periodic((0, 0, 1)),
    "Champernowne": SymbolicPoint.from_prefix(champernowne_digits(64)),
}

for name, z in centres.items():
    family = standard_hole_family(s, z, 14)
    ratios = [pressure_gap_ratio(s, zero, family, n) for n in (6, 10, 14)]
    print(f"{name:>13}: " + "  ".join(f"{r:.5f}" for r in ratios))

print("expected:", [1 - 2.0 ** -p for p in (1, 2, 3)] + [1.0])
