"""
Counting survivors directly
===========================

The escape rate can be checked without any eigenvalue: sum the Gibbs
weights of all words that avoid the hole, or simulate sequences and count
how many are still alive after k steps.
"""
import math

import numpy as np

from escrate import (Potential, Subshift, exhaustive_survival, fit_escape_rate,
                     kac_check, matrix_survival, monte_carlo_survival, perturbed_eigenvalue)

s = Subshift.full(2)
phi = Potential.constant(s, -math.log(2))
hole = [(0, 0)]

###############################################################################
# Three survival curves
# ---------------------
# The exact enumeration and the powers of the normalised perturbed matrix
# agree to rounding; the simulated curve agrees within its error bars.

exact = exhaustive_survival(s, phi, hole, 16)
spectral = matrix_survival(s, phi, hole, 16)
mc = monte_carlo_survival(s, phi, hole, 16, samples=200_000, seed=1)
print("max |exhaustive - matrix| =", np.max(np.abs(exact.survival - spectral)))
print("max MC error in sigmas    =",
      np.max(np.abs(mc.survival - exact.survival) / np.maximum(mc.stderr, 1e-300)))

###############################################################################
# Escape rate from the tail
# -------------------------
# The survivors of this hole form the golden mean shift, whose leading
# eigenvalue is half the golden ratio.

rate, err = fit_escape_rate(exact)
lam_n = perturbed_eigenvalue(s, phi, hole).lambda_n
print(f"fitted rate {rate:.8f} +- {err:.1e}, -log lambda_n = {-math.log(lam_n):.8f}")

###############################################################################
# Mean return time
# ----------------
# Started in the hole, the expected time to come back is one over its mass.

kac = kac_check(s, phi, hole, 30)
print(f"{kac.lhs_low:.8f} <= 1/mu(U) = {kac.rhs:.1f} <= {kac.lhs_high:.8f}")
