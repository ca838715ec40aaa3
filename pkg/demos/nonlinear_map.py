"""
A non-linear Markov map
=======================

For a map with non-constant derivative the geometric potential
``-t log|f'|`` is only approximated by a locally constant one. The
approximation error shrinks with the cylinder depth and is reported as an
oscillation diagnostic.
"""
from escrate import (bowen_root, log_derivative_potential, lyapunov_derivative,
                     quadratic_toy_map)

toy = quadratic_toy_map()

###############################################################################
# Refining the potential
# ----------------------
# The root of the Bowen equation settles down as the depth grows while the
# oscillation of ``log|f'|`` on cylinders decays geometrically.

for depth in (2, 4, 6, 8, 10):
    base = log_derivative_potential(toy, depth)
    t = bowen_root(toy, base=base)
    print(f"depth {depth:2d}: t* = {t:.8f}  oscillation = {base.oscillation:.2e}")

###############################################################################
# Derivative of the leading eigenvalue
# ------------------------------------
# The derivative in ``t`` is minus the eigenvalue times the Lyapunov
# exponent of the equilibrium state, here checked against a finite
# difference.

base = log_derivative_potential(toy, 8)
h = 1e-5
for t in (0.3, 0.76, 1.2):
    lam, dlam, lyap = lyapunov_derivative(toy.subshift, base, t)
    fd = (lyapunov_derivative(toy.subshift, base, t + h)[0]
          - lyapunov_derivative(toy.subshift, base, t - h)[0]) / (2 * h)
    print(f"t={t}: lambda'={dlam:.10f}  finite difference={fd:.10f}  lyapunov={lyap:.6f}")
