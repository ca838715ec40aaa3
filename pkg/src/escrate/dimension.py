"""Hausdorff dimension of repellers and of their survivor sets.

The dimension ``t*`` solves ``P(-t log|f'|) = 0``; with a hole the pressure is
that of the survivor system. Both are found from the Perron root ``lambda_t``
of the transfer matrix of ``-t log|f'|``, whose derivative in ``t`` is
``-lambda_t`` times the Lyapunov exponent of the corresponding equilibrium
state.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import NoRoot
from .geometry import MarkovIntervalMap, expansion_report, log_derivative_potential
from .holes import (HoleFamily, _map, predicted_limit, survivor_eigentriple,
                    survivor_spectrum)
from .symbolic import Subshift, Word
from .thermo import Potential, TransferMatrix, build_transfer_matrix, measure_of

ROOT_TOL = 1e-10
BISECT_WIDTH = 1e-4
MAX_NEWTON = 50


class _Family:
    """Transfer matrices of ``-t * base`` for all ``t`` on a fixed pattern."""

    def __init__(self, s: Subshift, base: Potential, hole: Iterable[Word] = (),
                 depth: int | None = None):
        hole = [tuple(w) for w in hole]
        n = max([depth or 1, base.depth] + [len(w) for w in hole])
        self.M1 = build_transfer_matrix(s, base.scaled(-1.0), n)
        self.logdata = np.log(self.M1.matrix.data)
        self.hole = hole
        self.base = base
        l = s.alphabet_size
        self.base_values = base.table[self.M1.codes // l ** (n - base.depth)]

    def matrix(self, t: float) -> TransferMatrix:
        m = self.M1.matrix.copy()
        m.data = np.exp(t * self.logdata)
        return dataclasses.replace(self.M1, matrix=m)

    def lam(self, t: float) -> float:
        return survivor_spectrum(self.matrix(t), self.hole).lambda_n

    def derivative(self, t: float):
        info, right, left = survivor_eigentriple(self.matrix(t), self.hole)
        if info.empty:
            return 0.0, 0.0, math.nan
        mu = left * right
        mu = mu / mu.sum()
        integral = float(np.dot(mu, self.base_values))
        return info.lambda_n, -info.lambda_n * integral, integral


def lyapunov_derivative(s: Subshift, base: Potential, t: float,
                        hole: Iterable[Word] = (), depth: int | None = None):
    """``(lambda_t, lambda_t', integral of log|f'|)`` for the potential
    ``-t * base``.

    ``base`` holds ``log|f'|`` on cylinders. The derivative uses
    ``lambda' = -lambda * sum_c mu_t(c) base(c)`` with ``mu_t`` the
    equilibrium state of the (possibly holed) system.
    """
    return _Family(s, base, hole, depth).derivative(t)


def _bowen_root(fam: _Family) -> float:
    lam0 = fam.lam(0.0)
    if lam0 < 1.0 and abs(math.log(lam0) if lam0 > 0 else -math.inf) > ROOT_TOL:
        raise NoRoot(f"lambda_0 = {lam0:.6g} < 1: the survivor set is too small for a root")
    if abs(math.log(lam0)) <= ROOT_TOL:
        return 0.0
    lo, hi = 0.0, 1.0
    while fam.lam(hi) >= 1.0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e6:
            raise NoRoot("pressure does not become negative; map is not expanding")
    while hi - lo > BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        if fam.lam(mid) >= 1.0:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    for _ in range(MAX_NEWTON):
        lam, dlam, integral = fam.derivative(t)
        g = math.log(lam)
        if abs(g) <= ROOT_TOL * 1e-2:
            return t
        if g > 0:
            lo = max(lo, t)
        else:
            hi = min(hi, t)
        step = t + g / integral if integral > 0 else math.nan
        if not lo <= step <= hi:
            step = 0.5 * (lo + hi)
        if step == t:
            break
        t = step
    if abs(math.log(fam.lam(t))) > ROOT_TOL:
        raise NoRoot(f"root finder stalled at t={t} (log lambda {math.log(fam.lam(t)):.3e})")
    return t


def _require_expanding(m: MarkovIntervalMap):
    if expansion_report(m)["n0"] is None:
        raise NoRoot("map is not expanding: no iterate has derivative above 1")


def bowen_root(m: MarkovIntervalMap, depth: int = 1, hole: Iterable[Word] = (),
               base: Potential | None = None) -> float:
    """Root ``t*`` of ``log lambda_t = 0`` for ``-t log|f'|``, optionally with a hole.

    Parameters
    ----------
    m : MarkovIntervalMap
    depth : int
        Cylinder depth on which ``log|f'|`` is sampled.
    hole : iterable of words
        Cylinders removed from the system.
    base : Potential, optional
        Precomputed ``log|f'|`` table, overriding ``depth``.

    Raises
    ------
    NoRoot
        If ``lambda_0 < 1`` or the pressure never becomes negative.
    """
    _require_expanding(m)
    base = base if base is not None else log_derivative_potential(m, depth)
    return _bowen_root(_Family(m.subshift, base, hole))


def second_difference(s: Subshift, base: Potential, t: float, h: float = 1e-3,
                      hole: Iterable[Word] = ()) -> float:
    """Central second difference of ``lambda_t``: a finite-difference
    stand-in for ``lambda''``."""
    fam = _Family(s, base, hole)
    return (fam.lam(t + h) - 2 * fam.lam(t) + fam.lam(t - h)) / h ** 2


@dataclass
class DimensionResult:
    """One row of a dimension sweep."""

    n: int
    len_n: int
    mu_hole: float
    s: float
    s_n: float
    ratio: float
    predicted: float
    lyapunov: float
    oscillation: float
    mixing: bool = True

    @property
    def deviation(self) -> float:
        return abs(self.ratio - self.predicted)


DIMENSION_COLUMNS = ("n", "mu_hole", "s", "s_n", "ratio", "predicted", "deviation",
                     "lyapunov", "oscillation_diagnostic")


def write_dimension_csv(rows: Sequence[DimensionResult], fh=None) -> str:
    lines = [",".join(DIMENSION_COLUMNS)]
    for r in rows:
        vals = (r.n, r.mu_hole, r.s, r.s_n, r.ratio, r.predicted, r.deviation,
                r.lyapunov, r.oscillation)
        lines.append(",".join(repr(float(v)) if isinstance(v, float) else str(v) for v in vals))
    text = "\n".join(lines) + "\n"
    if fh is not None:
        fh.write(text)
    return text


def dimension_sweep(m: MarkovIntervalMap, family: HoleFamily, n_range: Iterable[int],
                    potential_depth: int | None = None, workers: int = 1) -> list:
    """Dimensions ``s_n`` of the survivor sets of a hole family.

    ``mu`` is the equilibrium state of ``-s log|f'|`` and the prediction is
    ``d(z) / integral log|f'| dmu``. ``potential_depth`` defaults to 1 for
    piecewise-linear maps and to the hole depth otherwise.
    """
    _require_expanding(m)
    s_ = m.subshift
    linear = all(b.kind == "linear" for b in m.branches)
    ns = list(n_range)
    if not ns:
        raise ValueError("empty n range")

    full = {}

    def unholed(k):
        if k not in full:
            base = log_derivative_potential(m, k)
            fam0 = _Family(s_, base)
            s_full = _bowen_root(fam0)
            full[k] = (base, s_full, fam0.derivative(s_full)[2])
        return full[k]

    def row(n):
        hole = family.hole(n)
        k = potential_depth or (1 if linear else max(len(w) for w in hole))
        base, s_full, lyap = unholed(k)
        phi = base.scaled(-s_full)
        mu = measure_of(hole, s_, phi)
        d = predicted_limit(s_, phi, family.center, P=0.0)
        fam = _Family(s_, base, hole)
        s_n = _bowen_root(fam)
        mixing = survivor_spectrum(fam.matrix(s_n), hole).mixing
        ratio = (s_full - s_n) / mu if mu > 0 else math.nan
        return DimensionResult(n, family.length(n), mu, s_full, s_n, ratio,
                               d / lyap, lyap, base.oscillation, mixing)

    return _map(row, ns, workers)
