"""Markov interval maps and their symbolic coding.

A :class:`MarkovIntervalMap` is a finite family of closed intervals with a
monotone expanding branch on each, such that every branch image meets the
union of the intervals in a union of whole intervals. The induced subshift
has ``A[i, k] = 1`` iff ``I_k`` lies in ``f(I_i)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DepthCapExceeded, NotInRepeller
from .symbolic import STATE_CAP, Subshift, SymbolicPoint, cylinder_array
from .thermo import Potential, gibbs_array

_TOL = 1e-12


def _number(v):
    if isinstance(v, (Fraction, int)) and not isinstance(v, bool):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    return float(v)


class LinearBranch:
    """``f(x) = slope * x + offset`` on ``interval``."""

    kind = "linear"

    def __init__(self, interval, slope, offset):
        self.interval = tuple(_number(v) for v in interval)
        self.slope = _number(slope)
        self.offset = _number(offset)
        if self.slope == 0:
            raise ValueError("branch slope must be nonzero")

    @property
    def exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in (*self.interval, self.slope, self.offset))

    def __call__(self, x):
        if isinstance(x, Fraction) and self.exact:
            return self.slope * x + self.offset
        return float(self.slope) * x + float(self.offset)

    def deriv(self, x):
        return np.full(np.shape(x), float(self.slope)) if np.ndim(x) else float(self.slope)

    def inverse(self, y):
        return (np.asarray(y, dtype=float) - float(self.offset)) / float(self.slope)

    def to_json(self) -> dict:
        conv = lambda v: str(v) if isinstance(v, Fraction) and v.denominator != 1 else (
            int(v) if isinstance(v, Fraction) else v)
        return {"interval": [conv(v) for v in self.interval], "kind": "linear",
                "slope": conv(self.slope), "offset": conv(self.offset)}


class ExprBranch:
    """Differentiable monotone branch given by a forward map and its derivative.

    ``f`` and ``df`` may be callables or expression strings in ``x``; a
    missing ``df`` is derived symbolically from the string form of ``f``.
    """

    kind = "expr"
    exact = False

    def __init__(self, interval, f, df=None):
        self.interval = tuple(float(v) for v in interval)
        self.f_src = f if isinstance(f, str) else None
        self.df_src = df if isinstance(df, str) else None
        if isinstance(f, str):
            import sympy
            x = sympy.Symbol("x")
            fe = sympy.sympify(f, locals={"x": x})
            dfe = sympy.sympify(df, locals={"x": x}) if isinstance(df, str) else sympy.diff(fe, x)
            if df is None:
                self.df_src = str(dfe)
            self._f = sympy.lambdify(x, fe, "numpy")
            self._df = sympy.lambdify(x, dfe, "numpy")
        else:
            if df is None:
                raise ValueError("a callable branch needs its derivative")
            self._f = f
            self._df = df if not isinstance(df, str) else None
        a, b = self.interval
        self._increasing = float(self._f(b)) > float(self._f(a))

    def __call__(self, x):
        return self._f(float(x)) if np.ndim(x) == 0 else self._f(np.asarray(x, dtype=float))

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        out = np.broadcast_to(np.asarray(self._df(x), dtype=float), x.shape)
        return float(out) if out.ndim == 0 else out.copy()

    def inverse(self, y):
        """Vectorised bisection on the branch interval."""
        y = np.asarray(y, dtype=float)
        a, b = self.interval
        lo = np.full(y.shape, a)
        hi = np.full(y.shape, b)
        sign = 1.0 if self._increasing else -1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = sign * (np.asarray(self._f(mid), dtype=float) - y) < 0
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= 1e-16):
                break
        return 0.5 * (lo + hi)

    def to_json(self) -> dict:
        if self.f_src is None:
            raise ValueError("callable branches cannot be serialised")
        return {"interval": list(self.interval), "kind": "expr", "f": self.f_src,
                "df": self.df_src}


class MarkovIntervalMap:
    """Piecewise monotone expanding map with a Markov partition.

    Parameters
    ----------
    branches : list of LinearBranch or ExprBranch
        One branch per partition interval, intervals ordered left to right
        with disjoint interiors.
    labels : sequence of str, optional
        Symbol names for the induced subshift.
    """

    def __init__(self, branches: Sequence, labels: Sequence[str] | None = None):
        if not branches:
            raise ValueError("need at least one branch")
        self.branches = tuple(branches)
        iv = [(float(b.interval[0]), float(b.interval[1])) for b in self.branches]
        for a, b in iv:
            if not (0.0 <= a < b <= 1.0):
                raise ValueError(f"branch interval [{a}, {b}] not inside [0, 1]")
        order = sorted(range(len(iv)), key=lambda i: iv[i][0])
        if order != list(range(len(iv))):
            raise ValueError("branch intervals must be listed left to right")
        for (a0, b0), (a1, b1) in zip(iv, iv[1:]):
            if a1 < b0 - _TOL:
                raise ValueError("branch intervals overlap")
        self._intervals = np.array(iv)
        l = len(iv)
        trans = np.zeros((l, l), dtype=int)
        for i, br in enumerate(self.branches):
            ya, yb = float(br(iv[i][0])), float(br(iv[i][1]))
            lo, hi = min(ya, yb), max(ya, yb)
            for k, (a, b) in enumerate(iv):
                overlap = min(hi, b) - max(lo, a)
                if overlap >= (b - a) - 1e-9:
                    trans[i, k] = 1
                elif overlap > 1e-9:
                    raise ValueError(f"branch {i} image [{lo}, {hi}] is not a union of "
                                     "partition intervals")
        self.subshift = Subshift(trans, labels)

    @property
    def intervals(self) -> np.ndarray:
        return self._intervals

    @property
    def exact(self) -> bool:
        return all(getattr(b, "exact", False) for b in self.branches)

    def __call__(self, x):
        return self.branches[self.branch_of(x)](x)

    def branch_of(self, x) -> int:
        xf = float(x)
        for i, (a, b) in enumerate(self._intervals):
            if a - _TOL <= xf <= b + _TOL:
                if isinstance(x, Fraction) and self.branches[i].exact:
                    lo, hi = self.branches[i].interval
                    if not lo <= x <= hi:
                        continue
                return i
        raise NotInRepeller(f"{x} lies outside the partition intervals")

    def to_json(self) -> dict:
        out = {"branches": [b.to_json() for b in self.branches]}
        if self.subshift.labels != tuple(str(i) for i in range(len(self.branches))):
            out["labels"] = list(self.subshift.labels)
        return out

    @classmethod
    def from_json(cls, data) -> "MarkovIntervalMap":
        if isinstance(data, str):
            data = json.loads(data)
        branches = []
        for b in data["branches"]:
            kind = b.get("kind", "linear")
            if kind == "linear":
                branches.append(LinearBranch(b["interval"], b["slope"], b["offset"]))
            elif kind == "expr":
                branches.append(ExprBranch(b["interval"], b["f"], b.get("df")))
            else:
                raise ValueError(f"unknown branch kind {kind!r}")
        return cls(branches, data.get("labels"))


def cantor_map() -> MarkovIntervalMap:
    """``3x mod 1`` on ``[0, 1/3]`` and ``[2/3, 1]``; labels are ternary digits."""
    third = Fraction(1, 3)
    return MarkovIntervalMap([LinearBranch((0, third), 3, 0),
                              LinearBranch((2 * third, 1), 3, -2)], labels=("0", "2"))


def doubling_map() -> MarkovIntervalMap:
    half = Fraction(1, 2)
    return MarkovIntervalMap([LinearBranch((0, half), 2, 0), LinearBranch((half, 1), 2, -1)])


def quadratic_toy_map() -> MarkovIntervalMap:
    """Two full branches, the left one ``3.3x - 2x^2`` on ``[0, 0.4]``
    (derivative from 3.3 down to 1.7), the right one linear on ``[0.6, 1]``."""
    return MarkovIntervalMap([ExprBranch((0.0, 0.4), "3.3*x - 2*x**2", "3.3 - 4*x"),
                              LinearBranch((0.6, 1.0), 2.5, -1.5)])


@lru_cache(maxsize=32)
def _cylinder_intervals(m: MarkovIntervalMap, k: int):
    if k == 1:
        iv = m.intervals
        return iv[:, 0].copy(), iv[:, 1].copy()
    left, right = _cylinder_intervals(m, k - 1)
    prev = cylinder_array(m.subshift, k - 1, cap=math.inf)
    ls, rs = [], []
    for a, br in enumerate(m.branches):
        sel = np.flatnonzero(m.subshift.transition[a, prev[:, 0]])
        x0 = br.inverse(left[sel])
        x1 = br.inverse(right[sel])
        ls.append(np.minimum(x0, x1))
        rs.append(np.maximum(x0, x1))
    return np.concatenate(ls), np.concatenate(rs)


def cylinder_intervals(m: MarkovIntervalMap, k: int, cap: int = STATE_CAP):
    """Intervals of all admissible ``k``-words, as ``(words, left, right)``
    arrays in lexicographic word order."""
    words = cylinder_array(m.subshift, k, cap)
    left, right = _cylinder_intervals(m, k)
    return words, left, right


def cylinder_interval(m: MarkovIntervalMap, w: Sequence[int]) -> tuple:
    """Closed interval of points whose first ``len(w)`` partition addresses are ``w``."""
    w = tuple(w)
    if not w or not m.subshift.is_admissible(w):
        raise ValueError(f"word {w} is not admissible")
    lo, hi = m.intervals[w[-1]]
    for a in reversed(w[:-1]):
        x0, x1 = m.branches[a].inverse(lo), m.branches[a].inverse(hi)
        lo, hi = min(x0, x1), max(x0, x1)
    return float(lo), float(hi)


def encode_point(m: MarkovIntervalMap, x, digits: int) -> SymbolicPoint:
    """Symbolic address of ``x``.

    With rational data on linear branches the orbit is followed exactly and a
    repeated orbit point yields the exact eventually periodic coding;
    otherwise the first ``digits`` symbols are returned as a non-periodic
    prefix.

    Raises
    ------
    NotInRepeller
        If the orbit leaves the partition within ``digits`` steps.
    """
    exact = m.exact and isinstance(x, (Fraction, int, float, str)) and not isinstance(x, bool)
    if exact:
        x = Fraction(x)
    seen = {}
    out = []
    for step in range(digits):
        if exact:
            if x in seen:
                j = seen[x]
                return SymbolicPoint(tuple(out[:j]), tuple(out[j:]))
            seen[x] = step
        i = m.branch_of(x)
        out.append(i)
        x = m.branches[i](x)
    if exact and x in seen:
        j = seen[x]
        return SymbolicPoint(tuple(out[:j]), tuple(out[j:]))
    return SymbolicPoint.from_prefix(out)


@dataclass
class BallApproximation:
    """Inner and outer cylinder approximations of ``B(center, epsilon)``.

    ``inner`` cylinders lie inside the ball and ``outer`` cylinders cover its
    part of the repeller; ``eta`` is ``(mu(outer) - mu(inner)) / mu(outer)``.
    """

    center: float
    epsilon: float
    depth: int
    inner: tuple
    outer: tuple
    mu_inner: float
    mu_outer: float
    eta: float

    def to_json(self, subshift: Subshift | None = None) -> dict:
        fmt = (lambda w: subshift.format_word(w)) if subshift else (lambda w: list(w))
        return {"center": float(self.center), "epsilon": self.epsilon, "depth": self.depth,
                "inner": [fmt(w) for w in self.inner], "outer": [fmt(w) for w in self.outer],
                "mu_inner": self.mu_inner, "mu_outer": self.mu_outer, "eta": self.eta}


def ball_to_cylinders(m: MarkovIntervalMap, z, eps: float, eta: float,
                      potential: Potential | None = None,
                      cap: int = STATE_CAP) -> BallApproximation:
    """Sandwich ``B(z, eps)`` between unions of cylinders of a common depth.

    The depth is the least ``k`` such that every ``k``-cylinder containing a
    point of the sphere ``{z - eps, z + eps}`` is shorter than ``eta * eps``.
    Measures are those of the equilibrium state of ``potential`` (the zero
    potential, i.e. the maximal-entropy measure, by default).

    Raises
    ------
    DepthCapExceeded
        If ``eta <= 0`` or the depth would exceed the state cap.
    """
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    encode_point(m, z, 64)
    s = m.subshift
    if eta <= 0:
        raise DepthCapExceeded("a ball is not a finite union of cylinders; eta must be > 0",
                               best_eta=None)
    zf = float(z)
    lo, hi = zf - eps, zf + eps
    if potential is None:
        potential = Potential.constant(s, 0.0)
    best = None
    k = 1
    while s.alphabet_size ** k <= cap:
        words, left, right = cylinder_intervals(m, k, cap)
        meets = (right > lo) & (left < hi)
        inside = (left > lo) & (right < hi)
        sphere = ((left <= lo) & (lo <= right)) | ((left <= hi) & (hi <= right))
        if not sphere.any() or np.all((right - left)[sphere] < eta * eps):
            inner = tuple(tuple(int(x) for x in w) for w in words[inside])
            outer = tuple(tuple(int(x) for x in w) for w in words[meets])
            _, mu = gibbs_array(s, potential, k)
            mu_in = float(mu[inside].sum())
            mu_out = float(mu[meets].sum())
            slack = (mu_out - mu_in) / mu_out if mu_out > 0 else 0.0
            return BallApproximation(z, float(eps), k, inner, outer, mu_in, mu_out, slack)
        best = k
        k += 1
    raise DepthCapExceeded(f"no depth up to {best} meets eta={eta}", best_eta=None, depth=best)


@lru_cache(maxsize=32)
def log_derivative_potential(m: MarkovIntervalMap, depth: int) -> Potential:
    """``log|f'|`` sampled at the left endpoint of every ``depth``-cylinder.

    The ``oscillation`` attribute is the largest spread of ``log|f'|`` over a
    cylinder (sampled at five points per cylinder).
    """
    words, left, right = cylinder_intervals(m, depth)
    first = words[:, 0]
    vals = np.empty(len(words))
    osc = 0.0
    ts = np.linspace(0.0, 1.0, 5)
    for i, br in enumerate(m.branches):
        sel = first == i
        if not sel.any():
            continue
        vals[sel] = np.log(np.abs(br.deriv(left[sel])))
        if br.kind != "linear":
            pts = left[sel][:, None] + ts[None, :] * (right[sel] - left[sel])[:, None]
            samples = np.log(np.abs(br.deriv(pts)))
            osc = max(osc, float(np.max(samples.max(axis=1) - samples.min(axis=1))))
    return Potential(m.subshift, depth, vals, oscillation=osc)


def log_deriv_potential(m: MarkovIntervalMap, t: float, depth: int = 1) -> Potential:
    """Geometric potential ``-t log|f'|`` sampled on ``depth``-cylinders."""
    return log_derivative_potential(m, depth).scaled(-t)


@lru_cache(maxsize=32)
def expansion_report(m: MarkovIntervalMap, max_n0: int = 8) -> dict:
    """Infimum of ``|f'|`` and the least ``n0`` with ``|(f^n0)'| > 1``.

    Both are estimated on the endpoints and midpoints of ``n0``-cylinders.
    """
    l = m.subshift.alphabet_size
    max_n0 = min(max_n0, int(math.log(STATE_CAP) / math.log(max(2, l))))
    min_deriv = math.inf
    found = None
    for n0 in range(1, max_n0 + 1):
        words, left, right = cylinder_intervals(m, n0)
        x = np.stack([left, 0.5 * (left + right), right], axis=1)
        logd = np.zeros_like(x)
        for j in range(n0):
            for i, br in enumerate(m.branches):
                sel = words[:, j] == i
                if not sel.any():
                    continue
                d = np.abs(br.deriv(x[sel]))
                if j == 0:
                    min_deriv = min(min_deriv, float(d.min()))
                logd[sel] += np.log(d)
                x[sel] = br(x[sel])
        worst = float(logd.min())
        if worst > 0:
            found = (n0, float(np.exp(worst)))
            break
    return {"min_derivative": min_deriv,
            "n0": found[0] if found else None,
            "expansion": found[1] if found else None}
