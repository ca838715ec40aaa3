"""Holes, perturbed transfer matrices and escape rates.

A hole is a finite union of cylinders, all of one length. The perturbed
operator ``L_n w = L(1_{U^c} w)`` is the transfer matrix with every column
belonging to a hole cylinder deleted, once the hole has been refined to the
matrix depth.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from . import _linalg
from .errors import DegenerateHoleWarning, DepthMismatch
from .symbolic import (STATE_CAP, Subshift, SymbolicPoint, Word, prime_period,
                       refine_words, word_codes)
from .thermo import (Potential, TransferMatrix, birkhoff_sum, build_transfer_matrix,
                     eigentriple, measure_of, pressure, spectral_data)


@dataclass(frozen=True)
class HoleFamily:
    """Nested holes ``U_n`` shrinking to a centre point.

    ``holes[i]`` is the hole with index ``indices[i]``; it is a sorted tuple
    of words of common length ``lengths[i]`` contained in the cylinder
    ``[z]_{prefix_depths[i]}`` of the centre.
    """

    center: SymbolicPoint
    indices: tuple
    holes: tuple
    prefix_depths: tuple
    kind: str = "single-cylinder"

    @property
    def lengths(self) -> tuple:
        return tuple(len(h[0]) if h else 0 for h in self.holes)

    def hole(self, n: int) -> tuple:
        try:
            return self.holes[self.indices.index(n)]
        except ValueError:
            raise KeyError(f"hole index {n} not in family") from None

    def length(self, n: int) -> int:
        return self.lengths[self.indices.index(n)]

    def prefix_depth(self, n: int) -> int:
        return self.prefix_depths[self.indices.index(n)]

    def __len__(self):
        return len(self.indices)


def standard_hole_family(s: Subshift, z: SymbolicPoint, n_max: int,
                         n_min: int = 1) -> HoleFamily:
    """Single-cylinder holes ``U_n = [z]_n`` for ``n_min <= n <= n_max``."""
    if not z.is_admissible(s):
        raise ValueError("centre point is not admissible")
    digits = z.digits(n_max)
    idx = tuple(range(n_min, n_max + 1))
    return HoleFamily(z, idx, tuple((digits[:n],) for n in idx), idx)


def _common_prefix(words, digits) -> int:
    k = 0
    while all(k < len(w) and k < len(digits) and w[k] == digits[k] for w in words):
        k += 1
    return k


def hole_family_from_words(s: Subshift, z: SymbolicPoint, holes: Sequence[Iterable[Word]],
                           indices: Sequence[int] | None = None,
                           kind: str = "custom") -> HoleFamily:
    """Wrap explicit hole word sets (refined to one length each) into a family."""
    refined = []
    for h in holes:
        h = [tuple(w) for w in h]
        n = max(len(w) for w in h) if h else 0
        refined.append(tuple(refine_words(s, h, n)) if h else ())
    if indices is None:
        indices = tuple(range(1, len(refined) + 1))
    longest = max((len(h[0]) for h in refined if h), default=0)
    digits = z.digits(min(longest, z.available_digits))
    depths = tuple(_common_prefix(h, digits) if h else 0 for h in refined)
    return HoleFamily(z, tuple(indices), tuple(refined), depths, kind)


def _covered(s: Subshift, inner: Sequence[Word], outer: Sequence[Word]) -> bool:
    """Is the union of ``inner`` cylinders contained in the union of ``outer``?"""
    if not inner:
        return True
    if not outer:
        return False
    n = max(len(inner[0]), len(outer[0]))
    a = set(refine_words(s, inner, n))
    b = set(refine_words(s, outer, n))
    return a <= b


def check_hole_family(s: Subshift, phi: Potential, family: HoleFamily,
                      kappa: float = 0.5) -> dict:
    """Check the standing assumptions on a hole family.

    Reports nestedness, containment of the centre, the prefix-depth ratio
    ``l_n / len_n`` against ``kappa``, a fitted exponential bound
    ``mu(U_n) <= c rho**len_n`` and, for a periodic centre, the first index
    from which ``sigma^-p(U_n) & [z_0..z_{p-1}] <= U_n`` holds for the rest
    of the family.
    """
    holes = family.holes
    nested = all(_covered(s, holes[i + 1], holes[i]) for i in range(len(holes) - 1))
    contains_center = []
    for h in holes:
        if not h:
            contains_center.append(False)
            continue
        n = len(h[0])
        contains_center.append(family.center.digits(n) in set(h))
    ratios = [d / L for d, L in zip(family.prefix_depths, family.lengths) if L]
    mu = np.array([measure_of(h, s, phi) if h else 0.0 for h in holes])
    lengths = np.array(family.lengths, dtype=float)
    fit = None
    ok = (mu > 0)
    if ok.sum() >= 2 and np.ptp(lengths[ok]) > 0:
        slope, intercept = np.polyfit(lengths[ok], np.log(mu[ok]), 1)
        c = float(np.exp(np.max(np.log(mu[ok]) - slope * lengths[ok])))
        fit = {"c": c, "rho": float(np.exp(slope))}
    p = prime_period(family.center)
    periodic_ok = None
    threshold = None
    if p is not None:
        block = family.center.digits(p)
        periodic_ok = []
        for h in holes:
            hs = set(h)
            good = True
            for w in h:
                v = block + w
                if s.is_admissible(v) and v[:len(w)] not in hs:
                    good = False
                    break
            periodic_ok.append(good)
        for i in range(len(holes)):
            if all(periodic_ok[i:]):
                threshold = family.indices[i]
                break
    return {
        "nested": nested,
        "contains_center": all(contains_center),
        "prefix_ratio_min": min(ratios) if ratios else None,
        "prefix_ratio_ok": bool(ratios) and min(ratios) > kappa,
        "exponential_fit": fit,
        "prime_period": p,
        "periodic_compatible": periodic_ok,
        "periodic_threshold": threshold,
    }


def _hole_mask(M: TransferMatrix, hole: Iterable[Word]) -> np.ndarray:
    hole = [tuple(w) for w in hole]
    mask = np.zeros(M.size, dtype=bool)
    if not hole:
        return mask
    if any(len(w) > M.depth for w in hole):
        raise DepthMismatch(f"hole words longer than matrix depth {M.depth}")
    refined = refine_words(M.subshift, hole, M.depth)
    codes = word_codes(np.asarray(refined, dtype=np.int64), M.subshift.alphabet_size)
    pos = np.searchsorted(M.codes, codes)
    mask[pos] = True
    return mask


def perturbed_matrix(M: TransferMatrix, hole: Iterable[Word]) -> TransferMatrix:
    """Copy of ``M`` with the columns of hole cylinders zeroed."""
    mask = _hole_mask(M, hole)
    keep = sp.diags((~mask).astype(float))
    m = (M.matrix @ keep).tocsr()
    m.eliminate_zeros()
    return TransferMatrix(M.subshift, M.depth, M.words, M.codes, m)


@dataclass
class PerturbedEigenvalue:
    """Spectral radius of the perturbed matrix with survivor-graph diagnostics.

    ``mixing`` is False when the survivor graph has more than one nontrivial
    strongly connected component or a periodic one; ``empty`` marks an empty
    survivor set (``lambda_n == 0``).
    """

    lambda_n: float
    depth: int
    mixing: bool
    empty: bool
    components: int
    component_roots: list = field(default_factory=list)
    dominant: np.ndarray | None = field(default=None, repr=False)


def survivor_spectrum(M: TransferMatrix, hole: Iterable[Word] = ()) -> PerturbedEigenvalue:
    """Perron root of the perturbed matrix computed per strongly connected
    component of the survivor graph.

    ``dominant`` holds the matrix indices of the component attaining the
    spectral radius.
    """
    mask = _hole_mask(M, hole)
    keep = np.flatnonzero(~mask)
    if keep.size == 0:
        return PerturbedEigenvalue(0.0, M.depth, False, True, 0)
    sub = M.matrix[keep][:, keep].tocsr()
    ncomp, labels = _linalg.strong_components(sub)
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(ncomp + 1))
    diag = sub.diagonal()
    roots, members, periods = [], [], []
    for c in range(ncomp):
        idx = order[bounds[c]:bounds[c + 1]]
        if idx.size == 1:
            if diag[idx[0]] <= 0:
                continue
            roots.append(float(diag[idx[0]]))
            periods.append(1)
        else:
            block = sub[idx][:, idx].tocsr()
            periods.append(_linalg.graph_period(block))
            roots.append(_linalg.perron_root(block))
        members.append(idx)
    if not roots:
        return PerturbedEigenvalue(0.0, M.depth, False, True, 0)
    best = int(np.argmax(roots))
    mixing = len(roots) == 1 and periods[0] == 1
    return PerturbedEigenvalue(roots[best], M.depth, mixing, False, len(roots),
                               roots, keep[members[best]])


def perturbed_eigenvalue(s: Subshift, phi: Potential, hole: Iterable[Word],
                         depth: int | None = None) -> PerturbedEigenvalue:
    """Leading eigenvalue ``lambda_n`` of the transfer operator with the hole
    removed, at matrix depth ``max(depth, len(hole words), phi.depth)``."""
    hole = [tuple(w) for w in hole]
    n = max([depth or 1, phi.depth] + [len(w) for w in hole])
    M = build_transfer_matrix(s, phi, n)
    return survivor_spectrum(M, hole)


def survivor_eigentriple(M: TransferMatrix, hole: Iterable[Word] = ()):
    """Perron data of the dominant survivor component, embedded in the full
    index set (zeros elsewhere).

    Returns ``(info, right, left)`` with ``sum(left) == 1`` and
    ``sum(left * right) == 1``; ``left * right`` is the equilibrium state of
    the open system.
    """
    info = survivor_spectrum(M, hole)
    right = np.zeros(M.size)
    left = np.zeros(M.size)
    if info.empty:
        return info, right, left
    idx = info.dominant
    if idx.size == 1:
        right[idx] = 1.0
        left[idx] = 1.0
        return info, right, left
    block = M.matrix[idx][:, idx].tocsr()
    if _linalg.graph_period(block) != 1:
        shift = float(block.sum(axis=1).max()) / 2
        block = (block + shift * sp.identity(idx.size, format="csr")).tocsr()
        lam, r, lv, _, _ = eigentriple(block)
        lam -= shift
    else:
        lam, r, lv, _, _ = eigentriple(block)
    right[idx] = r
    left[idx] = lv
    info.lambda_n = float(lam)
    return info, right, left


def predicted_limit(s: Subshift, phi: Potential, z: SymbolicPoint,
                    P: float | None = None) -> float:
    """Limit of escape rate over hole measure for holes shrinking to ``z``:
    1 for non-periodic ``z``, ``1 - exp(phi^p(z) - p P(phi))`` for prime period ``p``."""
    p = prime_period(z)
    if p is None:
        return 1.0
    if P is None:
        P = pressure(s, phi)
    return 1.0 - math.exp(birkhoff_sum(phi, z, p) - p * P)


@dataclass
class EscapeRateResult:
    n: int
    len_n: int
    mu_hole: float
    lambda_: float
    lambda_n: float
    escape_rate: float
    ratio: float
    gap_ratio: float
    predicted: float
    mixing: bool = True
    empty: bool = False

    @property
    def deviation(self) -> float:
        return abs(self.ratio - self.predicted)


def _escape_from_hole(s, phi, hole, n, predicted, P) -> EscapeRateResult:
    hole = tuple(tuple(w) for w in hole)
    lam = math.exp(P)
    if not hole:
        return EscapeRateResult(n, 0, 0.0, lam, lam, 0.0, math.nan, math.nan, predicted)
    L = len(hole[0])
    depth = max(L, phi.depth)
    data = spectral_data(s, phi, depth)
    mu = measure_of(hole, s, phi, data)
    M = build_transfer_matrix(s, phi, depth)
    info = survivor_spectrum(M, hole)
    lam = data.lambda_
    if info.empty:
        return EscapeRateResult(n, L, mu, lam, 0.0, math.inf, math.inf, lam / mu,
                                predicted, False, True)
    r = math.log(lam) - math.log(info.lambda_n)
    return EscapeRateResult(n, L, mu, lam, info.lambda_n, r, r / mu,
                            (lam - info.lambda_n) / mu, predicted, info.mixing, False)


def escape_rate(s: Subshift, phi: Potential, family: HoleFamily, n: int) -> EscapeRateResult:
    """Escape rate ``log lambda - log lambda_n`` through hole ``U_n`` of the family,
    with the ratios ``r / mu(U_n)`` and ``(lambda - lambda_n) / mu(U_n)``."""
    P = pressure(s, phi)
    d = predicted_limit(s, phi, family.center, P)
    return _escape_from_hole(s, phi, family.hole(n), n, d, P)


def escape_rate_for_hole(s: Subshift, phi: Potential, hole: Iterable[Word],
                         center: SymbolicPoint | None = None) -> EscapeRateResult:
    """Escape data for a single explicit hole."""
    P = pressure(s, phi)
    d = predicted_limit(s, phi, center, P) if center is not None else math.nan
    return _escape_from_hole(s, phi, list(hole), 0, d, P)


@dataclass
class EscapeSweep:
    rows: list
    report: dict

    def to_csv(self, fh=None) -> str:
        """Write the table (columns as in :data:`ESCAPE_COLUMNS`)."""
        return write_escape_csv(self.rows, fh)


ESCAPE_COLUMNS = ("n", "len_n", "mu_hole", "lambda_n", "escape_rate", "ratio",
                  "gap_ratio", "predicted", "deviation", "mixing_flag")


def write_escape_csv(rows, fh=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ESCAPE_COLUMNS)
    for r in rows:
        w.writerow([r.n, r.len_n, repr(r.mu_hole), repr(r.lambda_n), repr(r.escape_rate),
                    repr(r.ratio), repr(r.gap_ratio), repr(r.predicted), repr(r.deviation),
                    int(r.mixing)])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def _fit_deviation(ns, devs):
    ns = np.asarray(ns, dtype=float)
    devs = np.asarray(devs, dtype=float)
    ok = np.isfinite(devs) & (devs > 0)
    if ok.sum() < 3:
        return None
    slope, intercept = np.polyfit(ns[ok], np.log(devs[ok]), 1)
    return {"log_deviation_slope": float(slope), "log_deviation_intercept": float(intercept)}


def summarize_sweep(rows: list, monotone_tol: float = 1e-12) -> dict:
    last = rows[-1]
    lambdas = [r.lambda_n for r in rows]
    monotone = all(b >= a - monotone_tol * max(1.0, abs(a)) for a, b in zip(lambdas, lambdas[1:]))
    return {
        "last_n": last.n,
        "last_ratio": last.ratio,
        "last_gap_ratio": last.gap_ratio,
        "predicted": last.predicted,
        "gap_predicted": last.lambda_ * last.predicted,
        "deviation": last.deviation,
        "lambda": last.lambda_,
        "lambda_monotone": monotone,
        "all_mixing": all(r.mixing for r in rows),
        "fit": _fit_deviation([r.n for r in rows], [r.deviation for r in rows]) if len(rows) > 1 else None,
    }


def escape_sweep(s: Subshift, phi: Potential, family: HoleFamily,
                 n_range: Iterable[int] | None = None, workers: int = 1) -> EscapeSweep:
    """Escape-rate table over the family with a convergence report.

    The report holds the final ratio, the predicted limit and its deviation,
    the eigenvalue-gap limit ``lambda * d``, a log-linear fit of the
    deviations and whether ``lambda_n`` was non-decreasing along the sweep.
    Rows are independent; ``workers > 1`` computes them on a thread pool.
    """
    ns = list(family.indices if n_range is None else n_range)
    if not ns:
        raise ValueError("empty n range")
    P = pressure(s, phi)
    d = predicted_limit(s, phi, family.center, P)
    rows = _map(lambda n: _escape_from_hole(s, phi, family.hole(n), n, d, P), ns, workers)
    report = summarize_sweep(rows)
    if not report["lambda_monotone"] and _is_nested(s, family, ns):
        warnings.warn("lambda_n decreased along a nested hole family", RuntimeWarning)
    return EscapeSweep(rows, report)


def _map(fn, items, workers=1):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _is_nested(s, family, ns):
    hs = [family.hole(n) for n in ns]
    return all(_covered(s, b, a) for a, b in zip(hs, hs[1:]))


def pressure_gap_ratio(s: Subshift, phi: Potential, family: HoleFamily, n: int) -> float:
    """``(P(phi) - P_{Sigma_n}(phi)) / mu(U_n)``; NaN with a warning for an empty hole."""
    hole = family.hole(n)
    if not hole:
        warnings.warn("pressure gap ratio of an empty hole is 0/0", DegenerateHoleWarning)
        return math.nan
    res = escape_rate(s, phi, family, n)
    return res.ratio


def eigenvalue_gap_ratio(s: Subshift, phi: Potential, family: HoleFamily, n: int) -> float:
    """``(lambda - lambda_n) / mu(U_n)``, whose limit is ``lambda * d(z)``."""
    hole = family.hole(n)
    if not hole:
        warnings.warn("eigenvalue gap ratio of an empty hole is 0/0", DegenerateHoleWarning)
        return math.nan
    return escape_rate(s, phi, family, n).gap_ratio


def matrix_survival(s: Subshift, phi: Potential, hole: Iterable[Word], k_max: int) -> np.ndarray:
    """Survival probabilities ``mu{x : sigma^i x not in U, 0 <= i < k}`` for
    ``k = 0..k_max`` from powers of the normalised perturbed matrix.

    With ``M~[c, c'] = M[c, c'] g(c') / (lambda g(c))`` the survival equals
    ``sum_c mu(c) (M~_U^k 1)(c)``.
    """
    hole = [tuple(w) for w in hole]
    depth = max([phi.depth] + [len(w) for w in hole])
    data = spectral_data(s, phi, depth)
    M = build_transfer_matrix(s, phi, depth)
    g = data.right
    norm = sp.diags(1.0 / (data.lambda_ * g)) @ M.matrix @ sp.diags(g)
    mask = _hole_mask(M, hole)
    norm = (norm @ sp.diags((~mask).astype(float))).tocsr()
    v = np.ones(M.size)
    out = [1.0]
    for _ in range(k_max):
        v = norm @ v
        out.append(float(data.gibbs @ v))
    return np.array(out)
