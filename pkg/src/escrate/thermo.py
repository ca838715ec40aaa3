"""Locally constant potentials, transfer matrices and Ruelle-Perron-Frobenius data.

A potential of depth ``k`` is constant on cylinders of length ``k``. On the
algebra of functions constant on ``n``-cylinders (``n >= k``) the transfer
operator ``(L w)(x) = sum_{sigma y = x} exp(phi(y)) w(y)`` acts exactly as a
sparse matrix ``M[c, c'] = exp(phi(c'))`` where ``c' = a + c[:n-1]`` ranges
over the one-symbol preimages of the cylinder ``c``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from . import _linalg
from .errors import NotMixingAfterRestriction
from .symbolic import STATE_CAP, Subshift, SymbolicPoint, Word, cylinder_array, word_codes


class Potential:
    """Real function on the shift space depending on the first ``depth`` symbols.

    Values are stored in a table over base-``l`` word codes; inadmissible
    entries hold NaN.

    Parameters
    ----------
    subshift : Subshift
    depth : int
    values : mapping or ndarray
        Either ``{word: value}`` covering every admissible ``depth``-word, or
        a table of length ``l**depth`` indexed by word code.
    default : float, optional
        Value for admissible words missing from a mapping.
    oscillation : float
        Truncation diagnostic carried along for potentials sampled from a
        non-locally-constant function (0 for exact potentials).
    """

    def __init__(self, subshift: Subshift, depth: int, values, default=None,
                 oscillation: float = 0.0):
        if depth < 1:
            raise ValueError("potential depth must be >= 1")
        self.subshift = subshift
        self.depth = int(depth)
        self.oscillation = float(oscillation)
        l = subshift.alphabet_size
        words = cylinder_array(subshift, depth)
        codes = word_codes(words, l)
        table = np.full(l ** depth, np.nan)
        if isinstance(values, np.ndarray) and values.ndim == 1 and values.size == l ** depth:
            table[codes] = values[codes]
        elif isinstance(values, np.ndarray) and values.size == len(words):
            table[codes] = values
        else:
            given = {tuple(int(x) for x in w): float(v) for w, v in dict(values).items()}
            for w in given:
                if len(w) != depth or not subshift.is_admissible(w):
                    raise ValueError(f"word {w} is not an admissible {depth}-word")
            for row, code in zip(words, codes):
                w = tuple(int(x) for x in row)
                if w in given:
                    table[code] = given[w]
                elif default is not None:
                    table[code] = float(default)
                else:
                    raise ValueError(f"no value for word {subshift.format_word(w)}")
        if not np.all(np.isfinite(table[codes])):
            raise ValueError("potential values must be finite")
        table.setflags(write=False)
        self.table = table

    @classmethod
    def constant(cls, subshift: Subshift, value: float) -> "Potential":
        return cls(subshift, 1, np.full(subshift.alphabet_size, float(value)))

    @classmethod
    def from_symbol_values(cls, subshift: Subshift, values: Sequence[float]) -> "Potential":
        return cls(subshift, 1, np.asarray(values, dtype=float))

    @classmethod
    def from_function(cls, subshift: Subshift, depth: int,
                      fn: Callable[[Word], float]) -> "Potential":
        words = cylinder_array(subshift, depth)
        vals = np.array([fn(tuple(int(x) for x in row)) for row in words], dtype=float)
        return cls(subshift, depth, vals)

    def __eq__(self, other):
        return (isinstance(other, Potential) and self.subshift == other.subshift
                and self.depth == other.depth
                and np.array_equal(self.table, other.table, equal_nan=True))

    def __hash__(self):
        return hash((self.subshift, self.depth, np.nan_to_num(self.table).tobytes()))

    def value(self, word: Sequence[int]) -> float:
        if len(word) < self.depth:
            raise ValueError(f"need at least {self.depth} symbols")
        code = 0
        for x in word[:self.depth]:
            code = code * self.subshift.alphabet_size + int(x)
        return float(self.table[code])

    @property
    def values(self) -> dict:
        words = cylinder_array(self.subshift, self.depth)
        codes = word_codes(words, self.subshift.alphabet_size)
        return {tuple(int(x) for x in w): float(self.table[c]) for w, c in zip(words, codes)}

    def scaled(self, factor: float, shift: float = 0.0) -> "Potential":
        """``factor * phi + shift``."""
        return Potential(self.subshift, self.depth, factor * self.table + shift,
                         oscillation=abs(factor) * self.oscillation)

    def to_json(self) -> dict:
        return {"depth": self.depth,
                "values": {self.subshift.format_word(w): v for w, v in self.values.items()}}

    @classmethod
    def from_json(cls, subshift: Subshift, data) -> "Potential":
        if isinstance(data, str):
            data = json.loads(data)
        values = {subshift.parse_word(w): v for w, v in data.get("values", {}).items()}
        return cls(subshift, int(data["depth"]), values, default=data.get("default"))

    def __repr__(self):
        return f"Potential(depth={self.depth}, subshift={self.subshift!r})"


@dataclass(frozen=True)
class TransferMatrix:
    """Transfer operator restricted to functions constant on ``depth``-cylinders.

    Row and column indices enumerate the admissible ``depth``-words in
    lexicographic order (``words``); ``matrix[c, c']`` is nonzero iff ``c'``
    is a one-symbol preimage of ``c``.
    """

    subshift: Subshift
    depth: int
    words: np.ndarray
    codes: np.ndarray
    matrix: sp.csr_matrix

    @property
    def size(self) -> int:
        return len(self.codes)

    def index(self, word: Sequence[int]) -> int:
        if len(word) != self.depth:
            raise ValueError(f"word length {len(word)} != matrix depth {self.depth}")
        code = word_codes(np.asarray([word], dtype=np.int64), self.subshift.alphabet_size)[0]
        i = int(np.searchsorted(self.codes, code))
        if i >= len(self.codes) or self.codes[i] != code:
            raise KeyError(f"word {tuple(word)} is not admissible")
        return i

    def word(self, i: int) -> Word:
        return tuple(int(x) for x in self.words[i])

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def preimage_pattern(s: Subshift, n: int, cap: int = STATE_CAP):
    """Rows, columns and column codes of the one-symbol preimage relation on
    ``n``-cylinders."""
    words = cylinder_array(s, n, cap)
    l = s.alphabet_size
    codes = word_codes(words, l)
    rows, cols = [], []
    head = l ** (n - 1)
    for a in range(l):
        r = np.flatnonzero(s.transition[a, words[:, 0]])
        target = a * head + codes[r] // l
        c = np.searchsorted(codes, target)
        rows.append(r)
        cols.append(c)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    return words, codes, rows, cols


def build_transfer_matrix(s: Subshift, phi: Potential, n: int = 1,
                          cap: int = STATE_CAP) -> TransferMatrix:
    """Exact transfer matrix of ``phi`` on cylinders of length ``max(n, phi.depth)``."""
    if phi.subshift != s:
        raise ValueError("potential is defined on a different subshift")
    n = max(int(n), phi.depth)
    words, codes, rows, cols = preimage_pattern(s, n, cap)
    l = s.alphabet_size
    vals = np.exp(phi.table[codes[cols] // l ** (n - phi.depth)])
    m = sp.csr_matrix((vals, (rows, cols)), shape=(len(codes), len(codes)))
    return TransferMatrix(s, n, words, codes, m)


@dataclass
class SpectralData:
    """Perron data of a transfer matrix.

    ``right`` samples the eigenfunction ``g`` on cylinders, ``left`` is the
    eigenmeasure ``nu`` of cylinders, normalised so that ``sum(left) == 1``
    and ``sum(left * right) == 1``; ``gibbs = left * right``.
    """

    depth: int
    lambda_: float
    right: np.ndarray
    left: np.ndarray
    gibbs: np.ndarray
    pressure: float
    iterations: int
    residual: float
    words: np.ndarray = field(repr=False, default=None)

    def to_json(self, subshift: Subshift | None = None) -> dict:
        out = {"depth": self.depth, "lambda": self.lambda_, "pressure": self.pressure,
               "iterations": self.iterations, "residual": self.residual,
               "right_vector": self.right.tolist(), "left_vector": self.left.tolist(),
               "gibbs": self.gibbs.tolist()}
        if subshift is not None and self.words is not None:
            out["cylinders"] = [subshift.format_word(w) for w in self.words]
        return out


def eigentriple(matrix: sp.csr_matrix, tol=_linalg.TOL, max_iter=_linalg.MAX_ITER):
    """Right/left Perron vectors of a primitive sparse matrix, jointly normalised.

    Returns ``(lam, right, left, iterations, residual)``.
    """
    r = _linalg.power_iteration(matrix, tol=tol, max_iter=max_iter)
    lt = _linalg.power_iteration(matrix.T.tocsr(), tol=tol, max_iter=max_iter)
    left = lt.vector / lt.vector.sum()
    right = r.vector / np.dot(left, r.vector)
    return r.value, right, left, r.iterations + lt.iterations, max(r.residual, lt.residual)


def leading_eigentriple(M: TransferMatrix, tol=_linalg.TOL,
                        max_iter=_linalg.MAX_ITER) -> SpectralData:
    """Leading eigenvalue, eigenfunction and eigenmeasure of a transfer matrix.

    Raises
    ------
    NotMixingAfterRestriction
        If the nonzero pattern is not strongly connected and aperiodic.
    NoConvergence
        If power iteration exhausts ``max_iter``.
    """
    if not _linalg.is_primitive(M.matrix):
        raise NotMixingAfterRestriction("transfer matrix pattern is not primitive")
    lam, right, left, its, res = eigentriple(M.matrix, tol, max_iter)
    return SpectralData(M.depth, float(lam), right, left, left * right, math.log(lam),
                        its, float(res), M.words)


@lru_cache(maxsize=16)
def _cached_spectral_data(s: Subshift, phi: Potential, n: int) -> SpectralData:
    data = leading_eigentriple(build_transfer_matrix(s, phi, n))
    for arr in (data.right, data.left, data.gibbs):
        arr.setflags(write=False)
    return data


def spectral_data(s: Subshift, phi: Potential, n: int = 1) -> SpectralData:
    """Perron data of ``phi`` on cylinders of length ``max(n, phi.depth)``.

    Results are cached; the returned arrays are read-only.
    """
    return _cached_spectral_data(s, phi, max(int(n), phi.depth))


def pressure(s: Subshift, phi: Potential) -> float:
    """Topological pressure ``log lambda`` of a locally constant potential."""
    return spectral_data(s, phi, max(1, phi.depth)).pressure


def marginal(words: np.ndarray, weights: np.ndarray, l: int, n: int):
    """Sum cylinder weights of length ``words.shape[1]`` down to prefixes of length ``n``."""
    depth = words.shape[1]
    if n == depth:
        return words, weights
    prefix = word_codes(words[:, :n], l)
    uniq, inv = np.unique(prefix, return_inverse=True)
    out = np.zeros(len(uniq))
    np.add.at(out, inv, weights)
    first = np.zeros(len(uniq), dtype=np.int64)
    first[inv[::-1]] = np.arange(len(prefix))[::-1]
    return words[first, :n], out


def gibbs_array(s: Subshift, phi: Potential, n: int, data: SpectralData | None = None):
    """Equilibrium-state measure of all admissible ``n``-cylinders as arrays
    ``(words, mu)``."""
    if data is None or data.depth < max(n, phi.depth):
        data = spectral_data(s, phi, max(n, phi.depth))
    words, mu = marginal(data.words, data.gibbs, s.alphabet_size, n)
    return words, mu


def gibbs_measure(s: Subshift, phi: Potential, n: int) -> dict:
    """Equilibrium-state measure of every admissible ``n``-cylinder."""
    words, mu = gibbs_array(s, phi, n)
    return {tuple(int(x) for x in w): float(m) for w, m in zip(words, mu)}


def measure_of(words: Sequence[Sequence[int]], s: Subshift, phi: Potential,
               data: SpectralData | None = None) -> float:
    """Measure of a finite union of cylinders of one common length."""
    words = list(words)
    if not words:
        return 0.0
    n = len(words[0])
    if any(len(w) != n for w in words):
        raise ValueError("words must share one length")
    arr, mu = gibbs_array(s, phi, n, data)
    codes = word_codes(arr, s.alphabet_size)
    want = np.unique(word_codes(np.asarray(words, dtype=np.int64), s.alphabet_size))
    pos = np.searchsorted(codes, want)
    return float(mu[pos].sum())


def birkhoff_sum(phi: Potential, z: SymbolicPoint, p: int) -> float:
    """``phi(z) + phi(sigma z) + ... + phi(sigma^(p-1) z)``."""
    k = phi.depth
    digits = z.digits(p + k - 1)
    return float(sum(phi.value(digits[j:j + k]) for j in range(p)))


def gibbs_constant_check(s: Subshift, phi: Potential, n_max: int, per_depth: bool = False):
    """Empirical Gibbs constant.

    The smallest ``c >= 1`` with
    ``1/c <= mu[x]_n / exp(phi^n(x) - n P) <= c`` over all cylinders of
    length ``n <= n_max``; ``phi^n`` is evaluated at the lexicographically
    least point of each cylinder. With ``per_depth=True`` the per-depth
    constants are returned as well.
    """
    l = s.alphabet_size
    k = phi.depth
    P = pressure(s, phi)
    least_next = np.array([s.successors(a)[0] for a in range(l)], dtype=np.uint8)
    data = spectral_data(s, phi, max(n_max, k))
    consts = []
    for n in range(1, n_max + 1):
        words, mu = gibbs_array(s, phi, n, data)
        ext = words.astype(np.int64)
        while ext.shape[1] < n + k - 1:
            ext = np.hstack([ext, least_next[ext[:, -1]][:, None].astype(np.int64)])
        sums = np.zeros(len(words))
        for j in range(n):
            sums += phi.table[word_codes(ext[:, j:j + k], l)]
        log_ratio = np.log(mu) - (sums - n * P)
        consts.append(float(np.exp(np.max(np.abs(log_ratio)))))
    c = max(consts)
    return (c, consts) if per_depth else c


def normalized_potential(s: Subshift, phi: Potential) -> Potential:
    """Cohomologous potential ``phi + log g - log g o sigma - log lambda``.

    Its transfer operator fixes the constant function 1 and has pressure 0.
    """
    depth = max(1, phi.depth)
    data = spectral_data(s, phi, depth)
    l = s.alphabet_size
    words = cylinder_array(s, depth + 1)
    log_g = np.full(l ** depth, np.nan)
    log_g[word_codes(data.words, l)] = np.log(data.right)
    vals = (phi.table[word_codes(words[:, :phi.depth], l)]
            + log_g[word_codes(words[:, :depth], l)]
            - log_g[word_codes(words[:, 1:depth + 1], l)]
            - math.log(data.lambda_))
    return Potential(s, depth + 1, vals)
