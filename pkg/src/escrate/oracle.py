"""Ground truth for survival probabilities by enumeration and sampling.

Both oracles work with words rather than matrix powers. The Gibbs weight of a
word ``w`` of length ``L >= m`` (``m`` the matrix depth, ``k`` the potential
depth) is

    mu[w] = g(w[:m]) * nu(w[L-m:]) * lambda**-(L-m) * exp(sum_i phi(w[i:i+k]))

with the sum over ``i < L - m``, which is exact for locally constant
potentials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .errors import EnumerationCapExceeded, InsufficientTail
from .symbolic import Subshift, Word, cylinder_array, refine_words, word_codes
from .thermo import Potential, spectral_data

ENUMERATION_CAP = 2**24
BATCH_SIZE = 2**16
TAIL_BLOCK = 4


@dataclass
class SurvivalCurve:
    """``survival[i]`` estimates ``mu{x : sigma^j x not in U, j < k_values[i]}``."""

    k_values: np.ndarray
    survival: np.ndarray
    method: str
    stderr: np.ndarray | None = None
    samples: int | None = None
    seed: int | None = None
    flagged: bool = False
    note: str = ""

    def __len__(self):
        return len(self.k_values)

    def to_csv(self, fh=None) -> str:
        meta = f"# method={self.method}"
        if self.method == "monte_carlo":
            meta += f" seed={self.seed} samples={self.samples}"
        if self.flagged:
            meta += f" flagged={self.note or 'true'}"
        lines = [meta, "k,survival,stderr"]
        for i, k in enumerate(self.k_values):
            se = "" if self.stderr is None else repr(float(self.stderr[i]))
            lines.append(f"{int(k)},{float(self.survival[i])!r},{se}")
        text = "\n".join(lines) + "\n"
        if fh is not None:
            fh.write(text)
        return text


def _hole_words(s: Subshift, hole: Iterable[Sequence[int]]) -> list:
    hole = [tuple(int(x) for x in w) for w in hole]
    if not hole:
        return []
    h = max(len(w) for w in hole)
    return refine_words(s, hole, h)


class _Words:
    """Live set of prefixes with their Gibbs weights, extended one symbol at a time."""

    def __init__(self, s: Subshift, phi: Potential, m: int):
        self.s = s
        self.l = s.alphabet_size
        self.m = m
        data = spectral_data(s, phi, m)
        self.lam = data.lambda_
        self.nu = np.asarray(data.left)
        words = cylinder_array(s, m, cap=math.inf)
        self.words = words
        self.codes = word_codes(words, self.l)
        l = self.l
        # phi of the first k symbols of each m-word
        self.phi_head = phi.table[self.codes // l ** (m - phi.depth)]
        self.last = words[:, -1]
        # state index lookup by code
        self.lookup = np.full(l ** m, -1, dtype=np.int64) if l ** m <= 2**26 else None
        if self.lookup is not None:
            self.lookup[self.codes] = np.arange(len(self.codes))
        self.state = np.arange(len(words))
        self.logw = np.log(np.asarray(data.right))

    def index(self, codes):
        if self.lookup is not None:
            return self.lookup[codes]
        return np.searchsorted(self.codes, codes)

    def weights(self, state=None, logw=None):
        state = self.state if state is None else state
        logw = self.logw if logw is None else logw
        return np.exp(logw) * self.nu[state]

    def extend(self, cap):
        state, logw = self.state, self.logw
        succ = self.s.transition[self.last[state]]
        counts = succ.sum(axis=1)
        rows = np.repeat(np.arange(len(state)), counts)
        if len(rows) > cap:
            raise EnumerationCapExceeded(f"{len(rows)} live words exceed the cap {cap}")
        sym = np.nonzero(succ)[1]
        head = self.codes[state[rows]] % self.l ** (self.m - 1)
        new = self.index(head * self.l + sym)
        self.logw = logw[rows] + self.phi_head[state[rows]] - math.log(self.lam)
        self.state = new

    def keep(self, mask):
        self.state = self.state[mask]
        self.logw = self.logw[mask]


def _hit_tables(words: np.ndarray, hole: list, l: int):
    """For each m-word, the first window start ``i`` with ``w[i:i+h]`` in the
    hole (``m`` if none), and whether its last ``h`` symbols form a hole word."""
    m = words.shape[1]
    h = len(hole[0])
    hole_codes = np.unique(word_codes(np.asarray(hole, dtype=np.int64), l))
    first = np.full(len(words), m, dtype=np.int64)
    for i in range(m - h, -1, -1):
        win = word_codes(words[:, i:i + h], l)
        hit = np.isin(win, hole_codes)
        first[hit] = i
    suffix = np.isin(word_codes(words[:, m - h:], l), hole_codes)
    return first, suffix


def _check_cap(s, k_max, h, cap):
    if s.alphabet_size ** (k_max + h - 1) > cap:
        raise EnumerationCapExceeded(
            f"{s.alphabet_size}^{k_max + h - 1} words exceed the enumeration cap {cap}")


def exhaustive_survival(s: Subshift, phi: Potential, hole: Iterable[Word], k_max: int,
                        cap: int = ENUMERATION_CAP) -> SurvivalCurve:
    """Exact survival probabilities for ``k = 0..k_max`` by summing Gibbs
    weights of words that avoid the hole at every shift before ``k``.

    Words that have fallen in are dropped as soon as they do, so the work is
    proportional to the number of surviving words.

    Raises
    ------
    EnumerationCapExceeded
        If ``l**(k_max + h - 1)`` exceeds ``cap`` (``h`` the hole word length).
    """
    hole = _hole_words(s, hole)
    ks = np.arange(k_max + 1)
    if not hole:
        return SurvivalCurve(ks, np.ones(k_max + 1), "exhaustive")
    h = len(hole[0])
    _check_cap(s, k_max, h, cap)
    m = max(phi.depth, h)
    W = _Words(s, phi, m)
    first, suffix = _hit_tables(W.words, hole, s.alphabet_size)
    surv = np.empty(k_max + 1)
    w0 = W.weights()
    # windows 0..m-h live inside the initial m-words
    for k in range(0, min(k_max, m - h + 1) + 1):
        surv[k] = w0[first >= k].sum()
    W.keep(first > m - h)
    for k in range(m - h + 2, k_max + 1):
        W.extend(cap)
        W.keep(~suffix[W.state])
        surv[k] = W.weights().sum()
    surv[0] = 1.0
    return SurvivalCurve(ks, surv, "exhaustive")


def _conditional_tables(s: Subshift, phi: Potential, m: int):
    """Successor states and cumulative forward transition probabilities."""
    data = spectral_data(s, phi, m)
    l = s.alphabet_size
    words = cylinder_array(s, m, cap=math.inf)
    codes = word_codes(words, l)
    nu = np.asarray(data.left)
    phi_head = phi.table[codes // l ** (m - phi.depth)]
    succ = np.full((len(codes), l), -1, dtype=np.int64)
    prob = np.zeros((len(codes), l))
    head = codes % l ** (m - 1)
    for a in range(l):
        ok = s.transition[words[:, -1], a].astype(bool)
        nxt = np.searchsorted(codes, head[ok] * l + a)
        succ[ok, a] = nxt
        prob[ok, a] = nu[nxt] * np.exp(phi_head[ok]) / (data.lambda_ * nu[ok])
    cum = np.cumsum(prob, axis=1)
    cum /= cum[:, -1:]
    return succ, cum, np.asarray(data.gibbs)


def monte_carlo_survival(s: Subshift, phi: Potential, hole: Iterable[Word], k_max: int,
                         samples: int, seed: int, batch_size: int = BATCH_SIZE) -> SurvivalCurve:
    """Survival probabilities estimated from sampled Gibbs sequences.

    Sequences are drawn from the exact Markov chain of the equilibrium state
    on ``m``-words. Batch ``b`` uses a Philox stream seeded by ``(seed, b)``,
    so a fixed seed reproduces the result bit for bit.
    """
    ks = np.arange(k_max + 1)
    if samples <= 0:
        return SurvivalCurve(ks[:0], np.zeros(0), "monte_carlo", np.zeros(0), 0, seed,
                             flagged=True, note="no_samples")
    hole = _hole_words(s, hole)
    h = len(hole[0]) if hole else 1
    m = max(phi.depth, h)
    succ, cum, mu = _conditional_tables(s, phi, m)
    words = cylinder_array(s, m, cap=math.inf)
    if hole:
        first, _ = _hit_tables(words, hole, s.alphabet_size)
        in_hole = first == 0
    else:
        in_hole = np.zeros(len(words), dtype=bool)
    mu_cum = np.cumsum(mu)
    mu_cum /= mu_cum[-1]
    counts = np.zeros(k_max + 1, dtype=np.int64)
    n_batches = -(-samples // batch_size)
    for b in range(n_batches):
        size = min(batch_size, samples - b * batch_size)
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, b])))
        state = np.minimum(np.searchsorted(mu_cum, rng.random(size), side="right"),
                           len(mu) - 1)
        alive = np.ones(size, dtype=bool)
        counts[0] += size
        for k in range(1, k_max + 1):
            alive &= ~in_hole[state]
            counts[k] += int(alive.sum())
            if k == k_max:
                break
            u = rng.random(size)
            a = (u[:, None] > cum[state]).sum(axis=1)
            a = np.minimum(a, cum.shape[1] - 1)
            state = succ[state, a]
    p = counts / samples
    se = np.sqrt(p * (1 - p) / samples)
    return SurvivalCurve(ks, p, "monte_carlo", se, samples, seed)


def fit_escape_rate(curve: SurvivalCurve, tail_fraction: float = 0.5):
    """Least-squares slope of ``-log survival`` against ``k`` over the tail.

    Returns ``(rate, stderr)``.

    Raises
    ------
    InsufficientTail
        If fewer than four tail points have positive survival.
    """
    k = np.asarray(curve.k_values, dtype=float)
    surv = np.asarray(curve.survival, dtype=float)
    n_tail = max(int(math.ceil(tail_fraction * len(k))), 0)
    k, surv = k[len(k) - n_tail:], surv[len(k) - n_tail:]
    pos = surv > 0
    if pos.sum() < 4:
        raise InsufficientTail(f"{int(pos.sum())} positive tail points, need 4")
    k, y = k[pos], -np.log(surv[pos])
    fit = stats.linregress(k, y)
    return float(fit.slope), float(fit.stderr)


@dataclass
class KacResult:
    """Truncated mean return time with a two-sided tail interval."""

    lhs_low: float
    lhs_high: float
    rhs: float
    gap: float
    k_max: int
    tail_mass: float
    tail_ratio: float
    return_law: np.ndarray = field(repr=False, default=None)

    @property
    def lhs(self) -> tuple:
        return self.lhs_low, self.lhs_high


def kac_check(s: Subshift, phi: Potential, hole: Iterable[Word], k_max: int,
              cap: int = ENUMERATION_CAP) -> KacResult:
    """Mean first return time to ``U`` under ``mu`` conditioned on ``U``,
    compared with ``1 / mu(U)``.

    ``m(T = i)`` is enumerated for ``i <= k_max``. For the tail,
    ``sum_{i > K} i m(T = i) = K m(T > K) + sum_{j >= 0} m(T > K + j)``,
    which lies between ``(K + 1) m(T > K)`` and
    ``K m(T > K) + q m(T > K) / (1 - r)`` when ``m(T > i)`` shrinks by at
    least a factor ``r`` over every block of ``q`` steps. ``r`` is the larger
    of ``(lambda_n / lambda)**q`` and the block ratios observed over the last
    enumerated steps.

    Raises
    ------
    EnumerationCapExceeded
        If the words not yet returned outnumber ``cap``.
    """
    from .holes import perturbed_eigenvalue

    hole = _hole_words(s, hole)
    if not hole:
        raise ValueError("the Kac check needs a nonempty hole")
    h = len(hole[0])
    m = max(phi.depth, h)
    W = _Words(s, phi, m)
    first, suffix = _hit_tables(W.words, hole, s.alphabet_size)
    w0 = W.weights()
    inU = first == 0
    mu_u = float(w0[inU].sum())
    law = np.zeros(k_max + 1)
    # first return among windows 1..m-h of the initial words
    second = np.full(len(W.words), m, dtype=np.int64)
    hole_codes = np.unique(word_codes(np.asarray(hole, dtype=np.int64), s.alphabet_size))
    for i in range(m - h, 0, -1):
        hit = np.isin(word_codes(W.words[:, i:i + h], s.alphabet_size), hole_codes)
        second[hit] = i
    for i in range(1, min(k_max, m - h) + 1):
        law[i] = w0[inU & (second == i)].sum() / mu_u
    W.keep(inU & (second > m - h))
    tail = [float(W.weights().sum()) / mu_u]
    for i in range(m - h + 1, k_max + 1):
        W.extend(cap)
        ret = suffix[W.state]
        law[i] = W.weights(W.state[ret], W.logw[ret]).sum() / mu_u
        W.keep(~ret)
        tail.append(float(W.weights().sum()) / mu_u)
    tail_mass = tail[-1]
    K = k_max
    head = float(np.dot(np.arange(k_max + 1), law))
    lam_n = perturbed_eigenvalue(s, phi, hole, m).lambda_n
    r = lam_n / spectral_data(s, phi, m).lambda_
    # decay is measured over blocks of q steps so that periodic survivor
    # systems, whose tail drops in stairs, still give a ratio below one
    q = TAIL_BLOCK
    obs = [tail[i + q] / tail[i] for i in range(max(0, len(tail) - 3 * q), len(tail) - q)
           if tail[i] > 0]
    r_hi = max([r ** q] + obs)
    low = head + (K + 1) * tail_mass
    if tail_mass == 0:
        high = head
    elif r_hi < 1:
        high = head + K * tail_mass + q * tail_mass / (1 - r_hi)
    else:
        high = math.inf
    # Gibbs weights carry the 1e-12 eigenvector tolerance, amplified by the sums
    slack = 1e-10 * max(1.0, 1.0 / mu_u)
    low -= slack
    high += slack
    rhs = 1.0 / mu_u
    gap = 0.0 if low <= rhs <= high else min(abs(rhs - low), abs(rhs - high))
    return KacResult(low, high, rhs, gap, k_max, tail_mass, r_hi, law)
