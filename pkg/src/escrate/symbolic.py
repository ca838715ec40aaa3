"""Subshifts of finite type, words, cylinders and symbolic points.

Words are plain tuples of integer symbols ``0..l-1``. A :class:`Subshift` can
carry display labels (the middle-third Cantor map uses the ternary digits
``"0"`` and ``"2"``) which only affect parsing and formatting.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import InsufficientDigits, StateCapExceeded

STATE_CAP = 2**20
MAX_ALPHABET = 256

Word = tuple


class Subshift:
    """One-sided subshift of finite type given by a 0/1 transition matrix.

    Parameters
    ----------
    transition : array_like, shape (l, l)
        ``transition[i, j] == 1`` iff symbol ``j`` may follow symbol ``i``.
    labels : sequence of str, optional
        Display names of the symbols, defaults to ``"0", "1", ...``.
    """

    def __init__(self, transition, labels: Sequence[str] | None = None):
        a = np.array(transition)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ValueError("transition must be a non-empty square matrix")
        if not np.all((a == 0) | (a == 1)):
            raise ValueError("transition entries must be 0 or 1")
        if a.shape[0] > MAX_ALPHABET:
            raise ValueError(f"alphabet size limited to {MAX_ALPHABET}")
        a = a.astype(np.int8)
        if not (a.any(axis=1).all() and a.any(axis=0).all()):
            raise ValueError("every row and column of the transition matrix needs a 1")
        a.setflags(write=False)
        self._a = a
        l = a.shape[0]
        if labels is None:
            labels = tuple(str(i) for i in range(l))
        labels = tuple(str(x) for x in labels)
        if len(labels) != l or len(set(labels)) != l:
            raise ValueError("labels must be distinct, one per symbol")
        self.labels = labels
        self._label_index = {lab: i for i, lab in enumerate(labels)}

    @classmethod
    def full(cls, l: int, labels=None) -> "Subshift":
        return cls(np.ones((l, l), dtype=int), labels)

    @classmethod
    def golden_mean(cls) -> "Subshift":
        return cls([[1, 1], [1, 0]])

    @property
    def transition(self) -> np.ndarray:
        return self._a

    @property
    def alphabet_size(self) -> int:
        return self._a.shape[0]

    def __eq__(self, other):
        return (isinstance(other, Subshift) and np.array_equal(self._a, other._a)
                and self.labels == other.labels)

    def __hash__(self):
        return hash((self._a.tobytes(), self._a.shape[0], self.labels))

    def __repr__(self):
        return f"Subshift(transition={self._a.tolist()}, labels={list(self.labels)})"

    def successors(self, symbol: int) -> np.ndarray:
        return np.flatnonzero(self._a[symbol])

    def is_admissible(self, word: Sequence[int]) -> bool:
        if any(not 0 <= x < self.alphabet_size for x in word):
            return False
        return all(self._a[x, y] for x, y in zip(word, word[1:]))

    def parse_word(self, text: str) -> Word:
        """Parse ``"02"`` or ``"0,2"`` into a word of symbol indices."""
        text = text.strip()
        if not text:
            return ()
        if "," in text:
            parts = [p.strip() for p in text.split(",")]
        elif all(len(lab) == 1 for lab in self.labels):
            parts = list(text)
        else:
            raise ValueError("multi-character labels require ',' separators")
        try:
            return tuple(self._label_index[p] for p in parts)
        except KeyError as exc:
            raise ValueError(f"unknown symbol {exc.args[0]!r} in {text!r}") from None

    def format_word(self, word: Sequence[int]) -> str:
        sep = "" if self.alphabet_size <= 10 and all(len(x) == 1 for x in self.labels) else ","
        return sep.join(self.labels[x] for x in word)

    def least_extension(self, word: Sequence[int], length: int) -> Word:
        """Lexicographically least admissible extension of ``word`` to ``length``."""
        w = list(word)
        while len(w) < length:
            w.append(int(self.successors(w[-1])[0]))
        return tuple(w)

    def to_json(self) -> dict:
        out = {"alphabet_size": self.alphabet_size, "transition": self._a.tolist()}
        if self.labels != tuple(str(i) for i in range(self.alphabet_size)):
            out["labels"] = list(self.labels)
        return out

    @classmethod
    def from_json(cls, data) -> "Subshift":
        if isinstance(data, str):
            data = json.loads(data)
        s = cls(data["transition"], data.get("labels"))
        if "alphabet_size" in data and data["alphabet_size"] != s.alphabet_size:
            raise ValueError("alphabet_size does not match transition matrix")
        return s


def is_mixing(s: Subshift) -> tuple[bool, int | None]:
    """Primitivity test. Returns ``(True, d)`` with the least ``d`` such that
    ``A**d > 0``, or ``(False, None)``.

    The search stops at Wielandt's bound ``(l-1)**2 + 1``.
    """
    a = s.transition.astype(bool)
    l = a.shape[0]
    power = a.copy()
    for d in range(1, (l - 1) ** 2 + 2):
        if power.all():
            return True, d
        power = (power.astype(np.int64) @ a.astype(np.int64)) > 0
    return False, None


def _check_cap(s: Subshift, n: int, cap: int):
    if s.alphabet_size ** n > cap:
        raise StateCapExceeded(
            f"{s.alphabet_size}^{n} cylinders exceed the state cap {cap}")


@lru_cache(maxsize=64)
def _cylinder_array(s: Subshift, n: int) -> np.ndarray:
    a = s.transition
    words = np.arange(s.alphabet_size, dtype=np.uint8)[:, None]
    for _ in range(n - 1):
        last = words[:, -1]
        counts = a[last].sum(axis=1)
        rows = np.repeat(np.arange(len(words)), counts)
        nxt = np.nonzero(a[last])[1].astype(np.uint8)
        words = np.hstack([words[rows], nxt[:, None]])
    words.setflags(write=False)
    return words


def cylinder_array(s: Subshift, n: int, cap: int = STATE_CAP) -> np.ndarray:
    """All admissible words of length ``n`` as a lexicographically sorted
    ``(N, n)`` uint8 array."""
    if n < 1:
        raise ValueError("depth must be >= 1")
    _check_cap(s, n, cap)
    return _cylinder_array(s, n)


def word_codes(words: np.ndarray, l: int) -> np.ndarray:
    """Base-``l`` integer codes of the rows of ``words`` (lexicographic order
    of equal-length words is numeric order of codes)."""
    codes = np.zeros(len(words), dtype=np.int64)
    for j in range(words.shape[1]):
        codes = codes * l + words[:, j]
    return codes


def enumerate_cylinders(s: Subshift, n: int, cap: int = STATE_CAP):
    """Admissible words of length ``n`` in lexicographic order.

    Returns
    -------
    words : list of tuple
    index : dict
        Maps each word to its position in ``words``.
    """
    arr = cylinder_array(s, n, cap)
    words = [tuple(int(x) for x in row) for row in arr]
    return words, {w: i for i, w in enumerate(words)}


def refine_cylinder(s: Subshift, w: Sequence[int], n: int,
                    cap: int = STATE_CAP) -> list[Word]:
    """All admissible extensions of ``w`` to length ``n``.

    The union of their cylinders is the cylinder of ``w``.
    """
    w = tuple(w)
    if n < len(w):
        raise ValueError("target depth shorter than the word")
    if not s.is_admissible(w):
        raise ValueError(f"word {w} is not admissible")
    extra = n - len(w)
    if extra == 0:
        return [w]
    if s.alphabet_size ** extra > cap:
        raise StateCapExceeded(f"refining by {extra} symbols exceeds the cap")
    out = [w]
    for _ in range(extra):
        out = [v + (int(b),) for v in out for b in s.successors(v[-1])]
    return out


def refine_words(s: Subshift, words: Iterable[Sequence[int]], n: int,
                 cap: int = STATE_CAP) -> list[Word]:
    """Refine a set of words to common length ``n``; sorted, duplicate-free."""
    out = set()
    for w in words:
        out.update(refine_cylinder(s, w, n, cap))
    return sorted(out)


def _primitive_root(block: tuple) -> tuple:
    n = len(block)
    for p in range(1, n + 1):
        if n % p == 0 and block[:p] * (n // p) == block:
            return block[:p]
    return block


@dataclass(frozen=True)
class SymbolicPoint:
    """A point of the shift space.

    Eventually periodic points are ``preperiod + period**inf``. Points known
    only through a finite prefix (for example a Champernowne sequence) set
    ``period=()`` and keep their digits in ``preperiod``; they are treated as
    non-periodic.
    """

    preperiod: Word = ()
    period: Word = ()
    label: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "preperiod", tuple(int(x) for x in self.preperiod))
        object.__setattr__(self, "period", tuple(int(x) for x in self.period))
        if not self.preperiod and not self.period:
            raise ValueError("a symbolic point needs digits")

    @classmethod
    def periodic(cls, block: Sequence[int], preperiod: Sequence[int] = ()) -> "SymbolicPoint":
        return cls(tuple(preperiod), tuple(block))

    @classmethod
    def from_prefix(cls, digits: Sequence[int], label: str = "") -> "SymbolicPoint":
        return cls(tuple(digits), (), label)

    @property
    def is_eventually_periodic(self) -> bool:
        return bool(self.period)

    @property
    def available_digits(self) -> float:
        return math.inf if self.period else len(self.preperiod)

    def digits(self, n: int) -> Word:
        """First ``n`` symbols."""
        if not self.period:
            if n > len(self.preperiod):
                raise InsufficientDigits(
                    f"point carries {len(self.preperiod)} digits, {n} requested")
            return self.preperiod[:n]
        out = list(self.preperiod[:n])
        while len(out) < n:
            out.extend(self.period)
        return tuple(out[:n])

    def shift(self, j: int = 1) -> "SymbolicPoint":
        """``sigma**j`` of the point."""
        if j < 0:
            raise ValueError("shift must be non-negative")
        if j <= len(self.preperiod):
            if not self.period and j == len(self.preperiod):
                raise InsufficientDigits("shift exhausts the available digits")
            return SymbolicPoint(self.preperiod[j:], self.period, self.label)
        k = (j - len(self.preperiod)) % len(self.period)
        return SymbolicPoint((), self.period[k:] + self.period[:k], self.label)

    def is_admissible(self, s: Subshift) -> bool:
        if self.period:
            block = self.preperiod + self.period + self.period[:1]
            return s.is_admissible(block)
        return s.is_admissible(self.preperiod)


def prime_period(z: SymbolicPoint) -> int | None:
    """Least ``p`` with ``sigma**p(z) == z``; ``None`` if ``z`` is not periodic."""
    if z.preperiod or not z.period:
        # an eventually periodic point whose preperiod repeats the tail is
        # normalised first, so only a genuine transient makes it non-periodic
        if z.period:
            pre, per = z.preperiod, z.period
            while pre and pre[-1] == per[-1]:
                pre, per = pre[:-1], (per[-1],) + per[:-1]
            if not pre:
                return len(_primitive_root(per))
        return None
    return len(_primitive_root(z.period))


def champernowne_digits(n: int) -> Word:
    """First ``n`` digits of the binary Champernowne sequence 0 1 10 11 100 ..."""
    out: list[int] = []
    k = 0
    while len(out) < n:
        out.extend(int(c) for c in format(k, "b"))
        k += 1
    return tuple(out[:n])
