"""Alphabets, symbol strings, string matchings, edit and suffix distances,
and epsilon-synchronization strings.

Symbols are integers ``0..size-1``. Index arithmetic that the literature writes
1-based (interval ``S[i, j)``, violation triples) is converted at the API edge:
``Violation`` triples are 1-based, everything else is ordinary Python slicing.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from . import _kernels

STAR = None
"""Placeholder used inside string matchings for an inserted/deleted slot."""

RationalLike = Union[Fraction, int, float, str]


def as_fraction(x: RationalLike) -> Fraction:
    """Convert ``x`` to an exact Fraction; floats go through their decimal repr."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class Alphabet:
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"alphabet size must be positive, got {self.size}")

    def __contains__(self, sym) -> bool:
        return isinstance(sym, (int, np.integer)) and 0 <= sym < self.size


@dataclass(frozen=True)
class SymbolString:
    alphabet: Alphabet
    symbols: Tuple[int, ...]

    def __post_init__(self):
        syms = tuple(int(x) for x in self.symbols)
        object.__setattr__(self, "symbols", syms)
        for x in syms:
            if not 0 <= x < self.alphabet.size:
                raise ValueError(f"symbol {x} outside alphabet of size {self.alphabet.size}")

    @classmethod
    def of(cls, symbols: Iterable[int], size: Optional[int] = None) -> "SymbolString":
        syms = tuple(int(x) for x in symbols)
        if size is None:
            size = max(syms, default=0) + 1
        return cls(Alphabet(size), syms)

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, key):
        if isinstance(key, slice):
            return SymbolString(self.alphabet, self.symbols[key])
        return self.symbols[key]

    def __add__(self, other: "SymbolString") -> "SymbolString":
        _check_same_alphabet(self, other)
        return SymbolString(self.alphabet, self.symbols + other.symbols)

    def to_array(self) -> np.ndarray:
        return np.asarray(self.symbols, dtype=np.int64)


StringLike = Union[SymbolString, Sequence[int], str]


def _check_same_alphabet(a, b) -> None:
    if isinstance(a, SymbolString) and isinstance(b, SymbolString) and a.alphabet != b.alphabet:
        raise ValueError(f"alphabet mismatch: {a.alphabet.size} vs {b.alphabet.size}")


def _array(x: StringLike) -> np.ndarray:
    if isinstance(x, SymbolString):
        return x.to_array()
    if isinstance(x, str):
        return np.asarray([ord(ch) for ch in x], dtype=np.int64)
    if isinstance(x, np.ndarray):
        return x.astype(np.int64, copy=False).reshape(-1)
    return np.asarray(list(x), dtype=np.int64).reshape(-1)


def _symbols(x: StringLike) -> Tuple:
    if isinstance(x, SymbolString):
        return x.symbols
    return tuple(x)


def lcs(a: StringLike, b: StringLike) -> int:
    """Length of the longest common subsequence of ``a`` and ``b``."""
    _check_same_alphabet(a, b)
    return int(_kernels.lcs_length(_array(a), _array(b)))


def edit_distance(a: StringLike, b: StringLike) -> int:
    """Insertion/deletion edit distance: ``|a| + |b| - 2 * lcs(a, b)``."""
    _check_same_alphabet(a, b)
    x, y = _array(a), _array(b)
    return int(len(x) + len(y) - 2 * _kernels.lcs_length(x, y))


# ---------------------------------------------------------------------------
# String matchings


def _compatible(u, v) -> bool:
    return u is STAR or v is STAR or u == v


@dataclass(frozen=True)
class StringMatching:
    """An alignment ``(tau1, tau2)`` of two strings using ``STAR`` placeholders."""

    tau1: Tuple
    tau2: Tuple

    def __post_init__(self):
        t1, t2 = tuple(self.tau1), tuple(self.tau2)
        object.__setattr__(self, "tau1", t1)
        object.__setattr__(self, "tau2", t2)
        if len(t1) != len(t2):
            raise ValueError("tau1 and tau2 must have equal length")
        for k, (u, v) in enumerate(zip(t1, t2)):
            if u is STAR and v is STAR:
                raise ValueError(f"position {k} is a star on both sides")
            if not _compatible(u, v):
                raise ValueError(f"position {k} pairs distinct symbols {u} and {v}")

    def __len__(self) -> int:
        return len(self.tau1)

    @property
    def source(self) -> Tuple[int, ...]:
        return delete_stars(self.tau1)

    @property
    def target(self) -> Tuple[int, ...]:
        return delete_stars(self.tau2)

    def star_count(self) -> int:
        return star_count(self.tau1) + star_count(self.tau2)

    @classmethod
    def from_ops(cls, source: Sequence[int], target: Sequence[int], ops: str) -> "StringMatching":
        """Build from an op string: ``M`` match, ``D`` source symbol dropped, ``I`` target symbol added."""
        t1, t2 = [], []
        i = j = 0
        for op in ops:
            if (op in "MD" and i >= len(source)) or (op in "MI" and j >= len(target)):
                raise ValueError("ops overrun the strings")
            if op == "M":
                t1.append(source[i])
                t2.append(target[j])
                i += 1
                j += 1
            elif op == "D":
                t1.append(source[i])
                t2.append(STAR)
                i += 1
            elif op == "I":
                t1.append(STAR)
                t2.append(target[j])
                j += 1
            else:
                raise ValueError(f"unknown op {op!r}")
        if i != len(source) or j != len(target):
            raise ValueError("ops do not consume both strings")
        return cls(tuple(t1), tuple(t2))


def star_count(tau: Sequence) -> int:
    return sum(1 for x in tau if x is STAR)


def delete_stars(tau: Sequence) -> Tuple[int, ...]:
    return tuple(x for x in tau if x is not STAR)


def matching_apply(s: StringLike, m: StringMatching) -> Tuple[int, ...]:
    """Return the post-channel string ``del(m.tau2)``; ``del(m.tau1)`` must equal ``s``."""
    if tuple(_symbols(s)) != m.source:
        raise ValueError("matching does not start from the given string")
    target = m.target
    if isinstance(s, SymbolString):
        return SymbolString(s.alphabet, target)
    return target


# ---------------------------------------------------------------------------
# Suffix distance


def max_suffix_ratio(ops: str) -> Union[Fraction, float]:
    """Worst suffix star density of a matching given as an op string (see ``StringMatching.from_ops``).

    Density of a suffix is (stars in it) / (source symbols in it); a suffix with
    stars but no source symbols has infinite density.
    """
    stars = denom = 0
    worst: Union[Fraction, float] = Fraction(0)
    for op in reversed(ops):
        if op == "M":
            denom += 1
        elif op == "D":
            stars += 1
            denom += 1
        else:
            stars += 1
        if denom == 0:
            return math.inf
        r = Fraction(stars, denom)
        if r > worst:
            worst = r
    return worst


def _trace(g: np.ndarray, a: np.ndarray, b: np.ndarray, num: int, den: int) -> str:
    inf = _kernels.INF
    n, m = len(a), len(b)
    i = j = 0
    ops = []
    while i < n or j < m:
        v = g[i, j]
        if i < n and j < m and a[i] == b[j] and g[i + 1, j + 1] < inf and g[i + 1, j + 1] - num == v:
            ops.append("M")
            i += 1
            j += 1
        elif i < n and g[i + 1, j] < inf and g[i + 1, j] + den - num == v:
            ops.append("D")
            i += 1
        else:
            ops.append("I")
            j += 1
    return "".join(ops)


def suffix_distance_at_most(c: StringLike, ct: StringLike, theta: RationalLike) -> bool:
    """Exact test of ``SD(c, ct) <= theta``."""
    theta = as_fraction(theta)
    a, b = _array(c), _array(ct)
    g = _kernels.suffix_table(a, b, theta.numerator, theta.denominator, False)
    return bool(g[0, 0] < _kernels.INF)


def _refine(a: np.ndarray, b: np.ndarray, theta: Fraction) -> Fraction:
    # theta is attained by some matching; keep asking for a strictly better one
    while theta > 0:
        g = _kernels.suffix_table(a, b, theta.numerator, theta.denominator, True)
        if g[0, 0] >= _kernels.INF:
            return theta
        theta = max_suffix_ratio(_trace(g, a, b, theta.numerator, theta.denominator))
    return theta


def suffix_distance(c: StringLike, ct: StringLike) -> Union[Fraction, float]:
    """Exact suffix distance ``SD(c, ct)`` as a Fraction.

    Returns ``math.inf`` when ``c`` is empty and ``ct`` is not (every matching
    then has a suffix with stars but no symbols of ``c``).
    """
    _check_same_alphabet(c, ct)
    a, b = _array(c), _array(ct)
    n, m = len(a), len(b)
    if n == 0 and m == 0:
        raise ValueError("suffix distance of two empty strings is undefined")
    if n == 0:
        return math.inf
    # all ct symbols unmatched first, then all c symbols unmatched
    start = Fraction(n + m, n) if m else Fraction(1)
    return _refine(a, b, start)


def suffix_distance_below(c: StringLike, ct: StringLike, theta: RationalLike) -> Optional[Fraction]:
    """Exact ``SD(c, ct)`` if it is at most ``theta``, else None."""
    theta = as_fraction(theta)
    a, b = _array(c), _array(ct)
    g = _kernels.suffix_table(a, b, theta.numerator, theta.denominator, False)
    if g[0, 0] >= _kernels.INF:
        return None
    first = max_suffix_ratio(_trace(g, a, b, theta.numerator, theta.denominator))
    return _refine(a, b, first)


# ---------------------------------------------------------------------------
# Synchronization strings


class Violation(NamedTuple):
    """1-based triple ``i < j < k`` with ``ED(S[i,j), S[j,k)) <= (1 - eps)(k - i)``."""

    i: int
    j: int
    k: int


def verify_sync(s: StringLike, eps: RationalLike) -> Optional[Violation]:
    """Return None if ``s`` is an eps-synchronization string, else the first violating triple."""
    eps = as_fraction(eps)
    if not 0 < eps < 1:
        raise ValueError("eps must lie strictly between 0 and 1")
    i, j, k = _kernels.first_sync_violation(_array(s), eps.numerator, eps.denominator)
    if i < 0:
        return None
    return Violation(int(i) + 1, int(j) + 1, int(k) + 1)


class SyncConstructionError(RuntimeError):
    pass


@dataclass(frozen=True)
class SyncString:
    string: SymbolString
    eps: Fraction

    def __post_init__(self):
        object.__setattr__(self, "eps", as_fraction(self.eps))
        bad = verify_sync(self.string, self.eps)
        if bad is not None:
            raise ValueError(f"not a {self.eps}-synchronization string: violation {tuple(bad)}")

    def __len__(self) -> int:
        return len(self.string)

    def __getitem__(self, key):
        return self.string[key]

    @property
    def alphabet(self) -> Alphabet:
        return self.string.alphabet

    def to_json(self) -> str:
        return json.dumps(
            {"eps": f"{self.eps.numerator}/{self.eps.denominator}",
             "alphabet": self.alphabet.size,
             "symbols": list(self.string.symbols)})

    @classmethod
    def from_json(cls, text: str) -> "SyncString":
        d = json.loads(text)
        return cls(SymbolString(Alphabet(d["alphabet"]), tuple(d["symbols"])), Fraction(d["eps"]))

    def to_text(self) -> str:
        return " ".join(str(x) for x in self.string.symbols)


def suggest_alphabet_size(eps: RationalLike) -> int:
    """Heuristic alphabet size for ``gen_sync``: ``max(8, ceil(eps**-4))``."""
    eps = as_fraction(eps)
    return max(8, max(4, math.ceil(1 / eps ** 4)))


def gen_sync(n: int, eps: RationalLike, sigma: Union[Alphabet, int], seed: int,
             budget: Optional[int] = None) -> SyncString:
    """Random eps-synchronization string of length ``n`` by local repair.

    Start from a uniform string; while ``verify_sync`` reports a violation
    ``(i, j, k)`` resample ``S[i, k)`` uniformly. Gives up with
    ``SyncConstructionError`` after ``budget`` resamples (default ``10 n^2``).
    """
    eps = as_fraction(eps)
    if not 0 < eps < 1:
        raise ValueError("eps must lie strictly between 0 and 1")
    alphabet = sigma if isinstance(sigma, Alphabet) else Alphabet(sigma)
    if budget is None:
        budget = 10 * n * n
    rng = random.Random(seed)
    s = np.asarray([rng.randrange(alphabet.size) for _ in range(n)], dtype=np.int64)
    for _ in range(budget + 1):
        i, j, k = _kernels.first_sync_violation(s, eps.numerator, eps.denominator)
        if i < 0:
            return SyncString(SymbolString(alphabet, tuple(int(x) for x in s)), eps)
        for p in range(i, k):
            s[p] = rng.randrange(alphabet.size)
    raise SyncConstructionError(
        f"no {eps}-synchronization string of length {n} over {alphabet.size} symbols "
        f"after {budget} resamples")
