"""Tree codes, edit-distance tree codes and the constructions linking them to synchronization strings.

Trees are complete ``d``-ary trees stored level by level: ``labels[l - 1][k]``
is the label of the edge entering node ``(l, k)``. The root is ``(0, 0)`` and
the children of ``(l, k)`` are ``(l + 1, k*d + j)``.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .strings import (Alphabet, SymbolString, SyncString, as_fraction, edit_distance,
                      suffix_distance_below)

Node = Tuple[int, int]
ROOT: Node = (0, 0)


@dataclass(frozen=True)
class PrefixCodeTree:
    arity: int
    depth: int
    sigma: int
    labels: Tuple[Tuple[int, ...], ...]
    factors: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.arity < 1 or self.depth < 0:
            raise ValueError("arity must be positive and depth non-negative")
        if len(self.labels) != self.depth:
            raise ValueError(f"expected {self.depth} levels of labels")
        for lvl, row in enumerate(self.labels, start=1):
            if len(row) != self.arity ** lvl:
                raise ValueError(f"level {lvl} needs {self.arity ** lvl} labels")
            if any(not 0 <= x < self.sigma for x in row):
                raise ValueError(f"label outside alphabet of size {self.sigma} on level {lvl}")

    @classmethod
    def from_levels(cls, arity: int, sigma: int, levels: Sequence[Sequence[int]],
                    factors: Sequence[int] = ()) -> "PrefixCodeTree":
        return cls(arity, len(levels), sigma, tuple(tuple(int(x) for x in row) for row in levels),
                   tuple(factors))

    # structure

    def nodes(self) -> Iterator[Node]:
        for lvl in range(self.depth + 1):
            for k in range(self.arity ** lvl):
                yield (lvl, k)

    def label(self, node: Node) -> int:
        lvl, k = node
        return self.labels[lvl - 1][k]

    def parent(self, node: Node) -> Node:
        lvl, k = node
        if lvl == 0:
            raise ValueError("the root has no parent")
        return (lvl - 1, k // self.arity)

    def children(self, node: Node) -> List[Node]:
        lvl, k = node
        if lvl >= self.depth:
            return []
        return [(lvl + 1, k * self.arity + j) for j in range(self.arity)]

    def ancestor(self, node: Node, lvl: int) -> Node:
        d, k = node
        return (lvl, k // self.arity ** (d - lvl))

    def word(self, node: Node) -> Tuple[int, ...]:
        """W(node): labels from the root down to ``node``."""
        d, k = node
        return tuple(self.labels[t - 1][k // self.arity ** (d - t)] for t in range(1, d + 1))

    def subtree(self, node: Node) -> Iterator[Node]:
        """``node`` and all its descendants."""
        d, k = node
        for lvl in range(d, self.depth + 1):
            span = self.arity ** (lvl - d)
            for j in range(k * span, (k + 1) * span):
                yield (lvl, j)

    def encode(self, x: Sequence[int]) -> Tuple[int, ...]:
        """C(x): the labels along the path chosen by the input symbols ``x``."""
        k = 0
        out = []
        for lvl, xi in enumerate(x, start=1):
            if not 0 <= xi < self.arity:
                raise ValueError("input symbol outside the input alphabet")
            k = k * self.arity + xi
            out.append(self.labels[lvl - 1][k])
        return tuple(out)

    # serialization

    def to_json(self) -> str:
        return json.dumps({"arity": self.arity, "depth": self.depth, "sigma": self.sigma,
                           "factors": list(self.factors), "labels": [list(r) for r in self.labels]})

    @classmethod
    def from_json(cls, text: str) -> "PrefixCodeTree":
        d = json.loads(text)
        return cls.from_levels(d["arity"], d["sigma"], d["labels"], d.get("factors", ()))


# ---------------------------------------------------------------------------
# Tree codes (Hamming)


@dataclass(frozen=True)
class Ok:
    def __bool__(self):
        return True


OK = Ok()


@dataclass(frozen=True)
class Witness:
    v1: Node
    v2: Node
    diverge: int      # l: depth below the least common ancestor
    distance: int     # Hamming distance of the divergent suffixes

    def __bool__(self):
        return False


def _level_words(t: PrefixCodeTree, lvl: int) -> np.ndarray:
    w = np.zeros((t.arity ** lvl, lvl), dtype=np.int64)
    for k in range(t.arity ** lvl):
        w[k] = t.word((lvl, k))
    return w


def _pairs(t: PrefixCodeTree) -> Iterator[Tuple[Node, Node, int, int]]:
    """Every same-depth pair with (l, Hamming distance of the last l labels), level by level."""
    for h in range(1, t.depth + 1):
        w = _level_words(t, h)
        n = len(w)
        for a in range(n):
            b = np.arange(a + 1, n)
            if not len(b):
                continue
            # l = h - depth(lca); the lca depth is the length of the common prefix of the k's in base d
            diff = w[b] != w[a]
            l = np.zeros(len(b), dtype=np.int64)
            x, y = np.full(len(b), a), b.copy()
            while True:
                moving = x != y
                if not moving.any():
                    break
                l += moving
                x, y = x // t.arity, y // t.arity
            dist = np.array([diff[i, h - l[i]:].sum() for i in range(len(b))])
            for i in range(len(b)):
                yield (h, a), (h, int(b[i])), int(l[i]), int(dist[i])


def verify_tree_code(t: PrefixCodeTree, alpha) -> Union[Ok, Witness]:
    """Check ``Hamming(W(v1), W(v2)) >= alpha * l`` for every same-depth pair."""
    alpha = as_fraction(alpha)
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    for v1, v2, l, dist in _pairs(t):
        if dist < alpha * l:
            return Witness(v1, v2, l, dist)
    return OK


def tree_code_distance(t: PrefixCodeTree) -> Fraction:
    """Largest alpha the tree satisfies: min over pairs of distance / l (1 if there are no pairs)."""
    best = Fraction(1)
    for _, _, l, dist in _pairs(t):
        best = min(best, Fraction(dist, l))
    return best


@dataclass(frozen=True)
class NotFound:
    exhausted: bool   # False: the node budget ran out first, so the verdict is inconclusive
    visited: int

    def __bool__(self):
        return False


def search_tree_code(d: int, depth: int, sigma: int, alpha, budget: int = 2_000_000,
                     seed: Optional[int] = None) -> Union[PrefixCodeTree, NotFound]:
    """Backtracking search, one node at a time in level order, for a tree code of distance ``alpha``.

    Labels are tried in increasing order, or in a seeded random order per node
    when ``seed`` is given.
    """
    alpha = as_fraction(alpha)
    if not (1 <= d <= 3 and 0 <= depth <= 10 and 1 <= sigma <= 16):
        raise ValueError("search is limited to d <= 3, depth <= 10, sigma <= 16")
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    rng = random.Random(seed) if seed is not None else None
    order = [(lvl, k) for lvl in range(1, depth + 1) for k in range(d ** lvl)]
    words: Dict[Node, Tuple[int, ...]] = {ROOT: ()}
    visited = 0

    def ok(node: Node, w: Tuple[int, ...]) -> bool:
        lvl, k = node
        for j in range(k):
            other = words[(lvl, j)]
            a, b, l = k, j, 0
            while a != b:
                a, b, l = a // d, b // d, l + 1
            dist = sum(1 for p, q in zip(w[lvl - l:], other[lvl - l:]) if p != q)
            if dist < alpha * l:
                return False
        return True

    def go(i: int) -> bool:
        nonlocal visited
        if i == len(order):
            return True
        node = order[i]
        base = words[(node[0] - 1, node[1] // d)]
        choices = list(range(sigma))
        if rng is not None:
            rng.shuffle(choices)
        for x in choices:
            visited += 1
            if visited > budget:
                return False
            w = base + (x,)
            if ok(node, w):
                words[node] = w
                if go(i + 1):
                    return True
                del words[node]
        return False

    if go(0):
        levels = [[words[(lvl, k)][-1] for k in range(d ** lvl)] for lvl in range(1, depth + 1)]
        return PrefixCodeTree.from_levels(d, sigma, levels)
    return NotFound(exhausted=visited <= budget, visited=visited)


# ---------------------------------------------------------------------------
# Edit-distance tree codes


@dataclass(frozen=True)
class LambdaWitness:
    a: Node
    b: Node
    d: Node
    e: Node
    ad: Tuple[int, ...]
    be: Tuple[int, ...]
    ed: int

    def __bool__(self):
        return False

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.ed, len(self.ad) + len(self.be))


@lru_cache(maxsize=1 << 18)
def _ed(x: Tuple[int, ...], y: Tuple[int, ...]) -> int:
    return edit_distance(x, y)


def _lambdas(t: PrefixCodeTree) -> Iterator[Tuple[Node, Node, Node, Node, Tuple[int, ...], Tuple[int, ...]]]:
    """All (A, B, D, E): B internal, D and E under distinct children of B, A an ancestor of B or B."""
    words = {v: t.word(v) for v in t.nodes()}
    for b in t.nodes():
        kids = t.children(b)
        if len(kids) < 2:
            continue
        under = [list(t.subtree(c)) for c in kids]
        for i, left in enumerate(under):
            for j, right in enumerate(under):
                if i == j:
                    continue
                for a_lvl in range(b[0] + 1):
                    a = t.ancestor(b, a_lvl)
                    for dn in left:
                        ad = words[dn][a_lvl:]
                        for en in right:
                            yield a, b, dn, en, ad, words[en][b[0]:]


def find_bad_lambda(t: PrefixCodeTree, eps) -> Union[Ok, LambdaWitness]:
    """First (A, B, D, E) with ``ED(AD, BE) <= (1 - eps)(|AD| + |BE|)``, else OK."""
    eps = as_fraction(eps)
    slack = 1 - eps
    for a, b, dn, en, ad, be in _lambdas(t):
        total = len(ad) + len(be)
        if abs(len(ad) - len(be)) > slack * total:
            continue    # ED >= length difference already exceeds the threshold
        ed = _ed(ad, be)
        if ed <= slack * total:
            return LambdaWitness(a, b, dn, en, ad, be, ed)
    return OK


def min_lambda_ratio(t: PrefixCodeTree) -> Optional[Fraction]:
    """Min of ``ED(AD, BE) / (|AD| + |BE|)`` over all lambdas (None if the tree has none).

    The tree is an eps-edit-distance tree code exactly when this exceeds ``1 - eps``.
    """
    best = None
    for _, _, _, _, ad, be in _lambdas(t):
        total = len(ad) + len(be)
        if best is not None and Fraction(abs(len(ad) - len(be)), total) >= best:
            continue
        r = Fraction(_ed(ad, be), total)
        if best is None or r < best:
            best = r
    return best


# ---------------------------------------------------------------------------
# Constructions


class ConstructionError(ValueError):
    """An input fails the precondition of a construction."""


def concat_sync(t: PrefixCodeTree, s: SyncString, alpha) -> PrefixCodeTree:
    """Pair every level-i label with ``S[i]``; labels are encoded as ``a * |S_alphabet| + b``.

    ``t`` must be a tree code of distance ``1 - alpha``.
    """
    alpha = as_fraction(alpha)
    if len(s) != t.depth:
        raise ConstructionError(f"synchronization string length {len(s)} != tree depth {t.depth}")
    if alpha < 1 and not verify_tree_code(t, 1 - alpha):
        raise ConstructionError(f"tree is not a tree code of distance {1 - alpha}")
    q = s.string.alphabet.size
    levels = [[x * q + s.string[lvl] for x in row] for lvl, row in enumerate(t.labels)]
    factors = (t.factors or (t.sigma,)) + (q,)
    return PrefixCodeTree.from_levels(t.arity, t.sigma * q, levels, factors)


def _check_path(t: PrefixCodeTree, path: Sequence[Node]) -> None:
    if len(path) < 2:
        raise ValueError("a path needs at least two nodes")
    for u, v in zip(path, path[1:]):
        if not (0 <= v[0] <= t.depth and 0 <= v[1] < t.arity ** v[0]) or t.parent(v) != tuple(u):
            raise ValueError(f"{v} is not a child of {u}")


def extract_sync_path(c: PrefixCodeTree, path: Sequence[Node], l: int, eps) -> SyncString:
    """Labels along a down-going path zipped with the counter ``1, 2, ..., l, 1, 2, ...``.

    Symbol ``i`` (0-based) is ``label * l + (i mod l)``; the result claims
    ``eps + 1/l`` where ``eps`` is the tree's edit-distance parameter.
    """
    if l < 1:
        raise ValueError("l must be positive")
    path = [tuple(v) for v in path]
    _check_path(c, path)
    claim = as_fraction(eps) + Fraction(1, l)
    if not 0 < claim < 1:
        raise ConstructionError(f"eps + 1/l = {claim} is not a usable synchronization parameter")
    syms = tuple(c.label(v) * l + i % l for i, v in enumerate(path[1:]))
    return SyncString(SymbolString(Alphabet(c.sigma * l), syms), claim)


def rightmost_path(t: PrefixCodeTree) -> List[Node]:
    return [(lvl, t.arity ** lvl - 1) for lvl in range(t.depth + 1)]


def extend_sync_to_edtc(s: SyncString, c_prime: PrefixCodeTree) -> PrefixCodeTree:
    """Relabel the always-last-child path of ``c_prime`` with ``S``.

    S's symbols are offset by ``c_prime.sigma`` so the two alphabets stay disjoint.
    """
    if len(s) != c_prime.depth:
        raise ConstructionError(f"synchronization string length {len(s)} != tree depth {c_prime.depth}")
    off = c_prime.sigma
    levels = [list(row) for row in c_prime.labels]
    for lvl, (_, k) in enumerate(rightmost_path(c_prime)[1:], start=1):
        levels[lvl - 1][k] = off + s.string[lvl - 1]
    return PrefixCodeTree.from_levels(c_prime.arity, off + s.string.alphabet.size, levels)


# ---------------------------------------------------------------------------
# Decoding


class UniquenessViolation(AssertionError):
    """Two distinct codeword prefixes are within the decoding radius."""


def codeword_prefixes(c: PrefixCodeTree) -> List[Tuple[int, ...]]:
    """Every distinct ``C(x)[1, i]`` for ``i >= 1``."""
    seen = []
    found = set()
    for v in c.nodes():
        if v[0] == 0:
            continue
        w = c.word(v)
        if w not in found:
            found.add(w)
            seen.append(w)
    return seen


def sd_unique_decode(c: PrefixCodeTree, ct: Sequence[int], eps,
                     prefixes: Optional[Sequence[Tuple[int, ...]]] = None
                     ) -> Optional[Tuple[Tuple[int, ...], Fraction]]:
    """The codeword prefix within suffix distance ``1 - eps`` of ``ct``, or None.

    Raises UniquenessViolation if more than one prefix qualifies.
    """
    theta = 1 - as_fraction(eps)
    ct = np.asarray(list(ct), dtype=np.int64)
    if not len(ct):
        raise ValueError("received string is empty")
    hits = []
    for w in (codeword_prefixes(c) if prefixes is None else prefixes):
        v = suffix_distance_below(np.asarray(w, dtype=np.int64), ct, theta)
        if v is not None:
            hits.append((w, v))
    if len(hits) > 1:
        raise UniquenessViolation(f"{len(hits)} prefixes within {theta}: {hits[:2]}")
    return hits[0] if hits else None
