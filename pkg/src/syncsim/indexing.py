"""Streaming index decoding against a synchronization string."""

from __future__ import annotations

from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import _kernels
from .strings import STAR, StringMatching, SyncString, suffix_distance_below


class _Top:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "TOP"

    def __reduce__(self):
        return (_Top, ())


TOP = _Top()
"""Decoder answer meaning "no prefix is close enough"."""

DecodeResult = Union[int, _Top]

PREFIX_FIRST = "prefix_first"
RECEIVED_FIRST = "received_first"


class IndexingDecoder:
    """Minimum-suffix-distance index decoder.

    After every fed symbol the decoder compares the received stream with every
    prefix ``S[1, i]`` of the synchronization string and answers the 1-based
    ``i`` of smallest suffix distance if that distance is at most ``1 - eps``
    (ties go to the smaller ``i``), otherwise ``TOP``.

    ``orientation`` picks the argument order of the suffix distance:
    ``"prefix_first"`` uses ``SD(S[1, i], received)``, ``"received_first"``
    uses ``SD(received, S[1, i])``.
    """

    def __init__(self, sync: SyncString, orientation: str = PREFIX_FIRST):
        if orientation not in (PREFIX_FIRST, RECEIVED_FIRST):
            raise ValueError(f"unknown orientation {orientation!r}")
        self.sync = sync
        self.orientation = orientation
        self.threshold = 1 - sync.eps
        self.tight = (1 - sync.eps) ** 2
        self._s = sync.string.to_array()
        self._received: List[int] = []
        self.uniqueness_violations = 0
        self.last_distance: Optional[Fraction] = None

    @property
    def received(self) -> Tuple[int, ...]:
        return tuple(self._received)

    def _candidates(self, length: int) -> np.ndarray:
        # every matching within the threshold ends in a match of the last symbols,
        # and its total star count bounds how far i can drift from the received length
        theta = self.threshold
        n = len(self._s)
        last = self._received[-1]
        if self.orientation == PREFIX_FIRST:
            lo = Fraction(length) / (1 + theta)
            hi = Fraction(length) / (1 - theta)
        else:
            lo = length * (1 - theta)
            hi = length * (1 + theta)
        first = max(1, int(np.ceil(float(lo))) - 1)
        last_i = min(n, int(float(hi)) + 1)
        idx = [i for i in range(first, last_i + 1) if self._s[i - 1] == last]
        return np.asarray(idx, dtype=np.int64)

    def feed(self, sym: int) -> DecodeResult:
        if sym not in self.sync.alphabet:
            raise ValueError(f"symbol {sym} outside the synchronization alphabet")
        self._received.append(int(sym))
        recv = np.asarray(self._received, dtype=np.int64)
        cand = self._candidates(len(recv))
        if len(cand) == 0:
            self.last_distance = None
            return TOP
        th = self.threshold
        if self.orientation == PREFIX_FIRST:
            ok = [bool(_kernels.suffix_table(self._s[:i], recv, th.numerator, th.denominator, False)[0, 0]
                       < _kernels.INF) for i in cand]
        else:
            ok = _kernels.feasible_prefixes(recv, self._s, th.numerator, th.denominator, cand, False)
        best_i, best_v = None, None
        close = 0
        for i, good in zip(cand, ok):
            if not good:
                continue
            if self.orientation == PREFIX_FIRST:
                v = suffix_distance_below(self._s[:i], recv, th)
            else:
                v = suffix_distance_below(recv, self._s[:i], th)
            if v <= self.tight:
                close += 1
            if best_v is None or v < best_v:
                best_i, best_v = int(i), v
        if close > 1:
            self.uniqueness_violations += 1
        self.last_distance = best_v
        return TOP if best_i is None else best_i


def decode_stream(sync: SyncString, received: Sequence[int],
                  orientation: str = PREFIX_FIRST) -> List[DecodeResult]:
    dec = IndexingDecoder(sync, orientation)
    return [dec.feed(x) for x in received]


def transmission_pairs(truth: StringMatching) -> List[Tuple[int, int]]:
    """(received position j, sent position i), both 1-based, for every successfully transmitted symbol."""
    out = []
    i = j = 0
    for u, v in zip(truth.tau1, truth.tau2):
        if u is not STAR:
            i += 1
        if v is not STAR:
            j += 1
        if u is not STAR and v is not STAR:
            out.append((j, i))
    return out


def count_misdecodings(decoded: Sequence[DecodeResult], truth: StringMatching) -> Tuple[int, int]:
    """Return (misdecodings, successfully transmitted) for a decoded stream.

    ``decoded[j-1]`` is the answer for the j-th received symbol. A received
    symbol is successfully transmitted when the matching pairs it with a sent
    symbol; it is misdecoded when the answer is not that sent position (TOP
    always counts as wrong).
    """
    received = len(truth.target)
    if len(decoded) != received:
        raise ValueError(f"{len(decoded)} decoded results for {received} received symbols")
    pairs = transmission_pairs(truth)
    wrong = sum(1 for j, i in pairs if decoded[j - 1] != i)
    return wrong, len(pairs)


def misdecoding_bound(insertions: int, deletions: int, eps) -> Fraction:
    """``c_i / (1 - eps) + c_d * eps / (1 - eps)`` as an exact Fraction."""
    eps = Fraction(eps)
    return Fraction(insertions) / (1 - eps) + deletions * eps / (1 - eps)
