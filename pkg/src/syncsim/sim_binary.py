"""Chunked binary simulation of a block corruption channel.

C_A frames Alice's bits into chunks: a header zero run, the chunk's
synchronization symbol written in ``w`` bits (MSB first) and ``r/2`` payload
rounds (``r`` in one-way mode). C_B scans for headers, decodes the
synchronization symbol and relays, skips or pads the payload so Bob stays
aligned with Alice. Every chunk is classified afterwards from ground truth.

Also here: the XOR pre-coder that suppresses header look-alikes in Alice's
stream, and the zero-run coverage analysis.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .channel import (DELIVER, Adversary, Bounce, Channel, ChannelView, DuplexAdversary,
                      DuplexChannel, Delete)
from .indexing import PREFIX_FIRST, TOP, IndexingDecoder
from .strings import SyncString, as_fraction, gen_sync

ZEROS = "zeros"
ONE_ZEROS = "one_zeros"

# GF(2^h) moduli, bit k = coefficient of x^k; all primitive
PRIMITIVE_POLYS = {
    2: 0x7, 3: 0xB, 4: 0x13, 5: 0x25, 6: 0x43, 7: 0x83, 8: 0x11D,
    9: 0x211, 10: 0x409, 11: 0x805, 12: 0x1053, 13: 0x201B, 14: 0x4443, 15: 0x8003,
    16: 0x1100B, 17: 0x20009, 18: 0x40081, 19: 0x80027, 20: 0x100009,
    21: 0x200005, 22: 0x400003, 23: 0x800021, 24: 0x1000087,
}


# ---------------------------------------------------------------------------
# Parameters


def _even_up(x: float) -> int:
    k = math.ceil(x - 1e-9)
    return k + (k % 2)


@dataclass(frozen=True)
class ChunkParams:
    """Rounded chunk geometry for a given error rate.

    ``log`` is base 2. ``r`` and ``s`` are rounded up to even integers and
    every derived quantity uses the rounded values. In one-way mode a chunk
    carries ``r`` payload bits, otherwise ``r/2`` (the other half of the
    ``r`` rounds belongs to Bob).
    """

    delta: Fraction
    c: int
    r: int
    s: int
    w: int
    sync_alphabet: int
    oneway: bool = False

    @classmethod
    def for_delta(cls, delta, c: int = 3, sync_alphabet: int = 64, oneway: bool = False) -> "ChunkParams":
        delta = as_fraction(delta)
        if not 0 < delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        lg = math.log2(1 / float(delta))
        r = _even_up(math.sqrt(lg / float(delta)))
        s = _even_up(c * lg)
        w = max(1, math.ceil(math.log2(sync_alphabet)))
        p = cls(delta, c, r, s, w, sync_alphabet, oneway)
        if p.r_c < p.s + 2:
            raise ValueError("chunk too short for its header")
        return p

    @property
    def payload(self) -> int:
        return self.r if self.oneway else self.r // 2

    @property
    def r_c(self) -> int:
        return self.s + self.w + self.payload

    @property
    def log_inv_delta(self) -> float:
        return math.log2(1 / float(self.delta))

    def r_total(self, n: int) -> int:
        return math.floor(n * (1 - float(self.delta)) * math.sqrt(float(self.delta) / self.log_inv_delta))


# ---------------------------------------------------------------------------
# GF(2^h) pre-coding


def gf_mul(a: int, b: int, h: int) -> int:
    mod = PRIMITIVE_POLYS[h]
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a >> h:
            a ^= mod
    return out


def _full_degree(x: int, h: int) -> bool:
    # x lies in no proper subfield: x^(2^d) != x for every proper divisor d of h
    for d in range(1, h):
        if h % d:
            continue
        y = x
        for _ in range(d):
            y = gf_mul(y, y, h)
        if y == x:
            return False
    return True


@lru_cache(maxsize=None)
def precode_points(h: int, count: int) -> Tuple[int, ...]:
    """The first ``count`` field points ``2, 3, ...`` that generate all of GF(2^h)."""
    out = []
    x = 2
    while len(out) < count:
        if x >= 2 ** h:
            raise ValueError(f"GF(2^{h}) has fewer than {count} points of full degree")
        if _full_degree(x, h):
            out.append(x)
        x += 1
    return tuple(out)


def precode_expand(seed_bits: Sequence[int], length: int) -> List[int]:
    """Expand ``h = len(seed_bits)`` seed bits into ``length`` pad bits.

    The seed bits are the coefficients of ``p(x) = sum_k seed[k] x^k`` over
    GF(2^h). Pad window ``m`` (bits ``m*h .. m*h + h - 1``) is ``p(x_m)``
    written LSB first, where ``x_m`` is the m-th point of full degree. For such
    a point ``1, x, ..., x^(h-1)`` is a basis, so every window is a bijective
    image of the seed and hence uniform when the seed is.
    """
    h = len(seed_bits)
    if h not in PRIMITIVE_POLYS:
        raise ValueError(f"no field table for width {h}")
    if length > 2 ** h:
        raise ValueError(f"{length} pad bits need more than the 2^{h} field points")
    coeffs = [int(b) & 1 for b in seed_bits]
    out: List[int] = []
    for x in precode_points(h, -(-length // h)):
        acc = 0
        for cf in reversed(coeffs):
            acc = gf_mul(acc, x, h) ^ cf
        out.extend((acc >> t) & 1 for t in range(h))
    return out[:length]


@lru_cache(maxsize=None)
def _precode_matrix(h: int, length: int) -> np.ndarray:
    g = np.zeros((length, h), dtype=np.uint8)
    for m, x in enumerate(precode_points(h, -(-length // h))):
        power = 1
        for k in range(h):
            for t in range(h):
                if m * h + t < length:
                    g[m * h + t, k] = (power >> t) & 1
            power = gf_mul(power, x, h)
    return g


def precode_chunk(data: Sequence[int], seed_bits: Sequence[int], payload: int) -> List[int]:
    """One chunk's payload: the seed followed by ``data XOR pad``."""
    h = len(seed_bits)
    body = payload - h
    if len(data) != body:
        raise ValueError(f"chunk carries {body} data bits, got {len(data)}")
    pad = precode_expand(seed_bits, payload)
    return list(seed_bits) + [d ^ p for d, p in zip(data, pad)]


def precode_strip(chunk: Sequence[Optional[int]], h: int, payload: int) -> List[Optional[int]]:
    """Undo ``precode_chunk``; a missing seed bit spoils the whole chunk."""
    seed = chunk[:h]
    if any(b is None for b in seed):
        return [None] * (payload - h)
    pad = precode_expand(seed, payload)
    return [None if b is None else b ^ p for b, p in zip(chunk[h:], pad)]


# ---------------------------------------------------------------------------
# Header look-alikes and interval covers


def hazard_positions(bits: Sequence[int], s: int) -> List[int]:
    """Start positions of ``1 0^(s-1)`` plus position 0 if the stream opens with ``0^s``."""
    bits = list(bits)
    out = []
    if len(bits) >= s and not any(bits[:s]):
        out.append(0)
    run = 0
    # scan zero runs; a run of >= s-1 zeros right after a 1 starts a hazard at that 1
    for i in range(len(bits) - 1, -1, -1):
        if bits[i] == 0:
            run += 1
        else:
            if run >= s - 1:
                out.append(i)
            run = 0
    return sorted(out)


@dataclass(frozen=True)
class Coverable:
    intervals: Tuple[Tuple[int, int], ...]

    @property
    def count(self) -> int:
        return len(self.intervals)


@dataclass(frozen=True)
class Excess:
    count: int


def greedy_cover(spans: Sequence[Tuple[int, int]], width: int) -> List[Tuple[int, int]]:
    """Fewest intervals ``[p, p + width)`` containing every span ``[a, b)``.

    Sweeping by right end and opening an interval at the first uncovered
    span's left end is optimal when all spans have equal length (or are points).
    """
    out: List[Tuple[int, int]] = []
    for a, b in sorted(spans, key=lambda t: (t[1], t[0])):
        if b - a > width:
            raise ValueError(f"span of length {b - a} does not fit in width {width}")
        if out and out[-1][0] <= a and b <= out[-1][1]:
            continue
        out.append((a, a + width))
    return out


def zero_run_coverage(bits: Sequence[int], s: int, r: int, budget: int) -> Union[Coverable, Excess]:
    """Cover every header look-alike with length-``r`` intervals; Excess if more than ``budget`` are needed."""
    if s < 2:
        raise ValueError("s must be at least 2")
    spans = [(p, p + s) for p in hazard_positions(bits, s)]
    cover = greedy_cover(spans, r)
    if len(cover) > budget:
        return Excess(len(cover))
    return Coverable(tuple(cover))


def _payload_matrix(params: ChunkParams, seeds: np.ndarray, data) -> np.ndarray:
    # data: one body shared by every row, or one body per row
    h = params.s // 2
    k = params.payload
    g = _precode_matrix(h, k)
    pad = (seeds.astype(np.int64) @ g.T.astype(np.int64)) & 1
    body = np.asarray(data, dtype=np.int64)
    return np.concatenate([seeds.astype(np.int64), pad[:, :k - h] ^ body], axis=1)


def _rows_with_hazard(bits: np.ndarray, s: int) -> np.ndarray:
    # a one at p followed by s - 1 zeros, entirely inside the row
    t, length = bits.shape
    if length < s:
        return np.zeros(t, dtype=bool)
    c = np.concatenate([np.zeros((t, 1), dtype=np.int64), np.cumsum(bits, axis=1)], axis=1)
    starts = np.arange(length - s + 1)
    ones_after = c[:, starts + s] - c[:, starts + 1]
    return ((bits[:, starts] == 1) & (ones_after == 0)).any(axis=1)


def hazard_union_bound(params: ChunkParams) -> float:
    """``(r/2)/(s/2) * 2^(-s/2)``: chance that a pre-coded chunk carries a header look-alike."""
    return (params.r / 2) / (params.s / 2) * 2.0 ** (-params.s / 2)


def hazard_frequency(params: ChunkParams, trials: int, seed: int,
                     data: Optional[Sequence[int]] = None) -> Tuple[int, int]:
    """Monte Carlo: (chunks with a look-alike, trials) over uniformly random seeds.

    ``data`` fixes the chunk's data bits; None draws fresh uniform data per trial.
    """
    rng = np.random.default_rng(seed)
    h = params.s // 2
    seeds = rng.integers(0, 2, size=(trials, h))
    if data is None:
        data = rng.integers(0, 2, size=(trials, params.payload - h))
    return int(_rows_with_hazard(_payload_matrix(params, seeds, data), params.s).sum()), trials


def hazard_probability_exact(params: ChunkParams, data: Sequence[int]) -> Fraction:
    """Exact look-alike probability for fixed data bits, enumerating all ``2^(s/2)`` seeds."""
    h = params.s // 2
    if h > 22:
        raise ValueError("too many seeds to enumerate")
    seeds = (np.arange(2 ** h)[:, None] >> np.arange(h)[None, :]) & 1
    hits = 0
    for lo in range(0, 2 ** h, 1 << 16):
        hits += int(_rows_with_hazard(_payload_matrix(params, seeds[lo:lo + (1 << 16)], data), params.s).sum())
    return Fraction(hits, 2 ** h)


# ---------------------------------------------------------------------------
# Receiver (C_B)


class HeaderScanner:
    """Zero-run counter that fires on a chunk header.

    ``zeros`` mode fires once ``s`` consecutive zeros have been seen.
    ``one_zeros`` mode needs a one followed by ``s - 1`` zeros.
    """

    def __init__(self, s: int, header: str = ZEROS):
        if header not in (ZEROS, ONE_ZEROS):
            raise ValueError(f"unknown header mode {header!r}")
        self.s, self.header = s, header
        self.reset()

    def reset(self) -> None:
        self.z = 0
        self.armed = self.header == ZEROS

    @property
    def target(self) -> int:
        return self.s if self.header == ZEROS else self.s - 1

    def would_fire(self, bit: int) -> bool:
        return bit == 0 and self.armed and self.z + 1 >= self.target

    def feed(self, bit: int) -> bool:
        fire = self.would_fire(bit)
        if bit:
            self.z = 0
            self.armed = True
        else:
            self.z = min(self.z + 1, self.s)
        if fire:
            self.reset()
        return fire


Tag = Optional[tuple]


class Receiver:
    """C_B's state machine: scan, read the synchronization symbol, then relay or skip the payload.

    ``bob(i, revealed) -> bit`` answers every reveal (interactive mode);
    dummy reveals are None.
    """

    def __init__(self, params: ChunkParams, sync: SyncString, header: str = ZEROS,
                 orientation: str = PREFIX_FIRST, bob: Optional[Callable] = None):
        self.p = params
        self.scanner = HeaderScanner(params.s, header)
        self.decoder = IndexingDecoder(sync, orientation)
        self.sigma = sync.string.alphabet.size
        self.bob = bob
        self.mode = "scan"
        self.left = 0
        self.buf: List[int] = []
        self.ib = 0
        self.reveals: List[Tuple[Optional[int], Tag]] = []
        self.replies: List[int] = []
        self.fires: List[Tag] = []
        self.decodes: List[Dict[str, object]] = []
        self.heard: set = set()   # provenance tags of every bit consumed

    def would_fire(self, bit: int) -> bool:
        return self.mode == "scan" and self.scanner.would_fire(bit)

    def _reveal(self, bit, tag) -> Optional[int]:
        self.reveals.append((bit, tag))
        if self.bob is None:
            return None
        y = self.bob(len(self.reveals) - 1, [b for b, _ in self.reveals])
        self.replies.append(y)
        return y

    def feed(self, bit: int, tag: Tag) -> Tuple[int, Tag]:
        """Consume one received bit; return (reply bit, reply provenance)."""
        if tag is not None:
            self.heard.add(tag)
        if self.mode == "scan":
            if self.scanner.feed(bit):
                self.fires.append(tag)
                self.mode, self.buf = "sync", []
            return 0, None
        if self.mode == "sync":
            self.buf.append(bit)
            if len(self.buf) == self.p.w:
                self._decode()
            return 0, None
        mode = self.mode
        self.left -= 1
        if self.left == 0:
            self.mode = "scan"
        if mode == "skip":
            return 0, None
        y = self._reveal(bit, tag)
        if y is None:
            return 0, None
        return y, ("B", len(self.replies) - 1)

    def _decode(self) -> None:
        v = 0
        for b in self.buf:
            v = 2 * v + b
        got = self.decoder.feed(v) if v < self.sigma else TOP
        entry = {"fire": self.fires[-1], "decoded": got, "ib": self.ib}
        self.decodes.append(entry)
        self.left = self.p.payload
        if got is TOP or got - 1 < self.ib:
            self.mode = "skip"
            entry["action"] = "skip"
        elif got - 1 == self.ib:
            self.mode = "relay"
            self.ib += 1
            entry["action"] = "relay"
        else:
            for _ in range(self.p.payload):
                self._reveal(None, None)
            self.mode = "relay"
            self.ib += 2
            entry["action"] = "pad_relay"


# ---------------------------------------------------------------------------
# Sender (C_A) framing


def frame_stream(payload_bits: Sequence[int], params: ChunkParams, sync: SyncString,
                 header: str = ZEROS) -> Tuple[List[int], List[tuple]]:
    """C_A's wire bits and their provenance tags for ``len(payload_bits) / payload`` chunks."""
    k = params.payload
    if len(payload_bits) % k:
        raise ValueError(f"payload length must be a multiple of {k}")
    chunks = len(payload_bits) // k
    if chunks > len(sync):
        raise ValueError(f"{chunks} chunks need a synchronization string at least that long")
    bits: List[int] = []
    tags: List[tuple] = []
    for i in range(chunks):
        head = [0] * params.s if header == ZEROS else [1] + [0] * (params.s - 1)
        for t, b in enumerate(head):
            bits.append(b)
            tags.append(("H", i, t))
        sym = sync.string[i]
        for t in range(params.w):
            bits.append((sym >> (params.w - 1 - t)) & 1)
            tags.append(("S", i, t))
        for t in range(k):
            j = i * k + t
            bits.append(int(payload_bits[j]))
            tags.append(("A", j))
    return bits, tags


@lru_cache(maxsize=32)
def default_sync(length: int, eps: Fraction, sigma: int, seed: int) -> SyncString:
    return gen_sync(length, eps, sigma, seed)


# ---------------------------------------------------------------------------
# Reports


GOOD, ERROR_BAD, ZERO_BAD, DECODING_BAD = "good", "error_bad", "zero_bad", "decoding_bad"


def block_bound(n: int, delta, eps) -> Fraction:
    """Bad-chunk allowance ``12 n delta (3 - eps) / (1 - eps)``."""
    delta, eps = as_fraction(delta), as_fraction(eps)
    return 12 * n * delta * (3 - eps) / (1 - eps)


def block_fraction_bound(delta, eps, r_c: int) -> Fraction:
    """Block-corruption fraction ``24 delta r_c (3 - eps) / ((1 - eps)(1 - 2 delta))``."""
    delta, eps = as_fraction(delta), as_fraction(eps)
    return 24 * delta * r_c * (3 - eps) / ((1 - eps) * (1 - 2 * delta))


@dataclass
class BlockChannelReport:
    params: ChunkParams
    n: int
    eps: Fraction
    header: str
    chunks: int                      # chunks inside C_B's listening window
    classes: List[str]
    in_sync: List[bool]
    aligned: List[bool]              # header fired on its last bit and the payload was heard
    x: List[int]
    x_tilde: List[Optional[int]]
    y: List[Optional[int]]
    y_tilde: List[Optional[int]]
    corrupted_rounds: List[int]
    certificate: List[Tuple[int, int]]
    edits: int
    hazards_in_payload: int
    data_out: Optional[List[Optional[int]]] = None
    oneway: bool = False
    clamped: int = 0

    @property
    def n_s(self) -> int:
        return self.chunks * self.params.r

    def count(self, cls: str) -> int:
        return self.classes.count(cls)

    @property
    def bad_chunks(self) -> int:
        return sum(1 for c in self.classes if c != GOOD)

    @property
    def unsynced_or_bad(self) -> List[int]:
        return [i for i, (c, s) in enumerate(zip(self.classes, self.in_sync)) if c != GOOD or not s]

    @property
    def bound(self) -> Fraction:
        return block_bound(self.n, self.params.delta, self.eps)

    def sub_bounds(self) -> Dict[str, Fraction]:
        nd = self.n * self.params.delta
        n_chunks = max(self.chunks, 1)
        delta_p = 4 * nd / n_chunks
        return {ERROR_BAD: 2 * nd, ZERO_BAD: nd,
                DECODING_BAD: 2 * n_chunks * delta_p / (1 - self.eps)}

    @property
    def verbatim_violations(self) -> int:
        """Corrupted rounds that fall in a chunk classified good and in sync."""
        block = self.params.r
        flagged = set(self.unsynced_or_bad)
        return sum(1 for q in self.corrupted_rounds if q // block not in flagged)

    @property
    def certificate_ok(self) -> bool:
        """Every corrupted round lies in a certificate block and the block count is within the bound."""
        covered = all(any(a <= q < b for a, b in self.certificate) for q in self.corrupted_rounds)
        return covered and len(self.certificate) <= self.bound

    def metrics(self) -> Dict[str, object]:
        return {
            "chunks": self.chunks,
            "bad_chunks": self.bad_chunks,
            ERROR_BAD: self.count(ERROR_BAD),
            ZERO_BAD: self.count(ZERO_BAD),
            DECODING_BAD: self.count(DECODING_BAD),
            "unsynced_or_bad": len(self.unsynced_or_bad),
            "corrupted_rounds": len(self.corrupted_rounds),
            "certificate_blocks": len(self.certificate),
            "verbatim_violations": self.verbatim_violations,
            "edits": self.edits,
            "hazards_in_payload": self.hazards_in_payload,
            "clamped": self.clamped,
        }

    def to_dict(self) -> Dict[str, object]:
        d = dict(self.metrics())
        p = self.params
        d.update(n=self.n, delta=str(p.delta), c=p.c, eps=str(self.eps), r=p.r, s=p.s, w=p.w,
                 r_c=p.r_c, header=self.header, bound=str(self.bound),
                 sub_bounds={k: str(v) for k, v in self.sub_bounds().items()},
                 classes=self.classes, in_sync=self.in_sync,
                 certificate=[list(iv) for iv in self.certificate])
        return d


def _classify(params: ChunkParams, chunks: int, touched: set, rx: Receiver,
              payload_bits: Sequence[int]) -> Tuple[List[str], List[bool], List[bool], int]:
    k = params.payload
    fired = {}
    for e in rx.decodes:
        tag = e["fire"]
        if tag is not None and tag[0] == "H" and tag[2] == params.s - 1:
            fired[tag[1]] = e
    classes, in_sync, aligned = [], [], []
    hazards = 0
    for i in range(chunks):
        body = payload_bits[i * k:(i + 1) * k]
        # only look-alikes that start at a real one inside the payload
        haz = [p for p in hazard_positions(body, params.s) if body[p] == 1]
        hazards += bool(haz)
        e = fired.get(i)
        # a chunk whose tail fell outside C_B's listening window is lost as well
        cut = ("A", (i + 1) * k - 1) not in rx.heard
        aligned.append(e is not None and not cut)
        if i in touched or e is None or cut:
            classes.append(ERROR_BAD)
        elif haz:
            classes.append(ZERO_BAD)
        elif e["decoded"] != i + 1:
            classes.append(DECODING_BAD)
        else:
            classes.append(GOOD)
        in_sync.append(e is not None and e["ib"] == i)
    return classes, in_sync, aligned, hazards


def _fit(xs: List, k: int) -> List:
    xs = list(xs[:k])
    return xs + [None] * (k - len(xs))


def _alice_payload(params: ChunkParams, data: Sequence[int], chunks: int, precode: bool,
                   rng: random.Random) -> List[int]:
    k = params.payload
    if not precode:
        need = chunks * k
        bits = list(data[:need])
        return bits + [rng.randrange(2) for _ in range(need - len(bits))]
    h = params.s // 2
    body = k - h
    if body <= 0:
        raise ValueError("payload too short for the pre-coding seed")
    out: List[int] = []
    data = list(data)
    for i in range(chunks):
        chunk = data[i * body:(i + 1) * body]
        chunk += [rng.randrange(2) for _ in range(body - len(chunk))]
        seed = [rng.randrange(2) for _ in range(h)]
        out.extend(precode_chunk(chunk, seed, k))
    return out


def run_binary(alice_bits: Optional[Sequence[int]], bob: Optional[Callable], n: int, delta, c: int,
               eps, adversary: DuplexAdversary, precode: bool = False, header: str = ZEROS,
               sync: Optional[SyncString] = None, sync_alphabet: int = 64, seed: int = 0,
               orientation: str = PREFIX_FIRST) -> BlockChannelReport:
    """Interactive binary simulation over ``n`` ping-pong bit exchanges.

    C_A sends ``n/2`` bits in chunks; C_B answers each with one bit and listens
    to the first ``floor(n(1 - 2 delta)/2)`` bits it receives. Alice's payload
    is ``alice_bits`` (random bits from ``seed`` when None or too short); with
    ``precode`` each chunk starts with ``s/2`` seed bits and masks the rest.
    ``bob(i, revealed) -> bit`` defaults to a seeded random stream.
    """
    params = ChunkParams.for_delta(delta, c, sync_alphabet)
    delta, eps = params.delta, as_fraction(eps)
    rng = random.Random(seed)
    half = n // 2
    sent_chunks = math.ceil(half / params.r_c)
    n_chunks = math.floor(n * (1 - 2 * delta) / (2 * params.r_c))
    if n_chunks < 1 or params.r_total(n) < 1:
        raise ValueError("n too small for one chunk at this delta")
    if sync is None:
        sync = default_sync(max(params.r_total(n), sent_chunks), eps, sync_alphabet, seed)
    if len(sync) < sent_chunks:
        raise ValueError(f"synchronization string shorter than the {sent_chunks} chunks sent")
    if bob is None:
        bob_stream = [rng.randrange(2) for _ in range(sent_chunks * 2 * params.payload + 1)]

        def bob(i, revealed):
            return bob_stream[i % len(bob_stream)]

    data = [] if alice_bits is None else list(alice_bits)
    payload = _alice_payload(params, data, sent_chunks, precode, rng)
    bits, tags = frame_stream(payload, params, sync, header)
    bits, tags = bits[:half], tags[:half]

    listen = math.floor(n * (1 - 2 * delta) / 2)
    rx = Receiver(params, sync, header, orientation, bob)
    ch = DuplexChannel(adversary, n, 2, delta)
    alice_reveals: Dict[int, Tuple[int, Tag]] = {}
    touched: set = set()
    received = 0
    for kpos, (bit, tag) in enumerate(zip(bits, tags)):
        chunk = kpos // params.r_c
        start = len(ch.hops)
        holder, msg, mtag = "A", bit, tag
        reply = None
        stalled = False
        while reply is None:
            recipient, got = ch.hop(holder, msg)
            rec = ch.hops[-1]
            gtag = mtag if rec.action == "deliver" else None
            if recipient == "A":
                reply = (got, gtag)
                break
            if received >= listen:
                stalled = True
                break
            received += 1
            msg, mtag = rx.feed(got, gtag)
            holder = "B"
        if any(h.action != "deliver" for h in ch.hops[start:]):
            touched.add(chunk)
        if stalled:
            break
        if tag[0] == "A":
            alice_reveals[tag[1]] = reply

    k = n_chunks * params.payload
    x = payload[:k]
    x_tilde_full = _fit(rx.reveals, k)
    y = _fit(rx.replies, k)
    y_tilde_full = [alice_reveals.get(j, (None, None)) for j in range(k)]
    corrupted = []
    for j in range(k):
        xb, xt = x_tilde_full[j] if x_tilde_full[j] is not None else (None, None)
        if xb is None or xb != x[j] or xt != ("A", j):
            corrupted.append(2 * j)
        yb, yt = y_tilde_full[j]
        if yb is None or y[j] is None or yb != y[j] or yt != ("B", j):
            corrupted.append(2 * j + 1)
    classes, in_sync, aligned, hazards = _classify(params, n_chunks, touched, rx, payload)
    report = BlockChannelReport(
        params=params, n=n, eps=eps, header=header, chunks=n_chunks, classes=classes,
        in_sync=in_sync, aligned=aligned, x=x, x_tilde=[None if t is None else t[0] for t in x_tilde_full],
        y=y, y_tilde=[b for b, _ in y_tilde_full], corrupted_rounds=corrupted,
        certificate=greedy_cover([(q, q + 1) for q in corrupted], params.r), edits=ch.edits,
        hazards_in_payload=hazards, clamped=ch.clamped)
    if precode:
        h = params.s // 2
        out: List[Optional[int]] = []
        for i in range(n_chunks):
            out.extend(precode_strip(report.x_tilde[i * params.payload:(i + 1) * params.payload],
                                     h, params.payload))
        report.data_out = out
    return report


def run_binary_oneway(payload_bits: Sequence[int], delta, c: int, eps, adversary: Adversary,
                      header: str = ZEROS, sync: Optional[SyncString] = None,
                      sync_alphabet: int = 64, sync_seed: int = 0,
                      orientation: str = PREFIX_FIRST) -> BlockChannelReport:
    """One-way binary simulation: Bob's half of every chunk is dropped.

    The wire carries exactly ``len(payload_bits) / r`` chunks, so ``n`` is that
    many chunks times ``r_c``. C_B listens to the first ``floor(n(1 - delta))``
    bits and hands Bob ``floor(n(1 - delta) / r_c) * r`` bits, dummies as None.
    """
    params = ChunkParams.for_delta(delta, c, sync_alphabet, oneway=True)
    delta, eps = params.delta, as_fraction(eps)
    chunks = len(payload_bits) // params.payload
    if sync is None:
        sync = default_sync(chunks, eps, sync_alphabet, sync_seed)
    bits, tags = frame_stream(payload_bits, params, sync, header)
    n = len(bits)
    listen = math.floor(n * (1 - delta))
    n_chunks = math.floor(n * (1 - delta) / params.r_c)
    rx = Receiver(params, sync, header, orientation)
    ch = Channel(adversary, n, 2, delta)
    if isinstance(adversary, HeaderAttack):
        adversary.bind(Receiver(params, sync, header, orientation))
    received = 0

    def arrive(sym):
        nonlocal received
        if received >= listen:
            return
        o = ch.log.origin[received]
        received += 1
        rx.feed(sym, None if o is None else tags[o - 1])

    for b in bits:
        for sym in ch.send(b):
            arrive(sym)
    for sym in ch.close():
        arrive(sym)

    touched = set()
    for t in ch.log.deleted_sends():
        touched.add((t - 1) // params.r_c)
    for o, rnd in zip(ch.log.origin, ch.log.rounds):
        if o is None:
            touched.add((rnd - 1) // params.r_c)

    k = n_chunks * params.payload
    x = list(payload_bits[:k])
    xt = _fit(rx.reveals, k)
    corrupted = [j for j in range(k)
                 if xt[j] is None or xt[j][0] is None or xt[j][0] != x[j] or xt[j][1] != ("A", j)]
    classes, in_sync, aligned, hazards = _classify(params, n_chunks, touched, rx, payload_bits)
    return BlockChannelReport(
        params=params, n=n, eps=eps, header=header, chunks=n_chunks, classes=classes,
        in_sync=in_sync, aligned=aligned, x=x, x_tilde=[None if t is None else t[0] for t in xt], y=[], y_tilde=[],
        corrupted_rounds=corrupted, certificate=greedy_cover([(q, q + 1) for q in corrupted], params.r),
        edits=ch.log.insertions + ch.log.deletions, hazards_in_payload=hazards, oneway=True,
        clamped=ch.log.clamped)


# ---------------------------------------------------------------------------
# Header attacker


class HeaderAttack(Adversary):
    """Adaptive one-way attack: deletes the bit on which C_B's header counter would fire.

    It keeps a replica of C_B fed with everything delivered so far. Attacks are
    spread over the run: one firing out of every ``spacing``.
    """

    name = "header_attack"
    adaptive = True

    def __init__(self, spacing: Optional[int] = None):
        self.fixed_spacing = spacing
        self.replica: Optional[Receiver] = None

    def bind(self, replica: Receiver) -> None:
        self.replica = replica

    def reset(self, n, alphabet_size, budget):
        super().reset(n, alphabet_size, budget)
        self._fed = 0
        self._fires = 0
        self.spacing = self.fixed_spacing

    def act(self, view: ChannelView):
        rx = self.replica
        if rx is None or view.pending is None:
            return DELIVER
        while self._fed < len(view.received):
            rx.feed(view.received[self._fed], None)
            self._fed += 1
        if self.spacing is None:
            chunks = max(1, self.n // rx.p.r_c)
            self.spacing = max(1, chunks // (self.budget + 1)) if self.budget else chunks + 1
        if rx.would_fire(view.pending):
            self._fires += 1
            if view.remaining > 0 and self._fires % self.spacing == 0:
                return Delete()
        return DELIVER


class DuplexHeaderAttack(DuplexAdversary):
    """Interactive counterpart of ``HeaderAttack``: bounces C_A's firing bit back as a fake reply."""

    name = "header_attack"
    adaptive = True

    def __init__(self, replica: Receiver, spacing: Optional[int] = None):
        self.replica = replica
        self.fixed_spacing = spacing

    def reset(self, n, alphabet_size, budget):
        super().reset(n, alphabet_size, budget)
        self._fed = 0
        self._fires = 0
        chunks = max(1, (n // 2) // self.replica.p.r_c)
        self.spacing = self.fixed_spacing or (max(1, chunks // (budget + 1)) if budget else chunks + 1)

    def act(self, view):
        rx = self.replica
        tr = view.transcript
        while self._fed < len(tr):
            sender, _, recipient, delivered = tr[self._fed]
            if recipient == "B":
                rx.feed(delivered, None)
            self._fed += 1
        if view.sender == "A" and rx.would_fire(view.pending):
            self._fires += 1
            if view.remaining > 0 and self._fires % self.spacing == 0:
                return Bounce(0)
        return DELIVER


def oneway_chunk_count(data_chunks: int, delta) -> int:
    """Fewest chunks to send so that ``data_chunks`` fit inside C_B's listening window."""
    delta = as_fraction(delta)
    total = data_chunks
    while math.floor(total * (1 - delta)) < data_chunks:
        total += 1
    return total


STREAM, INDEXED = "stream", "indexed"


class _IndexedReceiver(Receiver):
    """Receiver that files every payload under its decoded chunk index.

    Without the real-time constraint there is no need to keep Bob aligned
    one chunk at a time; the first payload decoded for an index wins.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.slots: Dict[int, List[int]] = {}
        self._cur: Optional[List[int]] = None

    def _decode(self) -> None:
        v = 0
        for b in self.buf:
            v = 2 * v + b
        got = self.decoder.feed(v) if v < self.sigma else TOP
        self.decodes.append({"fire": self.fires[-1], "decoded": got, "ib": self.ib})
        self.left = self.p.payload
        if got is TOP or got - 1 in self.slots:
            self.mode, self._cur = "skip", None
        else:
            self._cur = self.slots[got - 1] = []
            self.mode = "relay"

    def _reveal(self, bit, tag):
        self._cur.append(bit)
        return None


def receive_oneway(received: Sequence[int], n: int, params: ChunkParams, sync: SyncString,
                   header: str = ZEROS, orientation: str = PREFIX_FIRST,
                   placement: str = STREAM) -> List[Optional[int]]:
    """C_B alone: turn the bits of an ``n``-bit transmission into Bob's payload stream.

    Only the first ``floor(n(1 - delta))`` bits are read; the stream holds
    ``floor(n(1 - delta) / r_c) * r`` bits with dummies as None. ``INDEXED``
    placement puts each chunk at its decoded index instead of C_B's running
    index; missing chunks stay None.
    """
    if not params.oneway:
        raise ValueError("receive_oneway needs one-way chunk parameters")
    if placement not in (STREAM, INDEXED):
        raise ValueError(f"unknown placement {placement!r}")
    cls = _IndexedReceiver if placement == INDEXED else Receiver
    rx = cls(params, sync, header, orientation)
    listen = math.floor(n * (1 - params.delta))
    for b in list(received)[:listen]:
        if b not in (0, 1):
            raise ValueError("received stream must be binary")
        rx.feed(b, None)
    chunks = math.floor(n * (1 - params.delta) / params.r_c)
    k = chunks * params.payload
    if placement == STREAM:
        return [None if t is None else t[0] for t in _fit(rx.reveals, k)]
    out: List[Optional[int]] = []
    for i in range(chunks):
        body = rx.slots.get(i, [])
        out.extend(body + [None] * (params.payload - len(body)))
    return out
