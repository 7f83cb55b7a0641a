"""Binary insertion-deletion code built on the one-way chunked simulation.

Message blocks of ``r_b`` bits go through an outer block code, every outer
symbol is rewritten in base ``2^h - 1`` with digits stored as the nonzero
``h``-bit patterns ``d + 1`` (so no aligned window is all zero), blocks are
joined by a single 1 bit, and the result is framed into chunks by C_A. The
decoder is C_B followed by the inverse steps. Anything that cannot be
inverted becomes an erasure for the outer code.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence

from .sim_binary import (INDEXED, ONE_ZEROS, ChunkParams, default_sync, frame_stream, hazard_positions,
                         oneway_chunk_count, receive_oneway)
from .strings import SyncString, as_fraction

SEPARATOR = 1


class DecodeFailed(Exception):
    """The outer code could not recover a block."""


@dataclass(frozen=True)
class BlockCodeParams:
    delta: Fraction
    c: int
    r_b: int
    s: int
    eps: Fraction = Fraction(1, 2)
    sync_alphabet: int = 64
    header: str = ONE_ZEROS

    @classmethod
    def for_delta(cls, delta, c: int = 3, eps=Fraction(1, 2), sync_alphabet: int = 64,
                  header: str = ONE_ZEROS) -> "BlockCodeParams":
        delta = as_fraction(delta)
        chunk = ChunkParams.for_delta(delta, c, sync_alphabet, oneway=True)
        r_b = round(math.sqrt(chunk.log_inv_delta / float(delta)))
        if chunk.s // 2 < 2:
            raise ValueError("digit width s/2 must be at least 2")
        return cls(delta, c, r_b, chunk.s, as_fraction(eps), sync_alphabet, header)

    @property
    def h(self) -> int:
        return self.s // 2

    @property
    def base(self) -> int:
        return 2 ** self.h - 1

    @property
    def digits(self) -> int:
        d = 1
        while self.base ** d < 2 ** self.r_b:
            d += 1
        return d

    @property
    def block_bits(self) -> int:
        """Transcoded block plus its separator bit."""
        return self.digits * self.h + 1

    @property
    def chunk(self) -> ChunkParams:
        return ChunkParams.for_delta(self.delta, self.c, self.sync_alphabet, oneway=True)


# ---------------------------------------------------------------------------
# Transcoding


def _to_int(bits: Sequence[int]) -> int:
    v = 0
    for b in bits:
        v = 2 * v + int(b)
    return v


def _to_bits(v: int, width: int) -> List[int]:
    return [(v >> (width - 1 - t)) & 1 for t in range(width)]


def zero_free_transcode(block: Sequence[int], params: BlockCodeParams) -> List[int]:
    if len(block) != params.r_b:
        raise ValueError(f"block must have {params.r_b} bits")
    v = _to_int(block)
    digits = []
    for _ in range(params.digits):
        v, d = divmod(v, params.base)
        digits.append(d)
    out: List[int] = []
    for d in reversed(digits):
        out.extend(_to_bits(d + 1, params.h))
    return out


def inverse_transcode(bits: Sequence[Optional[int]], params: BlockCodeParams) -> Optional[List[int]]:
    """Inverse of ``zero_free_transcode``; None if the bits are not a valid image."""
    h = params.h
    if len(bits) != params.digits * h or any(b is None for b in bits):
        return None
    v = 0
    for k in range(params.digits):
        p = _to_int(bits[k * h:(k + 1) * h])
        if p == 0:
            return None
        v = v * params.base + (p - 1)
    if v >= 2 ** params.r_b:
        return None
    return _to_bits(v, params.r_b)


# ---------------------------------------------------------------------------
# Outer code


class RepetitionCode:
    """Each block repeated ``copies`` times, copy-major; plurality over the valid copies."""

    name = "repetition"

    def __init__(self, copies: int = 5):
        if copies < 1:
            raise ValueError("copies must be positive")
        self.copies = copies

    def encode(self, blocks: Sequence[int]) -> List[int]:
        return list(blocks) * self.copies

    def decode(self, received: Sequence[Optional[int]], m: int) -> List[int]:
        if len(received) != m * self.copies:
            raise ValueError(f"expected {m * self.copies} outer symbols")
        out = []
        for b in range(m):
            votes = Counter(x for x in received[b::m] if x is not None)
            if not votes:
                raise DecodeFailed(f"block {b}: every copy erased")
            top = votes.most_common(2)
            if len(top) == 2 and top[0][1] == top[1][1]:
                raise DecodeFailed(f"block {b}: tied vote")
            out.append(top[0][0])
        return out


OUTER_CODES = {"repetition": RepetitionCode}


# ---------------------------------------------------------------------------
# Encoder and decoder


@dataclass(frozen=True)
class Layout:
    message_bits: int
    blocks: int
    outer_symbols: int
    payload_bits: int
    chunks: int
    n: int

    @property
    def rate(self) -> Fraction:
        return Fraction(self.message_bits, self.n)


def layout(message_bits: int, params: BlockCodeParams, outer=None) -> Layout:
    outer = outer or RepetitionCode()
    if message_bits <= 0 or message_bits % params.r_b:
        raise ValueError(f"message length must be a positive multiple of r_b = {params.r_b}")
    m = message_bits // params.r_b
    symbols = len(outer.encode([0] * m))
    payload = symbols * params.block_bits
    cp = params.chunk
    data_chunks = -(-payload // cp.payload)
    chunks = oneway_chunk_count(data_chunks, params.delta)
    return Layout(message_bits, m, symbols, payload, chunks, chunks * cp.r_c)


def pad_message(bits: Sequence[int], params: BlockCodeParams) -> List[int]:
    bits = list(bits)
    return bits + [0] * (-len(bits) % params.r_b)


def code_sync(chunks: int, params: BlockCodeParams) -> SyncString:
    return default_sync(chunks, params.eps, params.sync_alphabet, 0)


def payload_stream(message: Sequence[int], params: BlockCodeParams, outer=None) -> List[int]:
    """Outer-encoded, transcoded and separated blocks, padded with ones to whole chunks."""
    outer = outer or RepetitionCode()
    lay = layout(len(message), params, outer)
    blocks = [_to_int(message[i:i + params.r_b]) for i in range(0, len(message), params.r_b)]
    out: List[int] = []
    for v in outer.encode(blocks):
        out.extend(zero_free_transcode(_to_bits(v, params.r_b), params))
        out.append(SEPARATOR)
    return out + [1] * (lay.chunks * params.chunk.payload - len(out))


def encode(message: Sequence[int], params: BlockCodeParams, outer=None) -> List[int]:
    """Codeword bits as they go on the wire."""
    outer = outer or RepetitionCode()
    lay = layout(len(message), params, outer)
    bits, _ = frame_stream(payload_stream(message, params, outer), params.chunk,
                           code_sync(lay.chunks, params), params.header)
    return bits


def decode(received: Sequence[int], message_bits: int, params: BlockCodeParams, outer=None) -> List[int]:
    """Recover the message; raises DecodeFailed rather than guessing."""
    outer = outer or RepetitionCode()
    lay = layout(message_bits, params, outer)
    stream = receive_oneway(received, lay.n, params.chunk, code_sync(lay.chunks, params),
                            params.header, placement=INDEXED)
    stream = stream + [None] * max(0, lay.payload_bits - len(stream))
    width = params.block_bits
    symbols: List[Optional[int]] = []
    for k in range(lay.outer_symbols):
        bits = inverse_transcode(stream[k * width:k * width + width - 1], params)
        symbols.append(None if bits is None else _to_int(bits))
    out: List[int] = []
    for v in outer.decode(symbols, lay.blocks):
        out.extend(_to_bits(v, params.r_b))
    return out


def hazard_free(bits: Sequence[int], s: int) -> bool:
    """No ``1 0^(s-1)`` anywhere in ``bits``."""
    return not any(bits[p] == 1 for p in hazard_positions(bits, s))
