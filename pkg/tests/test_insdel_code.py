import itertools
import logging
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from syncsim.channel import (
    BurstAdversary, UniformAdversary, strategy_identity, transmit,
)
from syncsim.insdel_code import (
    SEPARATOR, BlockCodeParams, DecodeFailed, RepetitionCode, decode, encode, hazard_free,
    inverse_transcode, layout, pad_message, payload_stream, zero_free_transcode,
)
from syncsim.sim_binary import HeaderAttack, Receiver
from syncsim.insdel_code import code_sync

P = BlockCodeParams.for_delta(Fraction(1, 1000))


@pytest.fixture(autouse=True)
def quiet_clamps():
    logging.disable(logging.WARNING)
    yield
    logging.disable(logging.NOTSET)


def msg(blocks, seed=0, params=P):
    rng = random.Random(seed)
    return [rng.randrange(2) for _ in range(blocks * params.r_b)]


def test_parameters():
    assert (P.r_b, P.s, P.h, P.base, P.digits, P.block_bits) == (100, 30, 15, 2 ** 15 - 1, 7, 106)
    with pytest.raises(ValueError):
        BlockCodeParams.for_delta(Fraction(1, 2), c=1)


def test_all_zero_block_maps_to_pattern_one_per_digit():
    out = zero_free_transcode([0] * P.r_b, P)
    assert out == ([0] * (P.h - 1) + [1]) * P.digits


@pytest.mark.parametrize("h", [2, 3, 4])
@pytest.mark.parametrize("r_b", [1, 2, 5, 8, 11])
def test_transcode_bijective_small(h, r_b):
    p = BlockCodeParams(Fraction(1, 100), 3, r_b, 2 * h)
    images = {}
    for block in itertools.product((0, 1), repeat=r_b):
        img = tuple(zero_free_transcode(list(block), p))
        assert inverse_transcode(img, p) == list(block)
        images[img] = block
    assert len(images) == 2 ** r_b
    # every other bit string of that length is rejected
    for bits in itertools.product((0, 1), repeat=p.digits * h):
        if bits not in images:
            assert inverse_transcode(bits, p) is None


def test_transcode_random_roundtrip_and_windows():
    rng = random.Random(4)
    for _ in range(10 ** 4 // 20):
        block = [rng.randrange(2) for _ in range(P.r_b)]
        out = zero_free_transcode(block, P)
        assert inverse_transcode(out, P) == block
        assert all(any(out[k:k + P.h]) for k in range(0, len(out), P.h))
        assert hazard_free(out + [SEPARATOR], P.s)


def test_inverse_rejects_erasures_and_lengths():
    out = zero_free_transcode([1] * P.r_b, P)
    assert inverse_transcode([None] + out[1:], P) is None
    assert inverse_transcode(out[:-1], P) is None
    with pytest.raises(ValueError):
        zero_free_transcode([1], P)


def test_repetition_majority():
    rc = RepetitionCode(5)
    enc = rc.encode([7, 9])
    assert enc == [7, 9] * 5
    bad = list(enc)
    bad[0] = 3
    bad[2] = None
    assert rc.decode(bad, 2) == [7, 9]
    with pytest.raises(DecodeFailed):
        rc.decode([None, 9] * 5, 2)
    with pytest.raises(DecodeFailed):
        rc.decode([1, 9, 2, 9, None, 9, None, 9, None, 9], 2)
    with pytest.raises(ValueError):
        RepetitionCode(0)


def test_layout_and_padding():
    lay = layout(2 * P.r_b, P)
    assert lay.blocks == 2 and lay.outer_symbols == 10
    assert lay.payload_bits == 10 * P.block_bits
    assert lay.n == lay.chunks * P.chunk.r_c
    assert pad_message([1] * 3, P) == [1] * 3 + [0] * (P.r_b - 3)
    with pytest.raises(ValueError):
        layout(P.r_b + 1, P)


@pytest.mark.parametrize("blocks", [1, 2, 4])
def test_identity_roundtrip(blocks):
    m = msg(blocks, blocks)
    cw = encode(m, P)
    assert len(cw) == layout(len(m), P).n
    assert decode(cw, len(m), P) == m
    rec, _ = transmit(cw, strategy_identity(), 2, P.delta)
    assert decode(rec, len(m), P) == m


def test_single_corrupted_block_is_outvoted():
    m = msg(2, 9)
    lay = layout(len(m), P)
    cw = encode(m, P)
    # flip one bit inside the first transcoded copy of block 0
    k = P.chunk.s + P.chunk.w + 3
    cw = cw[:k] + [1 - cw[k]] + cw[k + 1:]
    assert decode(cw, len(m), P) == m
    assert lay.outer_symbols == 10


@pytest.mark.parametrize("make", [
    lambda s: UniformAdversary(s),
    lambda s: BurstAdversary(5, s),
])
@pytest.mark.parametrize("seed", range(3))
def test_roundtrip_under_budgeted_errors(make, seed):
    m = msg(2, seed)
    cw = encode(m, P)
    rec, log = transmit(cw, make(seed), 2, P.delta)
    assert log.insertions + log.deletions == math.floor(len(cw) * P.delta)
    assert decode(rec, len(m), P) == m


def test_roundtrip_under_header_attack():
    m = msg(4, 1)
    cw = encode(m, P)
    lay = layout(len(m), P)
    adv = HeaderAttack()
    adv.bind(Receiver(P.chunk, code_sync(lay.chunks, P), P.header))
    rec, log = transmit(cw, adv, 2, P.delta)
    assert log.deletions > 0
    assert decode(rec, len(m), P) == m


def test_destroyed_codeword_raises():
    m = msg(1, 0)
    cw = encode(m, P)
    with pytest.raises(DecodeFailed):
        decode([1] * len(cw), len(m), P)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.randoms(use_true_random=False))
def test_payload_stream_is_hazard_free(blocks, rnd):
    m = [rnd.randrange(2) for _ in range(blocks * P.r_b)]
    assert hazard_free(payload_stream(m, P), P.s)


def test_hazard_free_detects_pattern():
    assert not hazard_free([1] + [0] * 29, 30)
    assert hazard_free([1] + [0] * 28 + [1], 30)


def test_rate_fit_over_delta_sweep():
    rates = {}
    for delta in (Fraction(1, 50), Fraction(1, 100), Fraction(1, 200)):
        p = BlockCodeParams.for_delta(delta)
        rates[delta] = layout(4 * p.r_b, p).rate
    scale = {d: math.sqrt(float(d) * math.log2(1 / float(d))) for d in rates}
    k = max((1 - float(r)) / scale[d] for d, r in rates.items())
    assert all(float(r) >= 1 - k * scale[d] - 1e-12 for d, r in rates.items())
    # repetition x5 caps the rate at 1/5
    assert all(0 < r < Fraction(1, 5) for r in rates.values())
