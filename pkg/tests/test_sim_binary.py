import itertools
import logging
import random
import re
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from syncsim.channel import (
    Bounce, BurstDuplexAdversary, PlannedDuplexAdversary, Substitute, UniformDuplexAdversary,
)
from syncsim.sim_binary import (
    ERROR_BAD, GOOD, ONE_ZEROS, PRIMITIVE_POLYS, ZEROS, ChunkParams, Coverable,
    DuplexHeaderAttack, Excess, HeaderScanner, Receiver, _precode_matrix, block_bound,
    block_fraction_bound, default_sync, gf_mul, greedy_cover, hazard_frequency,
    hazard_positions, hazard_probability_exact, hazard_union_bound, precode_chunk,
    precode_expand, precode_points, precode_strip, run_binary, zero_run_coverage,
)

DELTA = Fraction(1, 1000)
EPS = Fraction(1, 2)
P = ChunkParams.for_delta(DELTA, 3)


@pytest.fixture(autouse=True)
def quiet_clamps():
    logging.disable(logging.WARNING)
    yield
    logging.disable(logging.NOTSET)


def poly_mod(a, b):
    db = b.bit_length() - 1
    while a and a.bit_length() - 1 >= db:
        a ^= b << (a.bit_length() - 1 - db)
    return a


@pytest.mark.parametrize("h", sorted(PRIMITIVE_POLYS))
def test_moduli_are_irreducible(h):
    f = PRIMITIVE_POLYS[h]
    assert f.bit_length() - 1 == h
    for g in range(2, 1 << (h // 2 + 1)):
        if g.bit_length() - 1 <= h // 2:
            assert poly_mod(f, g) != 0, f"x-poly {g:b} divides modulus of width {h}"


@pytest.mark.parametrize("h", range(2, 13))
def test_x_generates_the_multiplicative_group(h):
    y, order = 2, 1
    while y != 1:
        y = gf_mul(y, 2, h)
        order += 1
    assert order == 2 ** h - 1


def test_chunk_parameters():
    assert (P.r, P.s, P.w, P.r_c, P.payload) == (100, 30, 6, 86, 50)
    assert block_bound(20000, DELTA, EPS) == 1200
    assert block_fraction_bound(DELTA, EPS, 86) == Fraction(24 * 86 * 5, 998)
    with pytest.raises(ValueError):
        ChunkParams.for_delta(0)


@pytest.mark.parametrize("h,length", [(4, 16), (5, 23), (15, 50), (8, 200)])
def test_horner_matches_matrix(h, length):
    rng = random.Random(h)
    g = _precode_matrix(h, length)
    for _ in range(20):
        seed = [rng.randrange(2) for _ in range(h)]
        assert precode_expand(seed, length) == list((g.astype(int) @ np.array(seed)) % 2)


def test_zero_seed_gives_zero_pad_and_limits():
    assert precode_expand([0] * 15, 50) == [0] * 50
    with pytest.raises(ValueError):
        precode_expand([1, 0, 1], 9)
    with pytest.raises(ValueError):
        precode_expand([1] * 30, 10)
    with pytest.raises(ValueError):
        precode_points(2, 3)


@pytest.mark.parametrize("h", [3, 4, 5])
def test_every_window_is_a_bijection_of_the_seed(h):
    length = h * len(precode_points(h, 1))
    windows = {}
    for seed in itertools.product((0, 1), repeat=h):
        pad = precode_expand(list(seed), length)
        windows.setdefault(tuple(pad[:h]), []).append(seed)
    assert len(windows) == 2 ** h


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=35, max_size=35),
       st.lists(st.integers(0, 1), min_size=15, max_size=15))
def test_precode_roundtrip(data, seed):
    chunk = precode_chunk(data, seed, 50)
    assert chunk[:15] == seed
    assert precode_strip(chunk, 15, 50) == data
    spoiled = [None] + chunk[1:]
    assert precode_strip(spoiled, 15, 50) == [None] * 35


def test_precode_chunk_length_check():
    with pytest.raises(ValueError):
        precode_chunk([0] * 3, [0] * 15, 50)


def hazards_brute(bits, s):
    text = "".join(map(str, bits))
    out = [m.start() for m in re.finditer("(?=10{%d})" % (s - 1), text)]
    if text.startswith("0" * s):
        out = [0] + out
    return sorted(set(out))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 1), max_size=40), st.integers(2, 6))
def test_hazard_positions(bits, s):
    assert hazard_positions(bits, s) == hazards_brute(bits, s)


def cover_brute(spans, width):
    starts = sorted({a for a, _ in spans})
    for k in range(len(spans) + 1):
        for pick in itertools.combinations(starts, k):
            if all(any(p <= a and b <= p + width for p in pick) for a, b in spans):
                return k
    raise AssertionError


@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(0, 60), max_size=10), st.integers(3, 5), st.integers(5, 15))
def test_greedy_cover_is_optimal(points, s, width):
    spans = [(p, p + s) for p in points]
    cover = greedy_cover(spans, width)
    assert all(any(a <= x and y <= b for a, b in cover) for x, y in spans)
    assert len(cover) == cover_brute(spans, width)


def test_greedy_cover_rejects_wide_span():
    with pytest.raises(ValueError):
        greedy_cover([(0, 10)], 5)


def test_zero_run_coverage_examples():
    s, r = 4, 10
    assert zero_run_coverage([1] * 50, s, r, 0) == Coverable(())
    assert zero_run_coverage([1, 1, 1, 0, 0, 0, 1], s, r, 5).count == 1
    k = 4
    bits = ([1, 0, 0, 0] + [1] * (r - 4)) * k
    assert zero_run_coverage(bits, s, r, k).count == k
    assert zero_run_coverage(bits, s, r, k - 1) == Excess(k)
    with pytest.raises(ValueError):
        zero_run_coverage(bits, 1, r, k)


def scanner_model(bits, s, header):
    # straight from the definition: count zeros since the last one or the last firing
    fires, z, armed = [], 0, header == ZEROS
    need = s if header == ZEROS else s - 1
    for b in bits:
        if b:
            z, armed = 0, True
            fires.append(False)
            continue
        z += 1
        if armed and z >= need:
            fires.append(True)
            z, armed = 0, header == ZEROS
        else:
            fires.append(False)
    return fires, min(z, s)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 1), max_size=60), st.integers(2, 6), st.sampled_from([ZEROS, ONE_ZEROS]))
def test_header_scanner_matches_model(bits, s, header):
    sc = HeaderScanner(s, header)
    got = []
    for b in bits:
        assert sc.would_fire(b) == (b == 0 and sc.armed and sc.z + 1 >= sc.target)
        got.append(sc.feed(b))
    fires, z = scanner_model(bits, s, header)
    assert got == fires
    assert sc.z == z


def test_header_scanner_rejects_mode():
    with pytest.raises(ValueError):
        HeaderScanner(4, "ones")


def test_exact_hazard_probability_matches_enumeration():
    p = ChunkParams.for_delta(Fraction(1, 100), 1)
    h = p.s // 2
    rng = random.Random(0)
    data = [rng.randrange(2) for _ in range(p.payload - h)]
    hits = 0
    for seed in itertools.product((0, 1), repeat=h):
        chunk = precode_chunk(data, list(seed), p.payload)
        hits += any(chunk[q] == 1 for q in hazard_positions(chunk, p.s))
    assert hazard_probability_exact(p, data) == Fraction(hits, 2 ** h)


def test_hazard_frequency_small_sample_under_union_bound():
    hits, trials = hazard_frequency(P, 20000, seed=1)
    p = hazard_union_bound(P)
    assert hits / trials <= p + 3 * (p * (1 - p) / trials) ** 0.5


def test_identity_run_is_clean():
    data = [random.Random(2).randrange(2) for _ in range(5 * 35)]
    rep = run_binary(data, None, 1000, DELTA, 3, EPS, PlannedDuplexAdversary(), precode=True,
                     header=ONE_ZEROS, seed=2)
    assert rep.chunks == 5
    assert rep.classes == [GOOD] * 5 and rep.corrupted_rounds == []
    assert rep.data_out == data
    assert rep.to_dict()["bad_chunks"] == 0


def test_run_binary_rejects_tiny_n():
    with pytest.raises(ValueError):
        run_binary(None, None, 100, DELTA, 3, EPS, PlannedDuplexAdversary())


def faults(kbit):
    # substitution and deletion of C_A's bit, insertion of a forged bit into C_B's stream
    yield "substitute", {2 * kbit: Substitute(1 - 0)}
    yield "substitute0", {2 * kbit: Substitute(0)}
    yield "delete", {2 * kbit: Bounce(0)}
    yield "insert0", {2 * kbit + 1: Bounce(0)}
    yield "insert1", {2 * kbit + 1: Bounce(1)}


def test_single_fault_recovers_by_chunk_i_plus_2():
    i = 1
    for off in range(P.r_c):
        for kind, plan in faults(i * P.r_c + off):
            rep = run_binary(None, None, 1000, DELTA, 3, EPS, PlannedDuplexAdversary(plan),
                             precode=True, header=ONE_ZEROS, seed=3)
            assert rep.edits == 1
            assert rep.aligned[i + 2], (kind, off)
            assert rep.classes[:i] == [GOOD] * i
            assert rep.verbatim_violations == 0


def test_zeros_header_can_need_chunk_i_plus_3():
    i = 1
    plan = {2 * (i * P.r_c + 40) + 1: Bounce(0)}
    rep = run_binary(None, None, 1000, DELTA, 3, EPS, PlannedDuplexAdversary(plan),
                     precode=True, header=ZEROS, seed=3)
    assert rep.aligned[i:i + 4] == [True, False, False, True]
    assert rep.classes[i:i + 3] == [ERROR_BAD] * 3


def _battery_run(header, adv, seed, n=20000):
    sync = default_sync(max(P.r_total(n), -(-(n // 2) // P.r_c)), EPS, 64, 0)
    a = {"uniform": lambda: UniformDuplexAdversary(seed),
         "burst": lambda: BurstDuplexAdversary(5, seed),
         "header": lambda: DuplexHeaderAttack(Receiver(P, sync, header))}[adv]()
    return run_binary(None, None, n, DELTA, 3, EPS, a, precode=True, header=header, sync=sync, seed=seed)


@pytest.mark.parametrize("header,adv,per_edit", [
    (ONE_ZEROS, "uniform", 2), (ONE_ZEROS, "burst", 2), (ONE_ZEROS, "header", 2),
    # zeros header: the single-fault trace shows one edit can spoil three chunks
    (ZEROS, "uniform", 3), (ZEROS, "burst", 3), (ZEROS, "header", 3),
])
def test_per_class_budgets(header, adv, per_edit):
    rep = _battery_run(header, adv, 1)
    assert rep.count(ERROR_BAD) <= per_edit * rep.n * DELTA
    assert rep.bad_chunks <= rep.bound
    assert rep.certificate_ok
    assert rep.verbatim_violations == 0


@pytest.mark.parametrize("adv", ["uniform", "header"])
@pytest.mark.xfail(strict=True, reason="zeros header: one edit can spoil three chunks, so error_bad exceeds 2n*delta")
def test_error_bad_two_per_edit_zeros_header(adv):
    rep = _battery_run(ZEROS, adv, 1)
    assert rep.count(ERROR_BAD) <= rep.sub_bounds()[ERROR_BAD]
