"""One-way corruption channel simulated over an insertion-deletion channel.

C_A tags each message with the next symbol of a synchronization string and
sends the pair as one wire symbol ``m * |S_syn| + S[i]``. C_B decodes the index
of every arrival and reveals, skips or pads so that Bob's stream stays aligned
with Alice's.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

from .channel import (DELETED, INSERTED, Adversary, Channel, ChannelView, DELIVER,
                      Insert, PrefixReplayAdversary, budget_for)
from .indexing import PREFIX_FIRST, TOP, IndexingDecoder
from .strings import SyncString, as_fraction

DUMMY = None
"""Out-of-band dummy reveal."""

# (kind, relation of the arriving index to I_B) -> allowed (dI_A, dI_B) pairs
TRANSITIONS = {
    "deletion": {(1, 0)},
    "insertion": {(0, 0), (0, 1), (0, 2)},
    "misdecoded": {(1, 0), (1, 1), (1, 2)},
    ("correct", ">"): {(1, 2)},
    ("correct", "<"): {(1, 0)},
    ("correct", "="): {(1, 1)},
}


def oneway_bound(n: int, delta, eps) -> Fraction:
    """``n * delta * (4 + 2 / (1 - eps))``."""
    delta, eps = as_fraction(delta), as_fraction(eps)
    return n * delta * (4 + 2 / (1 - eps))


def incident_bound(n: int, delta, eps, k_i: int, k_d: int) -> Fraction:
    """Per-run form of the same count in terms of the actual insertions and deletions."""
    delta, eps = as_fraction(delta), as_fraction(eps)
    return n * delta + k_d * (1 + 2 * eps / (1 - eps)) + k_i * (3 + 2 / (1 - eps))


@dataclass
class Step:
    kind: str
    relation: str
    d_ia: int
    d_ib: int

    @property
    def allowed(self) -> bool:
        key = ("correct", self.relation) if self.kind == "correct" else self.kind
        return (self.d_ia, self.d_ib) in TRANSITIONS[key]


@dataclass
class OnewayReport:
    n: int
    delta: Fraction
    eps: Fraction
    revealed: List[Optional[int]]
    triggers: List[Optional[int]]
    uncorrupted: List[bool]
    error_bad: int
    decoding_bad: int
    zero_bad: int
    truncated: int
    insertions: int
    deletions: int
    misdecodings: int
    transmitted: int
    steps: List[Step]
    wire: List[int]
    clamped: int
    bound: Fraction
    uniqueness_violations: int = 0

    @property
    def n_prime(self) -> int:
        return len(self.revealed)

    @property
    def corrupted(self) -> int:
        return self.uncorrupted.count(False)

    @property
    def uncorrupted_count(self) -> int:
        return self.n_prime - self.corrupted

    @property
    def audit_violations(self) -> int:
        return sum(1 for s in self.steps if not s.allowed)

    @property
    def within_bound(self) -> bool:
        return self.corrupted <= self.bound

    def metrics(self) -> Dict[str, object]:
        return {
            "revealed": self.n_prime,
            "corrupted": self.corrupted,
            "error_bad": self.error_bad,
            "decoding_bad": self.decoding_bad,
            "zero_bad": self.zero_bad,
            "truncated": self.truncated,
            "insertions": self.insertions,
            "deletions": self.deletions,
            "misdecodings": self.misdecodings,
            "audit_violations": self.audit_violations,
            "clamped": self.clamped,
        }

    def to_dict(self) -> Dict[str, object]:
        d = dict(self.metrics())
        d.update(n=self.n, delta=str(self.delta), eps=str(self.eps), bound=str(self.bound),
                 within_bound=self.within_bound,
                 reveals=[{"value": v, "trigger": t, "ok": ok}
                          for v, t, ok in zip(self.revealed, self.triggers, self.uncorrupted)])
        return d


def wire_symbols(messages: Sequence[int], sync: SyncString) -> List[int]:
    sigma = sync.string.alphabet.size
    return [m * sigma + s for m, s in zip(messages, sync.string)]


def run_oneway(messages: Sequence[int], sync: SyncString, adversary: Adversary, delta,
               sim_alphabet: int, wire_alphabet: Optional[int] = None,
               orientation: str = PREFIX_FIRST) -> OnewayReport:
    """Run both intermediaries over a one-way channel and classify every reveal.

    ``messages`` are Alice's symbols over ``range(sim_alphabet)``, one per
    synchronization symbol. C_B processes only the first ``floor(n(1-delta))``
    arrivals and reveals exactly that many symbols, padding with DUMMY if the
    wire starves.
    """
    delta = as_fraction(delta)
    n = len(messages)
    if n != len(sync):
        raise ValueError(f"{n} messages for a synchronization string of length {len(sync)}")
    if not 0 <= delta < Fraction(1, 7):
        raise ValueError("the one-way simulation needs 0 <= delta < 1/7")
    sigma = sync.string.alphabet.size
    need = sim_alphabet * sigma
    wire_alphabet = need if wire_alphabet is None else wire_alphabet
    if wire_alphabet < need:
        raise ValueError(f"wire alphabet {wire_alphabet} cannot carry {sim_alphabet} x {sigma} pairs")
    if any(not 0 <= m < sim_alphabet for m in messages):
        raise ValueError("message symbol outside the simulated alphabet")

    n_prime = math.floor(n * (1 - delta))
    ch = Channel(adversary, n, wire_alphabet, delta)
    decoder = IndexingDecoder(sync, orientation)
    revealed: List[Optional[int]] = []
    trig: List[Optional[int]] = []
    decoded_at: Dict[int, object] = {}  # received position (1-based) -> decoded index
    state = {"ib": 0, "processed": 0}
    wire = wire_symbols(messages, sync)

    def on_arrival(sym: int) -> None:
        if state["processed"] >= n_prime:
            return
        state["processed"] += 1
        pos = state["processed"]
        m, s = divmod(sym, sigma)
        got = decoder.feed(s)
        decoded_at[pos] = got
        rnd = ch.log.rounds[pos - 1]
        if got is TOP:
            return
        idx = got - 1
        if idx == state["ib"]:
            revealed.append(m)
            trig.append(rnd)
            state["ib"] += 1
        elif idx > state["ib"]:
            revealed.extend((DUMMY, m))
            trig.extend((rnd, rnd))
            state["ib"] += 2

    for x in wire:
        for sym in ch.send(x):
            on_arrival(sym)
    for sym in ch.close():
        on_arrival(sym)

    del revealed[n_prime:]
    del trig[n_prime:]
    while len(revealed) < n_prime:
        revealed.append(DUMMY)
        trig.append(None)

    lg = ch.log
    uncorrupted = [revealed[p] is not DUMMY and revealed[p] == messages[p] and trig[p] == p + 1
                   for p in range(n_prime)]

    # where each sent symbol ended up
    arrived_at: Dict[int, int] = {}
    for j, o in enumerate(lg.origin, start=1):
        if o is not None:
            arrived_at[o] = j
    deleted = set(lg.deleted_sends())
    processed = state["processed"]

    error_bad = decoding_bad = zero_bad = truncated = 0
    for p in range(1, n_prime + 1):
        if uncorrupted[p - 1]:
            continue
        j = arrived_at.get(p)
        if p in deleted:
            error_bad += 1
        elif j is None or j > processed:
            truncated += 1
        elif decoded_at[j] != p:
            decoding_bad += 1
        else:
            zero_bad += 1

    misdecodings = transmitted = 0
    for j in range(1, processed + 1):
        o = lg.origin[j - 1]
        if o is not None:
            transmitted += 1
            if decoded_at[j] != o:
                misdecodings += 1

    steps = _audit(lg, decoded_at, processed)
    return OnewayReport(
        n=n, delta=delta, eps=sync.eps, revealed=revealed, triggers=trig, uncorrupted=uncorrupted,
        error_bad=error_bad, decoding_bad=decoding_bad, zero_bad=zero_bad, truncated=truncated,
        insertions=lg.insertions, deletions=lg.deletions, misdecodings=misdecodings,
        transmitted=transmitted, steps=steps, wire=wire, clamped=lg.clamped,
        bound=oneway_bound(n, delta, sync.eps),
        uniqueness_violations=decoder.uniqueness_violations)


def _audit(lg, decoded_at, processed) -> List[Step]:
    """Replay I_A and I_B over the wire events seen before C_B stopped listening."""
    steps: List[Step] = []
    ib = 0
    j = 0
    for cls, origin_idx in _events(lg):
        if cls == DELETED:
            if j >= processed:
                break
            steps.append(Step("deletion", "", 1, 0))
            continue
        j += 1
        if j > processed:
            break
        got = decoded_at[j]
        before = ib
        if got is not TOP:
            if got - 1 == ib:
                ib += 1
            elif got - 1 > ib:
                ib += 2
        d_ia = 0 if cls == INSERTED else 1
        if cls == INSERTED:
            kind, rel = "insertion", ""
        elif got != origin_idx:
            kind, rel = "misdecoded", ""
        else:
            idx = origin_idx - 1
            kind, rel = "correct", ">" if idx > before else "<" if idx < before else "="
        steps.append(Step(kind, rel, d_ia, ib - before))
    return steps


def _events(lg):
    j = 0
    for cls in lg.classes:
        if cls == DELETED:
            yield cls, None
        else:
            yield cls, lg.origin[j]
            j += 1


# ---------------------------------------------------------------------------
# Attacks


class ForgeAheadAdversary(Adversary):
    """Adaptive attack that forges the index one step ahead of the pending symbol.

    At evenly spaced slots it inserts ``(random message, S[t + 1])`` right
    before send ``t``. A receiver that believes the forgery skips ahead by two,
    reveals garbage and then discards the genuine symbols it jumped over.
    """

    name = "adaptive_forge"
    adaptive = True

    def __init__(self, sync: SyncString, sim_alphabet: int, seed: int):
        self.sync = sync
        self.sim_alphabet = sim_alphabet
        self.seed = seed

    def reset(self, n, alphabet_size, budget):
        super().reset(n, alphabet_size, budget)
        self.rng = random.Random(self.seed)
        self.spacing = max(1, n // (budget + 1)) if budget else n + 1
        self._done = set()

    def act(self, view: ChannelView):
        t = view.slot
        if (view.remaining <= 0 or view.pending is None or t in self._done
                or t % self.spacing != self.spacing - 1 or t + 1 >= len(self.sync)):
            return DELIVER
        self._done.add(t)
        sigma = self.sync.string.alphabet.size
        return Insert(self.rng.randrange(self.sim_alphabet) * sigma + self.sync.string[t + 1])


@dataclass
class PrefixReplayOutcome:
    scenario_a: OnewayReport
    scenario_b: OnewayReport
    frontier_deterministic: Fraction
    frontier_randomized: Fraction

    @property
    def min_uncorrupted(self) -> int:
        return min(self.scenario_a.uncorrupted_count, self.scenario_b.uncorrupted_count)


def prefix_replay_attack(messages: Sequence[int], sync: SyncString, delta, sim_alphabet: int,
                         orientation: str = PREFIX_FIRST) -> PrefixReplayOutcome:
    """Paired attack: (a) delete the first n*delta sends of X; (b) send X' (every symbol
    different from X) behind the replayed wire symbols ``Y[n*delta : 2*n*delta]`` of the X run.

    The frontiers ``n(1 - 4 delta / 3)`` and ``n(1 - 7 delta / 6)`` limit every
    simulator; they are reported next to the measurement, not enforced.
    """
    delta = as_fraction(delta)
    n = len(messages)
    k = budget_for(n, delta)
    a = run_oneway(messages, sync, PrefixReplayAdversary("a"), delta, sim_alphabet,
                   orientation=orientation)
    other = [(m + 1) % sim_alphabet for m in messages]
    replay = wire_symbols(messages, sync)[k:2 * k]
    b = run_oneway(other, sync, PrefixReplayAdversary("b", replay), delta, sim_alphabet,
                   orientation=orientation)
    return PrefixReplayOutcome(a, b, n * (1 - Fraction(4, 3) * delta), n * (1 - Fraction(7, 6) * delta))
