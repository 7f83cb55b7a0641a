"""Interactive corruption channel simulated over a ping-pong insertion-deletion channel.

C_A tags every message of Alice with the next synchronization symbol; C_B
decodes the index, keeps Bob aligned with Alice and answers with Bob's reply
(sync field fixed to 0) or with a reserved dummy wire symbol. Both sides commit
once they have handled ``K = floor(n/2 - n*delta*(1 + 1/(1-eps)))`` rounds and
from then on only keep the exchange going.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence

from .channel import DELIVER, DuplexAdversary, DuplexChannel, Substitute
from .indexing import PREFIX_FIRST, TOP, IndexingDecoder
from .strings import SyncString, as_fraction

DUMMY = None

Protocol = Callable[[int, List[Optional[int]]], int]
"""``party(i, received) -> symbol``: the i-th (0-based) message given everything revealed so far."""


def commit_point(n: int, delta, eps) -> int:
    delta, eps = as_fraction(delta), as_fraction(eps)
    return math.floor(Fraction(n, 2) - n * delta * (1 + 1 / (1 - eps)))


def interactive_bound(delta, eps) -> Fraction:
    """Corrupted-round fraction ``2 delta (5 - 3 eps) / (1 - eps + 2 eps delta - 4 delta)``."""
    delta, eps = as_fraction(delta), as_fraction(eps)
    return 2 * delta * (5 - 3 * eps) / (1 - eps + 2 * eps * delta - 4 * delta)


# ---------------------------------------------------------------------------
# Toy protocols with closed-form noise-free transcripts


def echo_protocol(inputs: Sequence[int]):
    """Alice streams ``inputs``; Bob answers every symbol with itself."""
    def alice(i, received):
        return inputs[i]

    def bob(i, received):
        x = received[-1]
        return 0 if x is DUMMY else x

    return alice, bob


def running_sum_protocol(inputs: Sequence[int], q: int):
    """Alice sends ``(input_i + last reply) mod q``; Bob replies with the running sum mod q.

    With ``q = 2`` this is the running-XOR protocol.
    """
    def alice(i, received):
        last = received[-1] if received else 0
        return (inputs[i] + (0 if last is DUMMY else last)) % q

    def bob(i, received):
        return sum(0 if x is DUMMY else x for x in received) % q

    return alice, bob


# ---------------------------------------------------------------------------
# Intermediaries


class _SideA:
    def __init__(self, sync: SyncString, alice: Protocol, k: int, half: int, sigma: int,
                 dummy_wire: int):
        self.sync, self.alice, self.k, self.half = sync, alice, k, half
        self.sigma, self.dummy_wire = sigma, dummy_wire
        self.ia = 0
        self.sends = 0
        self.messages: List[int] = []   # X_i
        self.revealed: List[Optional[int]] = []
        self.committed = False

    def next_send(self) -> Optional[int]:
        if self.sends >= self.half:
            return None
        self.sends += 1
        if self.ia < self.k:
            m = self.alice(self.ia, self.revealed)
            self.messages.append(m)
            w = m * self.sigma + self.sync.string[self.ia]
        else:
            # dummy payload, but keep the index so C_B can still catch up after our commit
            w = self.sync.string[self.ia]
        self.ia += 1
        return w

    def on_reply(self, w: int) -> None:
        if self.committed:
            return
        self.revealed.append(DUMMY if w == self.dummy_wire else w // self.sigma)
        if len(self.revealed) >= self.k:
            self.committed = True


class _SideB:
    def __init__(self, sync: SyncString, bob: Protocol, k: int, half: int, sigma: int,
                 dummy_wire: int, orientation: str):
        self.bob, self.k, self.half = bob, k, half
        self.sigma, self.dummy_wire = sigma, dummy_wire
        self.decoder = IndexingDecoder(sync, orientation)
        self.ib = 0
        self.iterations = 0
        self.revealed: List[Optional[int]] = []   # X~ as seen by Bob
        self.replies: List[int] = []              # Bob's answer to every reveal
        self.forwarded: List[int] = []            # Y_i actually sent back
        self.committed = k <= 0
        self.decisions: List[object] = []

    @property
    def done(self) -> bool:
        return self.iterations >= self.half

    def _reveal(self, x) -> int:
        self.revealed.append(x)
        y = self.bob(len(self.revealed) - 1, self.revealed)
        self.replies.append(y)
        return y

    def on_receive(self, w: int) -> int:
        self.iterations += 1
        if self.committed:
            self.decisions.append("committed")
            return self.dummy_wire
        if w == self.dummy_wire:
            got = TOP
        else:
            m, s = divmod(w, self.sigma)
            got = self.decoder.feed(s)
        self.decisions.append(got)
        out = self.dummy_wire
        if got is not TOP and got - 1 >= self.ib:
            if got - 1 > self.ib:
                self._reveal(DUMMY)
                self.ib += 1
            # the gap filler may already have been the k-th reveal
            if self.ib < self.k:
                y = self._reveal(m)
                self.ib += 1
                self.forwarded.append(y)
                out = y * self.sigma
        if self.ib >= self.k:
            self.committed = True
        return out


@dataclass
class InteractiveReport:
    n: int
    delta: Fraction
    eps: Fraction
    k: int
    x: List[Optional[int]]
    x_tilde: List[Optional[int]]
    y: List[Optional[int]]
    y_tilde: List[Optional[int]]
    committed_a: bool
    committed_b: bool
    edits: int
    clamped: int
    hops: int
    bound: Fraction
    steps: List[Dict[str, object]] = field(default_factory=list)
    uniqueness_violations: int = 0
    reveals_a: int = 0      # messages C_A actually handed to Alice (before padding)
    reveals_b: int = 0

    @property
    def n_prime(self) -> int:
        return 2 * self.k

    @property
    def corrupted_x(self) -> List[int]:
        return [i for i in range(self.k) if self.x[i] is DUMMY or self.x[i] != self.x_tilde[i]]

    @property
    def corrupted_y(self) -> List[int]:
        return [i for i in range(self.k) if self.y[i] is DUMMY or self.y[i] != self.y_tilde[i]]

    @property
    def corrupted(self) -> int:
        return len(self.corrupted_x) + len(self.corrupted_y)

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.corrupted, self.n_prime) if self.n_prime else Fraction(0)

    @property
    def within_bound(self) -> bool:
        return self.fraction <= self.bound

    @property
    def good_step_violations(self) -> int:
        """Good steps taken in sync before any commit whose round was still corrupted."""
        bad_x, bad_y = set(self.corrupted_x), set(self.corrupted_y)
        return sum(1 for s in self.steps
                   if s["good"] and s["in_sync"] and not s["committed"]
                   and (s["ia"] in bad_x or s["ia"] in bad_y))

    def metrics(self) -> Dict[str, object]:
        return {
            "rounds": self.n_prime,
            "corrupted": self.corrupted,
            "edits": self.edits,
            "committed_a": int(self.committed_a),
            "committed_b": int(self.committed_b),
            "reveals_a": self.reveals_a,
            "reveals_b": self.reveals_b,
            "good_step_violations": self.good_step_violations,
            "clamped": self.clamped,
        }

    def to_dict(self) -> Dict[str, object]:
        d = dict(self.metrics())
        d.update(n=self.n, delta=str(self.delta), eps=str(self.eps), k=self.k,
                 fraction=str(self.fraction), bound=str(self.bound), within_bound=self.within_bound)
        return d


def _fit(xs: List, k: int) -> List:
    xs = list(xs[:k])
    return xs + [DUMMY] * (k - len(xs))


def run_interactive(alice: Protocol, bob: Protocol, n: int, delta, sync: SyncString,
                    adversary: DuplexAdversary, sim_alphabet: int, edit_cost: int = 1,
                    orientation: str = PREFIX_FIRST) -> InteractiveReport:
    """Run C_A and C_B over ``n`` ping-pong hops and compare Alice's and Bob's transcripts."""
    delta = as_fraction(delta)
    if n % 2 or n <= 0:
        raise ValueError("n must be a positive even number of channel uses")
    half = n // 2
    if len(sync) != half:
        raise ValueError(f"synchronization string must have length n/2 = {half}")
    if not 0 <= delta < Fraction(1, 14):
        raise ValueError("the interactive simulation needs 0 <= delta < 1/14")
    eps = sync.eps
    k = commit_point(n, delta, eps)
    if k < 1:
        raise ValueError("no rounds left to simulate at these parameters")
    sigma = sync.string.alphabet.size
    dummy_wire = sim_alphabet * sigma
    a = _SideA(sync, alice, k, half, sigma, dummy_wire)
    b = _SideB(sync, bob, k, half, sigma, dummy_wire, orientation)
    ch = DuplexChannel(adversary, n, dummy_wire + 1, delta, edit_cost)

    steps: List[Dict[str, object]] = []
    holder, msg = "A", a.next_send()
    step: Dict[str, object] = {}
    while msg is not None:
        if holder == "A":
            # a C_A step: its send, C_B's handling and the reply that comes back
            step = {"ia": a.ia - 1, "ib": b.ib, "committed": a.committed or b.committed,
                    "clean": True, "decoded": False}
        recipient, sym = ch.hop(holder, msg)
        step["clean"] = step["clean"] and ch.hops[-1].action == "deliver"
        if recipient == "B":
            if b.done:
                break
            before = len(b.decisions)
            msg = b.on_receive(sym)
            got = b.decisions[before]
            if holder == "A" and step["clean"]:
                step["decoded"] = got is not TOP and got != "committed" and got - 1 == step["ia"]
        else:
            a.on_reply(sym)
            step["good"] = bool(step["clean"] and step["decoded"])
            step["in_sync"] = step["ia"] == step["ib"]
            steps.append(step)
            msg = a.next_send()
        holder = recipient

    x = _fit(a.messages, k)
    x_tilde = _fit(b.revealed, k)
    y = _fit(b.replies, k)
    y_tilde = _fit(a.revealed, k)
    return InteractiveReport(
        n=n, delta=delta, eps=eps, k=k, x=x, x_tilde=x_tilde, y=y, y_tilde=y_tilde,
        committed_a=a.committed, committed_b=b.committed, edits=ch.edits, clamped=ch.clamped,
        hops=len(ch.hops), bound=interactive_bound(delta, eps), steps=steps,
        uniqueness_violations=b.decoder.uniqueness_violations,
        reveals_a=len(a.revealed), reveals_b=len(b.revealed))


class ForgeSyncDuplexAdversary(DuplexAdversary):
    """Adaptive attack: replaces C_A's message with one claiming the next index.

    Hits are spread evenly over the run. C_A's pending index is read off the
    transcript as the number of hops it has sent so far.
    """

    name = "adaptive_forge"
    adaptive = True

    def __init__(self, sync: SyncString, sim_alphabet: int, seed: int, edit_cost: int = 1):
        self.sync, self.sim_alphabet, self.seed, self.edit_cost = sync, sim_alphabet, seed, edit_cost

    def reset(self, n, alphabet_size, budget):
        super().reset(n, alphabet_size, budget)
        self.rng = random.Random(self.seed)
        hits = budget // self.edit_cost
        self.spacing = max(1, (n // 2) // (hits + 1)) if hits else None
        self._sent_a = 0

    def act(self, view):
        if view.sender != "A":
            return DELIVER
        ia = self._sent_a
        self._sent_a += 1
        if (self.spacing is None or view.remaining < self.edit_cost
                or ia % self.spacing != self.spacing - 1 or ia + 1 >= len(self.sync)):
            return DELIVER
        sigma = self.sync.string.alphabet.size
        return Substitute(self.rng.randrange(self.sim_alphabet) * sigma + self.sync.string[ia + 1])
