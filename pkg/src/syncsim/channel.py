"""Budgeted insertion-deletion channels and adversary strategies.

Two channel shapes are provided:

* ``Channel``: one-way. Every ``send`` consults the adversary, which may insert
  symbols before the pending one and then deliver or delete it. The channel
  enforces the budget itself and records the ground-truth string matching.
* ``DuplexChannel``: ping-pong traffic between two intermediaries. Every hop is
  delivered, substituted (the message is dropped and a forged one reaches the
  recipient) or bounced (dropped, with a forged reply handed back to the
  sender). Both are edit corruptions: one deletion followed by one insertion.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

from .strings import STAR, StringMatching, as_fraction

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Actions


@dataclass(frozen=True)
class Deliver:
    def to_json(self):
        return ["deliver"]


@dataclass(frozen=True)
class Delete:
    def to_json(self):
        return ["delete"]


@dataclass(frozen=True)
class Insert:
    sym: int

    def to_json(self):
        return ["insert", self.sym]


ErrorAction = Union[Deliver, Delete, Insert]
DELIVER = Deliver()
DELETE = Delete()


def action_from_json(item) -> ErrorAction:
    kind = item[0]
    if kind == "deliver":
        return DELIVER
    if kind == "delete":
        return DELETE
    if kind == "insert":
        return Insert(int(item[1]))
    raise ValueError(f"unknown action {item!r}")


@dataclass(frozen=True)
class ErrorPattern:
    """Flat action list replayed against the sends.

    ``Deliver`` and ``Delete`` each consume one send; ``Insert`` emits a symbol
    without consuming one. Once the list runs out every send is delivered.
    """

    actions: Tuple[ErrorAction, ...]

    @classmethod
    def of(cls, actions: Sequence[ErrorAction]) -> "ErrorPattern":
        return cls(tuple(actions))

    @property
    def cost(self) -> int:
        return sum(1 for a in self.actions if not isinstance(a, Deliver))

    def to_json(self) -> str:
        return json.dumps([a.to_json() for a in self.actions])

    @classmethod
    def from_json(cls, text: str) -> "ErrorPattern":
        return cls(tuple(action_from_json(x) for x in json.loads(text)))


# ---------------------------------------------------------------------------
# Adversaries


@dataclass(frozen=True)
class ChannelView:
    """What an adversary may look at before choosing an action.

    ``pending`` is the symbol about to be sent (None after the last send);
    only adaptive adversaries receive it, oblivious ones always see None.
    """

    slot: int
    pending: Optional[int]
    sent: Sequence[int]        # live, read-only
    received: Sequence[int]    # live, read-only
    remaining: int


class Adversary:
    """Base class. ``reset`` is called once per run before any send."""

    name = "adversary"
    adaptive = False

    def reset(self, n: int, alphabet_size: int, budget: int) -> None:
        self.n, self.alphabet_size, self.budget = n, alphabet_size, budget

    def act(self, view: ChannelView) -> ErrorAction:
        return DELIVER


class PatternAdversary(Adversary):
    """Oblivious adversary replaying a fixed ErrorPattern."""

    def __init__(self, pattern: ErrorPattern, name: str = "pattern"):
        self.pattern = pattern
        self.name = name

    def reset(self, n, alphabet_size, budget):
        super().reset(n, alphabet_size, budget)
        self._pos = 0

    def act(self, view):
        if self._pos >= len(self.pattern.actions):
            return DELIVER
        a = self.pattern.actions[self._pos]
        self._pos += 1
        return a


class _PlannedAdversary(PatternAdversary):
    """Oblivious adversary whose pattern is drawn at reset time."""

    def __init__(self, name: str):
        super().__init__(ErrorPattern(()), name)

    def plan(self, n: int, alphabet_size: int, budget: int) -> List[ErrorAction]:
        raise NotImplementedError

    def reset(self, n, alphabet_size, budget):
        self.pattern = ErrorPattern.of(self.plan(n, alphabet_size, budget))
        super().reset(n, alphabet_size, budget)


def _layout(n: int, deletes: Sequence[int], inserts: Sequence[Tuple[int, int]]) -> List[ErrorAction]:
    """Flatten per-slot events into an action list.

    ``deletes`` are send slots in [0, n); ``inserts`` are (slot, symbol) with
    slot in [0, n], emitted before the send in that slot (slot n: after the last).
    """
    dset = set(deletes)
    before: dict = {}
    for slot, sym in inserts:
        before.setdefault(slot, []).append(sym)
    out: List[ErrorAction] = []
    for t in range(n + 1):
        out.extend(Insert(x) for x in before.get(t, ()))
        if t < n:
            out.append(DELETE if t in dset else DELIVER)
    return out


class UniformAdversary(_PlannedAdversary):
    """Exactly ``budget`` events at uniformly random slots, each a deletion or an insertion."""

    def __init__(self, seed: int):
        super().__init__("uniform")
        self.seed = seed

    def plan(self, n, alphabet_size, budget):
        rng = random.Random(self.seed)
        kinds = [rng.random() < 0.5 for _ in range(budget)]
        n_del = min(sum(kinds), n)
        deletes = rng.sample(range(n), n_del)
        inserts = [(rng.randrange(n + 1), rng.randrange(alphabet_size))
                   for _ in range(budget - n_del)]
        return _layout(n, deletes, inserts)


class BurstAdversary(_PlannedAdversary):
    """Spends the budget in runs of ``burst_len`` consecutive deletions or insertions."""

    def __init__(self, burst_len: int, seed: int):
        if burst_len < 1:
            raise ValueError("burst_len must be positive")
        super().__init__("burst")
        self.burst_len = burst_len
        self.seed = seed

    def plan(self, n, alphabet_size, budget):
        rng = random.Random(self.seed)
        deletes: set = set()
        inserts = []
        left = budget
        while left > 0:
            size = min(self.burst_len, left)
            if rng.random() < 0.5 and len(deletes) < n:
                start = rng.randrange(max(1, n - size + 1))
                new = [t for t in range(start, min(n, start + size)) if t not in deletes]
                if not new:
                    continue
                deletes.update(new)
                left -= len(new)
            else:
                slot = rng.randrange(n + 1)
                inserts.extend((slot, rng.randrange(alphabet_size)) for _ in range(size))
                left -= size
        return _layout(n, sorted(deletes), inserts)


class PrefixReplayAdversary(_PlannedAdversary):
    """The two scenarios of the prefix-replay attack.

    Scenario ``"a"`` deletes the first ``budget`` sends. Scenario ``"b"``
    inserts ``replay`` (wire symbols recorded from a paired run) before the
    first send and is otherwise silent.
    """

    def __init__(self, scenario: str = "a", replay: Sequence[int] = ()):
        if scenario not in ("a", "b"):
            raise ValueError("scenario must be 'a' or 'b'")
        super().__init__(f"prefix_replay_{scenario}")
        self.scenario = scenario
        self.replay = tuple(replay)

    def plan(self, n, alphabet_size, budget):
        if self.scenario == "a":
            return _layout(n, range(min(budget, n)), [])
        return _layout(n, [], [(0, x) for x in self.replay[:budget]])


class CallbackAdversary(Adversary):
    """Adaptive adversary driven by a user callback ``view -> ErrorAction``."""

    adaptive = True

    def __init__(self, callback: Callable[[ChannelView], ErrorAction], name: str = "callback"):
        self.callback = callback
        self.name = name

    def act(self, view):
        return self.callback(view)


def strategy_identity() -> Adversary:
    a = Adversary()
    a.name = "identity"
    return a


def strategy_uniform(delta, seed: int) -> Adversary:
    _check_delta(delta)
    return UniformAdversary(seed)


def strategy_burst(delta, burst_len: int, seed: int) -> Adversary:
    _check_delta(delta)
    return BurstAdversary(burst_len, seed)


def strategy_prefix_replay(delta, scenario: str = "a", replay: Sequence[int] = ()) -> Adversary:
    _check_delta(delta)
    return PrefixReplayAdversary(scenario, replay)


def _check_delta(delta) -> None:
    d = as_fraction(delta)
    if not 0 <= d < 1:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")


def budget_for(n: int, delta) -> int:
    return math.floor(n * as_fraction(delta))


# ---------------------------------------------------------------------------
# One-way channel


DELIVERED, DELETED, INSERTED = "delivered", "deleted", "inserted"


@dataclass
class TransmissionLog:
    """Ground truth of one run.

    ``classes[k]`` classifies aligned position k. For every received symbol,
    ``origin`` holds the 1-based send index it came from (None if inserted)
    and ``rounds`` the 1-based send during which it was emitted.
    """

    tau1: List = field(default_factory=list)
    tau2: List = field(default_factory=list)
    classes: List[str] = field(default_factory=list)
    origin: List[Optional[int]] = field(default_factory=list)
    rounds: List[int] = field(default_factory=list)
    clamped: int = 0

    @property
    def matching(self) -> StringMatching:
        return StringMatching(tuple(self.tau1), tuple(self.tau2))

    @property
    def insertions(self) -> int:
        return self.classes.count(INSERTED)

    @property
    def deletions(self) -> int:
        return self.classes.count(DELETED)

    @property
    def sent(self) -> Tuple[int, ...]:
        return tuple(x for x in self.tau1 if x is not STAR)

    @property
    def received(self) -> Tuple[int, ...]:
        return tuple(x for x in self.tau2 if x is not STAR)

    def deleted_sends(self) -> List[int]:
        """1-based send indices that were deleted."""
        out, i = [], 0
        for u, c in zip(self.tau1, self.classes):
            if u is not STAR:
                i += 1
                if c == DELETED:
                    out.append(i)
        return out


class Channel:
    """One-way insertion-deletion channel with an enforced budget of ``floor(n * delta)``."""

    def __init__(self, adversary: Adversary, n: int, alphabet_size: int, delta=0,
                 budget: Optional[int] = None):
        self.adversary = adversary
        self.n = n
        self.alphabet_size = alphabet_size
        self.budget = budget_for(n, delta) if budget is None else budget
        self.spent = 0
        self.log = TransmissionLog()
        self._sent: List[int] = []
        self._received: List[int] = []
        self._closed = False
        adversary.reset(n, alphabet_size, self.budget)

    @property
    def remaining(self) -> int:
        return self.budget - self.spent

    def _view(self, pending):
        return ChannelView(len(self._sent), pending if self.adversary.adaptive else None,
                           self._sent, self._received, self.remaining)

    def _clamp(self, action) -> None:
        self.log.clamped += 1
        log.warning("adversary exceeded budget %d; %r clamped", self.budget, action)

    def _emit(self, sym: int, out: List[int]) -> None:
        if not 0 <= sym < self.alphabet_size:
            raise ValueError(f"inserted symbol {sym} outside the wire alphabet")
        self.log.tau1.append(STAR)
        self.log.tau2.append(sym)
        self.log.classes.append(INSERTED)
        self.log.origin.append(None)
        self.log.rounds.append(max(1, len(self._sent) + (0 if self._closed else 1)))
        self._received.append(sym)
        out.append(sym)

    def _inserts(self, pending, out) -> ErrorAction:
        # keep emitting while the adversary asks for insertions
        while True:
            action = self.adversary.act(self._view(pending))
            if not isinstance(action, Insert):
                return action
            if self.remaining <= 0:
                self._clamp(action)
                return DELIVER
            self.spent += 1
            self._emit(action.sym, out)

    def send(self, sym: int) -> List[int]:
        if self._closed:
            raise RuntimeError("channel already closed")
        out: List[int] = []
        action = self._inserts(sym, out)
        if isinstance(action, Delete) and self.remaining <= 0:
            self._clamp(action)
            action = DELIVER
        self._sent.append(sym)
        self.log.tau1.append(sym)
        if isinstance(action, Delete):
            self.spent += 1
            self.log.tau2.append(STAR)
            self.log.classes.append(DELETED)
        else:
            self.log.tau2.append(sym)
            self.log.classes.append(DELIVERED)
            self.log.origin.append(len(self._sent))
            self.log.rounds.append(len(self._sent))
            self._received.append(sym)
            out.append(sym)
        return out

    def close(self) -> List[int]:
        """Flush insertions placed after the last send."""
        out: List[int] = []
        if not self._closed:
            self._closed = True
            self._inserts(None, out)
        return out


def transmit(symbols: Sequence[int], adversary: Adversary, alphabet_size: int, delta=0,
             budget: Optional[int] = None) -> Tuple[List[int], TransmissionLog]:
    """Send a whole string through a fresh channel; return (received, log)."""
    ch = Channel(adversary, len(symbols), alphabet_size, delta, budget)
    received: List[int] = []
    for x in symbols:
        received.extend(ch.send(x))
    received.extend(ch.close())
    return received, ch.log


# ---------------------------------------------------------------------------
# Duplex (ping-pong) channel


@dataclass(frozen=True)
class Substitute:
    """Drop the message and deliver ``sym`` to the intended recipient instead."""

    sym: int


@dataclass(frozen=True)
class Bounce:
    """Drop the message and hand ``sym`` back to the sender as a forged reply."""

    sym: int


HopAction = Union[Deliver, Substitute, Bounce]


@dataclass(frozen=True)
class HopView:
    hop: int
    sender: str
    pending: Optional[int]
    transcript: Sequence[Tuple[str, int, str, int]]   # live, read-only
    remaining: int


@dataclass
class HopRecord:
    sender: str
    sent: int
    action: str
    recipient: str
    delivered: int


class DuplexAdversary:
    name = "duplex"
    adaptive = False

    def reset(self, n: int, alphabet_size: int, budget: int) -> None:
        self.n, self.alphabet_size, self.budget = n, alphabet_size, budget

    def act(self, view: HopView) -> HopAction:
        return DELIVER


class DuplexChannel:
    """Ping-pong channel between parties ``"A"`` and ``"B"``.

    The budget is ``floor(n * delta)`` units. An edit corruption costs
    ``edit_cost`` units: 1 charges it as a single edit corruption, 2 charges
    its deletion and insertion separately.
    """

    def __init__(self, adversary: DuplexAdversary, n: int, alphabet_size: int, delta=0,
                 edit_cost: int = 1, budget: Optional[int] = None):
        if edit_cost not in (1, 2):
            raise ValueError("edit_cost must be 1 or 2")
        self.adversary = adversary
        self.n = n
        self.alphabet_size = alphabet_size
        self.edit_cost = edit_cost
        self.budget = budget_for(n, delta) if budget is None else budget
        self.spent = 0
        self.clamped = 0
        self.hops: List[HopRecord] = []
        self._transcript: List[Tuple[str, int, str, int]] = []
        adversary.reset(n, alphabet_size, self.budget)

    @property
    def edits(self) -> int:
        return sum(1 for h in self.hops if h.action != "deliver")

    def hop(self, sender: str, sym: int) -> Tuple[str, int]:
        """Carry one message; return (who receives next, what they receive)."""
        other = "B" if sender == "A" else "A"
        view = HopView(len(self.hops), sender, sym if self.adversary.adaptive else None,
                       self._transcript,
                       self.budget - self.spent)
        action = self.adversary.act(view)
        if not isinstance(action, Deliver):
            if self.budget - self.spent < self.edit_cost:
                self.clamped += 1
                log.warning("duplex adversary exceeded budget %d; %r clamped", self.budget, action)
                action = DELIVER
            elif not 0 <= action.sym < self.alphabet_size:
                raise ValueError(f"forged symbol {action.sym} outside the wire alphabet")
            else:
                self.spent += self.edit_cost
        if isinstance(action, Substitute):
            rec = HopRecord(sender, sym, "substitute", other, action.sym)
        elif isinstance(action, Bounce):
            rec = HopRecord(sender, sym, "bounce", sender, action.sym)
        else:
            rec = HopRecord(sender, sym, "deliver", other, sym)
        self.hops.append(rec)
        self._transcript.append((rec.sender, rec.sent, rec.recipient, rec.delivered))
        return rec.recipient, rec.delivered


class PlannedDuplexAdversary(DuplexAdversary):
    """Oblivious duplex adversary: a fixed map from hop index to action."""

    def __init__(self, plan: Optional[dict] = None, name: str = "planned"):
        self._fixed = dict(plan or {})
        self.name = name

    def draw(self, n, alphabet_size, budget) -> dict:
        return self._fixed

    def reset(self, n, alphabet_size, budget):
        super().reset(n, alphabet_size, budget)
        self.plan = self.draw(n, alphabet_size, budget)

    def act(self, view):
        return self.plan.get(view.hop, DELIVER)


def _forge(rng: random.Random, alphabet_size: int):
    kind = Substitute if rng.random() < 0.5 else Bounce
    return kind(rng.randrange(alphabet_size))


class UniformDuplexAdversary(PlannedDuplexAdversary):
    """Edit corruptions on uniformly random hops, substitute or bounce at random."""

    def __init__(self, seed: int, edit_cost: int = 1):
        super().__init__(name="uniform")
        self.seed, self.edit_cost = seed, edit_cost

    def draw(self, n, alphabet_size, budget):
        rng = random.Random(self.seed)
        k = min(n, budget // self.edit_cost)
        return {h: _forge(rng, alphabet_size) for h in sorted(rng.sample(range(n), k))}


class BurstDuplexAdversary(PlannedDuplexAdversary):
    """Edit corruptions on runs of ``burst_len`` consecutive hops."""

    def __init__(self, burst_len: int, seed: int, edit_cost: int = 1):
        super().__init__(name="burst")
        self.burst_len, self.seed, self.edit_cost = burst_len, seed, edit_cost

    def draw(self, n, alphabet_size, budget):
        rng = random.Random(self.seed)
        k = min(n, budget // self.edit_cost)
        plan: dict = {}
        while len(plan) < k:
            start = rng.randrange(n)
            for h in range(start, min(n, start + self.burst_len)):
                if len(plan) < k and h not in plan:
                    plan[h] = _forge(rng, alphabet_size)
        return plan
