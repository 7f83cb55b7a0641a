"""Experiment driver: parameter sweeps, bound-vs-measured records, reproducible seeds.

Every trial gets its own seed ``seed ^ H(trial)`` where ``H`` is the first 8
bytes of SHA-256 over the trial index as an 8-byte big-endian integer, so a
run is reproducible from (spec, seed) no matter how trials are scheduled.
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .channel import (BurstAdversary, BurstDuplexAdversary, PlannedDuplexAdversary, PrefixReplayAdversary,
                      UniformAdversary, UniformDuplexAdversary, strategy_identity, transmit)
from .insdel_code import (BlockCodeParams, DecodeFailed, code_sync, decode, encode, hazard_free, layout,
                          payload_stream)
from .sim_binary import (ChunkParams, DuplexHeaderAttack, HeaderAttack, Receiver, default_sync,
                         run_binary)
from .sim_interactive import (ForgeSyncDuplexAdversary, echo_protocol, run_interactive,
                              running_sum_protocol)
from .sim_oneway import ForgeAheadAdversary, prefix_replay_attack, run_oneway
from .strings import as_fraction, gen_sync, suggest_alphabet_size
from .treecode import (codeword_prefixes, concat_sync, extend_sync_to_edtc, extract_sync_path,
                       find_bad_lambda, min_lambda_ratio, rightmost_path, sd_unique_decode,
                       search_tree_code, UniquenessViolation)

CSV_FIELDS = ("target", "n", "delta_num", "delta_den", "eps", "c", "adversary", "seed",
              "metric", "measured", "bound", "pass")

TARGETS = ("oneway", "interactive", "binary", "code", "treecode-suite")

ADVERSARIES = {
    "oneway": ("identity", "uniform", "burst", "prefix_replay", "adaptive"),
    "interactive": ("identity", "uniform", "burst", "adaptive"),
    "binary": ("identity", "uniform", "burst", "header"),
    "code": ("identity", "uniform", "burst", "prefix_replay", "header"),
    "treecode-suite": ("none",),
}

UPPER, REPORT = "upper", "report"


def trial_seed(seed: int, trial: int) -> int:
    h = hashlib.sha256(trial.to_bytes(8, "big")).digest()
    return (seed ^ int.from_bytes(h[:8], "big")) & (2 ** 64 - 1)


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, bool):
        return str(int(x))
    return str(x)


@dataclass(frozen=True)
class BoundRecord:
    """One measured metric next to its closed-form bound.

    ``kind == "upper"`` passes iff measured <= bound. ``"report"`` rows carry a
    reference value that constrains no particular simulator and never fail.
    """

    target: str
    n: int
    delta: Fraction
    eps: Fraction
    c: int
    adversary: str
    seed: int
    metric: str
    measured: Fraction
    bound: Fraction
    kind: str = UPPER

    @property
    def passed(self) -> Optional[bool]:
        return None if self.kind == REPORT else self.measured <= self.bound

    def row(self) -> Dict[str, str]:
        return {
            "target": self.target, "n": str(self.n),
            "delta_num": str(self.delta.numerator), "delta_den": str(self.delta.denominator),
            "eps": _fmt(self.eps), "c": str(self.c), "adversary": self.adversary,
            "seed": str(self.seed), "metric": self.metric,
            "measured": _fmt(self.measured), "bound": _fmt(self.bound),
            "pass": "n/a" if self.passed is None else str(int(self.passed)),
        }

    def sort_key(self) -> Tuple:
        return (self.target, self.n, self.delta, self.eps, self.c, self.adversary, self.seed, self.metric)


@dataclass
class ExperimentSpec:
    target: str
    n: Sequence[int] = (200,)
    delta: Sequence = (Fraction(1, 100),)
    eps: Sequence = (Fraction(1, 2),)
    c: Sequence[int] = (3,)
    adversaries: Optional[Sequence[str]] = None
    trials: int = 1
    seed: int = 0
    protocols: Sequence[str] = ("echo", "xor")
    blocks: int = 2

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ValueError(f"unknown target {self.target!r}; pick one of {', '.join(TARGETS)}")
        self.delta = tuple(as_fraction(d) for d in self.delta)
        self.eps = tuple(as_fraction(e) for e in self.eps)
        if self.adversaries is None:
            self.adversaries = ADVERSARIES[self.target]
        bad = [a for a in self.adversaries if a not in ADVERSARIES[self.target]]
        if bad:
            raise ValueError(f"adversaries {bad} are not available for {self.target}")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if any(not 0 <= d < 1 for d in self.delta) or any(not 0 < e < 1 for e in self.eps):
            raise ValueError("need 0 <= delta < 1 and 0 < eps < 1")

    def jobs(self) -> List[Tuple]:
        grid = itertools.product(self.n, self.delta, self.eps, self.c, self.adversaries, range(self.trials))
        return [(self.target, n, d, e, c, a, trial_seed(self.seed, t), tuple(self.protocols), self.blocks)
                for n, d, e, c, a, t in grid]

    def to_dict(self) -> Dict[str, object]:
        d = asdict(self)
        d["delta"] = [_fmt(x) for x in self.delta]
        d["eps"] = [_fmt(x) for x in self.eps]
        for k in ("n", "c", "adversaries", "protocols"):
            d[k] = list(d[k])
        return d


# ---------------------------------------------------------------------------
# Trials


def _rec(job, metric, measured, bound, kind=UPPER) -> BoundRecord:
    target, n, delta, eps, c, adv, seed = job[:7]
    return BoundRecord(target, n, delta, eps, c, adv, seed, metric, Fraction(measured), Fraction(bound), kind)


def _sigma(eps: Fraction) -> int:
    # 64 symbols suffice at eps = 1/2; smaller eps needs the larger suggested alphabet
    return max(64, suggest_alphabet_size(eps))


def _oneway(job) -> List[BoundRecord]:
    _, n, delta, eps, c, adv, seed = job[:7]
    rng = random.Random(seed)
    q = 4
    sync = default_sync(n, eps, _sigma(eps), 0)
    msgs = [rng.randrange(q) for _ in range(n)]
    out = []
    if adv == "prefix_replay":
        res = prefix_replay_attack(msgs, sync, delta, q)
        out.append(_rec(job, "uncorrupted_min", res.min_uncorrupted, res.frontier_deterministic, REPORT))
        out.append(_rec(job, "uncorrupted_min_vs_randomized", res.min_uncorrupted, res.frontier_randomized, REPORT))
        reps = [res.scenario_a, res.scenario_b]
    else:
        a = {"identity": strategy_identity, "uniform": lambda: UniformAdversary(seed),
             "burst": lambda: BurstAdversary(5, seed),
             "adaptive": lambda: ForgeAheadAdversary(sync, q, seed)}[adv]()
        reps = [run_oneway(msgs, sync, a, delta, q)]
    for k, rep in enumerate(reps):
        tag = "" if len(reps) == 1 else "ab"[k] + ":"
        out.append(_rec(job, tag + "corrupted", rep.corrupted, rep.bound))
        out.append(_rec(job, tag + "reveal_count_error", abs(rep.n_prime - math.floor(n * (1 - delta))), 0))
        out.append(_rec(job, tag + "audit_violations", rep.audit_violations, 0))
    return out


def _interactive(job) -> List[BoundRecord]:
    _, n, delta, eps, c, adv, seed, protocols = job[:8]
    rng = random.Random(seed)
    sync = default_sync(n // 2, eps, _sigma(eps), 0)
    out = []
    for proto in protocols:
        q = 4 if proto == "echo" else 2
        inputs = [rng.randrange(q) for _ in range(n)]
        alice, bob = echo_protocol(inputs) if proto == "echo" else running_sum_protocol(inputs, q)
        a = {"identity": lambda: PlannedDuplexAdversary(name="identity"),
             "uniform": lambda: UniformDuplexAdversary(seed),
             "burst": lambda: BurstDuplexAdversary(5, seed),
             "adaptive": lambda: ForgeSyncDuplexAdversary(sync, q, seed)}[adv]()
        rep = run_interactive(alice, bob, n, delta, sync, a, q)
        out.append(_rec(job, f"{proto}:corrupted_fraction", rep.fraction, rep.bound))
        out.append(_rec(job, f"{proto}:uncommitted_parties", 2 - rep.committed_a - rep.committed_b, 0))
        out.append(_rec(job, f"{proto}:reveal_count_error", abs(rep.reveals_a - rep.k) + abs(rep.reveals_b - rep.k), 0))
        out.append(_rec(job, f"{proto}:good_step_violations", rep.good_step_violations, 0))
    return out


# chunk sizes need delta > 0; a noiseless row is sized here and sent with zero budget
DESIGN_DELTA = Fraction(1, 1000)


def _binary(job) -> List[BoundRecord]:
    _, n, delta, eps, c, adv, seed = job[:7]
    noiseless = delta == 0
    if noiseless:
        delta, adv = DESIGN_DELTA, "identity"
    p = ChunkParams.for_delta(delta, c)
    sync = default_sync(max(p.r_total(n), -(-(n // 2) // p.r_c)), eps, 64, 0)
    a = {"identity": lambda: PlannedDuplexAdversary(name="identity"),
         "uniform": lambda: UniformDuplexAdversary(seed),
         "burst": lambda: BurstDuplexAdversary(5, seed),
         "header": lambda: DuplexHeaderAttack(Receiver(p, sync))}[adv]()
    rep = run_binary(None, None, n, delta, c, eps, a, precode=True, sync=sync, seed=seed % 2 ** 32)
    out = [_rec(job, "bad_chunks", rep.bad_chunks, 0 if noiseless else rep.bound)]
    # per-class budgets behind the total; the zeros header can exceed error_bad's
    for k, v in sorted(rep.sub_bounds().items()):
        out.append(_rec(job, k, rep.metrics()[k], v, REPORT))
    out.append(_rec(job, "verbatim_violations", rep.verbatim_violations, 0))
    out.append(_rec(job, "certificate_failures", int(not rep.certificate_ok), 0))
    return out


def _code(job) -> List[BoundRecord]:
    _, n, delta, eps, c, adv, seed, _, blocks = job
    rng = random.Random(seed)
    p = BlockCodeParams.for_delta(delta or DESIGN_DELTA, c, eps)
    msg = [rng.randrange(2) for _ in range(blocks * p.r_b)]
    cw = encode(msg, p)
    lay = layout(len(msg), p)
    if adv == "header":
        a = HeaderAttack()
        a.bind(Receiver(p.chunk, code_sync(lay.chunks, p), p.header))
    else:
        a = {"identity": strategy_identity, "uniform": lambda: UniformAdversary(seed),
             "burst": lambda: BurstAdversary(5, seed),
             "prefix_replay": lambda: PrefixReplayAdversary("a")}[adv]()
    rec, _ = transmit(cw, a, 2, delta)
    try:
        failed = int(decode(rec, len(msg), p) != msg)
    except DecodeFailed:
        failed = 1
    return [_rec(job, "decode_failures", failed, 0),
            _rec(job, "hazard_patterns", int(not hazard_free(payload_stream(msg, p), p.s)), 0),
            _rec(job, "rate", Fraction(len(msg), len(cw)), 1, REPORT)]


def _treecode(job) -> List[BoundRecord]:
    _, n, delta, eps, c, adv, seed = job[:7]
    rng = random.Random(seed)
    alpha = Fraction(1, 4)
    depth = max(2, min(5, n))
    t = search_tree_code(2, depth, 8, 1 - alpha, seed=rng.randrange(2 ** 31))
    if not t:
        return [_rec(job, "search_not_found", 1, 0)]
    s = gen_sync(depth, eps, 16, rng.randrange(2 ** 31))
    out = []
    conc = concat_sync(t, s, alpha)
    if eps + alpha < Fraction(1, 2):
        out.append(_rec(job, "concat_bad_lambda", int(not find_bad_lambda(conc, 1 - eps - alpha)), 0))
    if eps + alpha < 1:
        out.append(_rec(job, "concat_bad_lambda_sum", int(not find_bad_lambda(conc, eps + alpha)), 0))
    ed_eps = 1 - min_lambda_ratio(conc) + Fraction(1, 100)
    for l in (2, 4):
        if ed_eps + Fraction(1, l) < 1:
            path = [(0, 0)]
            for _ in range(depth):
                path.append(rng.choice(conc.children(path[-1])))
            try:
                extract_sync_path(conc, path, l, ed_eps)
                bad = 0
            except ValueError:
                bad = 1
            out.append(_rec(job, f"extract_l{l}_failures", bad, 0))
    e = max(ed_eps, eps)
    ext = extend_sync_to_edtc(s, conc)
    out.append(_rec(job, "extend_bad_lambda", int(not find_bad_lambda(ext, 2 * e - e * e)), 0))
    out.append(_rec(job, "extend_path_mismatch",
                    int(tuple(ext.label(v) - conc.sigma for v in rightmost_path(ext)[1:]) != s.string.symbols), 0))
    prefixes = codeword_prefixes(conc)
    viol = 0
    for _ in range(200):
        w = list(rng.choice(prefixes))
        for _ in range(rng.randint(0, 2)):
            if w and rng.random() < 0.5:
                w.pop(rng.randrange(len(w)))
            else:
                w.insert(rng.randrange(len(w) + 1), rng.randrange(conc.sigma))
        if not w:
            continue
        try:
            sd_unique_decode(conc, w, ed_eps, prefixes)
        except UniquenessViolation:
            viol += 1
    out.append(_rec(job, "uniqueness_violations", viol, 0))
    return out


RUNNERS = {"oneway": _oneway, "interactive": _interactive, "binary": _binary, "code": _code,
           "treecode-suite": _treecode}


def run_job(job) -> List[BoundRecord]:
    return RUNNERS[job[0]](job)


def threads() -> int:
    try:
        return max(1, int(os.environ.get("SYNCSIM_THREADS", "1")))
    except ValueError:
        return 1


def run_experiment(spec: ExperimentSpec, workers: Optional[int] = None) -> List[BoundRecord]:
    """All trials of ``spec``, sorted so the output does not depend on scheduling."""
    jobs = spec.jobs()
    workers = workers or threads()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(run_job, jobs))
    else:
        chunks = [run_job(j) for j in jobs]
    return sorted((r for ch in chunks for r in ch), key=BoundRecord.sort_key)


def to_csv(records: Sequence[BoundRecord]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def summary(spec: ExperimentSpec, records: Sequence[BoundRecord]) -> Dict[str, object]:
    failed = [r.row() for r in records if r.passed is False]
    by_metric: Dict[str, Dict[str, object]] = {}
    for r in records:
        m = by_metric.setdefault(r.metric, {"rows": 0, "failed": 0, "max_measured": None})
        m["rows"] += 1
        m["failed"] += r.passed is False
        if m["max_measured"] is None or r.measured > Fraction(m["max_measured"]):
            m["max_measured"] = _fmt(r.measured)
    return {"spec": spec.to_dict(), "rows": len(records), "failed": len(failed),
            "ok": not failed, "metrics": by_metric, "failures": failed}


def violated(records: Sequence[BoundRecord]) -> bool:
    return any(r.passed is False for r in records)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)
