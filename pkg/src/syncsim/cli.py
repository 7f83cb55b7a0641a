"""Command-line entry point: ``syncsim <command> ...``.

Exit codes: 0 success, 1 a bound or verification failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import struct
import sys
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from . import harness
from .channel import (BurstAdversary, BurstDuplexAdversary, PlannedDuplexAdversary, PrefixReplayAdversary,
                      UniformAdversary, UniformDuplexAdversary, strategy_identity, transmit)
from .indexing import PREFIX_FIRST, RECEIVED_FIRST, TOP, count_misdecodings, decode_stream, misdecoding_bound
from .insdel_code import OUTER_CODES, BlockCodeParams, DecodeFailed, decode, encode
from .sim_binary import ONE_ZEROS, ZEROS, ChunkParams, DuplexHeaderAttack, Receiver, default_sync, run_binary
from .sim_interactive import ForgeSyncDuplexAdversary, echo_protocol, run_interactive, running_sum_protocol
from .sim_oneway import ForgeAheadAdversary, run_oneway
from .strings import Alphabet, SymbolString, SyncString, gen_sync, verify_sync
from .treecode import (ConstructionError, PrefixCodeTree, extend_sync_to_edtc, extract_sync_path,
                       concat_sync, find_bad_lambda, min_lambda_ratio, search_tree_code,
                       tree_code_distance, verify_tree_code)

MAGIC = b"SYNB"
HEADER = struct.Struct(">4sQQ")   # magic, bit count, message byte count


class UsageError(Exception):
    pass


def rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def _list(conv):
    def parse(text: str):
        return [conv(x) for x in text.split(",") if x]
    return parse


def _frac(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------------------
# I/O helpers


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, obj) -> None:
    _emit(args, json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n")


def _emit_rows(args, rows: List[dict], fields: Sequence[str]) -> None:
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in fields})
        _emit(args, buf.getvalue())
    else:
        _emit_json(args, rows)


def _read_symbols(path: str) -> SymbolString:
    """A synchronization-string JSON file or whitespace/comma separated integers."""
    text = open(path).read()
    try:
        d = json.loads(text)
    except json.JSONDecodeError:
        syms = [int(x) for x in text.replace(",", " ").split()]
        return SymbolString.of(syms)
    if isinstance(d, list):
        return SymbolString.of(d)
    return SymbolString(Alphabet(d["alphabet"]), tuple(d["symbols"]))


def _read_sync(path: str) -> SyncString:
    return SyncString.from_json(open(path).read())


def _read_tree(path: str) -> PrefixCodeTree:
    return PrefixCodeTree.from_json(open(path).read())


def write_bits(path: str, bits: Sequence[int], message_bytes: int) -> None:
    with open(path, "wb") as f:
        f.write(HEADER.pack(MAGIC, len(bits), message_bytes))
        f.write(np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes())


def read_bits(path: str):
    raw = open(path, "rb").read()
    if len(raw) < HEADER.size:
        raise UsageError(f"{path}: too short for a bit-stream header")
    magic, nbits, msg_bytes = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise UsageError(f"{path}: not a syncsim bit stream")
    body = np.frombuffer(raw[HEADER.size:], dtype=np.uint8)
    bits = np.unpackbits(body)[:nbits]
    if len(bits) != nbits:
        raise UsageError(f"{path}: header promises {nbits} bits, file holds {len(bits)}")
    return [int(b) for b in bits], msg_bytes


# ---------------------------------------------------------------------------
# Commands


def cmd_gen_sync(args) -> int:
    s = gen_sync(args.n, args.eps, args.sigma, args.seed)
    if args.format == "csv":
        _emit_rows(args, [{"index": i + 1, "symbol": x} for i, x in enumerate(s.string)], ("index", "symbol"))
    else:
        _emit(args, s.to_json() + "\n")
    return 0


def cmd_verify_sync(args) -> int:
    s = _read_symbols(args.input)
    eps = args.eps
    if eps is None:
        d = json.loads(open(args.input).read())
        if not isinstance(d, dict) or "eps" not in d:
            raise UsageError("--eps is required unless the input file records it")
        eps = Fraction(d["eps"])
    v = verify_sync(s, eps)
    _emit_json(args, {"length": len(s), "eps": _frac(eps), "ok": v is None,
                      "violation": None if v is None else list(v)})
    return 0 if v is None else 1


def _oneway_adversary(name: str, seed: int, sync=None, q: int = 4):
    if name == "identity":
        return strategy_identity()
    if name == "uniform":
        return UniformAdversary(seed)
    if name == "burst":
        return BurstAdversary(5, seed)
    if name == "prefix_replay":
        return PrefixReplayAdversary("a")
    if name == "adaptive":
        return ForgeAheadAdversary(sync, q, seed)
    raise UsageError(f"unknown adversary {name!r}")


def cmd_decode_trace(args) -> int:
    sync = gen_sync(args.n, args.eps, args.sigma, args.seed)
    adv = _oneway_adversary(args.adversary, args.seed)
    received, log = transmit(list(sync.string), adv, sync.alphabet.size, args.delta)
    decoded = decode_stream(sync, received, args.orientation)
    rows = []
    for j, (x, d) in enumerate(zip(received, decoded), start=1):
        origin = log.origin[j - 1]
        rows.append({"position": j, "symbol": x, "origin": "" if origin is None else origin,
                     "decoded": "TOP" if d is TOP else d, "correct": int(origin is not None and d == origin)})
    wrong, _ = count_misdecodings(decoded, log.matching)
    bound = misdecoding_bound(log.insertions, log.deletions, sync.eps)
    if args.format == "csv":
        _emit_rows(args, rows, ("position", "symbol", "origin", "decoded", "correct"))
    else:
        _emit_json(args, {"rows": rows, "misdecodings": wrong, "insertions": log.insertions,
                          "deletions": log.deletions, "bound": _frac(bound), "pass": wrong <= bound})
    return 0 if wrong <= bound else 1


def cmd_simulate(args) -> int:
    rng = random.Random(args.seed)
    if args.mode == "oneway":
        q = args.alphabet
        sync = default_sync(args.n, args.eps, args.sigma, args.seed)
        msgs = [rng.randrange(q) for _ in range(args.n)]
        rep = run_oneway(msgs, sync, _oneway_adversary(args.adversary, args.seed, sync, q), args.delta, q,
                         orientation=args.orientation)
        ok = rep.within_bound and rep.audit_violations == 0
    elif args.mode == "interactive":
        q = 4 if args.protocol == "echo" else 2
        sync = default_sync(args.n // 2, args.eps, args.sigma, args.seed)
        inputs = [rng.randrange(q) for _ in range(args.n)]
        alice, bob = echo_protocol(inputs) if args.protocol == "echo" else running_sum_protocol(inputs, q)
        adv = {"identity": lambda: PlannedDuplexAdversary(name="identity"),
               "uniform": lambda: UniformDuplexAdversary(args.seed),
               "burst": lambda: BurstDuplexAdversary(5, args.seed),
               "adaptive": lambda: ForgeSyncDuplexAdversary(sync, q, args.seed)}
        if args.adversary not in adv:
            raise UsageError(f"adversary {args.adversary!r} is not available for interactive runs")
        rep = run_interactive(alice, bob, args.n, args.delta, sync, adv[args.adversary](), q,
                              orientation=args.orientation)
        ok = rep.within_bound and rep.committed_a and rep.committed_b
    else:
        p = ChunkParams.for_delta(args.delta, args.c, args.sigma)
        sync = default_sync(max(p.r_total(args.n), -(-(args.n // 2) // p.r_c)), args.eps, args.sigma, args.seed)
        adv = {"identity": lambda: PlannedDuplexAdversary(name="identity"),
               "uniform": lambda: UniformDuplexAdversary(args.seed),
               "burst": lambda: BurstDuplexAdversary(5, args.seed),
               "header": lambda: DuplexHeaderAttack(Receiver(p, sync, args.header))}
        if args.adversary not in adv:
            raise UsageError(f"adversary {args.adversary!r} is not available for binary runs")
        rep = run_binary(None, None, args.n, args.delta, args.c, args.eps, adv[args.adversary](),
                         precode=args.precode, header=args.header, sync=sync, sync_alphabet=args.sigma,
                         seed=args.seed, orientation=args.orientation)
        ok = rep.bad_chunks <= rep.bound and rep.verbatim_violations == 0 and rep.certificate_ok
    if args.format == "csv":
        m = rep.metrics()
        _emit_rows(args, [{"metric": k, "value": m[k]} for k in sorted(m)], ("metric", "value"))
    else:
        _emit_json(args, rep.to_dict())
    return 0 if ok else 1


def _code_params(args) -> BlockCodeParams:
    return BlockCodeParams.for_delta(args.delta, args.c, args.eps)


def cmd_code(args) -> int:
    params = _code_params(args)
    outer = OUTER_CODES[args.outer]()
    if args.action == "encode":
        data = open(args.input, "rb").read()
        if not data:
            raise UsageError("empty message")
        bits = [int(b) for b in np.unpackbits(np.frombuffer(data, dtype=np.uint8))]
        bits += [0] * (-len(bits) % params.r_b)
        cw = encode(bits, params, outer)
        write_bits(args.out_file, cw, len(data))
        print(json.dumps({"message_bytes": len(data), "codeword_bits": len(cw),
                          "rate": _frac(Fraction(len(data) * 8, len(cw)))}))
        return 0
    received, msg_bytes = read_bits(args.input)
    nbits = msg_bytes * 8 + (-msg_bytes * 8 % params.r_b)
    try:
        bits = decode(received, nbits, params, outer)
    except DecodeFailed as e:
        print(f"decode failed: {e}", file=sys.stderr)
        return 1
    out = np.packbits(np.asarray(bits[:msg_bytes * 8], dtype=np.uint8)).tobytes()
    with open(args.out_file, "wb") as f:
        f.write(out)
    return 0


def _tree_summary(t: PrefixCodeTree) -> dict:
    r = min_lambda_ratio(t)
    return {"arity": t.arity, "depth": t.depth, "sigma": t.sigma,
            "tree_code_distance": _frac(tree_code_distance(t)),
            "min_lambda_ratio": None if r is None else _frac(r)}


def cmd_treecode(args) -> int:
    if args.action == "search":
        t = search_tree_code(args.d, args.depth, args.sigma, args.alpha, args.budget, args.seed)
        if not t:
            _emit_json(args, {"found": False, "exhaustive": t.exhausted, "visited": t.visited})
            return 1
        _emit(args, t.to_json() + "\n")
        return 0
    if args.action == "verify":
        t = _read_tree(args.tree)
        out = _tree_summary(t)
        ok = True
        if args.alpha is not None:
            w = verify_tree_code(t, args.alpha)
            out["tree_code"] = {"alpha": _frac(args.alpha), "ok": bool(w),
                                "witness": None if w else [list(w.v1), list(w.v2), w.diverge, w.distance]}
            ok = ok and bool(w)
        if args.eps is not None:
            w = find_bad_lambda(t, args.eps)
            out["edit_distance_tree_code"] = {
                "eps": _frac(args.eps), "ok": bool(w),
                "witness": None if w else {"A": list(w.a), "B": list(w.b), "D": list(w.d), "E": list(w.e),
                                           "AD": list(w.ad), "BE": list(w.be), "ed": w.ed}}
            ok = ok and bool(w)
        _emit_json(args, out)
        return 0 if ok else 1
    if args.action == "concat":
        t = concat_sync(_read_tree(args.tree), _read_sync(args.sync), args.alpha)
        _emit(args, t.to_json() + "\n")
        return 0
    if args.action == "extract":
        t = _read_tree(args.tree)
        path = [(0, 0)]
        for j in (int(x) for x in args.path.split(",") if x):
            if not 0 <= j < t.arity:
                raise UsageError(f"child index {j} outside arity {t.arity}")
            path.append((path[-1][0] + 1, path[-1][1] * t.arity + j))
        s = extract_sync_path(t, path, args.l, args.eps)
        _emit(args, s.to_json() + "\n")
        return 0
    t = extend_sync_to_edtc(_read_sync(args.sync), _read_tree(args.tree))
    _emit(args, t.to_json() + "\n")
    return 0


def cmd_sweep(args) -> int:
    spec = harness.ExperimentSpec(
        target=args.target, n=args.n, delta=args.delta, eps=args.eps, c=args.c,
        adversaries=args.adversaries, trials=args.trials, seed=args.seed,
        protocols=args.protocols, blocks=args.blocks)
    records = harness.run_experiment(spec)
    if args.format == "json":
        _emit(args, harness.dumps(harness.summary(spec, records)) + "\n")
    else:
        _emit(args, harness.to_csv(records))
    if args.summary:
        with open(args.summary, "w") as f:
            f.write(harness.dumps(harness.summary(spec, records)) + "\n")
    return 1 if harness.violated(records) else 0


# ---------------------------------------------------------------------------
# Parser


def _common(p: argparse.ArgumentParser, fmt: str = "json") -> None:
    p.add_argument("--seed", type=int, default=0, help="64-bit seed")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--json", dest="format", action="store_const", const="json")
    g.add_argument("--csv", dest="format", action="store_const", const="csv")
    p.set_defaults(format=fmt)
    p.add_argument("--out", metavar="PATH", help="write output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="syncsim", description="Synchronization strings, insertion-deletion channel simulations and tree codes.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-sync", help="generate an eps-synchronization string")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=rational, required=True)
    p.add_argument("--sigma", type=int, default=64)
    _common(p)
    p.set_defaults(func=cmd_gen_sync)

    p = sub.add_parser("verify-sync", help="check the synchronization property of a string")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--eps", type=rational)
    _common(p)
    p.set_defaults(func=cmd_verify_sync)

    p = sub.add_parser("decode-trace", help="index decoding of a sync string sent over a noisy channel")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--eps", type=rational, default=Fraction(1, 2))
    p.add_argument("--sigma", type=int, default=64)
    p.add_argument("--delta", type=rational, default=Fraction(1, 10))
    p.add_argument("--adversary", default="uniform",
                   choices=("identity", "uniform", "burst", "prefix_replay"))
    p.add_argument("--orientation", default=PREFIX_FIRST, choices=(PREFIX_FIRST, RECEIVED_FIRST))
    _common(p)
    p.set_defaults(func=cmd_decode_trace)

    p = sub.add_parser("simulate", help="run one channel simulation")
    p.add_argument("mode", choices=("oneway", "interactive", "binary"))
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--delta", type=rational, default=Fraction(1, 100))
    p.add_argument("--eps", type=rational, default=Fraction(1, 2))
    p.add_argument("--c", type=int, default=3)
    p.add_argument("--sigma", type=int, default=64, help="synchronization alphabet size")
    p.add_argument("--alphabet", type=int, default=4, help="message alphabet size for oneway runs")
    p.add_argument("--adversary", default="uniform",
                   help="identity, uniform, burst, prefix_replay or adaptive (oneway); "
                        "identity, uniform, burst or adaptive (interactive); "
                        "identity, uniform, burst or header (binary)")
    p.add_argument("--protocol", default="echo", choices=("echo", "xor"))
    p.add_argument("--header", default=ZEROS, choices=(ZEROS, ONE_ZEROS))
    p.add_argument("--precode", action="store_true")
    p.add_argument("--orientation", default=PREFIX_FIRST, choices=(PREFIX_FIRST, RECEIVED_FIRST))
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("code", help="binary insertion-deletion code")
    p.add_argument("action", choices=("encode", "decode"))
    p.add_argument("--delta", type=rational, required=True)
    p.add_argument("--c", type=int, default=3)
    p.add_argument("--eps", type=rational, default=Fraction(1, 2))
    p.add_argument("--outer", default="repetition", choices=sorted(OUTER_CODES))
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="out_file", required=True)
    p.set_defaults(func=cmd_code)

    p = sub.add_parser("treecode", help="tree codes and edit-distance tree codes")
    p.add_argument("action", choices=("search", "verify", "concat", "extract", "extend"))
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--depth", type=int)
    p.add_argument("--sigma", type=int)
    p.add_argument("--alpha", type=rational)
    p.add_argument("--eps", type=rational)
    p.add_argument("--budget", type=int, default=2_000_000)
    p.add_argument("--tree")
    p.add_argument("--sync")
    p.add_argument("--path", default="", help="comma-separated child indices from the root")
    p.add_argument("--l", type=int, default=4)
    _common(p)
    p.set_defaults(func=cmd_treecode)

    p = sub.add_parser("sweep", help="bound-vs-measured sweep over a parameter grid")
    p.add_argument("--target", required=True, choices=harness.TARGETS)
    p.add_argument("--n", type=_list(int), default=[200])
    p.add_argument("--delta", type=_list(rational), default=[Fraction(1, 100)])
    p.add_argument("--eps", type=_list(rational), default=[Fraction(1, 2)])
    p.add_argument("--c", type=_list(int), default=[3])
    p.add_argument("--adversaries", type=_list(str))
    p.add_argument("--protocols", type=_list(str), default=["echo", "xor"])
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--summary", metavar="PATH", help="also write the JSON summary here")
    _common(p, fmt="csv")
    p.set_defaults(func=cmd_sweep)
    return ap


_REQUIRED = {
    "search": ("depth", "sigma", "alpha"), "verify": ("tree",), "concat": ("tree", "sync", "alpha"),
    "extract": ("tree", "eps"), "extend": ("tree", "sync"),
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "treecode":
        missing = [k for k in _REQUIRED[args.action] if getattr(args, k) is None]
        if missing:
            ap.error(f"treecode {args.action} needs --{', --'.join(missing)}")
    try:
        return args.func(args)
    except (UsageError, ConstructionError, ValueError, OSError) as e:
        print(f"syncsim: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
