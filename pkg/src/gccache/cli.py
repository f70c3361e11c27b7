"""Command-line entry point: ``gccache <subcommand> ...``.

Exit status is 0 on success, 1 when the inputs are well-formed but outside a
routine's domain (or a file fails to parse), and 2 for usage errors such as
malformed flags or an unknown policy name.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import warnings
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

from . import bounds, formats
from .adversary import (BlockRounding, gen_block_adversary, gen_general_adversary,
                        gen_item_adversary, gen_locality_adversary)
from .core import BlockMap, ConfigError, GCError, simulate
from .experiments import EXPERIMENTS, ExperimentSpec, render_csv, run_experiment
from .locality import profile, polynomial_inverse
from .oracle import belady, opt_gc
from .policies import make_policy
from .reduction import reduce, verify_reduction


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, float) and math.isinf(x):
        return "unbounded"
    if isinstance(x, (Fraction, float)):
        return repr(round(float(x), 12))
    return str(x)


def _policy(spec, k, bmap):
    try:
        return make_policy(spec, k, bmap)
    except ConfigError:
        raise
    except ValueError as e:
        raise UsageError(str(e)) from None


def _emit(text: str, path: Optional[str]):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------

def cmd_simulate(a):
    trace = formats.read_trace(a.trace)
    bmap = formats.read_blocks(a.blocks)
    res = simulate(_policy(a.policy, a.k, bmap), trace, bmap, a.k)
    print(f"misses={res.misses} hits={res.hits} spatial_hits={res.spatial_hits}")
    if a.per_access:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["pos", "item", "hit", "spatial", "loaded", "evicted"])
        for r in res.per_access:
            load = " ".join(str(x) for x in sorted(r.op.loaded)) if r.op else ""
            ev = " ".join(str(x) for x in sorted(r.op.evicted | r.dropped)) if r.op else \
                " ".join(str(x) for x in sorted(r.dropped))
            w.writerow([r.pos, str(r.item), int(r.hit), int(r.spatial), load, ev])
        Path(a.per_access).write_text(buf.getvalue(), encoding="utf-8")
    return 0


def _nearby(k, h, B) -> str:
    lo = k - (k - h + 1) % B
    return f"nearby k with B | k-h+1: {lo}, {lo + B}" if lo > h else f"nearby k with B | k-h+1: {lo + B}"


def cmd_generate(a):
    if a.adversary == "locality":
        bmap = formats.read_blocks(a.blocks) if a.blocks else BlockMap.uniform(a.k + 1, a.B or 1)
        inv = polynomial_inverse(a.c, a.p)
        out = gen_locality_adversary(lambda k, m: _policy(a.policy, k, m), a.k, inv, bmap, a.cycles)
    else:
        if a.h is None or a.B is None:
            raise UsageError("--h and --B are required for this adversary")
        gen = {"item": gen_item_adversary, "block": gen_block_adversary,
               "general": gen_general_adversary}[a.adversary]
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            out = gen(lambda k, m: _policy(a.policy, k, m), a.k, a.h, a.B, a.cycles)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
            if issubclass(w.category, BlockRounding):
                print(f"warning: {_nearby(a.k, a.h, a.B)}", file=sys.stderr)
    prefix = a.out_prefix or a.out
    if prefix:
        formats.write_trace_files(prefix, out.trace, out.map, out.schedule)
    print(out.summary())
    return 0


def cmd_oracle(a):
    trace = formats.read_trace(a.trace)
    bmap = formats.read_blocks(a.blocks)
    if a.method == "belady":
        if bmap.max_block_size != 1:
            raise GCError("belady needs a map with B=1")
        sched = belady(trace, a.h)
    else:
        sched = opt_gc(trace, bmap, a.h, max_len=a.max_len, max_capacity=a.max_capacity,
                       max_block=a.max_block)
    _emit(formats.dumps_schedule(sched), a.out)
    return 0


def _parse_sweep(text):
    try:
        name, rng = text.split("=", 1)
        parts = [int(x) for x in rng.split(":")]
        lo, hi = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1
    except (ValueError, IndexError):
        raise UsageError(f"bad --sweep {text!r}, expected name=lo:hi[:step]") from None
    if step <= 0:
        raise UsageError("sweep step must be positive")
    return name, list(range(lo, hi + 1, step))


def cmd_bounds(a):
    fn, names = bounds.FORMULAS[a.formula]
    given = {n: getattr(a, n, None) for n in names}
    sweep_name, sweep_vals = _parse_sweep(a.sweep) if a.sweep else (None, None)
    if sweep_name is not None and sweep_name not in names:
        raise UsageError(f"formula {a.formula} has no parameter {sweep_name!r} (takes {', '.join(names)})")
    missing = [n for n in names if given[n] is None and n != sweep_name]
    if missing:
        raise UsageError(f"formula {a.formula} needs --{' --'.join(missing)}")
    if sweep_name is None:
        print(_fmt(fn(*(given[n] for n in names))))
        return 0
    buf = io.StringIO()
    buf.write(f"# formula={a.formula} " + " ".join(f"{n}={given[n]}" for n in names if n != sweep_name) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([sweep_name, "value"])
    for v in sweep_vals:
        args = dict(given, **{sweep_name: v})
        try:
            val = fn(*(args[n] for n in names))
            cell = "inf" if isinstance(val, float) and math.isinf(val) else repr(round(float(val), 12))
        except GCError:
            cell = ""
        w.writerow([v, cell])
    _emit(buf.getvalue(), a.csv or a.out)
    return 0


def cmd_locality(a):
    trace = formats.read_trace(a.trace)
    bmap = formats.read_blocks(a.blocks) if a.blocks else None
    windows = "all" if a.windows == "all" else [int(x) for x in a.windows.split(",") if x]
    prof = profile(trace, bmap, windows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "f", "g", "ratio"])
    for n, f, g, r in prof.rows():
        w.writerow([n, f, g, repr(round(r, 12))])
    _emit(buf.getvalue(), a.csv or a.out)
    return 0


def cmd_reduce(a):
    inst = formats.read_varsize(a.input)
    gc = reduce(inst)
    prefix = a.out_prefix or a.out
    if not prefix:
        raise UsageError("reduce needs --out-prefix")
    paths = formats.write_trace_files(prefix, gc.trace, gc.map)
    print(f"accesses={len(gc.trace)} blocks={len(gc.map.blocks)} B={gc.map.max_block_size} "
          f"capacity={gc.capacity} wrote={','.join(str(p) for p in paths)}")
    return 0


def cmd_verify_reduction(a):
    res = verify_reduction(formats.read_varsize(a.input))
    print(f"varsize_opt={res.varsize_opt} gc_opt={res.gc_opt} equal={str(res.equal).lower()}")
    return 0 if res.equal else 1


def cmd_experiment(a):
    params = {}
    for kv in a.param or []:
        if "=" not in kv:
            raise UsageError(f"bad --param {kv!r}, expected key=value")
        key, val = kv.split("=", 1)
        params[key] = val
    if a.count is not None:
        params["count"] = a.count
    spec = ExperimentSpec(a.name, params, a.seed)
    try:
        header, rows, summary, resolved = run_experiment(spec)
    except ValueError as e:
        if isinstance(e, GCError):
            raise
        raise UsageError(str(e)) from None
    text = render_csv(spec, header, rows, resolved)
    if a.out:
        Path(a.out).write_text(text, encoding="utf-8")
        print(summary)
    else:
        sys.stdout.write(text)
        print("# " + summary)
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output path")
    common.add_argument("--format", choices=["csv"], default=argparse.SUPPRESS)

    ap = argparse.ArgumentParser(prog="gccache", description="Granularity-change caching laboratory")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None)
    ap.add_argument("--format", choices=["csv"], default="csv")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run a policy over a trace")
    p.add_argument("--policy", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--blocks", required=True)
    p.add_argument("--per-access", help="write a per-access CSV here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("generate", parents=[common], help="adaptive worst-case trace")
    p.add_argument("--adversary", choices=["item", "block", "general", "locality"], required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--h", type=int)
    p.add_argument("--B", type=int)
    p.add_argument("--cycles", type=int, default=100, help="cycles (phases for locality)")
    p.add_argument("--out-prefix")
    p.add_argument("--blocks", help="block map for the locality adversary")
    p.add_argument("--p", type=float, default=2.0, help="locality exponent: f_inverse(m) = c*m**p")
    p.add_argument("--c", type=float, default=1.0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("oracle", parents=[common], help="offline optimum for a small trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--blocks", required=True)
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--method", choices=["gc", "belady"], default="gc")
    p.add_argument("--max-len", type=int, default=14)
    p.add_argument("--max-capacity", type=int, default=5)
    p.add_argument("--max-block", type=int, default=4)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bounds", parents=[common], help="evaluate a closed-form bound")
    p.add_argument("--formula", choices=sorted(bounds.FORMULAS), required=True)
    for name in ("k", "h", "B", "F", "elem", "blockpart"):
        p.add_argument(f"--{name}", type=int, dest=name)
    p.add_argument("--sweep", help="name=lo:hi[:step]")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("locality", parents=[common], help="working-set profile of a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--blocks")
    p.add_argument("--windows", default="all")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_locality)

    p = sub.add_parser("reduce", parents=[common], help="variable-size instance to GC instance")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out-prefix")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("verify-reduction", parents=[common], help="compare both optima")
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=cmd_verify_reduction)

    p = sub.add_parser("experiment", parents=[common], help="regenerate a table or figure as CSV")
    p.add_argument("name", choices=EXPERIMENTS)
    p.add_argument("--param", action="append", help="key=value override")
    p.add_argument("--count", type=int)
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except (GCError, formats.FormatError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
