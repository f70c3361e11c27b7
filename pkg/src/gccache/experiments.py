"""Experiment runners that regenerate the bound tables and figure data as CSV.

Every runner returns ``(header, rows, summary)``; :func:`render_csv` adds
``#`` comment lines with the full parameter set so a file can be traced back
to the invocation that produced it.  Rows come out in a fixed order and all
randomness comes from an explicit seed.
"""
from __future__ import annotations

import csv
import io
import math
import random
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from . import bounds
from .adversary import gen_block_adversary, gen_general_adversary, gen_item_adversary
from .core import BlockMap, ConfigError, ItemId, replay_schedule, simulate
from .oracle import opt_gc
from .policies import make_policy

VERSION = "0.1.0"
EXPERIMENTS = ("fig4", "fig6", "table1", "table2", "adversary-sweep", "opt-vs-policies")

DEFAULTS: Dict[str, Dict] = {
    "fig4": {"k": 1_280_000, "B": 64, "points": 60, "h_lo": 64},
    "fig6": {"k": 1_280_000, "B": 64, "points": 60, "h_lo": 64, "ref_h": "5000,40000,320000"},
    "table1": {"k": 1_280_000, "B": 64},
    "table2": {"size": 4096, "B": 64, "p": 3.0},
    "adversary-sweep": {"cycles": 100},
    "opt-vs-policies": {"count": 200, "max_len": 12, "max_k": 4, "max_B": 3, "max_blocks": 4,
                        "marking_seeds": 3},
}


@dataclass
class ExperimentSpec:
    name: str
    params: Dict = field(default_factory=dict)
    seed: int = 0

    def resolved(self) -> Dict:
        if self.name not in DEFAULTS:
            raise ValueError(f"unknown experiment {self.name!r}; choose from {', '.join(EXPERIMENTS)}")
        out = dict(DEFAULTS[self.name])
        for key, val in self.params.items():
            if key not in out:
                raise ValueError(f"experiment {self.name} has no parameter {key!r}")
            out[key] = type(out[key])(val) if not isinstance(out[key], str) else str(val)
        return out


def _num(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isinf(x):
        return "inf"
    return repr(round(x, 12))


def log_sweep(lo: float, hi: float, points: int) -> List[int]:
    """Distinct integers spaced evenly in log space, both ends included."""
    vals = np.unique(np.round(np.geomspace(lo, hi, points)).astype(np.int64))
    return [int(v) for v in vals]


def _fig4(p, seed):
    k, B = p["k"], p["B"]
    rows = []
    for h in log_sweep(p["h_lo"], k // 2, p["points"]):
        part = bounds.optimal_partition(k, B, h)
        rows.append([h, bounds.st_bound(k, h), bounds.lb_envelope(k, h, B), part.split_ratio,
                     bounds.ub_item_only(k, B, h), bounds.ub_block_only(k, B, h)])
    ok = all(r[3] >= r[2] for r in rows)
    gap = max(float(r[3]) / float(r[2]) for r in rows)
    header = ["h", "st_bound", "lb_envelope", "ub_optimal_split", "ub_item_only", "ub_block_only"]
    return header, rows, f"rows={len(rows)} ub>=lb={ok} max_gap={gap:.4f}"


def _fig6(p, seed):
    k, B = p["k"], p["B"]
    refs = [int(x) for x in str(p["ref_h"]).split(",") if x]
    splits = [bounds.optimal_partition(k, B, r) for r in refs]
    header = ["h", "optimal"] + [f"fixed_{s.elem}_{s.blockpart}" for s in splits]
    rows = []
    for h in log_sweep(p["h_lo"], k // 2, p["points"]):
        row = [h, bounds.optimal_partition(k, B, h).split_ratio]
        for s in splits:
            row.append(bounds.ub_iblp(s.elem, s.blockpart, B, h) if s.elem > h else math.inf)
        rows.append(row)
    return header, rows, f"rows={len(rows)} fixed splits: " + " ".join(h[6:] for h in header[2:])


def table1_cells(k: int, B: int) -> List[Tuple[str, str, float, float, float, float]]:
    """(setting, column, augmentation, ratio, stated augmentation, stated ratio)."""
    cells = []
    h2 = k // 2
    cells.append(("constant-augmentation", "st", 2.0, bounds.st_bound(k, h2), 2.0, 2.0))
    cells.append(("constant-augmentation", "lb", 2.0, bounds.lb_envelope(k, h2, B), 2.0, B))
    cells.append(("constant-augmentation", "ub", 2.0, bounds.optimal_partition(k, B, h2).ratio, 2.0, 2 * B))

    lb = lambda h: float(bounds.lb_envelope(float(k), h, float(B)))
    ub = lambda h: float(bounds.optimal_ratio(float(k), float(B), h))
    hi = k / 1.5
    h_lb = bounds.ratio_equals_augmentation(lb, k, k / (4 * B), hi)
    h_ub = bounds.ratio_equals_augmentation(ub, k, k / (4 * B), hi)
    cells.append(("ratio-equals-augmentation", "st", 2.0, bounds.st_bound(k, h2), 2.0, 2.0))
    cells.append(("ratio-equals-augmentation", "lb", k / h_lb, lb(h_lb), math.sqrt(B), math.sqrt(B)))
    cells.append(("ratio-equals-augmentation", "ub", k / h_ub, ub(h_ub), math.sqrt(2 * B), math.sqrt(2 * B)))

    hB = k // B
    cells.append(("constant-ratio", "st", 2.0, bounds.st_bound(k, h2), 2.0, 2.0))
    cells.append(("constant-ratio", "lb", float(B), bounds.lb_envelope(k, hB, B), B, 2.0))
    cells.append(("constant-ratio", "ub", float(B), bounds.optimal_partition(k, B, hB).ratio, B, 3.0))
    return cells


def _table1(p, seed):
    rows = [list(c) for c in table1_cells(p["k"], p["B"])]
    header = ["setting", "column", "augmentation", "ratio", "stated_augmentation", "stated_ratio"]
    return header, rows, f"cells={len(rows)}"


def table2_rows(size: int, B: int, ps=(2.0, 3.0)):
    """Fault-rate bounds for an equal split elem = bp = h = size.

    g = f / D with D in {1, B**(1-1/p), B}: no spatial locality, the
    largest-gap case, and maximal spatial locality.  Returns tuples
    (p, D, lower, elem_ub, block_ub, stated_lower, stated_elem, stated_block).
    """
    out = []
    for p in ps:
        for D in (1.0, B ** (1 - 1 / p), float(B)):
            f_inv = lambda m, p=p: float(m) ** p
            g = lambda n, p=p, D=D: float(n) ** (1 / p) / D
            g_inv = lambda m, p=p, D=D: (D * float(m)) ** p
            lower = bounds.fault_lb(size, f_inv, g)
            e_side = bounds.fault_ub_elem(size, f_inv)
            b_side = bounds.fault_ub_block(size, B, g_inv)
            out.append((p, D, lower, e_side, b_side,
                        1 / (D * size ** (p - 1)), 1 / size ** (p - 1),
                        B ** (p - 1) / (D ** p * size ** (p - 1))))
    return out


def _table2(p, seed):
    ps = (2.0,) if p["p"] == 2.0 else (2.0, p["p"])
    rows = [list(r) for r in table2_rows(p["size"], p["B"], ps)]
    header = ["p", "g_divisor", "lower_bound", "elem_ub", "block_ub",
              "stated_lower", "stated_elem_ub", "stated_block_ub"]
    return header, rows, f"rows={len(rows)} size={p['size']}"


SWEEP_POINTS = [
    ("item", "item-lru", 8, 4, 2), ("item", "item-lru", 9, 4, 2), ("item", "item-lru", 12, 6, 3),
    ("item", "item-lru", 16, 8, 4), ("block", "block-lru", 8, 2, 2), ("block", "block-lru", 12, 3, 3),
    ("general", "item-lru", 9, 4, 2), ("general", "block-lru", 9, 4, 2), ("general", "block-lru", 13, 6, 4),
]


def _adversary_sweep(p, seed):
    gens = {"item": gen_item_adversary, "block": gen_block_adversary, "general": gen_general_adversary}
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for kind, pol, k, h, B in SWEEP_POINTS:
            out = gens[kind](pol, k, h, B, p["cycles"])
            rep = replay_schedule(out.schedule, out.trace, out.map, h)
            err = abs(out.ratio - out.formula) / out.formula
            rows.append([kind, pol, k, h, B, p["cycles"], out.claimed_online_misses, out.claimed_opt,
                         out.ratio, out.formula, err, int(rep.misses == out.claimed_opt)])
    header = ["kind", "policy", "k", "h", "B", "cycles", "online", "opt", "measured", "formula",
              "rel_err", "replay_ok"]
    worst = max(r[10] for r in rows)
    return header, rows, f"points={len(rows)} worst_rel_err={worst:.4f}"


@dataclass
class SmallInstance:
    bmap: BlockMap
    trace: List[ItemId]
    k: int


def random_instance(rng: random.Random, max_len=12, max_k=4, max_B=3, max_blocks=4) -> SmallInstance:
    B = rng.randint(1, max_B)
    nb = rng.randint(1, max_blocks)
    bmap = BlockMap(B, {b: rng.randint(1, B) for b in range(nb)})
    items = list(bmap.all_items())
    trace = [rng.choice(items) for _ in range(rng.randint(0, max_len))]
    return SmallInstance(bmap, trace, rng.randint(1, max_k))


def policy_specs(k: int, B: int, marking_seeds: int = 3) -> List[str]:
    """Every policy configuration that is valid at cache size k and block size B."""
    specs = ["item-lru"]
    if k >= B:
        specs.append("block-lru")
        specs += [f"gc-marking:{s}" for s in range(marking_seeds)]
    specs += [f"iblp:{k - bp},{bp}" for bp in range(0, k + 1, B)]
    return specs


def _opt_vs_policies(p, seed):
    rng = random.Random(seed)
    rows = []
    for n in range(p["count"]):
        inst = random_instance(rng, p["max_len"], p["max_k"], p["max_B"], p["max_blocks"])
        opt = opt_gc(inst.trace, inst.bmap, inst.k).claimed_cost
        for spec in policy_specs(inst.k, inst.bmap.max_block_size, p["marking_seeds"]):
            try:
                pol = make_policy(spec, inst.k, inst.bmap)
            except ConfigError:
                continue
            misses = simulate(pol, inst.trace, inst.bmap, inst.k).misses
            rows.append([n, inst.k, inst.bmap.max_block_size, len(inst.trace), opt, spec, misses,
                         int(opt > misses)])
    bad = sum(r[-1] for r in rows)
    header = ["instance", "k", "B", "length", "opt", "policy", "misses", "violation"]
    return header, rows, f"instances={p['count']} comparisons={len(rows)} violations={bad}"


RUNNERS = {
    "fig4": _fig4, "fig6": _fig6, "table1": _table1, "table2": _table2,
    "adversary-sweep": _adversary_sweep, "opt-vs-policies": _opt_vs_policies,
}


def run_experiment(spec: ExperimentSpec):
    params = spec.resolved()
    header, rows, summary = RUNNERS[spec.name](params, spec.seed)
    return header, rows, summary, params


def render_csv(spec: ExperimentSpec, header, rows, params) -> str:
    buf = io.StringIO()
    buf.write(f"# experiment={spec.name} seed={spec.seed} version={VERSION}\n")
    buf.write("# " + " ".join(f"{k}={v}" for k, v in sorted(params.items())) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def _cell(x):
    if isinstance(x, str) or (isinstance(x, int) and not isinstance(x, bool)):
        return x
    return _num(x)
