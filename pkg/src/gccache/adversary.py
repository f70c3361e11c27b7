"""Adaptive worst-case trace generators.

Each generator plays against a live policy, choosing the next access from
what the policy currently holds.  The competitive-ratio generators run in
cycles: fresh blocks are touched (the online cache must miss, the optimum
pays once per block), then items the optimum kept but the online cache lacks
are requested.  Alongside the trace they build an offline schedule for a
cache of size h whose cost is the claimed optimum.

Cycle 0 fills both caches with fresh blocks and is left out of the ratio.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

from . import bounds
from .core import BlockMap, DomainError, GCError, ItemId, LoadOp, Simulator
from .locality import validate_against, window_function
from .oracle import OfflineSchedule
from .policies import Policy, make_policy


class ConstructionFailure(GCError):
    def __init__(self, msg, cycle=None, position=None):
        super().__init__(msg)
        self.cycle = cycle
        self.position = position


class NonuniformF(UserWarning):
    pass


class BlockRounding(UserWarning):
    """B does not divide k-h+1, so the fresh-item count per cycle was rounded up to whole blocks."""


PolicyFactory = Union[str, Callable[[int, BlockMap], Policy]]


def _build(policy: PolicyFactory, k: int, bmap: BlockMap) -> Policy:
    if isinstance(policy, str):
        return make_policy(policy, k, bmap)
    return policy(k, bmap)


@dataclass
class AdversaryOutput:
    kind: str
    trace: List[ItemId]
    map: BlockMap
    schedule: Optional[OfflineSchedule]
    claimed_online_misses: int
    cycles: int
    k: int
    h: Optional[int] = None
    B: int = 1
    warmup_online: int = 0
    warmup_opt: int = 0
    per_cycle: List[tuple] = field(default_factory=list)  # (online, opt) per counted cycle
    F: List[int] = field(default_factory=list)
    formula: Optional[float] = None
    non_adversarial: List[tuple] = field(default_factory=list)

    @property
    def claimed_opt(self) -> int:
        return self.schedule.claimed_cost if self.schedule is not None else 0

    @property
    def ratio(self) -> float:
        """Online over offline misses, warm-up excluded."""
        opt = self.claimed_opt - self.warmup_opt
        return (self.claimed_online_misses - self.warmup_online) / opt

    @property
    def fault_rate(self) -> float:
        return self.claimed_online_misses / len(self.trace) if self.trace else 0.0

    def summary(self) -> str:
        if self.schedule is None:
            return (f"online={self.claimed_online_misses} accesses={len(self.trace)} "
                    f"rate={self.fault_rate:.6g} formula={_fmt(self.formula)}")
        return (f"online={self.claimed_online_misses} opt={self.claimed_opt} "
                f"ratio={self.ratio:.6g} formula={_fmt(self.formula)}")


def _fmt(x):
    return "n/a" if x is None else f"{float(x):.6g}"


class _OptTracker:
    """Builds the offline schedule one segment at a time.

    At a miss it loads every item of the block that the segment will still
    request, and evicts the residents whose next request in the segment is
    furthest away.  Segments are generated before they are scheduled, so
    this is offline with respect to the segment only.
    """

    def __init__(self, h: int, bmap: BlockMap):
        self.h = h
        self.bmap = bmap
        self.resident: set = set()
        self.ops: List[LoadOp] = []

    def schedule(self, trace: Sequence[ItemId], start: int) -> int:
        seg = trace[start:]
        misses = 0
        for off, item in enumerate(seg):
            if item in self.resident:
                continue
            later = {x for x in seg[off + 1:] if x.block == item.block}
            loaded = ({item} | later) - self.resident
            need = len(self.resident) + len(loaded) - self.h
            evicted = set()
            if need > 0:
                nxt: Dict[ItemId, int] = {}
                for j in range(len(seg) - 1, off, -1):
                    nxt[seg[j]] = j
                ranked = sorted(self.resident, key=lambda x: (nxt.get(x, math.inf), x), reverse=True)
                evicted = set(ranked[:need])
                if len(evicted) < need:
                    raise ConstructionFailure("offline cache cannot fit the load", position=start + off)
            self.resident = (self.resident - evicted) | loaded
            self.ops.append(LoadOp(start + off, frozenset(loaded), frozenset(evicted)))
            misses += 1
        return misses


class _Game:
    def __init__(self, policy: PolicyFactory, k: int, h: int, B: int):
        self.bmap = BlockMap(B, {})
        self.policy = _build(policy, k, self.bmap)
        self.sim = Simulator(self.policy, self.bmap, k)
        self.opt = _OptTracker(h, self.bmap)
        self.trace: List[ItemId] = []
        self.B = B

    def fresh_block(self) -> int:
        b = len(self.bmap.blocks)
        self.bmap.blocks[b] = self.B
        return b

    def access(self, item: ItemId):
        self.trace.append(item)
        self.sim.step(item)

    @property
    def online_misses(self) -> int:
        return self.sim.result.misses


def _check_common(k, h, B, cycles):
    if B < 1 or h < 1 or k < 1:
        raise DomainError("k, h, B must be positive")
    if cycles < 1:
        raise DomainError("need at least one counted cycle")


def _step4(game: _Game, pool: set, count: int, cycle: int):
    for _ in range(count):
        held = game.policy.contents()
        absent = sorted(x for x in pool if x not in held)
        if not absent:
            raise ConstructionFailure("every set member is in the online cache",
                                      cycle=cycle, position=len(game.trace))
        game.access(absent[0])


def _play(kind: str, policy: PolicyFactory, k: int, h: int, B: int, cycles: int,
          n_blocks: int, per_block: str, warm_blocks: int) -> AdversaryOutput:
    game = _Game(policy, k, h, B)
    out = AdversaryOutput(kind, game.trace, game.bmap, None, 0, cycles, k, h, B)

    def touch_block(b):
        if per_block == "one":
            game.access(ItemId(b, 0))
            return 1
        if per_block == "all":
            for i in range(B):
                game.access(ItemId(b, i))
            return B
        # general: keep requesting items the policy has not loaded yet
        touches = 0
        while True:
            held = game.policy.contents()
            todo = [ItemId(b, i) for i in range(B) if ItemId(b, i) not in held]
            if not todo:
                return touches
            if touches >= 4 * B:
                raise ConstructionFailure(f"block {b} never becomes fully resident",
                                          position=len(game.trace))
            game.access(todo[0])
            touches += 1

    for _ in range(warm_blocks):
        touch_block(game.fresh_block())
    out.warmup_opt = game.opt.schedule(game.trace, 0)
    out.warmup_online = game.online_misses

    for c in range(1, cycles + 1):
        start = len(game.trace)
        online_before = game.online_misses
        pool = set(game.opt.resident)
        fs = []
        for _ in range(n_blocks):
            b = game.fresh_block()
            fs.append(touch_block(b))
            pool.update(game.bmap.items(b) if per_block != "one" else [ItemId(b, 0)])
        F = max(fs)
        out.F.extend(fs)
        if per_block == "all":
            extra = h - B
        elif per_block == "one":
            extra = h - 1
        else:
            if len(set(fs)) > 1:
                warnings.warn(f"cycle {c}: F varies across blocks {fs}", NonuniformF)
            extra = h - F
            if extra < 0:
                raise ConstructionFailure(f"h={h} does not exceed F={F}", cycle=c)
        _step4(game, pool, extra, c)
        opt_cost = game.opt.schedule(game.trace, start)
        if opt_cost != n_blocks:
            raise ConstructionFailure(
                f"offline schedule paid {opt_cost} in cycle {c}, expected {n_blocks}", cycle=c)
        out.per_cycle.append((game.online_misses - online_before, opt_cost))

    out.schedule = OfflineSchedule(game.opt.ops)
    out.claimed_online_misses = game.online_misses
    return out


def _fresh_blocks(k, h, B):
    n, rem = divmod(k - h + 1, B)
    if rem:
        warnings.warn(f"B={B} does not divide k-h+1={k - h + 1}; using {n + 1} whole blocks per cycle",
                      BlockRounding)
        n += 1
    return n


def gen_item_adversary(policy: PolicyFactory, k: int, h: int, B: int, cycles: int) -> AdversaryOutput:
    """Whole fresh blocks, then h-B requests the online cache is missing.

    Against an item policy the ratio tends to B(k-B+1)/(k-h+1).
    """
    _check_common(k, h, B, cycles)
    if not (k > h >= B):
        raise DomainError(f"need k > h >= B (k={k}, h={h}, B={B})")
    out = _play("item", policy, k, h, B, cycles, _fresh_blocks(k, h, B), "all", -(-k // B))
    out.formula = float(bounds.lb_item(k, h, B))
    return out


def gen_block_adversary(policy: PolicyFactory, k: int, h: int, B: int, cycles: int) -> AdversaryOutput:
    """One item from each of k/B-h+1 fresh blocks, then h-1 requests the online cache lacks."""
    _check_common(k, h, B, cycles)
    if k <= B * (h - 1):
        raise DomainError(f"k={k} <= B(h-1)={B * (h - 1)}: no finite bound to approach")
    if k % B:
        raise DomainError(f"B={B} must divide k={k}")
    if k // B < h:
        raise DomainError(f"need k/B >= h (k/B={k // B}, h={h})")
    out = _play("block", policy, k, h, B, cycles, k // B - h + 1, "one", k // B)
    out.formula = float(bounds.lb_block(k, h, B))
    return out


def gen_general_adversary(policy: PolicyFactory, k: int, h: int, B: int, cycles: int) -> AdversaryOutput:
    """Drain each fresh block until the policy holds all of it; F is measured per block."""
    _check_common(k, h, B, cycles)
    if not k > h:
        raise DomainError(f"need k > h (k={k}, h={h})")
    out = _play("general", policy, k, h, B, cycles, _fresh_blocks(k, h, B), "general", -(-k // B))
    if len(set(out.F)) == 1 and h > out.F[0]:
        out.formula = float(bounds.lb_general(k, h, B, out.F[0]))
    return out


def gen_locality_adversary(policy: PolicyFactory, k: int, f_inverse: Callable[[int], int],
                           bmap: BlockMap, phases: int,
                           g: Optional[Callable[[int], float]] = None) -> AdversaryOutput:
    """Phased trace over k+1 items that stays consistent with the declared f and g.

    A phase has f_inverse(k+1)-2 accesses split into k-1 repetitions of one
    item each; repetition j starts at the f_inverse(j+1)-1'th access.  Each
    repetition requests an item absent from the online cache when the
    declared functions allow it, otherwise any item that keeps the trace
    consistent (recorded in ``non_adversarial``).
    """
    if k < 2 or phases < 1:
        raise DomainError("need k >= 2 and phases >= 1")
    p = f_inverse(k + 1) - 2
    if p < k - 1:
        raise DomainError(f"phase length f_inverse(k+1)-2={p} is shorter than k-1={k - 1} repetitions")
    universe = list(bmap.all_items())[: k + 1]
    if len(universe) < k + 1:
        raise DomainError(f"block map has fewer than k+1={k + 1} items")
    f = window_function(f_inverse)
    g = g or f

    pol = _build(policy, k, bmap)
    sim = Simulator(pol, bmap, k)
    trace: List[ItemId] = []
    starts = [f_inverse(j + 1) - 2 for j in range(1, k)] + [p]  # 0-based offsets, sentinel at p

    def fits(item, length) -> bool:
        probe = trace + [item] * length
        for t in range(len(trace), len(probe)):
            items, blocks = set(), set()
            for n in range(1, t + 2):
                x = probe[t - n + 1]
                items.add(x)
                blocks.add(x.block)
                if len(items) > f(n) or len(blocks) > g(n):
                    return False
        return True

    out = AdversaryOutput("locality", trace, bmap, None, 0, phases, k, None, bmap.max_block_size)
    for ph in range(phases):
        if starts[0] > 0:
            carry = trace[-1] if trace else universe[0]
            for _ in range(starts[0]):
                trace.append(carry)
                sim.step(carry)
        used = set()
        for j in range(k - 1):
            length = starts[j + 1] - starts[j]
            held = pol.contents()
            fresh = [x for x in universe if x not in used]
            absent = [x for x in fresh if x not in held]
            pick = next((x for x in absent if fits(x, length)), None)
            if pick is None:
                pick = next((x for x in fresh if fits(x, length)), None)
                if pick is None:
                    raise ConstructionFailure(f"no consistent item at phase {ph} repetition {j + 1}",
                                              cycle=ph, position=len(trace))
                out.non_adversarial.append((ph, j + 1))
            used.add(pick)
            for _ in range(length):
                trace.append(pick)
                sim.step(pick)
    bad = validate_against(trace, bmap, f, g)
    if bad is not None:
        raise ConstructionFailure(f"emitted trace violates declared locality: {bad}")
    out.claimed_online_misses = sim.result.misses
    out.formula = float(bounds.fault_lb(k, f_inverse, g))
    return out
