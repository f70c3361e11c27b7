"""Exact offline optima for small instances.

Offline GC caching is NP-complete, so :func:`opt_gc` is a memoized
exhaustive search meant for desk-sized traces.  :func:`belady` is the classic
furthest-in-future rule (optimal when every block holds one item) and
:func:`opt_varsize` solves variable-size caching by the same brute force.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, Hashable, List, Sequence

from .core import BlockMap, BudgetExceeded, ItemId, LoadOp

INF = float("inf")


@dataclass
class OfflineSchedule:
    ops: List[LoadOp] = field(default_factory=list)

    @property
    def claimed_cost(self) -> int:
        return len(self.ops)

    def __len__(self):
        return len(self.ops)

    def lines(self) -> List[str]:
        return [str(op) for op in sorted(self.ops, key=lambda o: o.at_access)]


@dataclass
class VarSizeInstance:
    sizes: Dict[Hashable, Fraction]
    capacity: Fraction
    trace: List[Hashable]

    def __post_init__(self):
        self.sizes = {k: Fraction(v) for k, v in self.sizes.items()}
        self.capacity = Fraction(self.capacity)
        for item, z in self.sizes.items():
            if z <= 0:
                raise ValueError(f"size of {item!r} must be positive")
            if z > self.capacity:
                raise ValueError(f"item {item!r} of size {z} exceeds capacity {self.capacity}")
        for item in self.trace:
            if item not in self.sizes:
                raise ValueError(f"trace item {item!r} has no size")


def _next_use(trace: Sequence) -> List[Dict]:
    """For each position p, the map item -> first position > p requesting it."""
    nxt: List[Dict] = [None] * len(trace)
    cur: Dict = {}
    for p in range(len(trace) - 1, -1, -1):
        nxt[p] = dict(cur)
        cur[trace[p]] = p
    return nxt


def opt_gc(trace: Sequence[ItemId], bmap: BlockMap, capacity: int, *,
           max_len: int = 14, max_capacity: int = 5, max_block: int = 4,
           prune: bool = True) -> OfflineSchedule:
    """Minimum-miss schedule for ``trace`` with a cache of ``capacity`` items.

    The search state is (position, resident set).  At each miss it tries every
    subset of the requested block that contains the request and every way of
    evicting just enough items.  With ``prune`` on, items that are never
    requested again are dropped from the state (they are the first to go
    whenever room is needed) and are never loaded.
    """
    n = len(trace)
    if n > max_len or capacity > max_capacity or bmap.max_block_size > max_block:
        raise BudgetExceeded(
            f"instance (len={n}, h={capacity}, B={bmap.max_block_size}) exceeds caps "
            f"(len<={max_len}, h<={max_capacity}, B<={max_block})")
    if capacity < 1:
        raise ValueError("capacity must be >= 1")
    trace = list(trace)
    future: List[set] = [set() for _ in range(n + 1)]
    for p in range(n - 1, -1, -1):
        future[p] = future[p + 1] | {trace[p]}

    memo: Dict = {}

    def choices(pos, res):
        item = trace[pos]
        if prune:
            pool = [x for x in bmap.items(item.block)
                    if x != item and x not in res and x in future[pos + 1]]
        else:
            pool = [x for x in bmap.items(item.block) if x != item and x not in res]
        ordered_res = sorted(res)
        for r in range(len(pool) + 1):
            for extra in combinations(pool, r):
                loaded = (item,) + extra
                over = len(res) + len(loaded) - capacity
                if over > len(res):
                    continue
                for ev in combinations(ordered_res, max(0, over)):
                    yield tuple(sorted(loaded)), ev

    def canon(res, pos):
        return frozenset(x for x in res if x in future[pos]) if prune else frozenset(res)

    def solve(pos, res):
        if pos == n:
            return 0
        key = (pos, res)
        got = memo.get(key)
        if got is not None:
            return got[0]
        if trace[pos] in res:
            best = (solve(pos + 1, canon(res, pos + 1)), None)
        else:
            best = (INF, None)
            for loaded, ev in choices(pos, res):
                nxt = canon((res - set(ev)) | set(loaded), pos + 1)
                c = 1 + solve(pos + 1, nxt)
                if c < best[0]:
                    best = (c, (loaded, ev))
        memo[key] = best
        return best[0]

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * n + 100))
    try:
        solve(0, frozenset())
    finally:
        sys.setrecursionlimit(limit)

    # walk the chosen branch, evicting dead items first when the pruned state hid them
    ops = []
    actual: set = set()
    res = frozenset()
    for pos, item in enumerate(trace):
        _, choice = memo[(pos, res)]
        if choice is not None:
            loaded, ev = choice
            evicted = set(ev)
            dead = sorted(x for x in actual if x not in res)
            need = len(actual) - len(evicted) + len(loaded) - capacity
            evicted.update(dead[:max(0, need)])
            ops.append(LoadOp(pos, frozenset(loaded), frozenset(evicted)))
            actual = (actual - evicted) | set(loaded)
            res = canon((res - set(ev)) | set(loaded), pos + 1)
        else:
            res = canon(res, pos + 1)
    return OfflineSchedule(ops)


def belady(trace: Sequence, capacity: int) -> OfflineSchedule:
    """Furthest-in-future eviction, loading only the requested item."""
    nxt = _next_use(trace)
    resident: set = set()
    ops = []
    for pos, item in enumerate(trace):
        if item in resident:
            continue
        evicted = set()
        if len(resident) >= capacity:
            upcoming = nxt[pos]
            victim = max(sorted(resident), key=lambda x: upcoming.get(x, INF))
            evicted.add(victim)
        resident -= evicted
        resident.add(item)
        ops.append(LoadOp(pos, frozenset([item]), frozenset(evicted)))
    return OfflineSchedule(ops)


def opt_varsize(instance: VarSizeInstance, *, max_len: int = 12, max_items: int = 5) -> int:
    """Minimum faults for variable-size caching: a fault loads the whole item."""
    trace = list(instance.trace)
    n = len(trace)
    if n > max_len or len(set(trace)) > max_items:
        raise BudgetExceeded(f"varsize instance (len={n}, items={len(set(trace))}) exceeds caps")
    sizes, cap = instance.sizes, instance.capacity
    future: List[set] = [set() for _ in range(n + 1)]
    for p in range(n - 1, -1, -1):
        future[p] = future[p + 1] | {trace[p]}
    memo: Dict = {}

    def solve(pos, res):
        if pos == n:
            return 0
        key = (pos, res)
        if key in memo:
            return memo[key]
        item = trace[pos]
        if item in res:
            best = solve(pos + 1, frozenset(x for x in res if x in future[pos + 1]))
        else:
            best = INF
            others = sorted(res, key=repr)
            for r in range(len(others) + 1):
                for ev in combinations(others, r):
                    keep = res - set(ev)
                    if sum(sizes[x] for x in keep) + sizes[item] > cap:
                        continue
                    nxt = frozenset(x for x in keep | {item} if x in future[pos + 1])
                    best = min(best, 1 + solve(pos + 1, nxt))
        memo[key] = best
        return best

    return solve(0, frozenset())
