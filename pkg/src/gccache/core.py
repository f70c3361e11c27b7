"""Granularity-change cache model: items, blocks, traces and the simulator.

An item is identified by ``(block, index)``.  On a miss the cache may load
any subset of the requested item's block for a single unit of cost, so the
miss count is the only cost that matters.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Sequence


class GCError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(GCError):
    pass


class DomainError(GCError, ValueError):
    pass


class BudgetExceeded(GCError):
    pass


class PolicyViolation(GCError):
    """A policy produced a load/evict step that breaks the cache model."""


class InfeasibleSchedule(GCError):
    def __init__(self, position: int, reason: str):
        super().__init__(f"position {position}: {reason}")
        self.position = position
        self.reason = reason


class ItemId(NamedTuple):
    block: int
    index: int

    def __str__(self) -> str:
        return f"{self.block}.{self.index}"

    @classmethod
    def parse(cls, token: str) -> "ItemId":
        block, _, index = token.strip().partition(".")
        if not _:
            raise ValueError(f"bad item token {token!r}, expected blockId.index")
        return cls(int(block), int(index))


Trace = List[ItemId]


@dataclass
class BlockMap:
    """Partition of the item universe into blocks of at most ``max_block_size`` items."""

    max_block_size: int
    blocks: Dict[int, int] = field(default_factory=dict)

    def items(self, block: int) -> List[ItemId]:
        return [ItemId(block, i) for i in range(self.blocks[block])]

    def block_size(self, block: int) -> int:
        return self.blocks[block]

    def __contains__(self, item) -> bool:
        n = self.blocks.get(item[0])
        return n is not None and 0 <= item[1] < n

    def all_items(self) -> Iterator[ItemId]:
        for b in sorted(self.blocks):
            yield from self.items(b)

    @property
    def n_items(self) -> int:
        return sum(self.blocks.values())

    @classmethod
    def uniform(cls, n_blocks: int, size: int) -> "BlockMap":
        return cls(size, {b: size for b in range(n_blocks)})

    @classmethod
    def covering(cls, trace: Iterable[ItemId], max_block_size: Optional[int] = None) -> "BlockMap":
        """Smallest map whose blocks hold every item of ``trace``."""
        blocks: Dict[int, int] = {}
        for it in trace:
            blocks[it.block] = max(blocks.get(it.block, 0), it.index + 1)
        B = max_block_size if max_block_size is not None else max(blocks.values(), default=1)
        return cls(B, dict(sorted(blocks.items())))


def validate_block_map(bmap: BlockMap) -> List[str]:
    """Return every invariant violation of ``bmap``; an empty list means valid."""
    problems = []
    if bmap.max_block_size < 1:
        problems.append(f"B must be >= 1 (got B={bmap.max_block_size})")
    for b, n in sorted(bmap.blocks.items()):
        if b < 0:
            problems.append(f"block id {b} is negative")
        if n < 1:
            problems.append(f"block {b} is empty")
        elif bmap.max_block_size >= 1 and n > bmap.max_block_size:
            problems.append(f"block {b} size {n} > B={bmap.max_block_size}")
    return problems


@dataclass(frozen=True)
class LoadOp:
    """One unit-cost load: a subset of a single block, plus the items evicted to fit it."""

    at_access: int
    loaded: frozenset
    evicted: frozenset = frozenset()

    def __str__(self) -> str:
        load = " ".join(str(i) for i in sorted(self.loaded))
        evict = " ".join(str(i) for i in sorted(self.evicted))
        return f"pos {self.at_access} load {load} evict {evict}".rstrip()


@dataclass(frozen=True)
class AccessRecord:
    pos: int
    item: ItemId
    hit: bool
    op: Optional[LoadOp] = None
    spatial: bool = False
    # items a policy dropped while serving a hit (only IBLP's item layer does this)
    dropped: frozenset = frozenset()


@dataclass
class SimResult:
    misses: int = 0
    hits: int = 0
    spatial_hits: int = 0
    per_access: List[AccessRecord] = field(default_factory=list)

    @property
    def temporal_hits(self) -> int:
        return self.hits - self.spatial_hits

    @property
    def ops(self) -> List[LoadOp]:
        return [r.op for r in self.per_access if r.op is not None]

    @property
    def fault_rate(self) -> float:
        n = self.hits + self.misses
        return self.misses / n if n else 0.0


@dataclass
class CacheState:
    capacity: int
    resident: set = field(default_factory=set)


def check_load(op: LoadOp, item: ItemId, state: CacheState, bmap: BlockMap) -> Optional[str]:
    """Reason why ``op`` cannot serve a miss on ``item`` from ``state``, or None."""
    if not op.loaded:
        return "empty load"
    if item not in op.loaded:
        return "load omits requested item"
    if any(x.block != item.block for x in op.loaded):
        return "load outside block"
    if any(x not in bmap for x in op.loaded):
        return "load of item missing from block map"
    if op.loaded & op.evicted:
        return "item both loaded and evicted"
    if op.loaded & state.resident:
        return "load of already resident item"
    if not op.evicted <= state.resident:
        return "eviction of non-resident item"
    size = len(state.resident) - len(op.evicted) + len(op.loaded)
    if size > state.capacity:
        return f"capacity overflow ({size} > {state.capacity})"
    return None


class Simulator:
    """Step-wise driver for one policy over one trace.

    Keeps its own view of the resident set and rejects any policy step that
    breaks the model.  Adversaries use it directly so they can inspect the
    policy between accesses.
    """

    def __init__(self, policy, bmap: BlockMap, capacity: int, check_contents: bool = True):
        self.policy = policy
        self.bmap = bmap
        self.state = CacheState(capacity)
        self.check_contents = check_contents
        self.result = SimResult()
        self._seen: set = set()

    @property
    def pos(self) -> int:
        return len(self.result.per_access)

    def step(self, item: ItemId) -> AccessRecord:
        if item not in self.bmap:
            raise ConfigError(f"item {item} not in block map")
        pos = self.pos
        res = self.result
        state = self.state
        if item in state.resident:
            dropped = frozenset(self.policy.hit(item))
            if item in dropped or not dropped <= state.resident:
                raise PolicyViolation(f"pos {pos}: bad drop set on hit {sorted(dropped)}")
            state.resident -= dropped
            spatial = item not in self._seen
            rec = AccessRecord(pos, item, True, spatial=spatial, dropped=dropped)
            res.hits += 1
            res.spatial_hits += spatial
        else:
            op = self.policy.miss(item, pos)
            if op.at_access != pos:
                raise PolicyViolation(f"pos {pos}: load tagged with position {op.at_access}")
            reason = check_load(op, item, state, self.bmap)
            if reason:
                raise PolicyViolation(f"pos {pos}: {reason}")
            state.resident -= op.evicted
            state.resident |= op.loaded
            rec = AccessRecord(pos, item, False, op=op)
            res.misses += 1
        self._seen.add(item)
        if self.check_contents and set(self.policy.contents()) != state.resident:
            raise PolicyViolation(f"pos {pos}: policy contents diverge from simulated cache")
        res.per_access.append(rec)
        return rec

    def run(self, trace: Iterable[ItemId]) -> SimResult:
        for item in trace:
            self.step(item)
        return self.result


def simulate(policy, trace: Sequence[ItemId], bmap: BlockMap, capacity: int,
             check_contents: bool = True) -> SimResult:
    """Run ``policy`` over ``trace`` starting from an empty cache of ``capacity`` slots."""
    problems = validate_block_map(bmap)
    if problems:
        raise ConfigError("; ".join(problems))
    return Simulator(policy, bmap, capacity, check_contents).run(trace)


def replay_schedule(schedule, trace: Sequence[ItemId], bmap: BlockMap, capacity: int) -> SimResult:
    """Replay an offline schedule, raising InfeasibleSchedule at the first bad step.

    ``schedule`` is an OfflineSchedule or any iterable of LoadOps.  Loads are
    only allowed at misses, and every miss must have a load.
    """
    ops = getattr(schedule, "ops", schedule)
    by_pos: Dict[int, LoadOp] = {}
    for op in ops:
        if op.at_access in by_pos:
            raise InfeasibleSchedule(op.at_access, "two loads at one position")
        if not 0 <= op.at_access < len(trace):
            raise InfeasibleSchedule(op.at_access, "load outside trace")
        by_pos[op.at_access] = op
    state = CacheState(capacity)
    res = SimResult()
    seen: set = set()
    for pos, item in enumerate(trace):
        if item not in bmap:
            raise InfeasibleSchedule(pos, f"item {item} not in block map")
        op = by_pos.get(pos)
        if item in state.resident:
            if op is not None:
                raise InfeasibleSchedule(pos, "load on hit")
            spatial = item not in seen
            res.hits += 1
            res.spatial_hits += spatial
            res.per_access.append(AccessRecord(pos, item, True, spatial=spatial))
        else:
            if op is None:
                raise InfeasibleSchedule(pos, "miss without load")
            reason = check_load(op, item, state, bmap)
            if reason:
                raise InfeasibleSchedule(pos, reason)
            state.resident -= op.evicted
            state.resident |= op.loaded
            res.misses += 1
            res.per_access.append(AccessRecord(pos, item, False, op=op))
        seen.add(item)
    return res


def distinct_blocks(trace: Iterable[ItemId]) -> int:
    return len({it.block for it in trace})
