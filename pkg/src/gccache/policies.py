"""Online replacement policies for the granularity-change model.

Every policy answers two calls from the simulator:

* ``hit(item)`` updates metadata and returns the set of items it dropped
  (always empty except for IBLP, see below);
* ``miss(item, pos)`` returns the :class:`LoadOp` serving the miss.

``contents()`` reports the exact resident set, which adaptive adversaries use.
"""
from __future__ import annotations

import random
from collections import OrderedDict
from dataclasses import dataclass

from .core import BlockMap, ConfigError, ItemId, LoadOp, PolicyViolation


class Policy:
    name = "policy"

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity

    def hit(self, item: ItemId) -> frozenset:
        raise NotImplementedError

    def miss(self, item: ItemId, pos: int) -> LoadOp:
        raise NotImplementedError

    def contents(self) -> frozenset:
        raise NotImplementedError

    def __contains__(self, item) -> bool:
        return item in self.contents()

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.capacity})"


class _ItemLRUCore:
    """Plain item-granularity LRU list; shared by ItemLRU and IBLP's item layer."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.lru: OrderedDict = OrderedDict()

    def touch(self, item):
        self.lru.move_to_end(item)

    def insert(self, item) -> list:
        """Insert ``item`` as most recent and return what fell out."""
        if self.capacity == 0:
            return []
        out = []
        while len(self.lru) >= self.capacity:
            out.append(self.lru.popitem(last=False)[0])
        self.lru[item] = None
        return out


class _BlockLRUCore:
    """Whole-block LRU with capacity counted in items."""

    def __init__(self, capacity: int, bmap: BlockMap):
        self.capacity = capacity
        self.bmap = bmap
        self.lru: OrderedDict = OrderedDict()
        self.used = 0

    def holds(self, item) -> bool:
        return item.block in self.lru

    def touch(self, block: int):
        self.lru.move_to_end(block)

    def insert(self, block: int) -> list:
        """Load ``block`` as most recent; return the evicted blocks."""
        size = self.bmap.block_size(block)
        out = []
        while self.used + size > self.capacity:
            b, _ = self.lru.popitem(last=False)
            self.used -= self.bmap.block_size(b)
            out.append(b)
        self.lru[block] = None
        self.used += size
        return out

    def items(self):
        for b in self.lru:
            yield from self.bmap.items(b)


class ItemLRU(Policy):
    """Traditional LRU: loads only the requested item."""

    name = "item-lru"

    def __init__(self, capacity: int, bmap: BlockMap | None = None):
        super().__init__(capacity)
        self._core = _ItemLRUCore(capacity)

    def hit(self, item):
        self._core.touch(item)
        return frozenset()

    def miss(self, item, pos):
        out = self._core.insert(item)
        return LoadOp(pos, frozenset([item]), frozenset(out))

    def contents(self):
        return frozenset(self._core.lru)


class BlockLRU(Policy):
    """Loads and evicts whole blocks in LRU order."""

    name = "block-lru"

    def __init__(self, capacity: int, bmap: BlockMap):
        super().__init__(capacity)
        if capacity < bmap.max_block_size:
            raise ConfigError(f"block policy needs k >= B (k={capacity}, B={bmap.max_block_size})")
        self.bmap = bmap
        self._core = _BlockLRUCore(capacity, bmap)

    def hit(self, item):
        self._core.touch(item.block)
        return frozenset()

    def miss(self, item, pos):
        out = self._core.insert(item.block)
        evicted = frozenset(x for b in out for x in self.bmap.items(b))
        return LoadOp(pos, frozenset(self.bmap.items(item.block)), evicted)

    def contents(self):
        return frozenset(self._core.items())


@dataclass(frozen=True)
class IblpConfig:
    elem_size: int
    block_size_part: int

    def check(self, bmap: BlockMap):
        if self.elem_size < 0 or self.block_size_part < 0:
            raise ConfigError("IBLP partition sizes must be non-negative")
        if self.elem_size + self.block_size_part < 1:
            raise ConfigError("IBLP needs a positive total size")
        if self.block_size_part % bmap.max_block_size:
            raise ConfigError(
                f"block partition {self.block_size_part} is not a multiple of B={bmap.max_block_size}")


class IBLP(Policy):
    """Item-LRU layer in front of a block-LRU layer.

    The item layer sees every access.  The block layer only sees accesses
    that miss in the item layer, so hot items never refresh their block.
    On a full miss the block goes into the block layer and the item into the
    item layer.  On a block-layer hit the item is copied into the item layer,
    whose LRU victim can leave the cache entirely; that victim is reported
    as dropped.
    """

    name = "iblp"

    def __init__(self, elem_size: int, block_size_part: int, bmap: BlockMap):
        self.config = IblpConfig(elem_size, block_size_part)
        self.config.check(bmap)
        super().__init__(elem_size + block_size_part)
        self.bmap = bmap
        self.items = _ItemLRUCore(elem_size)
        self.blocks = _BlockLRUCore(block_size_part, bmap) if block_size_part else None

    def _in_blocks(self, item) -> bool:
        return self.blocks is not None and self.blocks.holds(item)

    def _resident(self, item) -> bool:
        return item in self.items.lru or self._in_blocks(item)

    def hit(self, item):
        if item in self.items.lru:
            self.items.touch(item)
            return frozenset()
        # served by the block layer
        self.blocks.touch(item.block)
        out = self.items.insert(item)
        return frozenset(x for x in out if not self._in_blocks(x))

    def miss(self, item, pos):
        before = self.contents()
        self.items.insert(item)
        if self.blocks is not None:
            self.blocks.insert(item.block)
        after = self.contents()
        return LoadOp(pos, after - before, before - after)

    def contents(self):
        got = set(self.items.lru)
        if self.blocks is not None:
            got.update(self.blocks.items())
        return frozenset(got)

    def __repr__(self):
        return f"IBLP({self.config.elem_size},{self.config.block_size_part})"


class GCMarking(Policy):
    """Randomized marking policy that loads whole blocks without marking them.

    Requested items are marked.  Evictions are drawn uniformly from unmarked
    residents; when none exist all marks are cleared first.  If the unmarked
    residents plus free slots cannot hold the missing part of the block, the
    requested item plus a random sample of its block-mates fill those slots.
    """

    name = "gc-marking"

    def __init__(self, capacity: int, bmap: BlockMap, seed: int = 0):
        super().__init__(capacity)
        if capacity < bmap.max_block_size:
            raise ConfigError(f"GC-Marking needs k >= B (k={capacity}, B={bmap.max_block_size})")
        self.bmap = bmap
        self.seed = seed
        self.rng = random.Random(seed)
        self.resident: set = set()
        self.marked: set = set()

    def hit(self, item):
        self.marked.add(item)
        return frozenset()

    def miss(self, item, pos):
        missing = [x for x in self.bmap.items(item.block) if x not in self.resident]
        free = self.capacity - len(self.resident)
        unmarked = sorted(self.resident - self.marked)
        if free < len(missing) and not unmarked:
            self.marked.clear()
            unmarked = sorted(self.resident)
        slots = free + len(unmarked)
        if slots >= len(missing):
            loaded = set(missing)
        else:
            others = [x for x in missing if x != item]
            loaded = {item, *self.rng.sample(others, slots - 1)}
        n_evict = max(0, len(loaded) - free)
        evicted = set(self.rng.sample(unmarked, n_evict))
        if evicted & self.marked:
            raise PolicyViolation(f"pos {pos}: evicting marked item while unmarked exist")
        self.resident -= evicted
        self.resident |= loaded
        self.marked.add(item)
        return LoadOp(pos, frozenset(loaded), frozenset(evicted))

    def contents(self):
        return frozenset(self.resident)

    def __repr__(self):
        return f"GCMarking({self.capacity}, seed={self.seed})"


POLICY_NAMES = ("item-lru", "block-lru", "iblp:<elem>,<blockpart>", "gc-marking:<seed>")


def make_policy(spec: str, capacity: int, bmap: BlockMap) -> Policy:
    """Build a policy from a CLI selection string such as ``iblp:32,32``."""
    name, _, arg = spec.partition(":")
    if name == "item-lru" and not arg:
        return ItemLRU(capacity, bmap)
    if name == "block-lru" and not arg:
        return BlockLRU(capacity, bmap)
    if name == "iblp":
        try:
            elem, bp = (int(x) for x in arg.split(","))
        except ValueError:
            raise ValueError(f"bad IBLP spec {spec!r}, expected iblp:<elem>,<blockpart>") from None
        if elem + bp != capacity:
            raise ConfigError(f"IBLP sizes {elem}+{bp} do not add up to k={capacity}")
        return IBLP(elem, bp, bmap)
    if name == "gc-marking":
        try:
            seed = int(arg) if arg else 0
        except ValueError:
            raise ValueError(f"bad seed in {spec!r}") from None
        return GCMarking(capacity, bmap, seed)
    raise ValueError(f"unknown policy {spec!r}; supported: {', '.join(POLICY_NAMES)}")
