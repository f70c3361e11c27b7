"""Variable-size caching -> GC caching construction and its brute-force check."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, NamedTuple, Tuple

from .core import BlockMap, ItemId
from .oracle import VarSizeInstance, opt_gc, opt_varsize


@dataclass
class GcInstance:
    map: BlockMap
    trace: List[ItemId]
    capacity: int
    block_of: Dict  # variable-size item -> block id


def scale_instance(inst: VarSizeInstance) -> Tuple[VarSizeInstance, int]:
    """Multiply sizes and capacity by the LCM of their denominators."""
    dens = [z.denominator for z in inst.sizes.values()] + [inst.capacity.denominator]
    scale = math.lcm(*dens)
    sizes = {k: z * scale for k, z in inst.sizes.items()}
    return VarSizeInstance(sizes, inst.capacity * scale, list(inst.trace)), scale


def reduce(inst: VarSizeInstance) -> GcInstance:
    """One block per item whose first z items (its active set) stand in for size z.

    Each access to an item of size z becomes z round-robin passes over its
    active set, i.e. z*z consecutive accesses.
    """
    scaled, _ = scale_instance(inst)
    z = {k: int(v) for k, v in scaled.sizes.items()}
    block_of = {k: b for b, k in enumerate(scaled.sizes)}
    bmap = BlockMap(max(z.values(), default=1), {block_of[k]: z[k] for k in scaled.sizes})
    trace = []
    for v in scaled.trace:
        b, n = block_of[v], z[v]
        for _ in range(n):
            trace.extend(ItemId(b, i) for i in range(n))
    return GcInstance(bmap, trace, int(scaled.capacity), block_of)


class ReductionCheck(NamedTuple):
    varsize_opt: int
    gc_opt: int

    @property
    def equal(self) -> bool:
        return self.varsize_opt == self.gc_opt


def verify_reduction(inst: VarSizeInstance, *, max_len: int = 60, max_capacity: int = 12,
                     max_block: int = 4) -> ReductionCheck:
    """Solve both sides exactly and report the two optima."""
    var = opt_varsize(inst)
    gc = reduce(inst)
    sched = opt_gc(gc.trace, gc.map, gc.capacity, max_len=max_len,
                   max_capacity=max_capacity, max_block=max_block)
    return ReductionCheck(var, sched.claimed_cost)
