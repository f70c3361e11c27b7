"""Closed-form competitive-ratio and fault-rate bounds.

With integer (or Fraction) arguments everything is computed in exact
rationals; float arguments give float results, which is what sweeps and
root finding use.  ``elem`` is the size of IBLP's item layer and ``bp`` the
size of its block layer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Callable, NamedTuple, Union

from .core import DomainError

Number = Union[int, Fraction, float]
UNBOUNDED = math.inf


def _exact(*xs) -> bool:
    return all(isinstance(x, Rational) for x in xs)


def _div(a, b):
    if isinstance(a, Rational) and isinstance(b, Rational):
        return Fraction(a, b)
    return a / b


def st_bound(k, h):
    """Classic bound for an LRU cache of size k against an optimum of size h."""
    if not k >= h >= 1:
        raise DomainError(f"need k >= h >= 1 (k={k}, h={h})")
    return _div(k, k - h + 1)


def lb_item(k, h, B):
    """Lower bound for any item-granularity policy."""
    if not (k > h >= B >= 1):
        raise DomainError(f"need k > h >= B >= 1 (k={k}, h={h}, B={B})")
    return _div(B * (k - B + 1), k - h + 1)


def lb_block(k, h, B):
    """Lower bound for any whole-block policy; infinite unless k > B(h-1)."""
    if k < B or B < 1 or h < 1:
        raise DomainError(f"need k >= B >= 1 and h >= 1 (k={k}, h={h}, B={B})")
    den = k - B * (h - 1)
    if den <= 0:
        return UNBOUNDED
    return _div(k, den)


def lb_general(k, h, B, F):
    """Lower bound for a policy that needs F distinct accesses to fully load a block."""
    if not (k > h > F >= 1 and F <= B):
        raise DomainError(f"need k > h > F >= 1 and F <= B (k={k}, h={h}, B={B}, F={F})")
    return _div(F * (k - h + 1) + B * (h - F), k - h + 1)


def lb_envelope(k, h, B):
    """Best lower bound over F; the formula is linear in F so an endpoint wins.

    F is capped at h - 1 when h <= B so the bound stays defined.
    """
    f_hi = min(B, h - 1)
    if f_hi < 1:
        raise DomainError(f"need h >= 2 (h={h})")
    return min(lb_general(k, h, B, 1), lb_general(k, h, B, f_hi))


def ub_elem_part(elem, h):
    if not elem > h:
        raise DomainError(f"item layer must exceed h (elem={elem}, h={h})")
    return _div(elem, elem - h)


def ub_block_part(bp, h, B):
    if not (bp >= B >= 1):
        raise DomainError(f"need bp >= B >= 1 (bp={bp}, B={B})")
    return min(B, _div(bp + 2 * B * h - B, bp + B))


def iblp_threshold(bp, B):
    """Item-layer size above which the per-load item count saturates at B."""
    return _div(2 * B * bp - bp + 2 * B * B + B, 2 * B)


def ub_iblp_first(elem, bp, B, h):
    return _div((bp + B * (2 * elem - 1)) ** 2, 8 * B * (B + bp) * (elem - h))


def ub_iblp_second(elem, bp, B, h):
    return _div(2 * B * elem - B * bp + bp - B * B - B, 2 * elem - 2 * h)


def ub_iblp(elem, bp, B, h):
    """Competitive-ratio upper bound of IBLP with the given layer sizes."""
    if not elem > h:
        raise DomainError(f"item layer must exceed h (elem={elem}, h={h})")
    if bp < 0 or B < 1:
        raise DomainError(f"need bp >= 0 and B >= 1 (bp={bp}, B={B})")
    if elem <= iblp_threshold(bp, B):
        return ub_iblp_first(elem, bp, B, h)
    return ub_iblp_second(elem, bp, B, h)


@dataclass(frozen=True)
class LpWitness:
    """Point of the rectangle LP: temporal hit fraction r, loading-miss fraction s,
    items per load t.  The closed forms are the LP's stationary point, so r can
    dip below 0 and t below 1 in parts of the first-branch regime; both
    constraints still hold with equality there."""

    r: Number
    s: Number
    t: Number
    objective: Number

    def usage(self, bp, B):
        """Cache-space-time of one spatial load: item j stays (j)(bp/B + 1) accesses longer."""
        t = self.t
        return t + (_div(bp, B) + 1) * t * (t - 1) / 2

    def usage_slack(self, elem, bp, B, h):
        return h - (self.r * elem + self.s * self.usage(bp, B))

    def access_slack(self):
        return 1 - (self.r + self.s * self.t)


def iblp_lp_witness(elem, bp, B, h) -> LpWitness:
    if not elem > h:
        raise DomainError(f"item layer must exceed h (elem={elem}, h={h})")
    if elem > iblp_threshold(bp, B):
        raise DomainError("witness formulas only cover the first-branch regime")
    r = _div(bp + B * (4 * h - 2 * elem - 1), bp + B * (2 * elem - 1))
    d = bp - bp * r + B * (2 * h - 1 + r - 2 * elem * r)
    s = (B + bp) * (1 - r) ** 2 / d
    t = d / ((B + bp) * (1 - r))
    obj = 1 / (1 - r - s * (t - 1))
    return LpWitness(r, s, t, obj)


def partition_boundary(k, B, h):
    """Smallest k for which a non-trivial block layer pays off (B >= 2)."""
    return _div(3 * B * h - h - B * B - B, B - 1)


def optimal_elem_real(k, B, h):
    num = k * k + 4 * B * h * k - h * k + 4 * B * B * h - 3 * B * h - B * B
    den = 2 * B * k + k + 2 * B * h - h + 2 * B * B - 3 * B
    return _div(num, den)


def optimal_ratio(k, B, h):
    """IBLP bound at the real-valued optimal split."""
    if B >= 2 and k >= partition_boundary(k, B, h):
        return _div((k + B - 1) * (k - h + B * (2 * h - 1)), (k - h + B) ** 2)
    return _div(2 * B * k - B * B - B, 2 * (k - h))


class Partition(NamedTuple):
    elem: int
    blockpart: int
    ratio: Number        # closed form at the real optimum
    split_ratio: Number  # ub_iblp at the returned integer split


def optimal_partition(k: int, B: int, h) -> Partition:
    """Layer sizes minimising the IBLP bound for a known optimum size h."""
    if not (k > h >= 1 and B >= 1):
        raise DomainError(f"need k > h >= 1, B >= 1 (k={k}, h={h}, B={B})")
    ratio = optimal_ratio(k, B, h)
    if B == 1 or k < partition_boundary(k, B, h):
        return Partition(k, 0, ratio, ub_iblp(k, 0, B, h))
    e_star = optimal_elem_real(k, B, h)
    # the block layer holds whole blocks: try the multiples of B on either side of k - e*
    lo = math.floor((k - e_star) / B) * B
    best = None
    for bp in (lo, lo + B):
        elem = k - bp
        if bp < 0 or elem <= h:
            continue
        val = ub_iblp(elem, bp, B, h)
        if best is None or val < best.split_ratio:
            best = Partition(elem, bp, ratio, val)
    return best or Partition(k, 0, ratio, ub_iblp(k, 0, B, h))


def ub_item_only(k, B, h):
    """IBLP bound with the whole cache in the item layer (an item LRU of size k)."""
    return ub_iblp(k, 0, B, h)


def ub_block_only(k, B, h):
    """A block LRU of k items acts like an item LRU of k/B entries."""
    eff = _div(k, B)
    if eff <= h:
        return UNBOUNDED
    return ub_elem_part(eff, h)


def fault_lb(k: int, f_inverse: Callable, g: Callable):
    """Lower bound on the fault rate of any deterministic policy with cache size k."""
    p = f_inverse(k + 1) - 2
    if p < 1:
        raise DomainError(f"need f_inverse(k+1) >= 3 (got {f_inverse(k + 1)})")
    return _div(g(p), p)


def _lru_rate(size, inv: Callable):
    den = inv(size + 1) - 2
    if den <= 0:
        raise DomainError(f"inverse window function too small at {size + 1}")
    return _div(size - 1, den)


def fault_ub_elem(elem, f_inverse: Callable):
    if elem < 2:
        raise DomainError(f"item layer must be >= 2 (elem={elem})")
    return _lru_rate(elem, f_inverse)


def fault_ub_block(bp, B, inverse: Callable):
    eff = _div(bp, B)
    if eff < 2:
        raise DomainError(f"block layer must hold >= 2 blocks (bp={bp}, B={B})")
    return _lru_rate(eff, inverse)


def fault_ub_iblp(elem, bp, B, f_inverse: Callable, g_inverse: Callable = None, literal: bool = False):
    """Fault-rate upper bound of IBLP: the better of its two layers.

    The block layer sees a trace of blocks, so it is bounded through the
    inverse of g.  ``literal=True`` uses ``f_inverse`` there instead.
    """
    inv = f_inverse if (literal or g_inverse is None) else g_inverse
    return min(fault_ub_elem(elem, f_inverse), fault_ub_block(bp, B, inv))


def ratio_equals_augmentation(bound: Callable[[float], float], k: float, lo: float, hi: float) -> float:
    """h in [lo, hi] at which bound(h) equals the augmentation k/h."""
    from scipy.optimize import brentq

    return brentq(lambda h: bound(h) - k / h, lo, hi, xtol=1e-9, rtol=1e-12)


FORMULAS = {
    "st": (st_bound, ("k", "h")),
    "lb-item": (lb_item, ("k", "h", "B")),
    "lb-block": (lb_block, ("k", "h", "B")),
    "lb-general": (lb_general, ("k", "h", "B", "F")),
    "lb-envelope": (lb_envelope, ("k", "h", "B")),
    "ub-elem-part": (ub_elem_part, ("elem", "h")),
    "ub-block-part": (ub_block_part, ("blockpart", "h", "B")),
    "ub-iblp": (ub_iblp, ("elem", "blockpart", "B", "h")),
    "optimal-partition": (lambda k, B, h: optimal_partition(k, B, h).ratio, ("k", "B", "h")),
    "ub-item-only": (ub_item_only, ("k", "B", "h")),
    "ub-block-only": (ub_block_only, ("k", "B", "h")),
}
