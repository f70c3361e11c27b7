"""Working-set functions of a trace.

``f(n)`` is the largest number of distinct items in any window of ``n``
consecutive accesses and ``g(n)`` the same count for blocks.  Windows are
taken at every offset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy as np

from .core import BudgetExceeded, DomainError, GCError, ItemId

ALL_CAP = 20_000
MIN_FIT_LEVELS = 8  # distinct pre-saturation f values needed before a power law means anything


class DegenerateFit(GCError):
    pass


@dataclass
class LocalityProfile:
    window_sizes: np.ndarray
    f: np.ndarray
    g: np.ndarray

    def at(self, n: int):
        idx = np.searchsorted(self.window_sizes, n)
        if idx >= len(self.window_sizes) or self.window_sizes[idx] != n:
            raise DomainError(f"window size {n} was not profiled")
        return int(self.f[idx]), int(self.g[idx])

    def rows(self):
        for n, f, g in zip(self.window_sizes, self.f, self.g):
            yield int(n), int(f), int(g), float(f) / float(g)


def _prev_occurrence(keys: np.ndarray) -> np.ndarray:
    prev = np.full(len(keys), -1, dtype=np.int64)
    last = {}
    for j, key in enumerate(keys.tolist()):
        prev[j] = last.get(key, -1)
        last[key] = j
    return prev


def _max_distinct(prev: np.ndarray, n: int) -> int:
    """Largest distinct count over windows [i, i+n).

    Position j adds a new key to window i iff prev[j] < i <= j, so each j
    contributes to the start range [max(prev[j]+1, j-n+1), min(j, N-n)].
    """
    N = len(prev)
    j = np.arange(N)
    lo = np.maximum(prev + 1, j - n + 1)
    hi = np.minimum(j, N - n)
    ok = lo <= hi
    size = N - n + 1
    diff = np.bincount(lo[ok], minlength=size + 1) - np.bincount(hi[ok] + 1, minlength=size + 1)
    return int(np.cumsum(diff)[:size].max())


def _keys(trace: Sequence[ItemId]):
    codes: dict = {}
    items = np.array([codes.setdefault(tuple(x), len(codes)) for x in trace], dtype=np.int64)
    blocks = np.array([x[0] for x in trace], dtype=np.int64)
    return items, blocks


def profile(trace: Sequence[ItemId], bmap=None, window_sizes: Union[str, Sequence[int]] = "all",
            all_cap: int = ALL_CAP) -> LocalityProfile:
    """Exact f(n), g(n) for the requested window sizes (or every n with ``"all"``)."""
    N = len(trace)
    if N == 0:
        raise DomainError("cannot profile an empty trace")
    if isinstance(window_sizes, str):
        if window_sizes != "all":
            raise ValueError(f"unknown window mode {window_sizes!r}")
        if N > all_cap:
            raise BudgetExceeded(f"'all' mode limited to {all_cap} accesses (trace has {N})")
        sizes = np.arange(1, N + 1)
    else:
        sizes = np.array(sorted(set(int(n) for n in window_sizes)), dtype=np.int64)
        if len(sizes) and (sizes[0] < 1 or sizes[-1] > N):
            raise DomainError(f"window sizes must lie in [1, {N}]")
    items, blocks = _keys(trace)
    pi, pb = _prev_occurrence(items), _prev_occurrence(blocks)
    f = np.array([_max_distinct(pi, int(n)) for n in sizes], dtype=np.int64)
    g = np.array([_max_distinct(pb, int(n)) for n in sizes], dtype=np.int64)
    return LocalityProfile(sizes, f, g)


class Violation(NamedTuple):
    n: int
    kind: str  # "f" or "g"
    measured: int
    declared: float


def validate_against(trace: Sequence[ItemId], bmap, f_declared: Callable,
                     g_declared: Optional[Callable] = None) -> Optional[Violation]:
    """First window size at which the trace exceeds the declared f or g, else None."""
    if not trace:
        return None
    prof = profile(trace, bmap, "all")
    for n, f, g in zip(prof.window_sizes.tolist(), prof.f.tolist(), prof.g.tolist()):
        if f > f_declared(n):
            return Violation(n, "f", f, f_declared(n))
        if g_declared is not None and g > g_declared(n):
            return Violation(n, "g", g, g_declared(n))
    return None


class PolyFit(NamedTuple):
    coefficient: float
    exponent: float  # f(n) ~ coefficient * n ** exponent
    p: float         # 1 / exponent, the degree of the inverse window function
    max_rel_residual: float


def fit_polynomial(prof: LocalityProfile) -> PolyFit:
    """Least-squares fit of f(n) = c * n**(1/p) in log-log space, pre-saturation only."""
    n = np.asarray(prof.window_sizes, dtype=float)
    f = np.asarray(prof.f, dtype=float)
    if len(n) < 3:
        raise DegenerateFit("need at least 3 window sizes")
    keep = (f < f.max()) & (f > 0)
    if len(np.unique(f[keep])) < MIN_FIT_LEVELS:
        raise DegenerateFit(f"fewer than {MIN_FIT_LEVELS} distinct working-set sizes before saturation")
    slope, icpt = np.polyfit(np.log(n[keep]), np.log(f[keep]), 1)
    if slope <= 0:
        raise DegenerateFit("non-increasing working set")
    c = math.exp(icpt)
    pred = c * n[keep] ** slope
    resid = float(np.max(np.abs(pred - f[keep]) / f[keep]))
    return PolyFit(c, float(slope), 1.0 / float(slope), resid)


def spatial_ratio(prof: LocalityProfile, n: int) -> float:
    f, g = prof.at(n)
    return f / g


def polynomial_inverse(c: float = 1.0, p: float = 2.0) -> Callable[[int], int]:
    """Integer inverse window function m -> ceil(c * m**p).

    The first two values are pinned to 1 and 2: any trace that ever changes
    item has two distinct items in some window of length 2.
    """
    def inv(m: int) -> int:
        if m <= 2:
            return max(int(m), 1)
        return max(int(m), math.ceil(c * m ** p - 1e-9))
    return inv


def window_function(inverse: Callable[[int], int]) -> Callable[[int], int]:
    """f(n) = largest m with inverse(m) <= n."""
    def f(n: int) -> int:
        m = 0
        while inverse(m + 1) <= n:
            m += 1
        return m
    return f
