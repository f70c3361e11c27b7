# %% [markdown]
# # Policies against the offline optimum
# A small block map, a hand-made trace, and every policy next to the exact
# offline cost.  Run with `python demos/policies_and_oracle.py`.

# %%
from gccache.core import BlockMap, ItemId, simulate
from gccache.oracle import opt_gc
from gccache.policies import make_policy

bmap = BlockMap(2, {0: 2, 1: 2, 2: 2})
x1, x2, y1, y2, z1 = ItemId(0, 0), ItemId(0, 1), ItemId(1, 0), ItemId(1, 1), ItemId(2, 0)
trace = [x1, y1, x2, z1, y2, x1, x2, z1]
k = 4

# %%
opt = opt_gc(trace, bmap, k)
print(f"offline optimum: {opt.claimed_cost} misses")
for line in opt.lines():
    print("  ", line)

# %%
for spec in ["item-lru", "block-lru", "iblp:2,2", "gc-marking:0"]:
    r = simulate(make_policy(spec, k, bmap), trace, bmap, k)
    print(f"{spec:14s} misses={r.misses} spatial_hits={r.spatial_hits} temporal_hits={r.temporal_hits}")
