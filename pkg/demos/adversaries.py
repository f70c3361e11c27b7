# %% [markdown]
# # Forcing bad ratios
# The generators build a trace online against a concrete policy and keep an
# offline schedule that is replayed to confirm its cost.

# %%
import warnings

from gccache import bounds
from gccache.adversary import gen_block_adversary, gen_item_adversary, gen_locality_adversary
from gccache.core import BlockMap
from gccache.locality import polynomial_inverse

# %%
out = gen_item_adversary("item-lru", 9, 4, 2, 100)
print("item LRU ", out.summary(), " closed form", float(bounds.lb_item(9, 4, 2)))

out = gen_block_adversary("block-lru", 8, 2, 2, 100)
print("block LRU", out.summary(), " closed form", float(bounds.lb_block(8, 2, 2)))

# %% [markdown]
# When B does not divide k-h+1 the fresh items per cycle are rounded up to
# whole blocks, and the measured ratio falls a little short of the formula.

# %%
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    out = gen_item_adversary("item-lru", 12, 6, 3, 100)
print("rounded  ", out.summary(), " warnings:", [type(w.message).__name__ for w in caught])

# %% [markdown]
# The locality adversary keeps every window inside f(n) ~ sqrt(n).

# %%
inv = polynomial_inverse(1, 2)
for k in (3, 4):
    out = gen_locality_adversary("item-lru", k, inv, BlockMap.uniform(k + 1, 1), 20)
    print(f"k={k} fault rate {out.fault_rate:.4f}")
