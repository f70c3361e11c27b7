# %% [markdown]
# # Bounds at a large cache
# Lower and upper competitive-ratio bounds for k = 1.28e6 items and B = 64.

# %%
from gccache import bounds
from gccache.experiments import log_sweep, table1_cells

k, B = 1_280_000, 64

# %%
print(f"{'h':>8} {'lower':>10} {'upper':>10} {'upper/lower':>12}")
for h in log_sweep(64, k // 2, 12):
    lb = float(bounds.lb_envelope(k, h, B))
    ub = float(bounds.optimal_partition(k, B, h).split_ratio)
    print(f"{h:8d} {lb:10.4f} {ub:10.4f} {ub / lb:12.4f}")

# %%
for setting, col, aug, ratio, s_aug, s_ratio in table1_cells(k, B):
    print(f"{setting:26s} {col:3s} augmentation={aug:8.3f} ratio={float(ratio):9.3f}"
          f"  (expected about {s_aug:.3g} / {s_ratio:.3g})")
