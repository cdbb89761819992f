"""
Fixed-price multipliers and their decomposition
===============================================

Production, factors and institutions are endogenous. Government,
capital and the rest of the world are exogenous. The multiplier matrix
maps an exogenous injection to the total change in endogenous incomes.
"""

import numpy as np

from samkit import analyse, datasets, default_partition

sam = datasets.micro_completed()
part = default_partition(sam.registry)
res = analyse(sam, part)
print(len(res.accounts), "endogenous accounts")
print(f"spectral radius {res.spectral_radius:.3f}, condition number {res.condition:.2f}")

# %%
# Column sums are output multipliers: total endogenous income raised by
# one unit injected into that account.
col = res.multipliers.sum(0)
for k in np.argsort(-col)[:5]:
    print(f"{res.accounts[k]:6s} {col[k]:.3f}")

# %%
# M = M3 M2 M1: within-block transfers, open-loop spillovers and the
# closed loop back to the origin block.
m1, m2, m3 = res.decomposition
print("identity gap:", np.abs(m3 @ m2 @ m1 - res.multipliers).max())

# %%
# Leakage is the share of each account's spending paid to exogenous accounts.
hh = [k for k, a in enumerate(res.accounts) if a.startswith("HH_")]
print({res.accounts[k]: round(float(res.leakages[k]), 3) for k in hh})
