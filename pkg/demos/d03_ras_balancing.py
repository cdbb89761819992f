"""
Biproportional (RAS) balancing
==============================

RAS rescales rows and columns in turn until the target margins are met.
Zero cells stay zero and frozen cells are never touched.
"""

import numpy as np

from samkit import RasConfig, balance_sam, datasets, ras_balance

rng = np.random.default_rng(0)
truth = rng.uniform(1, 10, (5, 5))
seed = truth * rng.uniform(0.9, 1.1, truth.shape)
seed[0, 3] = 0.0

res = ras_balance(seed, truth.sum(1), truth.sum(0))
print("converged:", res.converged, "after", res.iterations, "iterations")
print("residual trace:", ["%.1e" % r for r in res.trace[:6]])
print("zero kept:", res.matrix[0, 3] == 0.0)

# %%
# The result is the seed scaled by one factor per row and one per column.
print(np.allclose(res.matrix, res.row_factors[:, None] * seed * res.col_factors))

# %%
# Frozen cells keep their values while the others absorb the adjustment.
frozen = ras_balance(seed, truth.sum(1), truth.sum(0), RasConfig(frozen=[(1, 1)]))
print("frozen cell:", frozen.matrix[1, 1] == seed[1, 1])

# %%
# Balancing a whole SAM uses the mean of row and column totals as target.
# Negative cells (here the capital account flows) are frozen automatically.
macro = datasets.macro_sam()
out = balance_sam(macro, config=RasConfig(max_iter=5000))
print("macro balanced:", out.converged, "max gap", np.abs(out.sam.row_totals() - out.sam.col_totals()).max())
