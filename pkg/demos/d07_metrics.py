"""
Distribution metrics for household groups
=========================================

The Gini here is between groups: each group's per-capita income carries
its population weight. Inequality within a group is not visible in a SAM.
"""

import numpy as np

from samkit import AccountCategory, datasets, disparity_ratio, gini_grouped, income_shares

print(gini_grouped([1.0, 1.0, 1.0]))  # equal incomes
print(gini_grouped([0.0, 1.0]))  # two groups, one owns everything
print(gini_grouped([0.0] * 8 + [1.0]))  # nine groups: 8/9

# %%
# Household incomes in the completed micro table are the household row totals.
sam = datasets.micro_completed()
households = sam.registry.by_category(AccountCategory.Household)
incomes = np.array([sam.row_totals()[sam.index(h.id)] for h in households])
print("shares:", np.round(income_shares(incomes), 3))
print("urban/rural:", disparity_ratio({"region": "urban"}, {"region": "rural"}, households, incomes))

# %%
# With equal population weights the figure is only illustrative. A weights
# file with household counts gives a meaningful one.
print("Gini, equal weights:", round(gini_grouped(incomes), 4))
