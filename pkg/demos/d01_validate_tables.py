"""
Loading and validating the shipped tables
=========================================

Both tables ship inside the package. The macro table is in RM billion and
the partial micro table is in RM million.
"""

import numpy as np

from samkit import datasets, validate_file_set
from samkit.core import MICRO_CENSUS, check_census

# %%
# The 13-account table. Rows receive and columns pay, so an account is
# balanced when its row and column totals agree.
macro = datasets.macro_sam()
report = validate_file_set(macro.registry, macro)
for r in report.balance_residuals:
    print(f"{r['account']:8s} row {r['row_total']:10.3f} col {r['col_total']:10.3f} gap {r['residual']:+.3f}")

# %%
# Gaps above the 0.01 tolerance are reported as warnings. Pass
# ``strict_balance=True`` to turn them into errors.
print("warnings:", len(report.warnings), "errors:", len(report.errors))

# %%
# The micro registry must hold 51 accounts in the canonical split.
census = check_census(datasets.micro_registry(), MICRO_CENSUS)
print(census["accounts"], census["passed"])

# %%
# Only part of the micro table was transcribed. ``micro_known`` tells a
# blank cell from a written zero.
known = datasets.micro_known()
print(f"{known.sum()} of {known.size} cells known ({known.mean():.0%})")
print("largest known flow:", np.max(datasets.micro_partial().cells))
