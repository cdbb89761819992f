"""
Aggregating the micro table and checking control totals
=======================================================

The 51 micro accounts map onto the 13 macro accounts. Block sums of the
micro table, converted from million to billion, should match the macro
table cell by cell.
"""

from samkit import aggregate, control_total_check, datasets

macro = datasets.macro_sam()
mapping = datasets.mapping()

# %%
# The transcribed part alone falls short of most controls.
partial = aggregate(datasets.micro_partial(), mapping, macro.registry, macro.unit, 0.001)
print("(PROD, PROD) from known cells:", round(partial.cell("PROD", "PROD"), 3), "vs", macro.cell("PROD", "PROD"))

# %%
# The completed table fills the blanks. It is balanced by RAS with the
# macro totals as anchors.
completed = datasets.micro_completed()
agg = aggregate(completed, mapping, macro.registry, macro.unit, 0.001)
for acc in ("PROD", "FAC", "HH", "COM"):
    print(f"{acc:5s} aggregated row {agg.row_totals()[agg.index(acc)]:9.3f}  macro row {macro.row_totals()[macro.index(acc)]:9.3f}")

# %%
# Cell-level comparison. ``soft`` mode reports every gap as a warning.
gaps = control_total_check(completed, macro, mapping, tol=0.5, unit_factor=0.001, mode="soft")
for d in sorted(gaps, key=lambda d: -abs(d.difference))[:5]:
    print(f"({d.row}, {d.col}) aggregated {d.aggregated:.2f} control {d.control:.2f}")
