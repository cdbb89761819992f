"""
Simulating a spending programme
===============================

An injection into a programme account is spread over the accounts that
programme pays, in proportion to its base-year column. Only endogenous
recipients feed the multiplier. The rest leaks in the first round.
"""

from samkit import Scenario, analyse, datasets, default_partition, simulate

sam = datasets.micro_completed()
part = default_partition(sam.registry)
res = analyse(sam, part, decomposition=False)

report = simulate(sam, part, Scenario("cash transfer", {"PE_HHT": 1000.0}), result=res)
for g, d, p in zip(report.households, report.household_delta, report.percent):
    print(f"{g:6s} +{d:8.2f}  ({p:.2f}%)")

# %%
# Without a weights file every group counts as one unit of population, and
# the diagnostics say so.
print(report.diagnostics["weights"])
print("Gini before/after:", report.metrics_before["gini"], report.metrics_after["gini"])

# %%
# The response is linear: doubling the budget doubles every change.
double = simulate(sam, part, Scenario("x2", {"PE_HHT": 2000.0}), result=res)
print((double.delta == 2 * report.delta).all())
