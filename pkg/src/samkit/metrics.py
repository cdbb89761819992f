"""Between-group income distribution statistics for household accounts.

A SAM records group totals only, so every statistic here treats each group
as a mass of identical members earning the group's per-capita income.
Population weights are exogenous; when none are supplied equal weights are
used and the caller is expected to say so.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from .core import Account


class MetricsError(ValueError):
    pass


def _weights(incomes: np.ndarray, weights) -> np.ndarray:
    if weights is None:
        return np.ones_like(incomes)
    w = np.asarray(weights, dtype=float)
    if w.shape != incomes.shape:
        raise MetricsError("weights and incomes differ in length")
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise MetricsError("population weights must be positive")
    return w


def gini_grouped(incomes, weights=None) -> float:
    """Gini of per-capita group incomes, groups weighted by population.

    ``G = sum_ij w_i w_j |mu_i - mu_j| / (2 W^2 mu_bar)`` where ``mu_i`` is
    the per-capita income of group ``i``, ``W`` the total weight and
    ``mu_bar`` the population-weighted mean.
    """
    y = np.asarray(incomes, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise MetricsError("need at least one group")
    if not np.all(np.isfinite(y)) or np.any(y < 0):
        raise MetricsError("incomes must be finite and non-negative")
    w = _weights(y, weights)
    total = math.fsum(y)
    if total <= 0:
        raise MetricsError("total income must be positive")
    mu = y / w
    big_w = math.fsum(w)
    mean = total / big_w
    pair = np.abs(mu[:, None] - mu[None, :]) * w[:, None] * w[None, :]
    return math.fsum(pair.ravel()) / (2 * big_w * big_w * mean)


def income_shares(incomes) -> np.ndarray:
    y = np.asarray(incomes, dtype=float)
    total = math.fsum(y)
    if total == 0:
        raise MetricsError("total income is zero")
    return y / total


def disparity_ratio(
    group_a: Mapping[str, str],
    group_b: Mapping[str, str],
    accounts: Sequence[Account],
    incomes,
    weights=None,
) -> float:
    """Per-capita income of the accounts matching ``group_a`` over those matching ``group_b``.

    Groups are tag filters such as ``{"ethnicity": "chinese"}``.
    """
    y = np.asarray(incomes, dtype=float)
    w = _weights(y, weights)

    def per_capita(tag_filter):
        k = [i for i, a in enumerate(accounts) if a.matches(tag_filter)]
        if not k:
            raise MetricsError(f"no household group matches {dict(tag_filter)}")
        return math.fsum(y[k]) / math.fsum(w[k])

    den = per_capita(group_b)
    if den == 0:
        raise MetricsError(f"zero per-capita income for {dict(group_b)}")
    return per_capita(group_a) / den


# Ratios reported alongside the Gini. Bumiputera is approximated by the
# Malay groups since the account layout has no separate indigenous split.
STANDARD_RATIOS = {
    "chinese_to_malay": ({"ethnicity": "chinese"}, {"ethnicity": "malay"}),
    "indian_to_malay": ({"ethnicity": "indian"}, {"ethnicity": "malay"}),
    "urban_to_rural": ({"region": "urban"}, {"region": "rural"}),
}

# Survey-based national figures quoted for context; never derived from a SAM.
CONTEXT_GINI = {1970: 0.506, 1999: 0.452, 2004: 0.462, 2009: 0.441}


def distribution_summary(accounts: Sequence[Account], incomes, weights=None) -> dict:
    """Gini, income shares and the standard disparity ratios for household groups."""
    y = np.asarray(incomes, dtype=float)
    out = {
        "gini": gini_grouped(y, weights),
        "shares": dict(zip([a.id for a in accounts], income_shares(y).tolist())),
        "ratios": {},
    }
    for name, (a, b) in STANDARD_RATIOS.items():
        try:
            out["ratios"][name] = disparity_ratio(a, b, accounts, y, weights)
        except MetricsError:
            out["ratios"][name] = None
    return out
