"""Filling the untranscribed cells of a partial micro table from macro control totals.

Known cells are kept exactly. Within each macro block the part of the
control value not explained by known micro cells is spread over the block's
unknown (structurally permitted) cells in proportion to a size prior, and
the result is balanced by RAS, with known cells frozen, to per-account
totals. Imputed cells are reported so no one mistakes them for source data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .aggregation import AccountMapping
from .balancing import RasConfig, RasResult, ras_balance
from .core import DEFAULT_MASK, Sam, StructuralMask


@dataclass
class CompletionResult:
    sam: Sam
    seed: Sam
    imputed: np.ndarray
    totals: np.ndarray
    total_source: list[str]
    ras: RasResult

    def summary(self) -> dict:
        return {
            "imputed_cells": int(self.imputed.sum()),
            "imputed_value": float(self.sam.cells[self.imputed].sum()),
            "known_value": float(self.sam.cells[~self.imputed].sum()),
            "ras": self.ras.to_dict() | {"row_factors": None, "col_factors": None},
            "total_sources": {s: self.total_source.count(s) for s in sorted(set(self.total_source))},
        }


def _size_hints(known_vals: np.ndarray, known: np.ndarray, printed: np.ndarray) -> np.ndarray:
    rows = np.abs(known_vals).sum(1)
    cols = np.abs(known_vals).sum(0)
    hint = np.where(np.isfinite(printed), np.abs(np.nan_to_num(printed)), np.maximum(rows, cols))
    positive = hint[hint > 0]
    floor = positive.mean() if positive.size else 1.0
    return np.where(hint > 0, hint, floor)


def complete(
    partial: Sam,
    known: np.ndarray,
    macro: Sam,
    mapping: AccountMapping,
    unit_factor: float,
    account_totals: Mapping[str, float] | None = None,
    mask: StructuralMask = DEFAULT_MASK,
    config: RasConfig = RasConfig(max_iter=20000, tolerance=1e-6),
) -> CompletionResult:
    """Impute unknown cells of ``partial`` and balance the result.

    ``known`` flags transcribed cells; ``unit_factor`` converts micro values
    to macro units (0.001 for RM million -> RM billion). ``account_totals``
    are trusted per-account totals; accounts without one use the known
    column sum when the column is complete, and otherwise a free total
    tied to the macro control and re-estimated between balancing passes.
    """
    mapping.validate(partial.registry, macro.registry)
    n = len(partial)
    known = np.asarray(known, dtype=bool)
    if known.shape != (n, n):
        raise ValueError("known-cell mask has the wrong shape")
    permitted = mask.matrix(partial.registry)
    unknown = ~known & permitted
    known_vals = np.where(known, partial.cells, 0.0)

    ids = partial.ids
    printed = np.full(n, np.nan)
    for k, i in enumerate(ids):
        if account_totals and i in account_totals:
            printed[k] = account_totals[i]
    hint = _size_hints(known_vals, known, printed)

    g = mapping.matrix(partial.registry, macro.registry)
    group = g.argmax(0)
    x = known_vals.copy()
    for bi in range(len(macro)):
        rows = np.nonzero(group == bi)[0]
        for bj in range(len(macro)):
            cols = np.nonzero(group == bj)[0]
            block = np.ix_(rows, cols)
            cells = unknown[block]
            if not cells.any():
                continue
            remainder = macro.cells[bi, bj] / unit_factor - known_vals[block].sum()
            if remainder <= 0:
                continue
            w = np.outer(hint[rows], hint[cols]) * cells
            x[block] += remainder * w / w.sum()
    seed = partial.with_cells(x)

    col_complete = known.all(0)
    totals = np.empty(n)
    source = []
    seed_rows, seed_cols = x.sum(1), x.sum(0)
    for k in range(n):
        if col_complete[k]:
            totals[k] = math.fsum(known_vals[:, k])
            source.append("complete column")
        elif np.isfinite(printed[k]):
            totals[k] = printed[k]
            source.append("printed total")
        else:
            totals[k] = (seed_rows[k] + seed_cols[k]) / 2
            source.append("seed mean")

    # a total must cover what is already known on both lines; printed totals
    # are rounded, so they can fall a few hundredths short
    for k in range(n):
        if source[k] == "complete column":
            continue
        floor = max(math.fsum(known_vals[k]), math.fsum(known_vals[:, k]))
        if totals[k] < floor:
            totals[k] = floor
            source[k] += " (raised to known sum)"

    # Accounts without a trusted total are free. Within each macro account
    # their totals share out whatever the macro control leaves after the
    # trusted members; between short RAS passes they are re-estimated as the
    # mean of row and column sums.
    free = np.array([src == "seed mean" for src in source])
    floors = np.maximum(known_vals.sum(1), known_vals.sum(0))
    control = (macro.row_totals() + macro.col_totals()) / 2 / unit_factor

    def fit_to_control(t):
        for b in range(len(macro)):
            members = group == b
            f = free & members
            if not f.any() or t[f].sum() <= 0:
                continue
            remainder = control[b] - t[members & ~free].sum()
            if remainder > 0:
                t[f] = np.maximum(t[f] * remainder / t[f].sum(), floors[f])
        return t

    totals = fit_to_control(totals)
    # a trusted total already met by the known cells leaves nothing to impute
    done = ~free & (totals - floors <= config.tolerance)
    for k in np.nonzero(done)[0]:
        if abs(math.fsum(known_vals[:, k]) - totals[k]) <= config.tolerance:
            x[:, k] = np.where(known[:, k], x[:, k], 0.0)
        if abs(math.fsum(known_vals[k]) - totals[k]) <= config.tolerance:
            x[k] = np.where(known[k], x[k], 0.0)
    frozen = tuple(zip(*np.nonzero(known)))
    inner = RasConfig(min(config.max_iter, 200), config.tolerance, frozen, config.target_tolerance)
    passes = 0
    while True:
        ras = ras_balance(x, totals, totals, inner)
        passes += 1
        if ras.converged or not free.any() or passes * inner.max_iter >= config.max_iter:
            break
        x = ras.matrix
        mid = (x.sum(1) + x.sum(0)) / 2
        totals[free] = np.maximum(mid[free], floors[free])
        totals = fit_to_control(totals)
    ras.warnings.append(f"{passes} balancing passes with free totals re-estimated")
    imputed = unknown & (ras.matrix != 0)
    return CompletionResult(partial.with_cells(ras.matrix), seed, imputed, totals, source, ras)
