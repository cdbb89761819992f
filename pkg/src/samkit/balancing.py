"""Biproportional (RAS) balancing of a matrix to prescribed row and column totals."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Sam

logger = logging.getLogger(__name__)


class RasError(ValueError):
    pass


class InconsistentTargetsError(RasError):
    pass


class InfeasibleError(RasError):
    pass


class NegativeCellError(RasError):
    pass


@dataclass(frozen=True)
class RasConfig:
    max_iter: int = 1000
    tolerance: float = 1e-8
    frozen: tuple = ()
    # allowed gap between the row-target and column-target sums; defaults to ``tolerance``
    target_tolerance: float | None = None

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        object.__setattr__(self, "frozen", tuple(tuple(c) for c in self.frozen))


@dataclass
class RasResult:
    matrix: np.ndarray
    row_factors: np.ndarray
    col_factors: np.ndarray
    iterations: int
    residual: float
    converged: bool
    trace: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    sam: Sam | None = None

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_residual": self.residual,
            "converged": self.converged,
            "row_factors": self.row_factors.tolist(),
            "col_factors": self.col_factors.tolist(),
            "warnings": list(self.warnings),
        }


def _frozen_mask(shape, frozen, ids: Sequence[str] | None) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    for cell in frozen:
        i, j = cell
        if isinstance(i, str) or isinstance(j, str):
            if ids is None:
                raise ValueError("frozen cells given by id need a Sam seed")
            i, j = ids.index(i), ids.index(j)
        if not (0 <= i < shape[0] and 0 <= j < shape[1]):
            raise ValueError(f"frozen cell {cell} outside a {shape[0]}x{shape[1]} matrix")
        mask[i, j] = True
    return mask


def _residual(x: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> float:
    return float(max(np.max(np.abs(x.sum(1) - rows), initial=0.0), np.max(np.abs(x.sum(0) - cols), initial=0.0)))


def ras_balance(seed, row_targets, col_targets, config: RasConfig = RasConfig()) -> RasResult:
    """Scale rows and columns of ``seed`` alternately until its margins hit the targets.

    ``seed`` is an array or a ``Sam``. Frozen cells are taken out of the
    scaling, their contributions subtracted from the targets, and added
    back unchanged. On non-convergence the best iterate is returned with
    ``converged=False``.
    """
    ids = None
    sam = None
    if isinstance(seed, Sam):
        sam, ids = seed, seed.ids
        x0 = seed.cells.astype(float)
    else:
        x0 = np.array(seed, dtype=float)
    if x0.ndim != 2:
        raise ValueError("seed must be a matrix")
    rows_t = np.asarray(row_targets, dtype=float).copy()
    cols_t = np.asarray(col_targets, dtype=float).copy()
    if rows_t.shape != (x0.shape[0],) or cols_t.shape != (x0.shape[1],):
        raise ValueError("target lengths do not match the seed")
    tol = config.tolerance
    ttol = tol if config.target_tolerance is None else config.target_tolerance

    frozen = _frozen_mask(x0.shape, config.frozen, ids)
    fixed = np.where(frozen, x0, 0.0)
    scal = np.where(frozen, 0.0, x0)
    if np.any(scal < 0):
        i, j = np.argwhere(scal < 0)[0]
        raise NegativeCellError(f"scalable cell ({i}, {j}) is negative ({scal[i, j]}); freeze it")

    rows = rows_t - fixed.sum(1)
    cols = cols_t - fixed.sum(0)
    warnings = []
    gap = math.fsum(rows_t) - math.fsum(cols_t)
    if abs(gap) > ttol:
        raise InconsistentTargetsError(
            f"row targets sum to {math.fsum(rows_t)} but column targets to {math.fsum(cols_t)}"
        )
    noise = 1e-12 * max(1.0, math.fsum(np.abs(rows_t)))
    if abs(gap) > noise and cols.sum() > 0:
        cols = cols * (rows.sum() / cols.sum())
        msg = f"column targets rescaled by {gap:+.3g} to match the row-target sum"
        logger.warning(msg)
        warnings.append(msg)

    for name, t in (("row", rows), ("column", cols)):
        if np.any(t < -tol):
            k = int(np.argmin(t))
            raise InfeasibleError(f"{name} {k}: frozen cells exceed the target by {-t[k]}")
    rows, cols = np.maximum(rows, 0.0), np.maximum(cols, 0.0)
    for name, t, sums in (("row", rows, scal.sum(1)), ("column", cols, scal.sum(0))):
        bad = np.nonzero((t > tol) & (sums == 0))[0]
        if bad.size:
            raise InfeasibleError(f"{name} {int(bad[0])} has target {t[bad[0]]} but no scalable cells")

    r = np.ones(x0.shape[0])
    s = np.ones(x0.shape[1])
    best = (_residual(scal, rows, cols), r, s)
    trace = [best[0]]
    it = 0
    while best[0] > tol and it < config.max_iter:
        it += 1
        denom = scal @ s
        r = np.divide(rows, denom, out=np.ones_like(rows), where=denom > 0)
        denom = scal.T @ r
        s = np.divide(cols, denom, out=np.ones_like(cols), where=denom > 0)
        res = _residual(r[:, None] * scal * s[None, :], rows, cols)
        trace.append(res)
        if res <= best[0]:
            best = (res, r, s)
    res, r, s = best
    out = r[:, None] * scal * s[None, :] + fixed
    result = RasResult(out, r, s, it, res, res <= tol, trace, warnings)
    if not result.converged:
        result.warnings.append(f"no convergence after {it} iterations (residual {res:.3g})")
    if sam is not None:
        result.sam = sam.with_cells(out)
    return result


def balance_sam(sam: Sam, totals=None, config: RasConfig = RasConfig()) -> RasResult:
    """Balance a SAM so each account's row and column both sum to its total.

    ``totals`` defaults to the mean of each account's row and column sums.
    Negative cells are frozen automatically in addition to ``config.frozen``.
    """
    if totals is None:
        totals = (sam.row_totals() + sam.col_totals()) / 2
    ids = sam.ids
    negative = [(ids[i], ids[j]) for i, j in zip(*np.nonzero(sam.cells < 0))]
    cfg = RasConfig(config.max_iter, config.tolerance, tuple(config.frozen) + tuple(negative), config.target_tolerance)
    return ras_balance(sam, totals, totals, cfg)
