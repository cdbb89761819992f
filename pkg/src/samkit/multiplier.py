"""Fixed-price SAM multipliers.

With endogenous accounts ``n``, average expenditure propensities are
``A[i, j] = cell(i, j) / col_total(j)`` and endogenous incomes respond to
exogenous injections ``x`` as ``y = (I - A)^-1 x``. The inverse factors
multiplicatively into within-block transfer effects, open-loop cross-block
effects and closed-loop circular effects (``M = M3 @ M2 @ M1``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import AccountCategory, AccountRegistry, Sam, default_tolerance


class MultiplierError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    """Endogenous accounts in three ordered blocks; everything else is exogenous."""

    production: tuple[str, ...]
    factors: tuple[str, ...]
    institutions: tuple[str, ...]

    def __post_init__(self):
        for name in ("production", "factors", "institutions"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        ids = self.endogenous
        if len(set(ids)) != len(ids):
            raise ValueError("an account appears in more than one endogenous block")

    @property
    def endogenous(self) -> tuple[str, ...]:
        return self.production + self.factors + self.institutions

    @property
    def blocks(self) -> list[np.ndarray]:
        """Index arrays of the three blocks within the endogenous ordering."""
        a, b = len(self.production), len(self.factors)
        c = len(self.institutions)
        return [np.arange(0, a), np.arange(a, a + b), np.arange(a + b, a + b + c)]

    def exogenous(self, registry: AccountRegistry) -> list[str]:
        endo = set(self.endogenous)
        return [i for i in registry.ids if i not in endo]

    def check(self, registry: AccountRegistry) -> None:
        for i in self.endogenous:
            registry.index(i)

    def to_dict(self) -> dict:
        return {
            "production": list(self.production),
            "factors": list(self.factors),
            "institutions": list(self.institutions),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Partition":
        return cls(data["production"], data["factors"], data["institutions"])


def default_partition(registry: AccountRegistry, companies_endogenous: bool = True) -> Partition:
    """Activities, factors and institutions endogenous; government, taxes, capital and ROW exogenous."""
    cats = (AccountCategory.Household, AccountCategory.Company) if companies_endogenous else (
        AccountCategory.Household,
    )
    return Partition(
        [a.id for a in registry.by_category(AccountCategory.ProductionSector)],
        [a.id for a in registry.by_category(AccountCategory.FactorOfProduction)],
        [a.id for a in registry if a.category in cats],
    )


def propensities(sam: Sam, partition: Partition, balance_tol: float | None = None) -> np.ndarray:
    """Endogenous block of column-normalised transactions, in partition order.

    The endogenous accounts must balance within ``balance_tol`` (default: the
    unit's standard tolerance); pass ``float('inf')`` to skip the check.
    """
    partition.check(sam.registry)
    idx = [sam.index(i) for i in partition.endogenous]
    cols = sam.col_totals()[idx]
    rows = sam.row_totals()[idx]
    bad = [partition.endogenous[k] for k in np.nonzero(cols <= 0)[0]]
    if bad:
        raise MultiplierError(f"endogenous accounts with non-positive column total: {bad}")
    tol = default_tolerance(sam.unit) if balance_tol is None else balance_tol
    off = [(partition.endogenous[k], float(rows[k] - cols[k])) for k in np.nonzero(np.abs(rows - cols) > tol)[0]]
    if off:
        raise MultiplierError(f"unbalanced endogenous accounts (row - column): {off}")
    return sam.cells[np.ix_(idx, idx)] / cols[None, :]


def spectral_radius_bounds(a: np.ndarray, iterations: int = 200, tol: float = 1e-10) -> tuple[float, float]:
    """Collatz-Wielandt bounds on the spectral radius of a non-negative matrix.

    Power iteration runs on ``I + A``, whose dominant eigenvalue is
    ``1 + rho(A)`` and which is aperiodic even when ``A`` is cyclic.
    """
    n = a.shape[0]
    if n == 0:
        return 0.0, 0.0
    b = a + np.eye(n)
    x = np.ones(n)
    lo, hi = 0.0, np.inf
    for _ in range(iterations):
        y = b @ x
        ratio = y / x
        lo, hi = max(lo, ratio.min()), min(hi, ratio.max())
        x = y / y.max()
        if hi - lo <= tol:
            break
    return float(lo - 1.0), float(hi - 1.0)


def spectral_radius(a: np.ndarray) -> float:
    """Bracket by power iteration; fall back to eigenvalues when it is inconclusive."""
    if a.size and np.all(a >= 0):
        lo, hi = spectral_radius_bounds(a)
        if hi - lo <= 1e-10:
            return (lo + hi) / 2
    return float(np.max(np.abs(np.linalg.eigvals(a)), initial=0.0))


def _check_convergent(a: np.ndarray, labels: Sequence[str] | None) -> None:
    sums = a.sum(0)
    if np.all(sums < 1):
        return
    if np.all(a >= 0):
        lo, hi = spectral_radius_bounds(a)
        if hi < 1:
            return
        rho = spectral_radius(a) if lo < 1 else lo
    else:
        rho = spectral_radius(a)
    if rho < 1:
        return
    k = np.nonzero(1 - sums <= 0)[0]
    names = [labels[i] for i in k] if labels is not None else [int(i) for i in k]
    raise MultiplierError(
        f"spectral radius {rho:.6g} >= 1; columns with no leakage: {names}"
    )


def multiplier_matrix(a: np.ndarray, labels: Sequence[str] | None = None) -> np.ndarray:
    """``(I - A)^-1`` by LU with partial pivoting."""
    a = np.asarray(a, dtype=float)
    _check_convergent(a, labels)
    n = a.shape[0]
    try:
        return np.linalg.solve(np.eye(n) - a, np.eye(n))
    except np.linalg.LinAlgError as e:
        raise MultiplierError(f"I - A is singular: {e}") from None


def _block_diagonal(a: np.ndarray, blocks) -> np.ndarray:
    out = np.zeros_like(a)
    for b in blocks:
        out[np.ix_(b, b)] = a[np.ix_(b, b)]
    return out


def decompose(a: np.ndarray, blocks) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Multiplicative decomposition ``(M1, M2, M3)`` with ``M3 @ M2 @ M1 = (I - A)^-1``.

    ``M1 = (I - Ad)^-1`` for the block-diagonal part ``Ad``; with
    ``S = M1 (A - Ad)``, ``M2 = I + S + S^2`` and ``M3 = (I - S^3)^-1``.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    blocks = [np.asarray(b, dtype=int) for b in blocks]
    covered = np.sort(np.concatenate(blocks)) if blocks else np.array([], dtype=int)
    if not np.array_equal(covered, np.arange(n)):
        raise ValueError("blocks must partition the endogenous accounts")
    eye = np.eye(n)
    ad = _block_diagonal(a, blocks)
    try:
        m1 = np.linalg.solve(eye - ad, eye)
    except np.linalg.LinAlgError:
        raise MultiplierError("a within-block (I - A_kk) submatrix is singular") from None
    s = m1 @ (a - ad)
    s2 = s @ s
    m2 = eye + s + s2
    try:
        m3 = np.linalg.solve(eye - s2 @ s, eye)
    except np.linalg.LinAlgError:
        raise MultiplierError("closed-loop matrix I - S^3 is singular") from None
    return m1, m2, m3


@dataclass
class MultiplierResult:
    accounts: list[str]
    propensities: np.ndarray
    multipliers: np.ndarray
    leakages: np.ndarray
    condition: float
    spectral_radius: float
    decomposition: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None

    def to_dict(self) -> dict:
        def labelled(m):
            return {"rows": self.accounts, "cols": self.accounts, "values": m.tolist()}

        out = {
            "accounts": self.accounts,
            "propensities": labelled(self.propensities),
            "multipliers": labelled(self.multipliers),
            "leakages": dict(zip(self.accounts, self.leakages.tolist())),
            "column_multipliers": dict(zip(self.accounts, self.multipliers.sum(0).tolist())),
            "condition_number": self.condition,
            "spectral_radius": self.spectral_radius,
        }
        if self.decomposition is not None:
            for name, m in zip(("M1", "M2", "M3"), self.decomposition):
                out[name] = labelled(m)
        return out


def analyse(sam: Sam, partition: Partition, balance_tol: float | None = None, decomposition: bool = True) -> MultiplierResult:
    """Propensities, multiplier matrix and diagnostics for one SAM and partition."""
    a = propensities(sam, partition, balance_tol)
    labels = list(partition.endogenous)
    m = multiplier_matrix(a, labels)
    n = len(labels)
    cond = float(np.linalg.cond(np.eye(n) - a, 1)) if n else 1.0
    dec = decompose(a, partition.blocks) if decomposition else None
    return MultiplierResult(labels, a, m, 1 - a.sum(0), cond, spectral_radius(a), dec)
