"""Account taxonomy, the SAM matrix type and its accounting checks.

Convention: cell ``(i, j)`` is a payment from column account ``j`` to row
account ``i`` (rows receive, columns pay).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np


class AccountCategory(enum.Enum):
    """The thirteen macro roles, valued by their band number in the macro layout."""

    ProductionSector = 1
    FactorOfProduction = 2
    Household = 3
    Company = 4
    PublicCurrentExpenditure = 5
    PublicCapitalInvestment = 6
    IndirectTax = 7
    PublicCurrent = 8
    PublicCapital = 9
    PrivateCapital = 10
    ChangesInInventory = 11
    RowCurrent = 12
    RowCapital = 13

    @property
    def band(self) -> int:
        return self.value

    @classmethod
    def from_token(cls, token: str) -> "AccountCategory":
        try:
            return cls[token]
        except KeyError:
            raise ValueError(f"unknown account category {token!r}") from None


C = AccountCategory

# Bands where negative cells are legitimate (net capital flows, inventory
# run-downs, current-account balances).
SIGNED_CATEGORIES = frozenset(
    {C.PrivateCapital, C.PublicCapital, C.ChangesInInventory, C.RowCurrent, C.RowCapital}
)


@dataclass(frozen=True)
class Account:
    id: str
    name: str
    category: AccountCategory
    tags: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if not self.id or any(ch in self.id for ch in ",\n\r\"") or self.id.strip() != self.id:
            raise ValueError(f"invalid account id {self.id!r}")
        if self.id.upper() == "TOTAL":
            raise ValueError("'TOTAL' is reserved and cannot be an account id")
        object.__setattr__(self, "tags", tuple(sorted(dict(self.tags).items())))

    def tag(self, key: str, default: str | None = None) -> str | None:
        return dict(self.tags).get(key, default)

    def matches(self, tag_filter: Mapping[str, str] | None) -> bool:
        """True when every ``key=value`` pair of the filter is among the tags."""
        if not tag_filter:
            return True
        tags = dict(self.tags)
        return all(tags.get(k) == v for k, v in tag_filter.items())


class AccountRegistry(Sequence[Account]):
    """Ordered, id-unique collection of accounts."""

    def __init__(self, accounts: Iterable[Account]):
        self._accounts = tuple(accounts)
        self._index: dict[str, int] = {}
        for k, acc in enumerate(self._accounts):
            if acc.id in self._index:
                raise ValueError(f"duplicate account id {acc.id!r}")
            self._index[acc.id] = k

    def __getitem__(self, k):
        if isinstance(k, slice):
            return AccountRegistry(self._accounts[k])
        return self._accounts[k]

    def __len__(self) -> int:
        return len(self._accounts)

    def __eq__(self, other) -> bool:
        return isinstance(other, AccountRegistry) and self._accounts == other._accounts

    def __hash__(self) -> int:
        return hash(self._accounts)

    def __repr__(self) -> str:
        return f"AccountRegistry({len(self)} accounts)"

    @property
    def ids(self) -> list[str]:
        return [a.id for a in self._accounts]

    def __contains__(self, item) -> bool:
        if isinstance(item, str):
            return item in self._index
        return item in self._accounts

    def index(self, account_id: str) -> int:  # type: ignore[override]
        try:
            return self._index[account_id]
        except KeyError:
            raise KeyError(f"unknown account id {account_id!r}") from None

    def get(self, account_id: str) -> Account:
        return self._accounts[self.index(account_id)]

    def by_category(self, category: AccountCategory) -> list[Account]:
        return [a for a in self._accounts if a.category is category]

    def select(self, tag_filter: Mapping[str, str] | None = None, category=None) -> list[Account]:
        return [
            a
            for a in self._accounts
            if a.matches(tag_filter) and (category is None or a.category is category)
        ]

    def census(self) -> dict[AccountCategory, int]:
        counts = {c: 0 for c in AccountCategory}
        for a in self._accounts:
            counts[a.category] += 1
        return counts

    def subset(self, ids: Iterable[str]) -> "AccountRegistry":
        """Accounts named in ``ids``, kept in registry order."""
        wanted = set(ids)
        for i in wanted:
            self.index(i)
        return AccountRegistry(a for a in self._accounts if a.id in wanted)


@dataclass(frozen=True, eq=False)
class Sam:
    """A square, labelled matrix of transactions in a single currency unit."""

    registry: AccountRegistry
    cells: np.ndarray
    unit: str = "RM million"

    def __post_init__(self):
        if not isinstance(self.registry, AccountRegistry):
            object.__setattr__(self, "registry", AccountRegistry(self.registry))
        cells = np.array(self.cells, dtype=float, copy=True)
        n = len(self.registry)
        if cells.size == 0 and n == 0:
            cells = cells.reshape(0, 0)
        if cells.shape != (n, n):
            raise ValueError(f"cells must be {n}x{n} for {n} accounts, got {cells.shape}")
        if not np.all(np.isfinite(cells)):
            raise ValueError("cells must be finite")
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)

    def __len__(self) -> int:
        return len(self.registry)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Sam)
            and self.registry == other.registry
            and self.unit == other.unit
            and np.array_equal(self.cells, other.cells)
        )

    def __repr__(self) -> str:
        return f"Sam({len(self)} accounts, unit={self.unit!r})"

    @property
    def ids(self) -> list[str]:
        return self.registry.ids

    def index(self, account_id: str) -> int:
        return self.registry.index(account_id)

    def cell(self, row: str, col: str) -> float:
        return float(self.cells[self.index(row), self.index(col)])

    def with_cells(self, cells, unit: str | None = None) -> "Sam":
        return Sam(self.registry, cells, self.unit if unit is None else unit)

    def scaled(self, factor: float, unit: str) -> "Sam":
        return Sam(self.registry, self.cells * factor, unit)

    def reordered(self, ids: Sequence[str]) -> "Sam":
        """Same transactions with accounts permuted into ``ids`` order."""
        idx = [self.index(i) for i in ids]
        if sorted(idx) != list(range(len(self))):
            raise ValueError("reordering must be a permutation of all accounts")
        reg = AccountRegistry(self.registry[k] for k in idx)
        return Sam(reg, self.cells[np.ix_(idx, idx)], self.unit)

    def row_totals(self) -> np.ndarray:
        return np.array([math.fsum(r) for r in self.cells]) if len(self) else np.zeros(0)

    def col_totals(self) -> np.ndarray:
        return np.array([math.fsum(c) for c in self.cells.T]) if len(self) else np.zeros(0)

    def grand_total(self) -> float:
        return math.fsum(self.cells.ravel())

    def category_of(self, k: int) -> AccountCategory:
        return self.registry[k].category


def row_total(sam: Sam, account: str) -> float:
    """Receipts of ``account``: the sum of its row."""
    return math.fsum(sam.cells[sam.index(account), :])


def col_total(sam: Sam, account: str) -> float:
    """Payments of ``account``: the sum of its column."""
    return math.fsum(sam.cells[:, sam.index(account)])


def default_tolerance(unit: str) -> float:
    """Absolute balance tolerance suited to the table's unit."""
    u = unit.lower()
    if "billion" in u:
        return 0.01
    if "million" in u:
        return 1.0
    return 1e-6


class Residual(NamedTuple):
    account: str
    row_total: float
    col_total: float
    residual: float


def balance_residuals(sam: Sam) -> list[Residual]:
    rows, cols = sam.row_totals(), sam.col_totals()
    return [
        Residual(acc.id, float(r), float(c), float(r - c))
        for acc, r, c in zip(sam.registry, rows, cols)
    ]


def balance_violations(sam: Sam, tol: float | None = None) -> list[Residual]:
    tol = default_tolerance(sam.unit) if tol is None else tol
    return [r for r in balance_residuals(sam) if abs(r.residual) > tol]


def is_balanced(sam: Sam, tol: float | None = None) -> bool:
    return not balance_violations(sam, tol)


@dataclass(frozen=True)
class StructuralMask:
    """Set of (row category, column category) pairs allowed to be nonzero."""

    allowed: frozenset = field(default_factory=frozenset)

    def __contains__(self, pair) -> bool:
        return pair in self.allowed

    def permits(self, row: AccountCategory, col: AccountCategory) -> bool:
        return (row, col) in self.allowed

    def matrix(self, registry: AccountRegistry) -> np.ndarray:
        cats = [a.category for a in registry]
        return np.array([[(r, c) in self.allowed for c in cats] for r in cats], dtype=bool)


def _default_mask() -> StructuralMask:
    pairs = {
        # commodity demand: intermediate use, household and public consumption,
        # public and private investment, inventory build-up
        (C.ProductionSector, C.ProductionSector),
        (C.ProductionSector, C.Household),
        (C.ProductionSector, C.PublicCurrentExpenditure),
        (C.ProductionSector, C.PublicCapitalInvestment),
        (C.ProductionSector, C.PrivateCapital),
        (C.ProductionSector, C.ChangesInInventory),
        (C.ProductionSector, C.RowCurrent),
        # value added and its distribution
        (C.FactorOfProduction, C.ProductionSector),
        (C.Household, C.FactorOfProduction),
        (C.Company, C.FactorOfProduction),
        (C.Household, C.ProductionSector),
        (C.Company, C.ProductionSector),
        # institutional transfers
        (C.Household, C.Household),
        (C.Household, C.Company),
        (C.Household, C.PublicCurrentExpenditure),
        (C.Household, C.RowCurrent),
        (C.Company, C.RowCurrent),
        # public sector chain
        (C.PublicCurrentExpenditure, C.PublicCurrent),
        (C.PublicCapitalInvestment, C.PublicCapital),
        (C.PublicCurrent, C.Household),
        (C.PublicCurrent, C.Company),
        (C.PublicCurrent, C.IndirectTax),
        (C.PublicCurrent, C.RowCurrent),
        (C.PublicCapital, C.PublicCurrent),
        (C.PublicCapital, C.PrivateCapital),
        (C.PublicCapital, C.RowCapital),
        # indirect taxes
        (C.IndirectTax, C.ProductionSector),
        (C.IndirectTax, C.Household),
        (C.IndirectTax, C.Company),
        (C.IndirectTax, C.PublicCapital),
        (C.IndirectTax, C.PrivateCapital),
        # private capital sources
        (C.PrivateCapital, C.Household),
        (C.PrivateCapital, C.Company),
        (C.PrivateCapital, C.RowCapital),
        # inventory band
        (C.ChangesInInventory, C.PublicCapital),
        (C.ChangesInInventory, C.PrivateCapital),
        # rest of the world
        (C.RowCapital, C.Company),
        (C.RowCapital, C.RowCurrent),
    }
    # imports and other current leakages abroad can come from any account
    pairs |= {(C.RowCurrent, c) for c in AccountCategory}
    return StructuralMask(frozenset(pairs))


DEFAULT_MASK = _default_mask()


class CellFinding(NamedTuple):
    row: str
    col: str
    value: float


def structural_violations(sam: Sam, mask: StructuralMask = DEFAULT_MASK) -> list[CellFinding]:
    """Nonzero cells in category pairs the mask does not allow (warnings)."""
    allowed = mask.matrix(sam.registry)
    rows, cols = np.nonzero((sam.cells != 0) & ~allowed)
    ids = sam.ids
    return [CellFinding(ids[i], ids[j], float(sam.cells[i, j])) for i, j in zip(rows, cols)]


def sign_violations(sam: Sam) -> list[CellFinding]:
    """Negative cells outside the capital, inventory and rest-of-world bands."""
    cats = [a.category for a in sam.registry]
    signed = np.array([c in SIGNED_CATEGORIES for c in cats], dtype=bool)
    ok = signed[:, None] | signed[None, :]
    rows, cols = np.nonzero((sam.cells < 0) & ~ok)
    ids = sam.ids
    return [CellFinding(ids[i], ids[j], float(sam.cells[i, j])) for i, j in zip(rows, cols)]


# ---------------------------------------------------------------------------
# Canonical registries
# ---------------------------------------------------------------------------

MACRO_ACCOUNTS = (
    ("PROD", "Production sectors", C.ProductionSector),
    ("FAC", "Factor of production", C.FactorOfProduction),
    ("HH", "Households", C.Household),
    ("COM", "Companies", C.Company),
    ("PUBEXP", "Public current expenditure", C.PublicCurrentExpenditure),
    ("PUBINV", "Public capital investment", C.PublicCapitalInvestment),
    ("INDTAX", "Indirect taxes", C.IndirectTax),
    ("PUBCUR", "Public current", C.PublicCurrent),
    ("PUBCAP", "Public capital", C.PublicCapital),
    ("PRIVCAP", "Private capital", C.PrivateCapital),
    ("INV", "Changes in inventory", C.ChangesInInventory),
    ("ROWCUR", "ROW current", C.RowCurrent),
    ("ROWCAP", "ROW capital", C.RowCapital),
)

SECTORS = (
    ("AGR", "Agriculture and livestock"),
    ("FOR", "Forestry and logging products"),
    ("FSH", "Fish etc."),
    ("MIN", "Mining & quarrying"),
    ("MFG", "Manufacturing"),
    ("EGW", "Electricity, gas & water"),
    ("CON", "Building and constructions"),
    ("TRD", "Wholesale and retail trade"),
    ("HTL", "Hotel & restaurant"),
    ("TRN", "Transport and communication"),
    ("FIN", "Financial, insurance and real estate"),
    ("BUS", "Business services"),
    ("EDU", "Education"),
    ("HLT", "Health"),
    ("OPS", "Other private services"),
    ("GAD", "General administration"),
    ("POD", "Public order and defence"),
    ("OPA", "Other public administration"),
)

HOUSEHOLDS = (
    ("HH_RM", "Rural Malay", "rural", "malay"),
    ("HH_RC", "Rural Chinese", "rural", "chinese"),
    ("HH_RI", "Rural Indian", "rural", "indian"),
    ("HH_RO", "Rural Others", "rural", "others"),
    ("HH_UM", "Urban Malay", "urban", "malay"),
    ("HH_UC", "Urban Chinese", "urban", "chinese"),
    ("HH_UI", "Urban Indian", "urban", "indian"),
    ("HH_UO", "Urban Others", "urban", "others"),
    ("HH_NC", "Non-citizen", "none", "noncitizen"),
)

PUBLIC_EXPENDITURE = (
    ("PE_AGR", "Pub Exp Agriculture", "agriculture"),
    ("PE_EDU", "Pub Exp Education", "education"),
    ("PE_HLT", "Pub Exp Health", "health"),
    ("PE_ADM", "Pub Exp Administration", "administration"),
    ("PE_POD", "Pub Exp Public Order & Defence", "public_order_defence"),
    ("PE_OPA", "Pub Exp Other Public Admin", "other_public_admin"),
    ("PE_HHT", "Pub Exp Household Transfers", "household_transfers"),
)

PUBLIC_INVESTMENT = (
    ("PI_AGR", "Pub Inv Agriculture & Rural Development", "agriculture_rural_development"),
    ("PI_IND", "Pub Inv Industry", "industry"),
    ("PI_TRD", "Pub Inv Trade", "trade"),
    ("PI_TRN", "Pub Inv Transportation & Communication", "transport_communication"),
    ("PI_EDH", "Pub Inv Education & Health", "education_health"),
    ("PI_ADM", "Pub Inv Administration", "administration"),
    ("PI_OTH", "Pub Inv Others", "others"),
)


def macro_registry() -> AccountRegistry:
    return AccountRegistry(Account(i, n, c) for i, n, c in MACRO_ACCOUNTS)


def micro_registry() -> AccountRegistry:
    """The 51 accounts of the disaggregated table, in printed order."""
    accs = [Account(i, n, C.ProductionSector) for i, n in SECTORS]
    accs.append(Account("FAC", "Factor of production", C.FactorOfProduction))
    accs += [
        Account(i, n, C.Household, (("region", r), ("ethnicity", e)))
        for i, n, r, e in HOUSEHOLDS
    ]
    accs.append(Account("COM", "Companies", C.Company))
    accs += [
        Account(i, n, C.PublicCurrentExpenditure, (("programme", p),))
        for i, n, p in PUBLIC_EXPENDITURE
    ]
    accs += [
        Account(i, n, C.PublicCapitalInvestment, (("programme", p),))
        for i, n, p in PUBLIC_INVESTMENT
    ]
    accs += [
        Account("TAX_DOM", "Commodities taxes (domestic)", C.IndirectTax),
        Account("TAX_IMP", "Commodities taxes (imports)", C.IndirectTax),
        Account("PUBCUR", "Public current", C.PublicCurrent),
        Account("PUBCAP", "Public capital", C.PublicCapital),
        Account("PRIVCAP", "Private capital", C.PrivateCapital),
        Account("INV", "Changes in inventories", C.ChangesInInventory),
        Account("ROWCUR", "ROW current", C.RowCurrent),
        Account("ROWCAP", "ROW capital", C.RowCapital),
    ]
    return AccountRegistry(accs)


MICRO_CENSUS = {
    C.ProductionSector: 18,
    C.FactorOfProduction: 1,
    C.Household: 9,
    C.Company: 1,
    C.PublicCurrentExpenditure: 7,
    C.PublicCapitalInvestment: 7,
    C.IndirectTax: 2,
    C.PublicCurrent: 1,
    C.PublicCapital: 1,
    C.PrivateCapital: 1,
    C.ChangesInInventory: 1,
    C.RowCurrent: 1,
    C.RowCapital: 1,
}
MACRO_CENSUS = {c: 1 for c in AccountCategory}


def check_census(
    registry: AccountRegistry,
    expected: Mapping[AccountCategory, int],
    require_household_tags: bool = True,
) -> dict:
    """Compare category counts with ``expected``; mismatches listed per category."""
    got = registry.census()
    mismatches = {
        c.name: {"expected": expected.get(c, 0), "found": got[c]}
        for c in AccountCategory
        if got[c] != expected.get(c, 0)
    }
    missing_tags = [
        a.id
        for a in registry.by_category(C.Household)
        if require_household_tags and (a.tag("region") is None or a.tag("ethnicity") is None)
    ]
    return {
        "accounts": len(registry),
        "expected_accounts": sum(expected.values()),
        "counts": {c.name: got[c] for c in AccountCategory},
        "mismatches": mismatches,
        "households_missing_tags": missing_tags,
        "passed": not mismatches and not missing_tags and len(registry) == sum(expected.values()),
    }
