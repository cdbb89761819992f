"""Household incidence of public expenditure injections under fixed-price multipliers."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import AccountCategory, Sam
from .metrics import MetricsError, distribution_summary
from .multiplier import MultiplierResult, Partition, analyse

PROGRAMME_CATEGORIES = (AccountCategory.PublicCurrentExpenditure, AccountCategory.PublicCapitalInvestment)
DEFAULT_POOR = {"region": "rural"}


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    """Injections keyed by account id.

    An exogenous key (normally a public expenditure or investment programme)
    is spread over the rows of its base-year column unless ``shares`` gives
    an explicit allocation; an endogenous key (e.g. a household group)
    receives its amount directly.
    """

    name: str
    injections: Mapping[str, float]
    shares: Mapping[str, Mapping[str, float]] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        return cls(
            str(data.get("name", "scenario")),
            {k: float(v) for k, v in data["injections"].items()},
            {p: {k: float(v) for k, v in s.items()} for p, s in (data.get("shares") or {}).items()},
        )

    def to_dict(self) -> dict:
        out = {"name": self.name, "injections": dict(self.injections)}
        if self.shares:
            out["shares"] = {p: dict(s) for p, s in self.shares.items()}
        return out

    def scaled(self, alpha: float) -> "Scenario":
        return Scenario(self.name, {k: alpha * v for k, v in self.injections.items()}, self.shares)

    def total(self) -> float:
        return math.fsum(self.injections.values())

    def validate(self, sam: Sam) -> None:
        for k, v in self.injections.items():
            if k not in sam.registry:
                raise ScenarioError(f"scenario {self.name!r}: unknown account {k!r}")
            if not math.isfinite(v):
                raise ScenarioError(f"scenario {self.name!r}: amount for {k!r} is not finite")
        for p, s in self.shares.items():
            if p not in sam.registry:
                raise ScenarioError(f"shares given for unknown account {p!r}")
            for k, v in s.items():
                if k not in sam.registry:
                    raise ScenarioError(f"shares of {p!r} name unknown account {k!r}")
                if not math.isfinite(v) or v < 0:
                    raise ScenarioError(f"share {p!r} -> {k!r} must be finite and non-negative")
            if abs(math.fsum(s.values()) - 1) > 1e-9:
                raise ScenarioError(f"shares of {p!r} sum to {math.fsum(s.values())}, not 1")


def allocation_shares(sam: Sam, programme: str, scenario: Scenario | None = None) -> np.ndarray:
    """Share of one unit spent by ``programme`` that reaches each account (sums to 1)."""
    if scenario is not None and programme in scenario.shares:
        out = np.zeros(len(sam))
        for k, v in scenario.shares[programme].items():
            out[sam.index(k)] = v
        return out
    col = sam.cells[:, sam.index(programme)]
    total = math.fsum(col)
    if not np.any(col) or total <= 0:
        raise ScenarioError(f"programme {programme!r} has no base-year spending and no explicit shares")
    return col / total


def injection_vector(scenario: Scenario, sam: Sam, partition: Partition) -> np.ndarray:
    """First-round demand on each endogenous account, in partition order."""
    scenario.validate(sam)
    endo = list(partition.endogenous)
    pos = {a: k for k, a in enumerate(endo)}
    idx = [sam.index(a) for a in endo]
    dx = np.zeros(len(endo))
    for account, amount in scenario.injections.items():
        if amount == 0:
            continue
        if account in pos:
            dx[pos[account]] += amount
        else:
            dx += amount * allocation_shares(sam, account, scenario)[idx]
    return dx


def first_round_leakage(scenario: Scenario, sam: Sam, partition: Partition) -> float:
    """Part of the injection that lands directly on exogenous accounts."""
    endo = set(partition.endogenous)
    exo = [k for k, a in enumerate(sam.ids) if a not in endo]
    out = []
    for account, amount in scenario.injections.items():
        if amount == 0 or account in endo:
            continue
        out.append(amount * math.fsum(allocation_shares(sam, account, scenario)[exo]))
    return math.fsum(out)


@dataclass
class IncidenceReport:
    scenario: str
    accounts: list[str]
    delta: np.ndarray
    households: list[str]
    base_income: np.ndarray
    household_delta: np.ndarray
    metrics_before: dict
    metrics_after: dict
    diagnostics: dict

    @property
    def percent(self) -> list[float | None]:
        return [float(d / b * 100) if b != 0 else None for b, d in zip(self.base_income, self.household_delta)]

    @property
    def ranking(self) -> list[str]:
        order = sorted(range(len(self.households)), key=lambda k: (-_tie_key(self.household_delta[k]), self.households[k]))
        return [self.households[k] for k in order]

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "endogenous_delta": dict(zip(self.accounts, self.delta.tolist())),
            "households": [
                {"group": g, "base": float(b), "delta": float(d), "pct": p}
                for g, b, d, p in zip(self.households, self.base_income, self.household_delta, self.percent)
            ],
            "ranking": self.ranking,
            "metrics_before": self.metrics_before,
            "metrics_after": self.metrics_after,
            "diagnostics": self.diagnostics,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["group", "base", "delta", "pct"])
        for g, b, d, p in zip(self.households, self.base_income, self.household_delta, self.percent):
            w.writerow([g, repr(float(b)), repr(float(d)), "" if p is None else repr(p)])
        return buf.getvalue()


def _household_ids(sam: Sam, partition: Partition) -> list[str]:
    return [a for a in partition.endogenous if sam.registry.get(a).category is AccountCategory.Household]


def _summary(accounts, incomes, weights) -> dict:
    if not accounts:
        return {}
    try:
        return distribution_summary(accounts, incomes, weights)
    except MetricsError as e:
        return {"error": str(e)}


def _tie_key(x: float) -> float:
    # values equal to 12 significant digits count as tied, so that
    # programmes with proportional columns are ordered by id, not by rounding
    return float(f"{x:.12g}")


def simulate(
    sam: Sam,
    partition: Partition,
    scenario: Scenario,
    weights: Sequence[float] | None = None,
    result: MultiplierResult | None = None,
) -> IncidenceReport:
    """Propagate a scenario through the multiplier matrix and report household incidence.

    ``weights`` are population weights for the household accounts, in
    partition order; equal weights are used when omitted. ``result`` reuses
    an existing multiplier analysis of the same SAM and partition.
    """
    if result is None:
        result = analyse(sam, partition, decomposition=False)
    dx = injection_vector(scenario, sam, partition)
    dy = result.multipliers @ dx
    hh = _household_ids(sam, partition)
    pos = {a: k for k, a in enumerate(result.accounts)}
    hk = [pos[a] for a in hh]
    base = np.array([math.fsum(sam.cells[sam.index(a)]) for a in hh])
    dh = dy[hk]
    accs = [sam.registry.get(a) for a in hh]

    total = scenario.total()
    direct = math.fsum(dx)
    leak = first_round_leakage(scenario, sam, partition)
    generated = math.fsum(result.leakages * dy)
    diagnostics = {
        "total_injection": total,
        "direct_endogenous_injection": direct,
        "first_round_leakage": leak,
        "leakage_share": leak / total if total else 0.0,
        # injection = direct endogenous demand + first-round leakage
        "injection_identity_residual": total - direct - leak,
        "total_endogenous_change": math.fsum(dy),
        "household_income_change": math.fsum(dh),
        # leakages generated by the endogenous income changes equal the direct injection
        "leakage_identity_residual": generated - direct,
        "weights": "equal population weights (no population data supplied)" if weights is None else "supplied",
    }
    before = _summary(accs, base, weights)
    after = _summary(accs, base + dh, weights)
    return IncidenceReport(scenario.name, list(result.accounts), dy, hh, base, dh, before, after, diagnostics)


@dataclass(frozen=True)
class ProgrammeRow:
    rank: int
    programme: str
    amount: float
    household_gain: float
    poor_gain: float
    poor_share: float
    leakage_share: float


def programme_accounts(sam: Sam) -> list[str]:
    return [a.id for a in sam.registry if a.category in PROGRAMME_CATEGORIES]


def compare_programmes(
    sam: Sam,
    partition: Partition,
    amount: float = 1.0,
    poor: Mapping[str, str] = DEFAULT_POOR,
    programmes: Sequence[str] | None = None,
    result: MultiplierResult | None = None,
) -> list[ProgrammeRow]:
    """Inject the same amount through each programme and rank by the poor groups' gain.

    Poor groups are the household accounts matching the ``poor`` tag filter
    (rural households by default). Ties are ordered by account id.
    """
    if result is None:
        result = analyse(sam, partition, decomposition=False)
    programmes = programme_accounts(sam) if programmes is None else list(programmes)
    hh = _household_ids(sam, partition)
    poor_ids = {a for a in hh if sam.registry.get(a).matches(poor)}
    rows = []
    for p in programmes:
        rep = simulate(sam, partition, Scenario(p, {p: amount}), result=result)
        gains = dict(zip(rep.households, rep.household_delta))
        total = math.fsum(gains.values())
        pg = math.fsum(v for k, v in gains.items() if k in poor_ids)
        rows.append((p, total, pg, pg / total if total else 0.0, rep.diagnostics["leakage_share"]))
    rows.sort(key=lambda r: (-_tie_key(r[2]), r[0]))
    return [ProgrammeRow(k + 1, p, amount, t, g, s, l) for k, (p, t, g, s, l) in enumerate(rows)]


def ranking_csv(rows: Sequence[ProgrammeRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "programme", "amount", "household_gain", "poor_gain", "poor_share", "leakage_share"])
    for r in rows:
        w.writerow([r.rank, r.programme, repr(r.amount), repr(r.household_gain), repr(r.poor_gain),
                    repr(r.poor_share), repr(r.leakage_share)])
    return buf.getvalue()
