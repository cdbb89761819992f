"""Top-down hierarchy: micro tables summed into macro tables, and checked against them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from .core import AccountRegistry, Sam


class MappingError(ValueError):
    pass


class UnitMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class AccountMapping:
    """Total many-to-one map from micro account ids to macro account ids."""

    pairs: tuple[tuple[str, str], ...]

    @classmethod
    def from_dict(cls, mapping: Mapping[str, str]) -> "AccountMapping":
        return cls(tuple(mapping.items()))

    @classmethod
    def identity(cls, registry: AccountRegistry) -> "AccountMapping":
        return cls(tuple((i, i) for i in registry.ids))

    def as_dict(self) -> dict[str, str]:
        return dict(self.pairs)

    def __getitem__(self, micro_id: str) -> str:
        return self.as_dict()[micro_id]

    def validate(self, micro: AccountRegistry, macro: AccountRegistry) -> None:
        """Raise unless the map is total over ``micro`` and category-consistent."""
        m = self.as_dict()
        if len(m) != len(self.pairs):
            raise MappingError("a micro account is mapped more than once")
        for acc in micro:
            if acc.id not in m:
                raise MappingError(f"micro account {acc.id!r} is not mapped")
            target = m[acc.id]
            if target not in macro:
                raise MappingError(f"unknown macro account {target!r} (mapped from {acc.id!r})")
            if macro.get(target).category is not acc.category:
                raise MappingError(
                    f"{acc.id!r} ({acc.category.name}) mapped to {target!r} "
                    f"({macro.get(target).category.name})"
                )

    def compose(self, outer: "AccountMapping") -> "AccountMapping":
        """Map through ``self`` and then ``outer``."""
        o = outer.as_dict()
        return AccountMapping(tuple((k, o[v]) for k, v in self.pairs))

    def matrix(self, micro: AccountRegistry, macro: AccountRegistry) -> np.ndarray:
        """0/1 aggregator ``G`` (macro x micro) with ``G[I, i] = 1`` iff i maps to I."""
        m = self.as_dict()
        g = np.zeros((len(macro), len(micro)))
        for k, acc in enumerate(micro):
            if acc.id not in m:
                raise MappingError(f"micro account {acc.id!r} is not mapped")
            if m[acc.id] not in macro:
                raise MappingError(f"unknown macro account {m[acc.id]!r} (mapped from {acc.id!r})")
            g[macro.index(m[acc.id]), k] = 1.0
        return g


def _unit_factor(from_unit: str, to_unit: str | None, unit_factor: float | None) -> tuple[float, str]:
    if to_unit is None or to_unit == from_unit:
        return (1.0 if unit_factor is None else unit_factor), (to_unit or from_unit)
    if unit_factor is None:
        raise UnitMismatchError(
            f"micro table is in {from_unit!r} but macro is in {to_unit!r}; pass unit_factor explicitly"
        )
    return unit_factor, to_unit


def aggregate(
    micro: Sam,
    mapping: AccountMapping,
    macro_registry: AccountRegistry,
    unit: str | None = None,
    unit_factor: float | None = None,
    check_categories: bool = True,
) -> Sam:
    """Block sums of ``micro`` over the mapping, times the unit factor.

    ``unit`` names the macro unit; when it differs from the micro unit a
    ``unit_factor`` (micro -> macro, e.g. 0.001 for million -> billion) is
    required.
    """
    if check_categories:
        mapping.validate(micro.registry, macro_registry)
    factor, out_unit = _unit_factor(micro.unit, unit, unit_factor)
    g = mapping.matrix(micro.registry, macro_registry)
    return Sam(macro_registry, (g @ micro.cells @ g.T) * factor, out_unit)


class Discrepancy(NamedTuple):
    row: str
    col: str
    aggregated: float
    control: float
    difference: float
    severity: str


def control_total_check(
    micro: Sam,
    macro: Sam,
    mapping: AccountMapping,
    tol: float,
    unit_factor: float | None = None,
    mode: str = "hard",
    soft_cells: set[tuple[str, str]] | None = None,
) -> list[Discrepancy]:
    """Macro cells where the aggregated micro table misses the control value by more than ``tol``.

    In ``"hard"`` mode every discrepancy is an error; in ``"soft"`` mode every
    one is a warning. Cells listed in ``soft_cells`` are warnings in either mode.
    """
    if mode not in ("hard", "soft"):
        raise ValueError("mode must be 'hard' or 'soft'")
    agg = aggregate(micro, mapping, macro.registry, unit=macro.unit, unit_factor=unit_factor)
    soft_cells = soft_cells or set()
    diff = agg.cells - macro.cells
    out = []
    ids = macro.ids
    for i, j in zip(*np.nonzero(np.abs(diff) > tol)):
        sev = "warning" if mode == "soft" or (ids[i], ids[j]) in soft_cells else "error"
        out.append(
            Discrepancy(ids[i], ids[j], float(agg.cells[i, j]), float(macro.cells[i, j]), float(diff[i, j]), sev)
        )
    return out
