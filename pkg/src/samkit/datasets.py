"""Shipped Malaysian SAM 2000 tables and their companion files."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import numpy as np

from .aggregation import AccountMapping
from .completion import CompletionResult, complete
from .core import AccountRegistry, Sam
from .ingest import cell_presence, parse_mapping, parse_registry, parse_sam

MACRO_UNIT = "RM billion"
MICRO_UNIT = "RM million"
MICRO_TO_MACRO = 0.001


def data_path(name: str):
    return resources.files("samkit") / "data" / name


def _text(name: str) -> str:
    return data_path(name).read_text(encoding="utf-8")


def micro_registry() -> AccountRegistry:
    return parse_registry(_text("micro_registry.csv"))


def macro_registry() -> AccountRegistry:
    return parse_registry(_text("macro_registry.csv"))


def mapping() -> AccountMapping:
    return AccountMapping.from_dict(parse_mapping(_text("micro_to_macro.csv")))


def macro_sam() -> Sam:
    """The 13-account macro table, as printed (not rebalanced)."""
    return parse_sam(_text("malaysia_macro_2000.csv"), macro_registry(), MACRO_UNIT)


def micro_partial() -> Sam:
    """The transcribed part of the 51-account table; untranscribed cells read as 0."""
    return parse_sam(_text("malaysia_micro_2000_partial.csv"), micro_registry(), MICRO_UNIT)


def micro_known() -> np.ndarray:
    """True for cells that were transcribed (including illegible-blank exclusions as False)."""
    return cell_presence(_text("malaysia_micro_2000_partial.csv"), micro_registry())


def macro_provenance() -> dict:
    return json.loads(_text("malaysia_macro_2000.provenance.json"))


def micro_provenance() -> dict:
    return json.loads(_text("malaysia_micro_2000_partial.provenance.json"))


def printed_micro_totals() -> dict[str, float]:
    """Account totals printed in the micro table, untrusted ones left out."""
    prov = micro_provenance()
    untrusted = set(prov["untrusted_totals"]["cols"])
    out = {k: float(v) for k, v in prov["printed_col_totals"].items() if k not in untrusted}
    out.update({k: float(v) for k, v in prov["printed_row_totals"].items()})
    return out


@lru_cache(maxsize=1)
def _completed() -> CompletionResult:
    return complete(
        micro_partial(), micro_known(), macro_sam(), mapping(), MICRO_TO_MACRO, printed_micro_totals()
    )


def micro_completion() -> CompletionResult:
    """Balanced 51-account table with untranscribed cells imputed (see ``samkit.completion``)."""
    return _completed()


def micro_completed() -> Sam:
    return _completed().sam
