import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from helpers import registry
from samkit import datasets
from samkit.aggregation import (
    AccountMapping,
    MappingError,
    UnitMismatchError,
    aggregate,
    control_total_check,
)
from samkit.core import AccountCategory as C, Sam, macro_registry, micro_registry

MICRO = registry(
    ("a1", C.ProductionSector),
    ("a2", C.ProductionSector),
    ("h1", C.Household),
    ("h2", C.Household),
)
MACRO = registry(("A", C.ProductionSector), ("H", C.Household))
MAP = AccountMapping.from_dict({"a1": "A", "a2": "A", "h1": "H", "h2": "H"})
values = st.floats(-1e6, 1e6, allow_nan=False)


def brute_block_sums(cells, groups, n_macro):
    out = np.zeros((n_macro, n_macro))
    for i in range(len(groups)):
        for j in range(len(groups)):
            out[groups[i], groups[j]] += cells[i, j]
    return out


def test_grand_total_scales_with_unit_factor():
    rng = np.random.default_rng(0)
    micro = Sam(MICRO, rng.uniform(0, 1000, (4, 4)), "RM million")
    macro = aggregate(micro, MAP, MACRO, unit="RM billion", unit_factor=0.001)
    assert macro.grand_total() == pytest.approx(micro.grand_total() * 0.001, rel=1e-14)
    assert macro.unit == "RM billion"


def test_block_sums_by_hand():
    cells = np.arange(16, dtype=float).reshape(4, 4)
    macro = aggregate(Sam(MICRO, cells), MAP, MACRO)
    # rows a1,a2 x cols a1,a2: 0+1+4+5
    assert macro.cells.tolist() == [[10, 18], [42, 50]]
    assert np.array_equal(macro.cells, brute_block_sums(cells, [0, 0, 1, 1], 2))


def test_unit_mismatch_needs_factor():
    micro = Sam(MICRO, np.ones((4, 4)), "RM million")
    with pytest.raises(UnitMismatchError):
        aggregate(micro, MAP, MACRO, unit="RM billion")


def test_unmapped_and_unknown_accounts():
    micro = Sam(MICRO, np.ones((4, 4)))
    with pytest.raises(MappingError):
        aggregate(micro, AccountMapping.from_dict({"a1": "A", "a2": "A", "h1": "H"}), MACRO)
    with pytest.raises(MappingError):
        aggregate(micro, AccountMapping.from_dict({"a1": "A", "a2": "A", "h1": "H", "h2": "X"}), MACRO)


def test_category_inconsistent_mapping_rejected():
    micro = Sam(MICRO, np.ones((4, 4)))
    with pytest.raises(MappingError):
        aggregate(micro, AccountMapping.from_dict({"a1": "A", "a2": "H", "h1": "H", "h2": "H"}), MACRO)


def test_shipped_mapping_is_total_and_consistent():
    datasets.mapping().validate(micro_registry(), macro_registry())


def test_partial_production_block_against_macro_cell():
    """Only columns 1-6 and 13-18 of the production block were transcribed,
    so the aggregate is a lower bound on the macro intermediate-use cell and
    the completed table meets it within the balancing tolerance."""
    macro_reg = macro_registry()
    partial = aggregate(datasets.micro_partial(), datasets.mapping(), macro_reg, "RM billion", 0.001)
    assert partial.cell("PROD", "PROD") <= 271.7
    completed = aggregate(datasets.micro_completed(), datasets.mapping(), macro_reg, "RM billion", 0.001)
    assert completed.cell("PROD", "PROD") == pytest.approx(271.7, abs=0.01 * 271.7)


def test_disaggregation_passes_control_check():
    rng = np.random.default_rng(4)
    macro = Sam(MACRO, rng.uniform(1, 10, (2, 2)))
    split = np.array([0.3, 0.7, 0.4, 0.6])
    groups = [0, 0, 1, 1]
    cells = np.array([[macro.cells[groups[i], groups[j]] * split[i] * split[j] for j in range(4)] for i in range(4)])
    micro = Sam(MICRO, cells)
    assert control_total_check(micro, macro, MAP, tol=1e-9) == []


def test_one_perturbed_cell_gives_one_discrepancy():
    tol = 0.01
    rng = np.random.default_rng(5)
    cells = rng.uniform(0, 5, (4, 4))
    micro = Sam(MICRO, cells)
    macro = aggregate(micro, MAP, MACRO)
    bumped = cells.copy()
    bumped[2, 0] += 2 * tol
    found = control_total_check(micro.with_cells(bumped), macro, MAP, tol)
    assert [(d.row, d.col) for d in found] == [("H", "A")]
    assert found[0].difference == pytest.approx(2 * tol)
    assert found[0].severity == "error"
    soft = control_total_check(micro.with_cells(bumped), macro, MAP, tol, mode="soft")
    assert soft[0].severity == "warning"


def test_household_income_control_on_completed_table():
    macro = datasets.macro_sam()
    micro = datasets.micro_completed()
    found = control_total_check(micro, macro, datasets.mapping(), tol=0.01, unit_factor=0.001)
    agg = aggregate(micro, datasets.mapping(), macro.registry, macro.unit, 0.001)
    assert agg.row_totals()[agg.index("HH")] == pytest.approx(188.018, abs=1.0)
    assert all(d.severity == "error" for d in found)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (4, 4), elements=values), arrays(np.float64, (4, 4), elements=values),
       st.floats(-10, 10), st.floats(-10, 10))
def test_aggregate_is_linear(s1, s2, a, b):
    left = aggregate(Sam(MICRO, a * s1 + b * s2), MAP, MACRO).cells
    right = a * aggregate(Sam(MICRO, s1), MAP, MACRO).cells + b * aggregate(Sam(MICRO, s2), MAP, MACRO).cells
    assert np.allclose(left, right, rtol=1e-9, atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (4, 4), elements=values))
def test_identity_mapping_composes(cells):
    once = aggregate(Sam(MICRO, cells), MAP, MACRO)
    twice = aggregate(once, AccountMapping.identity(MACRO), MACRO)
    assert once == twice
    composed = MAP.compose(AccountMapping.identity(MACRO))
    assert aggregate(Sam(MICRO, cells), composed, MACRO) == once


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (4, 4), elements=values), st.permutations(range(4)))
def test_micro_order_does_not_matter(cells, perm):
    sam = Sam(MICRO, cells)
    reordered = sam.reordered([MICRO.ids[k] for k in perm])
    assert np.allclose(aggregate(reordered, MAP, MACRO).cells, aggregate(sam, MAP, MACRO).cells,
                       rtol=1e-12, atol=1e-6)
