import json

import pytest

from helpers import compare_sam
from samkit import cli, datasets
from samkit.ingest import parse_sam, write_registry, write_sam
from samkit.multiplier import Partition
from samkit.simulate import compare_programmes, ranking_csv


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_macro_exits_zero(capsys):
    code, out, _ = run(["validate", "--dataset", "macro"], capsys)
    assert code == 0
    report = json.loads(out)
    res = {r["account"]: r["residual"] for r in report["balance_residuals"]}
    for account in ("PROD", "FAC", "HH", "COM"):
        assert abs(res[account]) <= 0.01
    assert report["census"]["passed"]


def test_validate_strict_fails_on_residuals(capsys):
    code, _, err = run(["validate", "--dataset", "macro", "--strict"], capsys)
    assert code == 1
    assert "unbalanced" in err


def test_validate_file_with_inferred_registry(tmp_path, capsys):
    path = tmp_path / "macro.csv"
    path.write_text(write_sam(datasets.macro_sam()))
    code, out, _ = run(["validate", "--sam", str(path)], capsys)
    assert code == 0
    assert json.loads(out)["tolerance"] == 0.01


def test_positioned_parse_error_exit_one(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text(",PROD,FAC\nPROD,1,x\nFAC,2,3\n")
    code, _, err = run(["validate", "--sam", str(path)], capsys)
    assert code == 1
    assert "line 2, column 3" in err


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["nonsense"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        cli.main(["validate", "--tol-balance", "-1"])
    assert e.value.code == 2
    code, _, _ = run(["validate"], capsys)
    assert code == 2


def test_simulate_zero_injection(tmp_path, capsys):
    scenario = tmp_path / "zero.json"
    scenario.write_text(json.dumps({"name": "zero", "injections": {"PE_EDU": 0}}))
    code, _, _ = run(["simulate", "--dataset", "micro", "--scenario", str(scenario), "--out", str(tmp_path / "o")],
                     capsys)
    assert code == 0
    report = json.loads((tmp_path / "o" / "incidence.json").read_text())
    assert all(v == 0 for v in report["endogenous_delta"].values())
    rows = (tmp_path / "o" / "incidence.csv").read_text().splitlines()
    assert rows[0] == "group,base,delta,pct" and len(rows) == 10


def write_compare_inputs(tmp_path):
    sam = compare_sam()
    (tmp_path / "sam.csv").write_text(write_sam(sam))
    (tmp_path / "registry.csv").write_text(write_registry(sam.registry))
    part = Partition(["S1", "S2"], [], ["HH_RM", "HH_UC"])
    (tmp_path / "partition.json").write_text(json.dumps(part.to_dict()))
    return sam, part


def test_compare_hand_sam_matches_library(tmp_path, capsys):
    sam, part = write_compare_inputs(tmp_path)
    code, _, _ = run(["compare", "--sam", str(tmp_path / "sam.csv"), "--registry", str(tmp_path / "registry.csv"),
                      "--partition", str(tmp_path / "partition.json"), "--out", str(tmp_path / "o")], capsys)
    assert code == 0
    text = (tmp_path / "o" / "ranking.csv").read_text()
    assert text == ranking_csv(compare_programmes(sam, part))
    assert text.splitlines()[1].split(",")[1] == "PA"


def test_outputs_are_deterministic(tmp_path, capsys):
    for k in (1, 2):
        assert cli.main(["report", "--dataset", "micro", "--out", str(tmp_path / f"r{k}")]) == 0
    capsys.readouterr()
    names = sorted(p.name for p in (tmp_path / "r1").iterdir())
    assert names == ["chart_incidence_by_group.csv", "chart_leakage_shares.csv", "chart_programme_ranking.csv",
                     "report.json", "report.txt"]
    for name in names:
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()


def test_report_numbers_have_six_significant_digits(tmp_path, capsys):
    run(["multipliers", "--dataset", "macro", "--out", str(tmp_path)], capsys)
    data = json.loads((tmp_path / "multipliers.json").read_text())
    for v in data["leakages"].values():
        assert len(repr(v).replace("-", "").replace(".", "").lstrip("0")) <= 6 or "e" in repr(v)


def test_multipliers_csv(tmp_path, capsys):
    code, out, _ = run(["multipliers", "--dataset", "macro", "--format", "csv"], capsys)
    assert code == 0
    assert out.splitlines()[0] == ",PROD,FAC,HH,COM"


def test_balance_and_inputs_untouched(tmp_path, capsys):
    src = tmp_path / "macro.csv"
    src.write_text(write_sam(datasets.macro_sam()))
    before = src.read_bytes()
    code, _, _ = run(["balance", "--sam", str(src), "--max-iter", "5000", "--out", str(tmp_path / "b")], capsys)
    assert code == 0
    assert src.read_bytes() == before
    balanced = parse_sam(tmp_path / "b" / "balanced.csv", datasets.macro_registry(), "RM billion")
    assert max(abs(balanced.row_totals() - balanced.col_totals())) <= 1e-8
    diag = json.loads((tmp_path / "b" / "balance.json").read_text())
    assert diag["converged"] and "PROD" in diag["row_factors"]


def test_refuses_to_overwrite_input(tmp_path, capsys):
    src = tmp_path / "balanced.csv"
    src.write_text(write_sam(datasets.macro_sam()))
    code, _, _ = run(["balance", "--sam", str(src), "--format", "csv", "--out", str(tmp_path)], capsys)
    assert code == 2


def test_aggregate_with_control(tmp_path, capsys):
    control = tmp_path / "macro.csv"
    control.write_text(write_sam(datasets.macro_sam()))
    code, _, _ = run(["aggregate", "--dataset", "micro", "--to-unit", "RM billion", "--unit-factor", "0.001",
                      "--control", str(control), "--control-mode", "soft", "--tol-balance", "0.5",
                      "--out", str(tmp_path / "a")], capsys)
    assert code == 0
    agg = parse_sam(tmp_path / "a" / "aggregate.csv", datasets.macro_registry(), "RM billion")
    assert agg.row_totals()[agg.index("HH")] == pytest.approx(188.018, abs=0.01)
    report = json.loads((tmp_path / "a" / "control_totals.json").read_text())
    assert report["mode"] == "soft"


def test_aggregate_unit_mismatch_is_domain_error(capsys):
    code, _, err = run(["aggregate", "--dataset", "micro", "--to-unit", "RM billion"], capsys)
    assert code == 1
    assert "unit_factor" in err


def test_help_documents_defaults(capsys):
    with pytest.raises(SystemExit):
        cli.main(["balance", "--help"])
    text = capsys.readouterr().out
    assert "1e-8" in text and "1000" in text and "0.01" in text
