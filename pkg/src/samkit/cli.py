"""Command-line interface: ``samkit <subcommand> [options]``.

Exit status is 0 on success, 1 on a validation or domain error and 2 on a
usage error. Reports are JSON with numbers rounded to 6 significant digits;
data CSVs carry full precision. Nothing is ever written to an input path.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import datasets
from .aggregation import AccountMapping, MappingError, UnitMismatchError, aggregate, control_total_check
from .balancing import RasConfig, RasError, balance_sam, ras_balance
from .core import AccountRegistry, Sam, default_tolerance
from .ingest import (
    SamFormatError,
    format_decimal,
    parse_mapping,
    parse_registry,
    parse_sam,
    parse_scenario,
    parse_targets,
    parse_weights,
    validate_file_set,
    write_sam,
)
from .metrics import CONTEXT_GINI, MetricsError
from .multiplier import MultiplierError, Partition, analyse, default_partition
from .simulate import Scenario, ScenarioError, compare_programmes, ranking_csv, simulate

DOMAIN_ERRORS = (
    SamFormatError,
    MappingError,
    UnitMismatchError,
    RasError,
    MultiplierError,
    ScenarioError,
    MetricsError,
    KeyError,
    ValueError,
    OSError,
)

DATASETS = ("macro", "micro", "micro-partial")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def round6(obj):
    """Round every float in a nested structure to 6 significant digits."""
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return str(obj)
        return float(f"{obj:.6g}")
    if isinstance(obj, dict):
        return {k: round6(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round6(v) for v in obj]
    if isinstance(obj, np.generic):
        return round6(obj.item())
    return obj


def report_json(obj) -> str:
    return json.dumps(round6(obj), indent=2) + "\n"


def _emit(args, files: dict[str, str]) -> None:
    """Write artifacts to ``--out`` (a directory) or print them to stdout."""
    if args.out is None:
        for name, text in files.items():
            if len(files) > 1:
                sys.stdout.write(f"# {name}\n")
            sys.stdout.write(text)
        return
    out = Path(args.out)
    inputs = {Path(p).resolve() for p in _input_paths(args)}
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        path = out / name
        if path.resolve() in inputs:
            raise UsageError(f"refusing to overwrite input file {path}")
        path.write_text(text, encoding="utf-8")


def _input_paths(args) -> list[str]:
    names = ("sam", "registry", "mapping", "scenario", "weights", "partition", "targets", "control", "macro_registry")
    return [getattr(args, n) for n in names if getattr(args, n, None)]


# ---------------------------------------------------------------------------
# input helpers
# ---------------------------------------------------------------------------

def _header_ids(path: str) -> list[str]:
    with open(path, encoding="utf-8") as f:
        first = f.readline()
    import csv

    ids = [c.strip() for c in next(csv.reader([first]))[1:]]
    return [i for i in ids if i.upper() != "TOTAL"]


def _registry(args) -> AccountRegistry:
    if args.registry:
        return parse_registry(Path(args.registry))
    ids = set(_header_ids(args.sam))
    for reg in (datasets.micro_registry(), datasets.macro_registry()):
        if ids <= set(reg.ids):
            return reg
    raise UsageError("cannot infer the registry from the SAM's account ids; pass --registry")


def _load_sam(args) -> Sam:
    if getattr(args, "dataset", None):
        if args.sam:
            raise UsageError("give either --sam or --dataset, not both")
        return {
            "macro": datasets.macro_sam,
            "micro": datasets.micro_completed,
            "micro-partial": datasets.micro_partial,
        }[args.dataset]()
    if not args.sam:
        raise UsageError("--sam (or --dataset) is required")
    reg = _registry(args)
    unit = args.unit
    if unit is None:
        unit = datasets.MACRO_UNIT if set(reg.ids) == set(datasets.macro_registry().ids) else datasets.MICRO_UNIT
    return parse_sam(Path(args.sam), reg, unit)


def _partition(args, sam: Sam) -> Partition:
    if args.partition:
        data = json.loads(Path(args.partition).read_text(encoding="utf-8"))
        p = Partition.from_dict(data)
        p.check(sam.registry)
        return p
    return default_partition(sam.registry, companies_endogenous=not args.companies_exogenous)


def _weights(args, households: list[str]):
    if not args.weights:
        return None
    w = parse_weights(Path(args.weights))
    missing = [h for h in households if h not in w]
    if missing:
        raise ScenarioError(f"weights file has no population for {missing}")
    return [w[h] for h in households]


def _tag_filter(text: str) -> dict[str, str]:
    out = {}
    for part in text.split(","):
        if "=" not in part:
            raise argparse.ArgumentTypeError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    sam = _load_sam(args)
    reg = parse_registry(Path(args.registry)) if args.registry else sam.registry
    report = validate_file_set(reg, sam, tol=args.tol_balance, strict_balance=args.strict)
    _emit(args, {"validation.json": report_json(report.to_dict())})
    for e in report.errors:
        print(f"error: {e}", file=sys.stderr)
    return 0 if report.ok else 1


def cmd_aggregate(args) -> int:
    micro = _load_sam(args)
    mapping = AccountMapping.from_dict(parse_mapping(Path(args.mapping))) if args.mapping else datasets.mapping()
    macro_reg = parse_registry(Path(args.macro_registry)) if args.macro_registry else datasets.macro_registry()
    macro = aggregate(micro, mapping, macro_reg, unit=args.to_unit, unit_factor=args.unit_factor)
    files = {"aggregate.csv": write_sam(macro)}
    status = 0
    if args.control:
        control = parse_sam(Path(args.control), macro_reg, args.to_unit or micro.unit)
        tol = args.tol_balance if args.tol_balance is not None else default_tolerance(control.unit)
        found = control_total_check(micro, control, mapping, tol, args.unit_factor, mode=args.control_mode)
        files["control_totals.json"] = report_json({"tolerance": tol, "mode": args.control_mode,
                                                    "discrepancies": [d._asdict() for d in found]})
        status = 1 if any(d.severity == "error" for d in found) else 0
    _emit(args, files)
    return status


def cmd_balance(args) -> int:
    sam = _load_sam(args)
    cfg = RasConfig(args.max_iter, args.ras_tol)
    if args.targets:
        ids, rows, cols = parse_targets(Path(args.targets))
        if sorted(ids) != sorted(sam.ids):
            raise SamFormatError("targets file must list every account of the SAM once")
        order = [ids.index(i) for i in sam.ids]
        negative = [(sam.ids[i], sam.ids[j]) for i, j in zip(*np.nonzero(sam.cells < 0))]
        cfg = RasConfig(cfg.max_iter, cfg.tolerance, negative)
        result = ras_balance(sam, rows[order], cols[order], cfg)
    else:
        result = balance_sam(sam, config=cfg)
    diag = result.to_dict()
    diag["row_factors"] = dict(zip(sam.ids, diag["row_factors"]))
    diag["col_factors"] = dict(zip(sam.ids, diag["col_factors"]))
    files = {"balanced.csv": write_sam(result.sam), "balance.json": report_json(diag)}
    if args.format == "csv":
        files = {"balanced.csv": files["balanced.csv"]}
    _emit(args, files)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0 if result.converged else 1


def _matrix_csv(labels, m) -> str:
    lines = [",".join(["", *labels])]
    for a, row in zip(labels, m):
        lines.append(",".join([a, *(format_decimal(v) for v in row)]))
    return "\n".join(lines) + "\n"


def cmd_multipliers(args) -> int:
    sam = _load_sam(args)
    part = _partition(args, sam)
    res = analyse(sam, part, balance_tol=args.tol_balance)
    if args.format == "csv":
        files = {"multipliers.csv": _matrix_csv(res.accounts, res.multipliers)}
    else:
        files = {"multipliers.json": report_json(res.to_dict())}
    _emit(args, files)
    return 0


def cmd_simulate(args) -> int:
    sam = _load_sam(args)
    part = _partition(args, sam)
    scenario = Scenario.from_dict(parse_scenario(Path(args.scenario)))
    res = analyse(sam, part, balance_tol=args.tol_balance, decomposition=False)
    hh = [a for a in part.endogenous if sam.registry.get(a).category.name == "Household"]
    rep = simulate(sam, part, scenario, weights=_weights(args, hh), result=res)
    files = {"incidence.csv": rep.to_csv()}
    if args.format == "json":
        files = {"incidence.json": report_json(rep.to_dict()), **files}
    _emit(args, files)
    return 0


def _compare(args, sam):
    part = _partition(args, sam)
    res = analyse(sam, part, balance_tol=args.tol_balance, decomposition=False)
    return compare_programmes(sam, part, amount=args.amount, poor=args.poor, result=res), part, res


def cmd_compare(args) -> int:
    sam = _load_sam(args)
    rows, _, _ = _compare(args, sam)
    if args.format == "json":
        files = {"ranking.json": report_json({"amount": args.amount, "poor_filter": args.poor,
                                              "ranking": [r.__dict__ for r in rows]})}
    else:
        files = {"ranking.csv": ranking_csv(rows)}
    _emit(args, files)
    return 0


def _series_csv(header, rows) -> str:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(v if isinstance(v, str) else format_decimal(v) for v in r))
    return "\n".join(lines) + "\n"


def cmd_report(args) -> int:
    sam = _load_sam(args)
    rows, part, res = _compare(args, sam)
    hh = [a for a in part.endogenous if sam.registry.get(a).category.name == "Household"]
    weights = _weights(args, hh)
    if args.scenario:
        scenario = Scenario.from_dict(parse_scenario(Path(args.scenario)))
    else:
        best = rows[0].programme if rows else None
        scenario = Scenario(f"{args.amount:g} to {best}", {best: args.amount} if best else {})
    rep = simulate(sam, part, scenario, weights=weights, result=res)
    validation = validate_file_set(sam.registry, sam, tol=args.tol_balance)

    summary = {
        "accounts": len(sam),
        "unit": sam.unit,
        "validation": {"errors": validation.errors, "warnings": validation.warnings},
        "multipliers": {
            "spectral_radius": res.spectral_radius,
            "condition_number": res.condition,
            "column_multipliers": dict(zip(res.accounts, res.multipliers.sum(0).tolist())),
        },
        "incidence": rep.to_dict(),
        "programme_ranking": [r.__dict__ for r in rows],
        "context_gini": {str(k): v for k, v in CONTEXT_GINI.items()},
        "context_note": "survey-based national Gini figures, not computed from the SAM",
    }
    text = [f"SAM: {len(sam)} accounts, {sam.unit}",
            f"validation: {len(validation.errors)} errors, {len(validation.warnings)} warnings",
            f"spectral radius {res.spectral_radius:.6g}, condition number {res.condition:.6g}",
            f"scenario {rep.scenario!r}: household income change {rep.diagnostics['household_income_change']:.6g}",
            "programme ranking by poor-group gain:"]
    text += [f"  {r.rank:2d}. {r.programme:<8} poor gain {r.poor_gain:.6g}  all households {r.household_gain:.6g}"
             for r in rows]
    files = {
        "report.json": report_json(summary),
        "report.txt": "\n".join(text) + "\n",
        "chart_incidence_by_group.csv": rep.to_csv(),
        "chart_programme_ranking.csv": ranking_csv(rows),
        "chart_leakage_shares.csv": _series_csv(["account", "leakage"],
                                                 [(a, float(v)) for a, v in zip(res.accounts, res.leakages)]),
    }
    _emit(args, files)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="samkit", description="Social accounting matrix toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt=("json", "csv")):
        p.add_argument("--sam", help="SAM table CSV")
        p.add_argument("--dataset", choices=DATASETS,
                       help="use a shipped table instead of --sam (micro = completed 51-account table)")
        p.add_argument("--registry", help="registry CSV (default: shipped registry matching the SAM ids)")
        p.add_argument("--unit", help="unit of --sam (default: RM billion for the 13-account layout, else RM million)")
        p.add_argument("--tol-balance", type=_positive, default=None,
                       help="absolute balance tolerance in table units (default: 0.01 for RM billion, 1.0 for RM million)")
        p.add_argument("--out", help="output directory (default: print to stdout)")
        p.add_argument("--format", choices=fmt, default=fmt[0])

    def model(p):
        p.add_argument("--partition", help="partition JSON with production, factors, institutions lists")
        p.add_argument("--companies-exogenous", action="store_true",
                       help="leave companies out of the default endogenous block")

    p = sub.add_parser("validate", help="census, balance, structural and sign checks")
    common(p, ("json",))
    p.add_argument("--strict", action="store_true", help="treat balance residuals as errors")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("aggregate", help="aggregate a micro SAM through an account mapping")
    common(p, ("csv",))
    p.add_argument("--mapping", help="micro_id,macro_id CSV (default: shipped 51 -> 13 mapping)")
    p.add_argument("--macro-registry", help="macro registry CSV (default: shipped 13-account registry)")
    p.add_argument("--to-unit", help="unit of the aggregate; requires --unit-factor when it differs")
    p.add_argument("--unit-factor", type=_positive, help="micro -> macro unit factor, e.g. 0.001")
    p.add_argument("--control", help="macro SAM CSV of control totals to check against")
    p.add_argument("--control-mode", choices=("hard", "soft"), default="hard")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("balance", help="RAS-balance a SAM")
    common(p)
    p.add_argument("--targets", help="account_id,row_target,col_target CSV (default: mean of row and column sums)")
    p.add_argument("--max-iter", type=int, default=1000, help="maximum RAS iterations (default 1000)")
    p.add_argument("--ras-tol", type=_positive, default=1e-8, help="RAS margin tolerance (default 1e-8)")
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("multipliers", help="propensities, multiplier matrix and decomposition")
    common(p)
    model(p)
    p.set_defaults(func=cmd_multipliers)

    p = sub.add_parser("simulate", help="household incidence of a scenario")
    common(p)
    model(p)
    p.add_argument("--scenario", required=True, help="scenario JSON")
    p.add_argument("--weights", help="account_id,population CSV (default: equal weights)")
    p.set_defaults(func=cmd_simulate)

    for name, func, fmt in (("compare", cmd_compare, ("csv", "json")), ("report", cmd_report, ("json",))):
        p = sub.add_parser(name, help="rank programmes by poor-group gain" if name == "compare"
                           else "summary report plus chart data series")
        common(p, fmt)
        model(p)
        p.add_argument("--amount", type=_positive, default=1.0, help="injection per programme (default 1)")
        p.add_argument("--poor", type=_tag_filter, default={"region": "rural"},
                       help="tag filter for poor groups (default region=rural)")
        if name == "report":
            p.add_argument("--scenario", help="scenario JSON (default: --amount to the top-ranked programme)")
            p.add_argument("--weights", help="account_id,population CSV")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"samkit: error: {e}", file=sys.stderr)
        return 2
    except DOMAIN_ERRORS as e:
        print(f"samkit: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
