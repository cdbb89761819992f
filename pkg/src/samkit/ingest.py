"""Reading and writing SAM tables, registries, mappings, scenarios and weights.

All tables are UTF-8 CSV. Cell values are period-decimal strings; a blank
cell means zero. Parsing never consults the process locale.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .core import (
    DEFAULT_MASK,
    MACRO_CENSUS,
    MICRO_CENSUS,
    Account,
    AccountCategory,
    AccountRegistry,
    Sam,
    StructuralMask,
    balance_residuals,
    check_census,
    default_tolerance,
    sign_violations,
    structural_violations,
)

_DECIMAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


class SamFormatError(ValueError):
    """Malformed input file; ``line`` and ``column`` are 1-based when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "")
            where += ": "
        super().__init__(where + message)


def parse_decimal(text: str, line: int | None = None, column: int | None = None) -> float:
    s = text.strip()
    if s == "":
        return 0.0
    if not _DECIMAL.match(s):
        raise SamFormatError(f"cannot parse cell {text!r} as a decimal", line, column)
    value = float(s)
    if not math.isfinite(value):
        raise SamFormatError(f"cell {text!r} is not finite", line, column)
    return value


def format_decimal(value: float) -> str:
    """Shortest string that reparses to exactly ``value``."""
    if value == 0:
        return "0"
    return repr(float(value))


def _read_text(source) -> str:
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8")
    return source


def _rows(text: str) -> list[list[str]]:
    return list(csv.reader(io.StringIO(text)))


def _write_rows(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _is_total(label: str) -> bool:
    return label.strip().upper() == "TOTAL"


# ---------------------------------------------------------------------------
# SAM tables
# ---------------------------------------------------------------------------

def parse_sam(table, registry: AccountRegistry, unit: str = "RM million") -> Sam:
    """Parse a SAM table (text or Path) into a ``Sam`` in registry order.

    The result holds the registry accounts named in the file; the file may
    list them in any order.
    """
    rows = [r for r in _rows(_read_text(table)) if any(c.strip() for c in r) or r == [""]]
    if not rows:
        raise SamFormatError("empty table")
    header = [c.strip() for c in rows[0]]
    col_ids = header[1:]
    if col_ids and _is_total(col_ids[-1]):
        col_ids = col_ids[:-1]
    _check_ids(col_ids, registry, line=1, offset=2)

    body = [(k + 2, r) for k, r in enumerate(rows[1:])]
    if body and _is_total(body[-1][1][0]):
        body = body[:-1]
    row_ids = [r[0].strip() for _, r in body]
    for (line, _), rid in zip(body, row_ids):
        if rid not in registry:
            raise SamFormatError(f"unknown account id {rid!r}", line, 1)
    if len(set(row_ids)) != len(row_ids):
        dup = next(i for i in row_ids if row_ids.count(i) > 1)
        raise SamFormatError(f"duplicate row id {dup!r}")
    if row_ids != col_ids:
        if set(row_ids) != set(col_ids):
            raise SamFormatError(
                f"row ids {sorted(set(row_ids) ^ set(col_ids))} do not match column ids"
            )
        raise SamFormatError("row ids are not in the same order as column ids")

    n = len(col_ids)
    cells = np.zeros((n, n))
    for k, (line, r) in enumerate(body):
        values = r[1:]
        if len(values) == n + 1 and len(header) == n + 2:
            values = values[:-1]
        if len(values) != n:
            raise SamFormatError(f"expected {n} cells, found {len(values)}", line)
        for j, text in enumerate(values):
            cells[k, j] = parse_decimal(text, line, j + 2)

    reg = registry.subset(col_ids)
    order = [col_ids.index(i) for i in reg.ids]
    return Sam(reg, cells[np.ix_(order, order)], unit)


def _check_ids(ids, registry, line, offset):
    seen = set()
    for k, i in enumerate(ids):
        if i in seen:
            raise SamFormatError(f"duplicate account id {i!r}", line, k + offset)
        if i not in registry:
            raise SamFormatError(f"unknown account id {i!r}", line, k + offset)
        seen.add(i)


def write_sam(sam: Sam) -> str:
    """Serialize with a trailing TOTAL column (row sums) and TOTAL row (column sums)."""
    ids = sam.ids
    rows = [["", *ids, "TOTAL"]]
    if not ids:
        return _write_rows(rows)
    rt, ct = sam.row_totals(), sam.col_totals()
    for k, i in enumerate(ids):
        rows.append([i, *(format_decimal(v) for v in sam.cells[k]), format_decimal(rt[k])])
    rows.append(["TOTAL", *(format_decimal(v) for v in ct), format_decimal(sam.grand_total())])
    return _write_rows(rows)


def cell_presence(table, registry: AccountRegistry) -> np.ndarray:
    """Boolean matrix, in registry order, of the cells written in the file.

    ``parse_sam`` reads a blank cell as zero; this tells blanks apart from
    explicit zeros, for partial tables where a blank means "not known".
    """
    text = _read_text(table)
    sam = parse_sam(text, registry)
    rows = _rows(text)
    header = [c.strip() for c in rows[0][1:]]
    n = len(sam)
    pos = {i: k for k, i in enumerate(header)}
    present = np.zeros((n, n), dtype=bool)
    order = [pos[i] for i in sam.ids]
    for r in rows[1:]:
        if not r or r[0].strip() not in sam.registry:
            continue
        i = sam.index(r[0].strip())
        vals = r[1:]
        present[i] = [k < len(vals) and vals[k].strip() != "" for k in order]
    return present


def read_sam(path, registry: AccountRegistry, unit: str = "RM million") -> Sam:
    return parse_sam(Path(path), registry, unit)


# ---------------------------------------------------------------------------
# Registries and mappings
# ---------------------------------------------------------------------------

def parse_registry(text) -> AccountRegistry:
    """Rows of ``id,name,category,tags`` with tags as ``key=value;key=value``."""
    rows = _rows(_read_text(text))
    if rows and [c.strip() for c in rows[0][:3]] == ["id", "name", "category"]:
        rows = rows[1:]
    accounts = []
    for line, r in enumerate(rows, start=2):
        if not any(c.strip() for c in r):
            continue
        if len(r) < 3:
            raise SamFormatError("registry rows need id, name and category", line)
        try:
            cat = AccountCategory.from_token(r[2].strip())
        except ValueError as e:
            raise SamFormatError(str(e), line, 3) from None
        tags = []
        if len(r) > 3 and r[3].strip():
            for kv in r[3].split(";"):
                if "=" not in kv:
                    raise SamFormatError(f"tag {kv!r} is not key=value", line, 4)
                key, value = kv.split("=", 1)
                tags.append((key.strip(), value.strip()))
        try:
            accounts.append(Account(r[0].strip(), r[1].strip(), cat, tuple(tags)))
        except ValueError as e:
            raise SamFormatError(str(e), line, 1) from None
    try:
        return AccountRegistry(accounts)
    except ValueError as e:
        raise SamFormatError(str(e)) from None


def write_registry(registry: AccountRegistry) -> str:
    rows = [["id", "name", "category", "tags"]]
    for a in registry:
        rows.append([a.id, a.name, a.category.name, ";".join(f"{k}={v}" for k, v in a.tags)])
    return _write_rows(rows)


def parse_mapping(text) -> dict[str, str]:
    """``micro_id,macro_id`` per line; an optional header row is skipped."""
    out: dict[str, str] = {}
    for line, r in enumerate(_rows(_read_text(text)), start=1):
        if not any(c.strip() for c in r):
            continue
        if line == 1 and [c.strip() for c in r] == ["micro_id", "macro_id"]:
            continue
        if len(r) != 2:
            raise SamFormatError("mapping rows need exactly micro_id,macro_id", line)
        micro, macro = r[0].strip(), r[1].strip()
        if micro in out:
            raise SamFormatError(f"micro account {micro!r} mapped twice", line)
        out[micro] = macro
    return out


def write_mapping(mapping: Mapping[str, str]) -> str:
    return _write_rows([["micro_id", "macro_id"], *([k, v] for k, v in mapping.items())])


def parse_weights(text) -> dict[str, float]:
    """Population weights: ``account_id,population`` per line."""
    out: dict[str, float] = {}
    for line, r in enumerate(_rows(_read_text(text)), start=1):
        if not any(c.strip() for c in r):
            continue
        if line == 1 and r[0].strip() in ("account_id", "id"):
            continue
        if len(r) != 2:
            raise SamFormatError("weight rows need account_id,population", line)
        out[r[0].strip()] = parse_decimal(r[1], line, 2)
    return out


def parse_targets(text) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Balancing targets: ``account_id,row_target,col_target`` per line."""
    ids, rows, cols = [], [], []
    for line, r in enumerate(_rows(_read_text(text)), start=1):
        if not any(c.strip() for c in r):
            continue
        if line == 1 and r[0].strip() in ("account_id", "id"):
            continue
        if len(r) != 3:
            raise SamFormatError("target rows need account_id,row_target,col_target", line)
        ids.append(r[0].strip())
        rows.append(parse_decimal(r[1], line, 2))
        cols.append(parse_decimal(r[2], line, 3))
    return ids, np.array(rows), np.array(cols)


def parse_scenario(text) -> dict:
    """Scenario JSON with ``name``, ``injections`` and optional ``shares``."""
    try:
        data = json.loads(_read_text(text))
    except json.JSONDecodeError as e:
        raise SamFormatError(f"scenario is not valid JSON: {e.msg}", e.lineno, e.colno) from None
    if not isinstance(data, dict) or "injections" not in data:
        raise SamFormatError("scenario needs an 'injections' object")
    return data


# ---------------------------------------------------------------------------
# Validation report
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    census: dict | None
    balance_residuals: list[dict]
    structural_violations: list[dict]
    sign_violations: list[dict]
    tolerance: float
    strict_balance: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def balance_violations(self) -> list[dict]:
        return [r for r in self.balance_residuals if not r["within_tolerance"]]

    @property
    def errors(self) -> list[str]:
        errs = [f"negative cell ({v['row']}, {v['col']}) = {v['value']}" for v in self.sign_violations]
        if self.census is not None and not self.census["passed"]:
            errs.append("account census does not match the canonical layout")
        if self.strict_balance:
            errs += [f"account {r['account']} unbalanced by {r['residual']}" for r in self.balance_violations]
        return errs

    @property
    def warnings(self) -> list[str]:
        warns = [f"flow ({v['row']}, {v['col']}) outside structural mask" for v in self.structural_violations]
        if not self.strict_balance:
            warns += [f"account {r['account']} unbalanced by {r['residual']}" for r in self.balance_violations]
        return warns

    @property
    def findings(self) -> list[str]:
        return self.errors + self.warnings

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "census": self.census,
            "balance_residuals": self.balance_residuals,
            "structural_violations": self.structural_violations,
            "sign_violations": self.sign_violations,
            "tolerance": self.tolerance,
            "errors": self.errors,
            "warnings": self.warnings,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def validate_file_set(
    registry: AccountRegistry,
    sam: Sam,
    mask: StructuralMask = DEFAULT_MASK,
    tol: float | None = None,
    expected_census: Mapping[AccountCategory, int] | None = None,
    strict_balance: bool = False,
) -> ValidationReport:
    """Run every sam-core check and gather the findings into one report.

    The census is checked against ``expected_census`` when given, otherwise
    against the canonical 51- or 13-account layout when the registry has
    that size; for other registries it is skipped.
    """
    tol = default_tolerance(sam.unit) if tol is None else tol
    notes = []
    census = None
    if expected_census is not None:
        census = check_census(registry, expected_census)
    elif len(registry) == sum(MICRO_CENSUS.values()):
        census = check_census(registry, MICRO_CENSUS)
    elif len(registry) == sum(MACRO_CENSUS.values()):
        census = check_census(registry, MACRO_CENSUS, require_household_tags=False)
    else:
        notes.append("census skipped: registry is neither the 51- nor the 13-account layout")
    if sam.registry != registry:
        notes.append("SAM covers a subset or reordering of the registry")

    residuals = [
        {
            "account": r.account,
            "row_total": r.row_total,
            "col_total": r.col_total,
            "residual": r.residual,
            "within_tolerance": abs(r.residual) <= tol,
        }
        for r in balance_residuals(sam)
    ]
    structural = [v._asdict() for v in structural_violations(sam, mask)]
    signs = [v._asdict() for v in sign_violations(sam)]
    return ValidationReport(census, residuals, structural, signs, tol, strict_balance, notes)
