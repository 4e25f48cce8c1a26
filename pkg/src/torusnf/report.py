"""Deterministic CSV and JSON writers, plus the verify-report schema."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .checks import CheckResult, jsonable

REPORT_FIELDS = ("tool", "version", "seed", "passed", "failed", "criteria")
CRITERION_FIELDS = ("number", "name", "passed", "tolerance", "details", "seconds")

CENSUS_FIELDS = ("R", "total", "nonres", "fraction", "vacuous_count", "seed", "admissible")
QUASIMODE_FIELDS = ("xi", "lambda_pred", "lambda_matched", "abs_error", "overlap", "residual",
                    "nonresonant", "ambiguous", "eig_index")
SPECTRUM_FIELDS = ("index", "eigenvalue", "cluster")


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return " ".join(_cell(x) for x in v)
    if v is None:
        return ""
    return str(v)


def csv_text(rows: Iterable[Mapping], fields: Sequence[str]) -> str:
    """CSV with a fixed column order and repr-exact floats; header only if no rows."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_cell(jsonable(r.get(f))) for f in fields])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def write_csv(path, rows: Iterable[Mapping], fields: Sequence[str]) -> Path:
    return write_text(path, csv_text(rows, fields))


def write_json(path, obj) -> Path:
    return write_text(path, json_text(obj))


def verify_report(results: Sequence[CheckResult], seed: int, version: str) -> dict:
    crit = [r.as_dict() for r in results]
    # timings vary run to run; keep them out of the byte-stable report
    for c in crit:
        c["seconds"] = None
    return {
        "tool": "torusnf",
        "version": version,
        "seed": seed,
        "passed": sum(1 for r in results if r.passed),
        "failed": sum(1 for r in results if not r.passed),
        "criteria": crit,
    }


def validate_report(doc) -> list[str]:
    """Problems with a verify report; empty when it matches the field list."""
    problems = []
    if not isinstance(doc, dict):
        return ["report is not an object"]
    for f in REPORT_FIELDS:
        if f not in doc:
            problems.append(f"missing field {f!r}")
    extra = set(doc) - set(REPORT_FIELDS)
    if extra:
        problems.append(f"unexpected fields {sorted(extra)}")
    crit = doc.get("criteria", [])
    if not isinstance(crit, list):
        return problems + ["criteria is not a list"]
    for i, c in enumerate(crit):
        if not isinstance(c, dict):
            problems.append(f"criteria[{i}] is not an object")
            continue
        missing = [f for f in CRITERION_FIELDS if f not in c]
        if missing:
            problems.append(f"criteria[{i}] missing {missing}")
        if not isinstance(c.get("passed"), bool):
            problems.append(f"criteria[{i}].passed is not a boolean")
        if not isinstance(c.get("details"), dict):
            problems.append(f"criteria[{i}].details is not an object")
    if isinstance(doc.get("passed"), int) and isinstance(doc.get("failed"), int):
        if doc["passed"] + doc["failed"] != len(crit):
            problems.append("passed + failed does not match the number of criteria")
    return problems


__all__ = [
    "REPORT_FIELDS",
    "CRITERION_FIELDS",
    "CENSUS_FIELDS",
    "QUASIMODE_FIELDS",
    "SPECTRUM_FIELDS",
    "csv_text",
    "json_text",
    "write_csv",
    "write_json",
    "verify_report",
    "validate_report",
]
