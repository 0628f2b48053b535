"""JSON and CSV serialization of condition reports.

A report flattens to rows.  ``cube`` rows carry the per-cube terms of the
last level; ``level`` rows carry one aggregate per nesting level, with the
level's domain in the cube columns.  The CSV starts with a ``# seed=`` line,
then the header, and writes floats with 17 significant digits so every row
parses back to the identical dict.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable, Sequence

from .conditions import ConditionParams, ConditionReport, Verdict
from .exponent import Cube

BASE_COLUMNS = ("condition", "cube_corner", "cube_side", "lam", "tau", "r", "gamma0", "term",
                "aggregate", "verdict")
EXTRA_COLUMNS = ("row", "level", "c", "p_inf", "alpha", "N_cutoff")
COLUMNS = BASE_COLUMNS + EXTRA_COLUMNS
_FLOAT_COLUMNS = {"cube_side", "lam", "tau", "r", "gamma0", "term", "aggregate", "c", "p_inf",
                  "alpha", "N_cutoff"}
SCHEMA_VERSION = 1


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def _row(rep: ConditionReport, kind: str, level: int, cube: Cube, term: float) -> dict:
    prm = rep.params
    return {
        "condition": rep.condition,
        "cube_corner": [float(c) for c in cube.corner],
        "cube_side": float(cube.side),
        "lam": float(prm.lam),
        "tau": float(prm.tau),
        "r": float(prm.r),
        "gamma0": float(prm.gamma0),
        "term": float(term),
        "aggregate": float(rep.aggregate),
        "verdict": Verdict(rep.verdict).value,
        "row": kind,
        "level": int(level),
        "c": float(prm.c),
        "p_inf": float(prm.p_inf),
        "alpha": float(prm.alpha),
        "N_cutoff": float(prm.N_cutoff),
    }


def report_rows(rep: ConditionReport, cubes: bool = True, levels: bool = True) -> list:
    """Flatten a report into row dicts (``cube`` rows first, then ``level`` rows)."""
    last = max(len(rep.levels), 1) - 1
    rows = []
    if cubes:
        rows += [_row(rep, "cube", last, q, t) for q, t in rep.per_cube]
    if levels:
        domains = rep.extra.get("level_domains") or []
        for l, agg in enumerate(rep.levels):
            if l < len(domains):
                rows.append(_row(rep, "level", l, domains[l], agg))
    return rows


def _jsonable(x):
    if isinstance(x, Cube):
        return x.to_dict()
    if isinstance(x, ConditionParams):
        return x.to_dict()
    if isinstance(x, Verdict):
        return x.value
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        return x.item()
    return x


def report_to_dict(rep: ConditionReport) -> dict:
    return {
        "condition": rep.condition,
        "params": rep.params.to_dict(),
        "aggregation": rep.aggregation,
        "aggregate": float(rep.aggregate),
        "verdict": Verdict(rep.verdict).value,
        "exit_code": rep.exit_code,
        "notes": rep.notes,
        "levels": [float(v) for v in rep.levels],
        "extra": _jsonable(rep.extra),
        "per_cube": [{"cube": q.to_dict(), "term": float(t)} for q, t in rep.per_cube],
    }


def report_from_dict(d: dict) -> ConditionReport:
    extra = dict(d.get("extra", {}))
    if "level_domains" in extra:
        extra["level_domains"] = [Cube.from_dict(c) for c in extra["level_domains"]]
    return ConditionReport(
        condition=d["condition"],
        params=ConditionParams(**d["params"]),
        per_cube=[(Cube.from_dict(e["cube"]), float(e["term"])) for e in d["per_cube"]],
        aggregate=float(d["aggregate"]),
        verdict=Verdict(d["verdict"]),
        notes=d.get("notes", ""),
        aggregation=d.get("aggregation", "sum"),
        levels=[float(v) for v in d.get("levels", [])],
        extra=extra,
    )


def document(reports: Sequence[ConditionReport], seed: int, command: str, rows: list | None = None,
             summary: list | None = None) -> dict:
    rows = rows if rows is not None else [r for rep in reports for r in report_rows(rep)]
    doc = {
        "schema": SCHEMA_VERSION,
        "seed": int(seed),
        "command": command,
        "reports": [report_to_dict(r) for r in reports],
        "rows": rows,
    }
    if summary is not None:
        doc["summary"] = _jsonable(summary)
    return doc


def dumps_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _cell(col: str, value) -> str:
    if col == "cube_corner":
        return ";".join(fmt_float(v) for v in value)
    if col in _FLOAT_COLUMNS:
        return fmt_float(value)
    return str(value)


def dumps_csv(rows: Iterable[dict], seed: int) -> str:
    buf = io.StringIO()
    buf.write(f"# seed={int(seed)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow([_cell(c, row[c]) for c in COLUMNS])
    return buf.getvalue()


def _parse_cell(col: str, text: str):
    if col == "cube_corner":
        return [float(v) for v in text.split(";")]
    if col in _FLOAT_COLUMNS:
        return float(text)
    if col == "level":
        return int(text)
    return text


def loads_csv(text: str) -> tuple:
    """``(seed, rows)`` from :func:`dumps_csv` output."""
    lines = text.splitlines()
    seed = None
    if lines and lines[0].startswith("# seed="):
        seed = int(lines[0].split("=", 1)[1])
        lines = lines[1:]
    reader = csv.reader(lines)
    header = next(reader)
    if tuple(header[:len(BASE_COLUMNS)]) != BASE_COLUMNS:
        raise ValueError("unexpected CSV header")
    rows = [{c: _parse_cell(c, v) for c, v in zip(header, rec)} for rec in reader]
    return seed, rows


def rows_equal(a: dict, b: dict) -> bool:
    """Exact comparison that treats NaN as equal to NaN."""
    if a.keys() != b.keys():
        return False
    for k in a:
        x, y = a[k], b[k]
        if isinstance(x, float) and isinstance(y, float) and math.isnan(x) and math.isnan(y):
            continue
        if x != y:
            return False
    return True
