"""Row tables and summaries as CSV or schema-checked JSON.

CSV floats use 17 significant digits so every value round-trips exactly;
rows are sorted before writing, so output bytes never depend on evaluation
order.
"""

from __future__ import annotations

import csv
import io
import json
import math
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping

import jsonschema

__all__ = ["COLUMNS", "Row", "emit", "load_schema", "make_row", "sort_rows", "to_csv", "to_json"]

COLUMNS = (
    "experiment_id", "measure", "perturbation", "seed", "x0", "n",
    "re_a", "im_a", "re_b", "im_b", "mode",
    "value_re", "value_im", "target_re", "target_im", "abs_err", "status",
)

Row = dict


def make_row(
    experiment_id: str,
    measure: str,
    perturbation: str,
    seed: int | None,
    x0: float,
    n: int,
    a: complex,
    b: complex,
    mode: str,
    value: complex | None,
    target: complex | None,
    abs_err: float | None,
    status: str = "ok",
) -> Row:
    value = complex(math.nan, math.nan) if value is None else complex(value)
    target = complex(math.nan, math.nan) if target is None else complex(target)
    return {
        "experiment_id": experiment_id,
        "measure": measure,
        "perturbation": perturbation,
        "seed": seed,
        "x0": float(x0),
        "n": int(n),
        "re_a": complex(a).real,
        "im_a": complex(a).imag,
        "re_b": complex(b).real,
        "im_b": complex(b).imag,
        "mode": mode,
        "value_re": value.real,
        "value_im": value.imag,
        "target_re": target.real,
        "target_im": target.imag,
        "abs_err": math.nan if abs_err is None else float(abs_err),
        "status": status,
    }


def sort_rows(rows: Iterable[Row]) -> list[Row]:
    """Lexicographic on ``(x0, n, a, b, seed)``; a missing seed sorts first."""
    def key(r):
        seed = r["seed"]
        return (r["x0"], r["n"], r["re_a"], r["im_a"], r["re_b"], r["im_b"],
                (0, 0) if seed is None else (1, seed), r["mode"])
    return sorted(rows, key=key)


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def to_csv(rows: Iterable[Row]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in sort_rows(rows):
        writer.writerow([_fmt(r[c]) for c in COLUMNS])
    return buf.getvalue()


def _jsonable(v: Any) -> Any:
    # JSON has no NaN or infinity; both become null.
    if isinstance(v, float):
        return v if math.isfinite(v) else None
    if isinstance(v, complex):
        return {"re": _jsonable(v.real), "im": _jsonable(v.imag)}
    if isinstance(v, Mapping):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item") and callable(v.item):  # numpy scalar
        return _jsonable(v.item())
    return v


def load_schema() -> dict:
    text = resources.files("cdklab").joinpath("schema/run.schema.json").read_text()
    return json.loads(text)


def to_json(rows: Iterable[Row], summary: Mapping[str, Any]) -> str:
    doc = {"rows": [_jsonable(r) for r in sort_rows(rows)], "summary": _jsonable(summary)}
    jsonschema.validate(doc, load_schema())
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def emit(
    rows: Iterable[Row],
    summary: Mapping[str, Any],
    fmt: str = "csv",
    out: str | None = None,
) -> dict[str, str]:
    """Render rows and summary; write them when ``out`` is given.

    CSV goes to ``out`` with the summary beside it as ``<out>.summary.json``.
    JSON carries both in one document.  Returns the rendered texts keyed by
    ``"body"`` and (for CSV) ``"summary"``.

    Raises:
        OSError: the target path is not writable.
    """
    rows = list(rows)
    if fmt == "csv":
        texts = {
            "body": to_csv(rows),
            "summary": json.dumps(_jsonable(summary), indent=2) + "\n",
        }
        if out is not None:
            path = Path(out)
            path.write_text(texts["body"])
            path.with_name(path.name + ".summary.json").write_text(texts["summary"])
        return texts
    if fmt == "json":
        texts = {"body": to_json(rows, summary)}
        if out is not None:
            Path(out).write_text(texts["body"])
        return texts
    raise ValueError(f"unknown format {fmt!r}")
