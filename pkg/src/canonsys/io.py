"""Deterministic CSV and JSON output.

Floats are written with ``repr`` (shortest round-trip decimal), complex values
as separate real/imaginary columns, so identical inputs give byte-identical
files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    if isinstance(x, (str, bool)):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def trajectory_header(samples: np.ndarray) -> list[str]:
    """Column names ``t, re_<idx>, im_<idx>`` in row-major entry order."""
    cols = ["t"]
    for idx in np.ndindex(samples.shape[1:]):
        tag = "".join(str(i) for i in idx)
        cols += [f"re_{tag}", f"im_{tag}"]
    return cols


def trajectory_rows(grid, samples):
    samples = np.asarray(samples)
    flat = samples.reshape(samples.shape[0], -1)
    for t, row in zip(grid, flat):
        out = [t]
        for v in row:
            out += [v.real, v.imag]
        yield out


def trajectory_csv(grid, samples) -> str:
    return csv_text(trajectory_header(np.asarray(samples)), trajectory_rows(grid, samples))


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _clean(obj.real), "im": _clean(obj.imag)}
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def document_text(doc: dict) -> str:
    """Self-describing JSON; NaN and infinities become ``null``."""
    return json.dumps(_clean(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def multiplier_entries(analysis, classification) -> list[dict]:
    out = []
    for r in classification.records:
        out.append(
            {
                "index": r.index,
                "re": r.multiplier.real,
                "im": r.multiplier.imag,
                "modulus": abs(r.multiplier),
                "class": r.cls,
                "exponent": {"re": r.exponent.real, "im": r.exponent.imag},
            }
        )
    return out


def analysis_document(analysis, classification, residuals: dict | None = None) -> dict:
    """Structured record of one monodromy analysis."""
    return {
        "period": analysis.period,
        "multipliers": multiplier_entries(analysis, classification),
        "witness": classification.witness,
        "verdict": classification.verdict,
        "tol_circle": classification.tol_circle,
        "residuals": analysis.residuals() if residuals is None else residuals,
    }
