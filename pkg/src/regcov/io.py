"""Text file formats used by the command-line tool.

Matrix and sample files are comma-separated decimals preceded by a header
line ``# field=real|complex dim=d``. Complex rows store ``2d`` numbers as
alternating real and imaginary parts. Numbers are written with 17
significant digits, which round-trips every double exactly.

Scenario files are JSON objects whose keys mirror :class:`Scenario`.
Threshold files are small JSON records tying a calibrated threshold to
the digest of the scenario it was computed for.
"""

import json
import math
from pathlib import Path
import re

import numpy as np

from .detect_sim import Scenario
from .exceptions import ValidationError

_HEADER = re.compile(r"^#\s*field=(real|complex)\s+dim=(\d+)\s*$")


def format_number(x):
    return "%.17g" % x


def _format_row(row):
    if np.iscomplexobj(row):
        parts = []
        for v in row:
            parts.append(format_number(v.real))
            parts.append(format_number(v.imag))
        return ",".join(parts)
    return ",".join(format_number(v) for v in row)


def emit_rows(A):
    """Serialize a 2-D array (matrix or samples) with its header."""
    A = np.atleast_2d(np.asarray(A))
    field = "complex" if np.iscomplexobj(A) else "real"
    lines = [f"# field={field} dim={A.shape[1]}"]
    lines.extend(_format_row(row) for row in A)
    return "\n".join(lines) + "\n"


def parse_rows(text, source="<input>"):
    """Parse header plus rows; returns an ``(n, d)`` array.

    Errors name the source and the offending line number.
    """
    lines = text.splitlines()
    if not lines:
        raise ValidationError(f"{source}: empty file")
    m = _HEADER.match(lines[0].strip())
    if m is None:
        raise ValidationError(f"{source}:1: expected header '# field=real|complex dim=d'")
    field, d = m.group(1), int(m.group(2))
    if d < 1:
        raise ValidationError(f"{source}:1: dim must be positive")
    width = 2 * d if field == "complex" else d
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != width:
            raise ValidationError(f"{source}:{lineno}: expected {width} values, found {len(cells)}")
        try:
            vals = [float(c) for c in cells]
        except ValueError:
            raise ValidationError(f"{source}:{lineno}: non-numeric value") from None
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError(f"{source}:{lineno}: non-finite value")
        rows.append(vals)
    if not rows:
        raise ValidationError(f"{source}: no data rows")
    A = np.array(rows, dtype=np.float64)
    if field == "complex":
        A = A[:, 0::2] + 1j * A[:, 1::2]
    return A


def read_matrix(path):
    path = Path(path)
    A = parse_rows(_read_text(path), str(path))
    if A.shape[0] != A.shape[1]:
        raise ValidationError(f"{path}: expected {A.shape[1]} rows for a square matrix, found {A.shape[0]}")
    return A


def read_samples(path):
    path = Path(path)
    return parse_rows(_read_text(path), str(path))


def write_rows(path, A):
    Path(path).write_text(emit_rows(A))


def _read_text(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror or exc}") from None


# --------------------------------------------------------------------------
# scenario files
# --------------------------------------------------------------------------

_INT = "int"
_NUM = "number"
_STR = "string"

_SCHEMA = {
    "d": _INT,
    "n_train": _INT,
    "alpha": _NUM,
    "p": _NUM,
    "estimator": _STR,
    "detector": _STR,
    "steering": "steering",
    "sinr_grid_db": "grid",
    "pfa": _NUM,
    "n_trials_pfa": _INT,
    "n_trials_pd": _INT,
    "burn_in": _INT,
    "n_states": _INT,
    "contamination": "contamination",
    "master_seed": _INT,
}


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return (isinstance(v, (int, float)) and not isinstance(v, bool)) and math.isfinite(v)


def _check_value(key, kind, v):
    if kind == _INT and not _is_int(v):
        raise ValidationError(f"scenario key {key!r} must be an integer")
    if kind == _NUM and not _is_num(v):
        raise ValidationError(f"scenario key {key!r} must be a finite number")
    if kind == _STR and not isinstance(v, str):
        raise ValidationError(f"scenario key {key!r} must be a string")
    if kind == "grid":
        if not isinstance(v, list) or not v or not all(_is_num(x) for x in v):
            raise ValidationError("scenario key 'sinr_grid_db' must be a non-empty list of numbers")
        return tuple(float(x) for x in v)
    if kind == "steering":
        if v is None:
            return None
        if not isinstance(v, list) or not v:
            raise ValidationError("scenario key 'steering' must be a list")
        out = []
        for x in v:
            if _is_num(x):
                out.append(complex(x))
            elif isinstance(x, list) and len(x) == 2 and all(_is_num(y) for y in x):
                out.append(complex(x[0], x[1]))
            else:
                raise ValidationError("steering entries must be numbers or [re, im] pairs")
        return tuple(out)
    if kind == "contamination":
        if v is None:
            return None
        if isinstance(v, dict):
            if set(v) != {"rate", "scale"}:
                raise ValidationError("contamination object needs exactly the keys 'rate' and 'scale'")
            v = [v["rate"], v["scale"]]
        if not isinstance(v, list) or len(v) != 2 or not all(_is_num(x) for x in v):
            raise ValidationError("contamination must be [rate, scale] or {'rate': r, 'scale': s}")
        return (float(v[0]), float(v[1]))
    return v


def scenario_from_dict(data):
    """Build a validated :class:`Scenario`; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ValidationError("scenario must be a JSON object")
    unknown = sorted(set(data) - set(_SCHEMA))
    if unknown:
        raise ValidationError(f"unknown scenario keys: {', '.join(unknown)}")
    kwargs = {k: _check_value(k, _SCHEMA[k], v) for k, v in data.items()}
    return Scenario(**kwargs)


def read_scenario(path):
    text = _read_text(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    return scenario_from_dict(data)


def write_scenario(path, scenario):
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# threshold records and reports
# --------------------------------------------------------------------------


def write_threshold(path, threshold, scenario, trials, seed):
    record = {
        "threshold": threshold,
        "scenario_hash": scenario.digest(),
        "pfa": scenario.pfa,
        "trials": trials,
        "seed": seed,
    }
    Path(path).write_text(json.dumps(record, indent=2) + "\n")


def read_threshold(path):
    text = _read_text(path)
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(record, dict) or "threshold" not in record or "scenario_hash" not in record:
        raise ValidationError(f"{path}: threshold file needs 'threshold' and 'scenario_hash'")
    if not _is_num(record["threshold"]) or record["threshold"] <= 0:
        raise ValidationError(f"{path}: threshold must be a positive number")
    return record


def write_report(path, result):
    report = {
        "iterations": result.iterations,
        "final_residual": result.final_residual,
        "converged": result.converged,
        "kept_indices": None if result.kept_indices is None else [int(i) for i in result.kept_indices],
    }
    Path(path).write_text(json.dumps(report, indent=2) + "\n")
