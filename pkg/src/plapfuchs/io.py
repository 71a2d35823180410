"""Deterministic CSV/JSON writers."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    """17 significant digits: lossless for doubles."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])
    return path


def read_csv(path):
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def jsonable(obj):
    """Plain JSON types; non-finite floats become the strings "inf", "-inf", "nan"."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def from_json_value(x):
    if x == "inf":
        return math.inf
    if x == "-inf":
        return -math.inf
    if x == "nan":
        return math.nan
    return x


# ---------------------------------------------------------------------------
# potential text format
#
#   hardy = 0.0185185
#   angular = 1 + 0.5*cos(2*theta)
#
#   [shell]
#   r_lo = 1
#   r_hi = 2
#   amplitude = 1
#   power = -3
#
#   [sampled]
#   r = 1 2 4 8
#   v = 0.5 0.25 0.125 0.0625
#
# One key per line; '#' starts a comment; each [shell] block adds a shell.
# ---------------------------------------------------------------------------

_SHELL_KEYS = ("r_lo", "r_hi", "amplitude", "power")


def potential_to_text(V) -> str:
    lines = [f"hardy = {fmt(V.hardy_coeff)}"]
    if V.angular is not None:
        lines.append(f"angular = {V.angular}")
    for s in V.shells:
        lines += ["", "[shell]"] + [f"{k} = {fmt(getattr(s, k))}" for k in _SHELL_KEYS]
    if V.sampled_r is not None:
        lines += ["", "[sampled]", "r = " + " ".join(fmt(x) for x in V.sampled_r),
                  "v = " + " ".join(fmt(x) for x in V.sampled_v)]
    return "\n".join(lines) + "\n"


def potential_from_text(text: str, source: str = "<potential>"):
    from .errors import ScenarioParseError
    from .potentials import Potential, Shell

    top, shells, sampled = {}, [], {}
    block, current = None, None

    def close(lineno):
        if block == "shell":
            missing = [k for k in _SHELL_KEYS if k not in current]
            if missing:
                raise ScenarioParseError(f"{source}: shell block missing {missing}", lineno)
            shells.append(Shell(*(current[k] for k in _SHELL_KEYS)))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            close(lineno)
            block = line[1:-1].strip()
            if block not in ("shell", "sampled"):
                raise ScenarioParseError(f"{source}: unknown block [{block}]", lineno, 1)
            current = {} if block == "shell" else sampled
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ScenarioParseError(f"{source}: expected 'key = value'", lineno, 1)
        col = raw.index(value) + 1 if value else len(raw)
        try:
            if block is None:
                if key == "hardy":
                    top[key] = float(value)
                elif key == "angular":
                    top[key] = value
                else:
                    raise ScenarioParseError(f"{source}: unknown key {key!r}", lineno, 1)
            elif block == "shell":
                if key not in _SHELL_KEYS:
                    raise ScenarioParseError(f"{source}: unknown shell key {key!r}", lineno, 1)
                current[key] = float(value)
            else:
                if key not in ("r", "v"):
                    raise ScenarioParseError(f"{source}: unknown sampled key {key!r}", lineno, 1)
                sampled[key] = tuple(float(x) for x in value.split())
        except ValueError:
            raise ScenarioParseError(f"{source}: bad number {value!r}", lineno, col) from None
    close(None)
    if sampled and set(sampled) != {"r", "v"}:
        raise ScenarioParseError(f"{source}: [sampled] needs both r and v")
    return Potential(hardy_coeff=top.get("hardy", 0.0), shells=tuple(shells), sampled_r=sampled.get("r"),
                     sampled_v=sampled.get("v"), angular=top.get("angular"))
