"""Dense matrix files: a plain-text layout and a JSON layout.

Text layout::

    d
    a11 a12 ... a1d
    ...
    ad1 ad2 ... add

JSON layout: ``{"dim": d, "rows": [[...], ...]}``.

Numbers are written with 17 significant digits so a write/read round trip
reproduces every float64 bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def dumps_text(A) -> str:
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    lines = [str(d)]
    lines.extend(" ".join(format_float(x) for x in row) for row in A)
    return "\n".join(lines) + "\n"


def loads_text(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix file")
    try:
        d = int(lines[0].strip())
    except ValueError as exc:
        raise ValueError(f"first line must be the dimension, got {lines[0]!r}") from exc
    rows = [ln.split() for ln in lines[1:]]
    if len(rows) != d or any(len(r) != d for r in rows):
        raise ValueError(f"expected {d} rows of {d} numbers")
    return np.array([[float(x) for x in r] for r in rows], dtype=float)


def dumps_json(A) -> str:
    A = np.asarray(A, dtype=float)
    # json uses repr(), the shortest string that round-trips exactly
    return json.dumps({"dim": int(A.shape[0]), "rows": A.tolist()})


def loads_json(text: str) -> np.ndarray:
    obj = json.loads(text)
    d = int(obj["dim"])
    A = np.array(obj["rows"], dtype=float)
    if A.shape != (d, d):
        raise ValueError(f"rows do not form a {d}x{d} matrix")
    return A


def read_matrix(path) -> np.ndarray:
    """Read either layout; JSON is detected by a leading ``{``."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return loads_json(text)
    return loads_text(text)


def write_matrix(path, A, fmt: str | None = None) -> None:
    path = Path(path)
    if fmt is None:
        fmt = "json" if path.suffix == ".json" else "text"
    if fmt == "json":
        path.write_text(dumps_json(A))
    elif fmt == "text":
        path.write_text(dumps_text(A))
    else:
        raise ValueError(f"unknown format {fmt!r}")
