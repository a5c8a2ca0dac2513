"""Deterministic JSON/CSV output."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    return s if any(c in s for c in ".en") else s + ".0"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dumps17(obj, indent: int = 2) -> str:
    """JSON with every float written to 17 significant digits."""

    def enc(o, level):
        pad, inner = " " * (indent * level), " " * (indent * (level + 1))
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, float):
            return _fmt_float(o)
        if isinstance(o, (int, str)):
            return json.dumps(o)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{inner}{json.dumps(k)}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + pad + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(not isinstance(v, (list, dict)) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return "[\n" + ",\n".join(inner + enc(v, level + 1) for v in o) + "\n" + pad + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(_plain(obj), 0) + "\n"


def write_json(path: Path, obj) -> None:
    Path(path).write_text(dumps17(obj))


def write_jsonl(path: Path, rows) -> None:
    with open(path, "w") as fh:
        for r in rows:
            fh.write(dumps17(r, indent=0).replace("\n", "") + "\n")


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt_float(v) if isinstance(v, float) else v for v in _plain(list(r))])
