"""Serialization helpers shared by the CLI and the sweep: 17-digit JSON, CSV, .dat, hashes."""
from __future__ import annotations

import hashlib
import math
import os
from pathlib import Path

import numpy as np

__all__ = ["dumps_json", "fmt_float", "sha256_file", "write_csv", "write_dat", "write_text_atomic"]


def fmt_float(x: float) -> str:
    """17 significant digits, so every double round-trips exactly."""
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _enc(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, str):
        import json

        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_enc(str(k), indent, level + 1)}: {_enc(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) or v is None for v in seq):
            return "[" + ", ".join(_enc(v, indent, level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + _enc(v, indent, level + 1) for v in seq) + "\n" + end + "]"
    if hasattr(obj, "to_dict"):
        return _enc(obj.to_dict(), indent, level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj, indent: int = 2) -> str:
    return _enc(obj, indent, 0) + "\n"


def write_text_atomic(path, text: str) -> Path:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
    return path


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return fmt_float(v).strip('"')
    return str(v)


def write_csv(path, header, rows) -> Path:
    lines = [",".join(header)]
    lines += [",".join(_cell(v) for v in row) for row in rows]
    return write_text_atomic(path, "\n".join(lines) + "\n")


def write_dat(path, x, y, comment: str | None = None) -> Path:
    """Two space-separated columns for external plotting tools."""
    lines = [f"# {comment}"] if comment else []
    lines += [f"{_cell(float(a))} {_cell(float(b))}" for a, b in zip(x, y)]
    return write_text_atomic(path, "\n".join(lines) + "\n")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
