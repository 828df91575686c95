"""Binary dump of V snapshots.

Layout (little-endian): magic ``b"BLWL"``, uint32 version, uint32 Nr,
uint32 snapshot count, float64 dt; then per snapshot one float64 time
followed by Nr float64 values of V.
"""
from __future__ import annotations

import struct
from typing import NamedTuple

import numpy as np

from .grid import RadialSolution

__all__ = ["MAGIC", "VERSION", "SnapshotDump", "read_snapshots", "write_snapshots"]

MAGIC = b"BLWL"
VERSION = 1
_HEADER = struct.Struct("<4sIIId")


class SnapshotDump(NamedTuple):
    version: int
    dt: float
    times: np.ndarray
    V: np.ndarray


def write_snapshots(path, solution: RadialSolution) -> None:
    V = np.asarray(solution.V, dtype="<f8")
    count, Nr = V.shape
    rec = np.empty((count, Nr + 1), dtype="<f8")
    rec[:, 0] = solution.times
    rec[:, 1:] = V
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, Nr, count, float(solution.grid.dt)))
        fh.write(rec.tobytes())


def read_snapshots(path) -> SnapshotDump:
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, Nr, count, dt = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"not a snapshot dump (magic {magic!r})")
    if version != VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != count * (Nr + 1):
        raise ValueError("truncated snapshot dump")
    rec = body.reshape(count, Nr + 1)
    return SnapshotDump(version, dt, rec[:, 0].copy(), rec[:, 1:].copy())
