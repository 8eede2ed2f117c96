"""CSV persistence for trial records and the SIDB1 flat binary batch format.

SIDB1 layout (all little-endian)::

    b"SIDB1"
    int64 n, int64 m, int64 T, int64 N, uint64 seed
    float64 outputs[N][2T][m]        row-major
    float64 init_states[N][n]
    float64 innovations[N][2T][m]    only for innovation-form batches

Whether innovations are present is implied by the body length.
"""

from __future__ import annotations

import csv
import math
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..simulate import TrajectoryBatch
from .records import RECORD_FIELDS, TrialRecord

__all__ = ["write_csv", "read_csv", "write_rows", "write_batch", "read_batch", "MAGIC"]

MAGIC = b"SIDB1"
_HEADER = struct.Struct("<qqqqQ")
_INT_FIELDS = {"N", "T", "trial", "seed"}


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        return format(v, ".17g")
    return str(value)


def write_rows(rows: Iterable[dict], columns: Sequence[str], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def write_csv(records: Iterable[TrialRecord], path) -> None:
    """Write records with one column per TrialRecord field, in declared order."""
    write_rows((r.__dict__ for r in records), RECORD_FIELDS, path)


def _parse(name: str, text: str):
    if name in _INT_FIELDS:
        return int(text)
    if name == "perturbation_ok":
        if text not in ("true", "false"):
            raise ValueError(f"bad boolean {text!r}")
        return text == "true"
    return float(text)


def read_csv(path) -> list[TrialRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != RECORD_FIELDS:
            raise ValueError(f"unexpected CSV header {header}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            try:
                out.append(TrialRecord(**{k: _parse(k, v) for k, v in zip(header, row)}))
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return out


def write_batch(batch: TrajectoryBatch, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(batch.n, batch.m, batch.T, batch.N, int(batch.seed) & ((1 << 64) - 1)))
        fh.write(np.ascontiguousarray(batch.outputs, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(batch.init_states, dtype="<f8").tobytes())
        if batch.innovations is not None:
            fh.write(np.ascontiguousarray(batch.innovations, dtype="<f8").tobytes())


def read_batch(path) -> TrajectoryBatch:
    data = Path(path).read_bytes()
    if data[:len(MAGIC)] != MAGIC:
        raise ValueError("not a SIDB1 file")
    off = len(MAGIC)
    n, m, T, N, seed = _HEADER.unpack_from(data, off)
    off += _HEADER.size
    body = np.frombuffer(data, dtype="<f8", offset=off)
    n_out, n_x = N * 2 * T * m, N * n
    if body.size == n_out + n_x:
        innov = None
    elif body.size == 2 * n_out + n_x:
        innov = body[n_out + n_x:].reshape(N, 2 * T, m).astype(float)
    else:
        raise ValueError(f"SIDB1 body has {body.size} values, expected {n_out + n_x} or {2 * n_out + n_x}")
    return TrajectoryBatch(
        outputs=body[:n_out].reshape(N, 2 * T, m).astype(float),
        innovations=innov,
        init_states=body[n_out:n_out + n_x].reshape(N, n).astype(float),
        T=T, N=N, seed=seed,
    )
