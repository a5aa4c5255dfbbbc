"""Feature-batch I/O: delimited text and a fixed binary vector format.

Text files are plain comma-separated float rows, one sample per line,
no header. Values are written with shortest round-trip precision, so a
write/read cycle reproduces the batch bit for bit.

The binary format is deliberately minimal: magic ``FBV1``, two u32
little-endian counts (rows, columns), then row-major little-endian
float64 payload. It exists so large batches can skip text parsing.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import FeatureBatch

FBV_MAGIC = b"FBV1"
_HEADER = struct.Struct("<4sII")

FORMATS = ("csv", "fbv")


class BatchIoError(ValueError):
    """Malformed batch file; the message pinpoints the failure."""


def write_batch_csv(batch: FeatureBatch, path: str | Path) -> None:
    lines = [",".join(repr(float(v)) for v in row) for row in batch.data]
    Path(path).write_text("\n".join(lines) + "\n")


def read_batch_csv(path: str | Path) -> FeatureBatch:
    text = Path(path).read_text()
    rows: list[list[float]] = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        tokens = line.split(",")
        if width is None:
            width = len(tokens)
        elif len(tokens) != width:
            raise BatchIoError(
                f"{path}: line {lineno} has {len(tokens)} columns, expected {width}"
            )
        row = []
        for col, token in enumerate(tokens, start=1):
            try:
                row.append(float(token))
            except ValueError:
                raise BatchIoError(
                    f"{path}: line {lineno} column {col}: not a number: {token.strip()!r}"
                ) from None
        rows.append(row)
    if not rows:
        raise BatchIoError(f"{path}: no data rows")
    try:
        return FeatureBatch(np.array(rows))
    except ValueError as exc:
        raise BatchIoError(f"{path}: {exc}") from None


def write_batch_fbv(batch: FeatureBatch, path: str | Path) -> None:
    payload = np.ascontiguousarray(batch.data, dtype="<f8").tobytes()
    Path(path).write_bytes(_HEADER.pack(FBV_MAGIC, batch.n, batch.d) + payload)


def read_batch_fbv(path: str | Path) -> FeatureBatch:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise BatchIoError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, n, d = _HEADER.unpack_from(raw)
    if magic != FBV_MAGIC:
        raise BatchIoError(f"{path}: bad magic {magic!r}, expected {FBV_MAGIC!r}")
    expected = _HEADER.size + 8 * n * d
    if len(raw) != expected:
        raise BatchIoError(
            f"{path}: payload is {len(raw) - _HEADER.size} bytes, "
            f"expected {8 * n * d} for {n}x{d}"
        )
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(n, d)
    try:
        return FeatureBatch(data)
    except ValueError as exc:
        raise BatchIoError(f"{path}: {exc}") from None


def read_batch(path: str | Path, fmt: str) -> FeatureBatch:
    if fmt == "csv":
        return read_batch_csv(path)
    if fmt == "fbv":
        return read_batch_fbv(path)
    raise BatchIoError(f"unknown batch format {fmt!r}, expected one of {FORMATS}")


def write_batch(batch: FeatureBatch, path: str | Path, fmt: str) -> None:
    if fmt == "csv":
        write_batch_csv(batch, path)
    elif fmt == "fbv":
        write_batch_fbv(batch, path)
    else:
        raise BatchIoError(f"unknown batch format {fmt!r}, expected one of {FORMATS}")
