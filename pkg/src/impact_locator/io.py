"""File ingestion: CSV and `EVTS` binary event streams.

Both readers return the same (header, stream) pair and enforce the same
validation: coordinates inside the sensor, polarity in {0, 1}, timestamps
non-decreasing. Input must already be time-sorted; a violation is reported
as an error rather than silently re-sorted, since real cameras emit in
order and an unsorted file indicates a producer bug.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .events import EventStream

MAGIC = b"EVTS"
_HEADER = struct.Struct("<4sHHQ")  # magic, width, height, count
_RECORD_DTYPE = np.dtype([("x", "<u2"), ("y", "<u2"), ("p", "u1"), ("t", "<u8")])


class IngestError(ValueError):
    """Malformed or inconsistent event-stream file."""


@dataclass(frozen=True)
class StreamHeader:
    width: int
    height: int
    t0: int
    count: int


def _validate(x, y, p, t, width, height, path, line_of=None):
    """Shared range/monotonicity checks. ``line_of(i)`` maps an event index
    to a 1-based source line for CSV error messages."""

    def where(i):
        return f"line {line_of(i)}" if line_of else f"record {i}"

    bad = np.flatnonzero((p != 0) & (p != 1))
    if bad.size:
        i = int(bad[0])
        raise IngestError(f"{path}: {where(i)}: polarity must be 0 or 1, got {p[i]}")
    bad = np.flatnonzero((x < 0) | (x >= width))
    if bad.size:
        i = int(bad[0])
        raise IngestError(f"{path}: {where(i)}: x={x[i]} out of range for width {width}")
    bad = np.flatnonzero((y < 0) | (y >= height))
    if bad.size:
        i = int(bad[0])
        raise IngestError(f"{path}: {where(i)}: y={y[i]} out of range for height {height}")
    if t.size and t.min() < 0:
        i = int(np.flatnonzero(t < 0)[0])
        raise IngestError(f"{path}: {where(i)}: negative timestamp {t[i]}")
    if t.size > 1:
        drop = np.flatnonzero(np.diff(t) < 0)
        if drop.size:
            i = int(drop[0]) + 1
            raise IngestError(
                f"{path}: {where(i)}: non-monotonic timestamp {t[i]} after {t[i - 1]}"
            )


def _finish(x, y, p, t, width, height) -> tuple[StreamHeader, EventStream]:
    stream = EventStream(
        x.astype(np.int32),
        y.astype(np.int32),
        np.where(p == 1, 1, -1).astype(np.int8),
        t.astype(np.int64),
        width,
        height,
    )
    t0 = int(t[0]) if t.size else 0
    return StreamHeader(width, height, t0, len(stream)), stream


def read_csv(path) -> tuple[StreamHeader, EventStream]:
    """Read `width,height` header line plus `x,y,p,t` rows, p in {0, 1}."""
    path = Path(path)
    with path.open("r") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise IngestError(f"{path}: empty file, expected 'width,height' header")
    try:
        width_s, height_s = lines[0].split(",")
        width, height = int(width_s), int(height_s)
    except ValueError:
        raise IngestError(f"{path}: line 1: malformed header {lines[0]!r}") from None
    if width <= 0 or height <= 0:
        raise IngestError(f"{path}: line 1: non-positive sensor dimensions")

    rows = np.empty((len(lines) - 1, 4), dtype=np.int64)
    for i, line in enumerate(lines[1:]):
        parts = line.split(",")
        if len(parts) != 4:
            raise IngestError(f"{path}: line {i + 2}: expected 'x,y,p,t', got {line!r}")
        try:
            rows[i] = [int(v) for v in parts]
        except ValueError:
            raise IngestError(f"{path}: line {i + 2}: non-integer field in {line!r}") from None
    x, y, p, t = rows.T if len(rows) else (np.empty(0, np.int64),) * 4
    _validate(x, y, p, t, width, height, path, line_of=lambda i: i + 2)
    return _finish(x, y, p, t, width, height)


def write_csv(path, header: StreamHeader, stream: EventStream) -> None:
    path = Path(path)
    p01 = (stream.p > 0).astype(np.int64)
    with path.open("w") as fh:
        fh.write(f"{header.width},{header.height}\n")
        for xi, yi, pi, ti in zip(stream.x, stream.y, p01, stream.t):
            fh.write(f"{xi},{yi},{pi},{ti}\n")


def read_binary(path) -> tuple[StreamHeader, EventStream]:
    """Read the little-endian `EVTS` format (see write_binary)."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise IngestError(f"{path}: truncated header at byte {len(data)}")
    magic, width, height, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise IngestError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if width <= 0 or height <= 0:
        raise IngestError(f"{path}: non-positive sensor dimensions")
    expected = _HEADER.size + count * _RECORD_DTYPE.itemsize
    if len(data) < expected:
        raise IngestError(
            f"{path}: truncated at byte {len(data)}, expected {expected} bytes "
            f"for {count} records"
        )
    records = np.frombuffer(data, dtype=_RECORD_DTYPE, count=count, offset=_HEADER.size)
    x = records["x"].astype(np.int64)
    y = records["y"].astype(np.int64)
    p = records["p"].astype(np.int64)
    t = records["t"].astype(np.int64)
    _validate(x, y, p, t, width, height, path)
    return _finish(x, y, p, t, width, height)


def write_binary(path, header: StreamHeader, stream: EventStream) -> None:
    """Write magic `EVTS`, u16 width/height, u64 count, then packed
    (u16 x, u16 y, u8 p, u64 t) records, all little-endian."""
    path = Path(path)
    x, y, t = stream.x, stream.y, stream.t
    if len(stream):
        if x.min() < 0 or x.max() >= header.width or y.min() < 0 or y.max() >= header.height:
            raise IngestError(f"{path}: event coordinates out of sensor bounds")
        if t.min() < 0:
            raise IngestError(f"{path}: negative timestamp")
    records = np.empty(len(stream), dtype=_RECORD_DTYPE)
    records["x"] = x
    records["y"] = y
    records["p"] = (stream.p > 0).astype(np.uint8)
    records["t"] = t
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, header.width, header.height, len(stream)))
        fh.write(records.tobytes())


def read_stream(path, fmt: str | None = None) -> tuple[StreamHeader, EventStream]:
    """Dispatch on explicit format or file extension (.csv vs .evts)."""
    path = Path(path)
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "evts"
    if fmt == "csv":
        return read_csv(path)
    if fmt == "evts":
        return read_binary(path)
    raise IngestError(f"unknown stream format {fmt!r}")
