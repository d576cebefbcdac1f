"""Event file I/O: packed little-endian binary (.evb) and CSV text.

Binary layout: a 16-byte magic block ("EVOC0001" zero-padded), u16 width,
u16 height, u64 record count, then packed 14-byte records of
(u64 t_us, u16 x, u16 y, i8 p, i8 pad). All integers little-endian.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import ChecksumError, ConfigurationError
from .events import EventStream

MAGIC = b"EVOC0001"
_HEADER = struct.Struct("<16sHHQ")

RECORD_DTYPE = np.dtype(
    [("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "i1"), ("pad", "i1")]
)
assert RECORD_DTYPE.itemsize == 14


def stream_to_bytes(stream: EventStream) -> bytes:
    records = np.empty(len(stream), RECORD_DTYPE)
    records["t"] = stream.t
    records["x"] = stream.x
    records["y"] = stream.y
    records["p"] = stream.p
    records["pad"] = 0
    header = _HEADER.pack(MAGIC.ljust(16, b"\x00"), stream.width, stream.height, len(stream))
    return header + records.tobytes()


def write_evb(path, stream: EventStream):
    with open(path, "wb") as f:
        f.write(stream_to_bytes(stream))


def bytes_to_stream(data: bytes, t_begin=None, t_end=None) -> EventStream:
    if len(data) < _HEADER.size:
        raise ChecksumError("event file too short for header")
    magic, width, height, count = _HEADER.unpack_from(data, 0)
    if magic[:8] != MAGIC:
        raise ChecksumError(f"bad event file magic {magic[:8]!r}")
    body = data[_HEADER.size :]
    if len(body) != count * RECORD_DTYPE.itemsize:
        raise ChecksumError(
            f"event file body is {len(body)} bytes, expected {count * RECORD_DTYPE.itemsize}"
        )
    records = np.frombuffer(body, RECORD_DTYPE)
    t = records["t"].copy()
    if t_begin is None:
        t_begin = 0
    if t_end is None:
        t_end = int(t.max()) if t.size else 0
    return EventStream(
        width=int(width),
        height=int(height),
        t=t,
        x=records["x"].copy(),
        y=records["y"].copy(),
        p=records["p"].copy(),
        t_begin=int(t_begin),
        t_end=int(t_end),
    )


def read_evb(path, t_begin=None, t_end=None) -> EventStream:
    with open(path, "rb") as f:
        data = f.read()
    return bytes_to_stream(data, t_begin=t_begin, t_end=t_end)


def write_events_csv(path, stream: EventStream):
    with open(path, "w", newline="") as f:
        f.write("t_us,x,y,p\n")
        for i in range(len(stream)):
            f.write(f"{int(stream.t[i])},{int(stream.x[i])},{int(stream.y[i])},{int(stream.p[i])}\n")


def read_events_csv(path, width: int, height: int, t_begin=None, t_end=None) -> EventStream:
    rows = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("t_us"):
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ConfigurationError(f"malformed event CSV row: {line!r}")
            rows.append(tuple(int(v) for v in parts))
    if rows:
        arr = np.array(rows, np.int64)
        t, x, y, p = arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]
    else:
        t = x = y = p = np.empty(0, np.int64)
    if t_begin is None:
        t_begin = 0
    if t_end is None:
        t_end = int(t.max()) if t.size else 0
    return EventStream(
        width=width,
        height=height,
        t=t.astype(np.uint64),
        x=x.astype(np.uint16),
        y=y.astype(np.uint16),
        p=p.astype(np.int8),
        t_begin=int(t_begin),
        t_end=int(t_end),
    )
