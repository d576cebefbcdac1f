"""Fixed-interval event representations: signed count frames over [t0, t1).

Counts are exact integers; scaling by the contrast threshold happens
downstream. All intervals are half-open so adjacent windows tile exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, SpanError
from .events import EventStream, events_between


@dataclass
class AccumFrame:
    width: int
    height: int
    values: np.ndarray  # int32, per-pixel signed polarity sum
    interval: tuple  # (t_start_us, t_end_us)


@dataclass
class ReprStack:
    frames: list

    def __len__(self):
        return len(self.frames)

    def summed(self) -> np.ndarray:
        out = np.zeros_like(self.frames[0].values)
        for f in self.frames:
            out += f.values
        return out


def accumulate(stream: EventStream, t0: int, t1: int) -> AccumFrame:
    """Per-pixel sum of polarities of events with t0 <= t < t1."""
    if t0 >= t1:
        raise SpanError("accumulate requires t0 < t1")
    sub = events_between(stream, t0, t1)
    counts = np.zeros(stream.height * stream.width, np.int32)
    np.add.at(counts, sub.pixel_index(), sub.p.astype(np.int32))
    return AccumFrame(
        width=stream.width,
        height=stream.height,
        values=counts.reshape(stream.height, stream.width),
        interval=(int(t0), int(t1)),
    )


def build_representations(stream: EventStream, n: int = 5, tau_us: int | None = None) -> ReprStack:
    """N contiguous accumulation frames of length tau starting at t_begin.

    The default N of 5 matches the usual stack depth fed to downstream
    consumers; tau defaults to an even split of the stream span.
    """
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    span = stream.t_end - stream.t_begin
    if tau_us is None:
        tau_us = span // n
    if tau_us <= 0:
        raise SpanError("tau must be positive")
    if n * tau_us > span:
        raise SpanError(f"stream span {span} us is shorter than {n} x {tau_us} us")
    frames = [
        accumulate(stream, stream.t_begin + i * tau_us, stream.t_begin + (i + 1) * tau_us)
        for i in range(n)
    ]
    return ReprStack(frames=frames)


def event_preview(frame: AccumFrame, max_count: int = 4) -> np.ndarray:
    """RGB uint8 rendering: positive counts red, negative blue, zero white.

    Saturation scales with |count| and clamps at max_count; flipping the
    sign of the input swaps the red and blue channels exactly.
    """
    if max_count < 1:
        raise ConfigurationError("max_count must be >= 1")
    v = frame.values.astype(np.float64)
    s = np.clip(np.abs(v) / max_count, 0.0, 1.0)
    fade = np.round(255.0 * (1.0 - s)).astype(np.uint8)
    rgb = np.full(frame.values.shape + (3,), 255, np.uint8)
    pos = v > 0
    neg = v < 0
    rgb[pos, 1] = fade[pos]
    rgb[pos, 2] = fade[pos]
    rgb[neg, 0] = fade[neg]
    rgb[neg, 1] = fade[neg]
    return rgb


def accum_to_bytes(frame: AccumFrame) -> tuple:
    """(raw int16 little-endian bytes, JSON sidecar text)."""
    if np.any(np.abs(frame.values) > 32767):
        raise ConfigurationError("signed counts exceed int16 range")
    raw = frame.values.astype("<i2").tobytes()
    sidecar = json.dumps(
        {
            "width": frame.width,
            "height": frame.height,
            "interval": [int(frame.interval[0]), int(frame.interval[1])],
            "dtype": "int16-le",
        },
        sort_keys=True,
    )
    return raw, sidecar


def accum_from_bytes(raw: bytes, sidecar: str) -> AccumFrame:
    meta = json.loads(sidecar)
    w, h = int(meta["width"]), int(meta["height"])
    values = np.frombuffer(raw, "<i2").astype(np.int32).reshape(h, w)
    return AccumFrame(width=w, height=h, values=values, interval=tuple(meta["interval"]))
