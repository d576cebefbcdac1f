"""Asynchronous event generation from rendered intensity sequences.

A pixel fires an event when its log intensity drifts a full contrast
threshold C away from a per-pixel reference level. The reference advances
by C per event and keeps the sub-threshold residual, so the signed event
count times C always stays within one C of the true log change. Timestamps
are interpolated linearly in log space between consecutive rendered frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigurationError, DimensionMismatchError, SpanError
from .scene import SceneScript

US = 1_000_000  # microseconds per second


@dataclass(frozen=True)
class EventCameraParams:
    contrast_threshold: float = 0.15
    log_eps: float = 1e-3
    threshold_jitter_sigma: float = 0.0
    refractory_us: int = 0
    render_rate: float = 5000.0

    def validate(self):
        if self.contrast_threshold <= 0:
            raise ConfigurationError("contrast_threshold must be positive")
        if self.log_eps <= 0:
            raise ConfigurationError("log_eps must be positive")
        if self.threshold_jitter_sigma < 0:
            raise ConfigurationError("threshold_jitter_sigma must be >= 0")
        if self.refractory_us < 0:
            raise ConfigurationError("refractory_us must be >= 0")
        if self.render_rate < 100:
            raise ConfigurationError("render_rate must be >= 100 fps")

    def to_dict(self) -> dict:
        return {
            "contrast_threshold": self.contrast_threshold,
            "log_eps": self.log_eps,
            "threshold_jitter_sigma": self.threshold_jitter_sigma,
            "refractory_us": self.refractory_us,
            "render_rate": self.render_rate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EventCameraParams":
        return cls(
            contrast_threshold=float(d["contrast_threshold"]),
            log_eps=float(d["log_eps"]),
            threshold_jitter_sigma=float(d["threshold_jitter_sigma"]),
            refractory_us=int(d["refractory_us"]),
            render_rate=float(d["render_rate"]),
        )


@dataclass(frozen=True)
class EventRecord:
    t: int
    x: int
    y: int
    p: int


@dataclass
class LogFrame:
    width: int
    height: int
    values: np.ndarray
    t: float = 0.0


@dataclass
class EventStream:
    """Sparse event sequence, globally sorted by (t, y, x, p)."""

    width: int
    height: int
    t: np.ndarray  # uint64 microseconds
    x: np.ndarray  # uint16
    y: np.ndarray  # uint16
    p: np.ndarray  # int8, -1 or +1
    t_begin: int
    t_end: int
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return self.t.shape[0]

    def record(self, i: int) -> EventRecord:
        return EventRecord(int(self.t[i]), int(self.x[i]), int(self.y[i]), int(self.p[i]))

    def pixel_index(self) -> np.ndarray:
        """Flat y*W + x per event (int64)."""
        return self.y.astype(np.int64) * self.width + self.x.astype(np.int64)

    def signed_counts(self) -> np.ndarray:
        """Per-pixel signed polarity sum over the whole stream (int64, HxW)."""
        counts = np.zeros(self.height * self.width, np.int64)
        np.add.at(counts, self.pixel_index(), self.p.astype(np.int64))
        return counts.reshape(self.height, self.width)

    def validate(self):
        if np.any(self.x >= self.width) or np.any(self.y >= self.height):
            raise ConfigurationError("event coordinates outside frame")
        if self.t.size:
            if int(self.t.min()) < self.t_begin or int(self.t.max()) > self.t_end:
                raise ConfigurationError("event timestamps outside [t_begin, t_end]")
            if not np.all(np.abs(self.p.astype(np.int64)) == 1):
                raise ConfigurationError("polarities must be -1 or +1")
            t = self.t.astype(np.int64)
            y = self.y.astype(np.int64)
            x = self.x.astype(np.int64)
            p = self.p.astype(np.int64)
            dt, dy, dx, dp = np.diff(t), np.diff(y), np.diff(x), np.diff(p)
            ordered = (dt > 0) | (
                (dt == 0) & ((dy > 0) | ((dy == 0) & ((dx > 0) | ((dx == 0) & (dp >= 0)))))
            )
            if not np.all(ordered):
                raise ConfigurationError("events not sorted by (t, y, x, p)")
            pix = self.pixel_index()
            order = np.argsort(pix, kind="stable")
            same = np.diff(pix[order]) == 0
            if np.any(same & (np.diff(t[order]) <= 0)):
                raise ConfigurationError("per-pixel timestamps not strictly increasing")


def empty_stream(width: int, height: int, t_begin: int = 0, t_end: int = 0) -> EventStream:
    return EventStream(
        width=width,
        height=height,
        t=np.empty(0, np.uint64),
        x=np.empty(0, np.uint16),
        y=np.empty(0, np.uint16),
        p=np.empty(0, np.int8),
        t_begin=t_begin,
        t_end=t_end,
    )


def log_transform(frame: np.ndarray, log_eps: float, t: float = 0.0) -> LogFrame:
    """Elementwise ln(intensity + log_eps)."""
    if log_eps <= 0:
        raise ConfigurationError("log_eps must be positive")
    values = np.log(frame.astype(np.float64) + log_eps)
    h, w = frame.shape
    return LogFrame(width=w, height=h, values=values, t=t)


def _splitmix(x: np.ndarray) -> np.ndarray:
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def _hash_normal(seed: int, pair: int, pix: np.ndarray, j: int) -> np.ndarray:
    """Deterministic standard normal per (seed, pair, pixel, crossing).

    Counter-based (no sequential generator state), so results do not depend
    on pixel processing order or worker partitioning.
    """
    with np.errstate(over="ignore"):
        base = (
            np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
            + np.uint64(pair) * np.uint64(0xD1B54A32D192ED03)
            + pix.astype(np.uint64) * np.uint64(0x8CB92BA72F3D8DD7)
            + np.uint64(j) * np.uint64(0xF1357AEA2E62A9C5)
        )
        h1 = _splitmix(base)
        h2 = _splitmix(h1)
    u1 = (h1 >> np.uint64(11)).astype(np.float64) * 2.0**-53 + 2.0**-54
    u2 = (h2 >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def _sweep_pair_jitter(
    v_prev, v_new, ref, last_emit, t_prev_us, t_next_us, params, seed, pair_idx, width
):
    """Frame-pair sweep with per-crossing jittered thresholds.

    Shared by all kernel backends (jitter is opt-in and not performance
    critical); the noiseless path lives in the backend kernels instead.
    """
    contrast = params.contrast_threshold
    sigma = params.threshold_jitter_sigma
    refractory_us = params.refractory_us
    floor = 0.01 * contrast

    ys, xs = np.nonzero(v_new != v_prev)
    if ys.size == 0:
        return None
    l_new = v_new[ys, xs]
    rf = ref[ys, xs]
    delta = l_new - rf
    mag = np.abs(delta)
    pol = np.where(delta > 0, 1, -1).astype(np.int64)
    l_prev = v_prev[ys, xs]
    denom = l_new - l_prev
    last = last_emit[ys, xs].copy()
    pixflat = ys.astype(np.int64) * width + xs.astype(np.int64)

    dt_us = t_next_us - t_prev_us
    acc = np.zeros(ys.size)
    out_t, out_x, out_y, out_p = [], [], [], []
    alive = np.arange(ys.size)
    j = 1
    while alive.size:
        z = _hash_normal(seed, pair_idx, pixflat[alive], j)
        thr = np.maximum(contrast + sigma * z, floor)
        cross = mag[alive] - acc[alive] >= thr
        a = alive[cross]
        if a.size == 0:
            break
        thr = thr[cross]
        acc[a] = acc[a] + thr
        lvl = rf[a] + pol[a].astype(np.float64) * acc[a]
        frac = (lvl - l_prev[a]) / denom[a]
        frac = np.minimum(np.maximum(frac, 0.0), 1.0)
        t = t_prev_us + np.floor(frac * float(dt_us)).astype(np.int64)
        t = np.maximum(t, last[a] + 1)
        emit = (last[a] < 0) | (t - last[a] >= refractory_us)
        if emit.any():
            out_t.append(t[emit])
            out_x.append(xs[a][emit])
            out_y.append(ys[a][emit])
            out_p.append(pol[a][emit])
            last[a[emit]] = t[emit]
        alive = a
        j += 1

    ref[ys, xs] = rf + pol.astype(np.float64) * acc
    last_emit[ys, xs] = last
    if not out_t:
        return None
    return (
        np.concatenate(out_t),
        np.concatenate(out_x),
        np.concatenate(out_y),
        np.concatenate(out_p),
    )


def render_time_grid(t0: float, t1: float, render_rate: float):
    """Integer-microsecond frame boundaries covering [t0, t1] exactly."""
    t_begin_us = round(t0 * US)
    t_end_us = round(t1 * US)
    n_pairs = max(1, math.ceil((t1 - t0) * render_rate))
    span = t_end_us - t_begin_us
    bounds = t_begin_us + (np.arange(n_pairs + 1, dtype=np.int64) * span) // n_pairs
    return bounds


def generate_events(
    script: SceneScript, params: EventCameraParams, t0: float = 0.0, t1: float | None = None
) -> EventStream:
    """Simulate the event stream for a scene over [t0, t1].

    Renders the scene at ``params.render_rate`` and applies the
    threshold-crossing model between consecutive frames. Deterministic for
    identical (script, params): the noiseless path is exact integer/float
    arithmetic and the jitter path uses counter-based hashing.
    """
    params.validate()
    cfg = script.config
    if t1 is None:
        t1 = cfg.duration
    if not (0.0 <= t0 < t1 <= cfg.duration):
        raise SpanError(f"invalid window [{t0}, {t1}] for duration {cfg.duration}")

    bounds = render_time_grid(t0, t1, params.render_rate)
    n_pairs = bounds.shape[0] - 1
    h, w = cfg.height, cfg.width

    metadata = {"warnings": []}
    dt_s = (t1 - t0) / n_pairs
    max_disp = script.max_speed * dt_s
    if max_disp > 0.5:
        metadata["warnings"].append(
            f"aliasing: max particle displacement {max_disp:.3f} px/frame exceeds 0.5"
        )

    bg_log = np.log(script.background.astype(np.float64) + params.log_eps)
    n_particles = len(script.particles)
    c0x = np.array([p.center0[0] for p in script.particles])
    c0y = np.array([p.center0[1] for p in script.particles])
    vx = np.array([p.velocity[0] for p in script.particles])
    vy = np.array([p.velocity[1] for p in script.particles])
    rad = np.array([p.radius for p in script.particles])
    log_i = np.log(np.array([p.intensity for p in script.particles]) + params.log_eps)

    kern = _kernels.active()
    ids = np.empty((h, w), np.int32)
    v_prev = np.empty((h, w), np.float64)
    v_new = np.empty((h, w), np.float64)
    ref = np.empty((h, w), np.float64)
    last_emit = np.full((h, w), -1, np.int64)

    def paint_at(buf, t_s):
        ids.fill(-1)
        np.copyto(buf, bg_log)
        if n_particles:
            kern.paint(ids, buf, c0x + vx * t_s, c0y + vy * t_s, rad, log_i)

    paint_at(v_prev, bounds[0] / US)
    np.copyto(ref, v_prev)

    jitter = params.threshold_jitter_sigma > 0
    parts_t, parts_x, parts_y, parts_p = [], [], [], []
    for i in range(1, n_pairs + 1):
        paint_at(v_new, bounds[i] / US)
        if jitter:
            out = _sweep_pair_jitter(
                v_prev, v_new, ref, last_emit,
                int(bounds[i - 1]), int(bounds[i]),
                params, cfg.seed, i, w,
            )
        else:
            out = kern.sweep_pair(
                v_prev, v_new, ref, last_emit,
                int(bounds[i - 1]), int(bounds[i]),
                params.contrast_threshold, params.refractory_us,
            )
            if out[0].shape[0] == 0:
                out = None
        if out is not None:
            parts_t.append(out[0])
            parts_x.append(out[1])
            parts_y.append(out[2])
            parts_p.append(out[3])
        v_prev, v_new = v_new, v_prev

    t_begin_us, t_end_us = int(bounds[0]), int(bounds[-1])
    if not parts_t:
        stream = empty_stream(w, h, t_begin_us, t_end_us)
        stream.metadata = metadata
        return stream

    et = np.concatenate(parts_t)
    ex = np.concatenate(parts_x)
    ey = np.concatenate(parts_y)
    ep = np.concatenate(parts_p)
    order = np.lexsort((ep, ex, ey, et))
    stream = EventStream(
        width=w,
        height=h,
        t=et[order].astype(np.uint64),
        x=ex[order].astype(np.uint16),
        y=ey[order].astype(np.uint16),
        p=ep[order].astype(np.int8),
        t_begin=t_begin_us,
        t_end=max(t_end_us, int(et.max())),
        metadata=metadata,
    )
    stream.validate()
    return stream


def events_between(stream: EventStream, t0: int, t1: int) -> EventStream:
    """Sub-stream with t0 <= t < t1 (microseconds)."""
    if t0 > t1:
        raise SpanError("t0 must be <= t1")
    lo = int(np.searchsorted(stream.t, t0, side="left"))
    hi = int(np.searchsorted(stream.t, t1, side="left"))
    return EventStream(
        width=stream.width,
        height=stream.height,
        t=stream.t[lo:hi].copy(),
        x=stream.x[lo:hi].copy(),
        y=stream.y[lo:hi].copy(),
        p=stream.p[lo:hi].copy(),
        t_begin=t0,
        t_end=t1,
        metadata=dict(stream.metadata),
    )


def concat_streams(a: EventStream, b: EventStream) -> EventStream:
    """Concatenate two time-adjacent streams (a before b)."""
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionMismatchError("streams differ in dimensions")
    return EventStream(
        width=a.width,
        height=a.height,
        t=np.concatenate([a.t, b.t]),
        x=np.concatenate([a.x, b.x]),
        y=np.concatenate([a.y, b.y]),
        p=np.concatenate([a.p, b.p]),
        t_begin=a.t_begin,
        t_end=b.t_end,
        metadata={**a.metadata, **b.metadata},
    )
