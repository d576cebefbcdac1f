"""Model-based background reconstruction by event integration.

Each pixel's log intensity is the initial level plus the running signed sum
of event polarities times the contrast threshold. While the static
background is visible a pixel fires no events, so its integrated level
dwells; the reconstruction picks, per occluded pixel, the level with the
longest total dwell that is not occluder-like, falling back to the final
integrated level. Occluded pixels are segmented by the similar-intensity
heuristic: event-active pixels whose intensity sits near the dominant
occluder intensity (histogram mode). Multiple overlapping occluders with
distinct intensities defeat this heuristic; that failure mode is inherited
by design.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigurationError, DimensionMismatchError
from .events import EventStream, LogFrame
from .scene import OcclusionMask

MODE_BINS = 64


@dataclass(frozen=True)
class AccumParams:
    contrast_threshold: float = 0.15
    occluder_similarity_eps: float | None = None  # defaults to 2*C
    quiet_period_min_us: int = 2000
    intensity_clip: tuple = (0.0, 1.0)
    log_eps: float = 1e-3

    def validate(self):
        if self.contrast_threshold <= 0:
            raise ConfigurationError("contrast_threshold must be positive")
        if self.similarity_eps <= 0:
            raise ConfigurationError("occluder_similarity_eps must be positive")
        if self.log_eps <= 0:
            raise ConfigurationError("log_eps must be positive")
        if self.quiet_period_min_us < 0:
            raise ConfigurationError("quiet_period_min_us must be >= 0")

    @property
    def similarity_eps(self) -> float:
        if self.occluder_similarity_eps is None:
            return 2.0 * self.contrast_threshold
        return self.occluder_similarity_eps

    def to_dict(self) -> dict:
        return {
            "contrast_threshold": self.contrast_threshold,
            "occluder_similarity_eps": self.similarity_eps,
            "quiet_period_min_us": self.quiet_period_min_us,
            "intensity_clip": list(self.intensity_clip),
            "log_eps": self.log_eps,
        }


@dataclass
class PixelTimelineField:
    """Per-pixel integrated log-level breakpoints (CSR over flat pixels)."""

    width: int
    height: int
    initial: np.ndarray  # flat L(x, 0)
    starts: np.ndarray  # CSR offsets, length W*H + 1
    t: np.ndarray  # event times, sorted per pixel
    levels: np.ndarray  # level AFTER each event

    def timeline(self, x: int, y: int) -> list:
        """Breakpoints [(t_us, level), ...] starting from the initial level."""
        px = y * self.width + x
        lo, hi = int(self.starts[px]), int(self.starts[px + 1])
        out = [(0, float(self.initial[px]))]
        out.extend((int(self.t[i]), float(self.levels[i])) for i in range(lo, hi))
        return out

    def final_levels(self) -> np.ndarray:
        lasts = self.starts[1:] - 1
        has = self.starts[1:] > self.starts[:-1]
        out = self.initial.copy()
        out[has] = self.levels[lasts[has]]
        return out.reshape(self.height, self.width)


def _sorted_csr(stream: EventStream):
    """Events ordered by (flat pixel, t) plus CSR offsets per pixel."""
    pix = stream.pixel_index()
    order = np.argsort(pix, kind="stable")  # stream already time-sorted
    npx = stream.width * stream.height
    counts = np.bincount(pix, minlength=npx)
    starts = np.zeros(npx + 1, np.int64)
    np.cumsum(counts, out=starts[1:])
    return pix[order], stream.t[order].astype(np.int64), stream.p[order].astype(np.int64), starts


def integrate_events(l0: LogFrame, stream: EventStream, contrast: float) -> PixelTimelineField:
    """Running per-pixel level L0 + sum(p*C) at each event time."""
    if (l0.height, l0.width) != (stream.height, stream.width):
        raise DimensionMismatchError("log frame and stream dimensions differ")
    pix, t, p, starts = _sorted_csr(stream)
    initial = l0.values.reshape(-1).astype(np.float64)
    if t.size:
        cs = np.cumsum(p)
        base = np.where(starts[:-1] > 0, cs[starts[:-1] - 1], 0)
        k_after = cs - np.repeat(base, np.diff(starts))
        levels = initial[pix] + contrast * k_after.astype(np.float64)
    else:
        levels = np.empty(0, np.float64)
    return PixelTimelineField(
        width=stream.width,
        height=stream.height,
        initial=initial,
        starts=starts,
        t=t,
        levels=levels,
    )


def segment_occluded(i0: np.ndarray, stream: EventStream, params: AccumParams):
    """Estimate the occlusion mask from the similar-intensity heuristic.

    Returns (OcclusionMask, info) where info carries the estimated occluder
    intensity mode and a no_occlusion flag when the stream is silent.
    """
    params.validate()
    if i0.shape != (stream.height, stream.width):
        raise DimensionMismatchError("frame and stream dimensions differ")
    npx = stream.width * stream.height
    n_events = np.bincount(stream.pixel_index(), minlength=npx)
    active = (n_events > 0).reshape(i0.shape)
    if not active.any():
        mask = OcclusionMask(stream.width, stream.height, np.zeros(i0.shape, bool), 0.0)
        return mask, {"no_occlusion": True, "occluder_mode": None}

    hist, edges = np.histogram(i0[active], bins=MODE_BINS, range=(0.0, 1.0))
    mode = float((edges[np.argmax(hist)] + edges[np.argmax(hist) + 1]) / 2.0)
    log_mode = np.log(mode + params.log_eps)
    near = np.abs(np.log(i0 + params.log_eps) - log_mode) <= params.similarity_eps
    bits = active & near
    mask = OcclusionMask(stream.width, stream.height, bits, 0.0)
    return mask, {"no_occlusion": False, "occluder_mode": mode}


def reconstruct_background(
    i0: np.ndarray,
    stream: EventStream,
    params: AccumParams,
    gt_mask: OcclusionMask | None = None,
):
    """Accumulation-method background estimate.

    Pixels outside the (estimated or injected) occlusion mask copy the
    input frame byte for byte. For each occluded pixel, the integrated
    timeline is scanned for the longest-dwelling level that is not within
    ``occluder_similarity_eps`` of the pixel's own initial (occluder) log
    level and dwells at least ``quiet_period_min_us``; failing that, the
    final integrated level is used. Returns (reconstruction, info).
    """
    params.validate()
    if i0.shape != (stream.height, stream.width):
        raise DimensionMismatchError("frame and stream dimensions differ")
    if gt_mask is not None:
        bits = gt_mask.bits
        seg_info = {"no_occlusion": not bits.any(), "occluder_mode": None}
    else:
        est_mask, seg_info = segment_occluded(i0, stream, params)
        bits = est_mask.bits

    out = i0.astype(np.float64, copy=True)
    info = {
        "used_gt_mask": gt_mask is not None,
        "n_occluded": int(np.count_nonzero(bits)),
        "n_fallback": 0,
        **seg_info,
    }
    if not bits.any():
        return out, info

    l0_flat = np.log(i0.astype(np.float64) + params.log_eps).reshape(-1)
    _, t, p, starts = _sorted_csr(stream)
    targets = np.nonzero(bits.reshape(-1))[0].astype(np.int64)
    levels, fallback = _kernels.active().dwell_select(
        t,
        p,
        starts,
        targets,
        l0_flat,
        l0_flat,
        params.contrast_threshold,
        params.similarity_eps,
        int(params.quiet_period_min_us),
        int(stream.t_begin),
        int(stream.t_end),
    )
    values = np.exp(levels) - params.log_eps
    lo, hi = params.intensity_clip
    out.reshape(-1)[targets] = np.clip(values, lo, hi)
    info["n_fallback"] = int(np.count_nonzero(fallback))
    return out, info
