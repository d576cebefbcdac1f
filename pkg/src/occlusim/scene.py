"""Moving-disc occlusion scenes over a static background.

A scene is a seeded set of circular particles with constant-velocity
trajectories. Rendering is exact at any continuous time: a pixel (x, y) is
occluded iff its center lies strictly within some disc, and the covering
disc with the highest draw rank supplies the intensity. No anti-aliasing,
so masks are exact booleans and rendered values come from a finite set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigurationError, CoverageCalibrationError, DimensionMismatchError

COVERAGE_TOL = 0.02
_CALIBRATION_ITERS = 20


@dataclass(frozen=True)
class SceneConfig:
    width: int = 512
    height: int = 384
    duration: float = 0.05
    target_coverage: float = 0.3
    radius_range: tuple = (8.0, 16.0)
    intensity_range: tuple = (0.11, 0.14)
    speed_range: tuple = (300.0, 600.0)
    seed: int = 0

    def validate(self):
        if self.width < 16 or self.height < 16:
            raise ConfigurationError("width and height must be >= 16")
        if not 0.0 <= self.target_coverage <= 0.9:
            raise ConfigurationError("target_coverage must lie in [0, 0.9]")
        for name in ("radius_range", "intensity_range", "speed_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigurationError(f"{name} must satisfy min <= max")
        if self.radius_range[0] < 1.0:
            raise ConfigurationError("minimum radius must be >= 1 px")
        if not 0.0 <= self.intensity_range[0] <= self.intensity_range[1] <= 1.0:
            raise ConfigurationError("intensity_range must lie in [0, 1]")
        if self.duration <= 0:
            raise ConfigurationError("duration must be positive")

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "duration": self.duration,
            "target_coverage": self.target_coverage,
            "radius_range": list(self.radius_range),
            "intensity_range": list(self.intensity_range),
            "speed_range": list(self.speed_range),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneConfig":
        return cls(
            width=int(d["width"]),
            height=int(d["height"]),
            duration=float(d["duration"]),
            target_coverage=float(d["target_coverage"]),
            radius_range=tuple(d["radius_range"]),
            intensity_range=tuple(d["intensity_range"]),
            speed_range=tuple(d["speed_range"]),
            seed=int(d["seed"]),
        )


@dataclass(frozen=True)
class Particle:
    center0: tuple
    velocity: tuple
    radius: float
    intensity: float
    z: int


@dataclass
class OcclusionMask:
    width: int
    height: int
    bits: np.ndarray
    t: float

    def __post_init__(self):
        if self.bits.shape != (self.height, self.width):
            raise DimensionMismatchError("mask bits do not match stated dimensions")


@dataclass
class SceneScript:
    config: SceneConfig
    particles: list
    background: np.ndarray
    background_ref: str = ""

    def to_json(self) -> str:
        doc = {
            "config": self.config.to_dict(),
            "particles": [
                {
                    "center0": list(p.center0),
                    "velocity": list(p.velocity),
                    "radius": p.radius,
                    "intensity": p.intensity,
                    "z": p.z,
                }
                for p in self.particles
            ],
            "background": self.background_ref,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str, background: np.ndarray) -> "SceneScript":
        doc = json.loads(text)
        cfg = SceneConfig.from_dict(doc["config"])
        particles = [
            Particle(
                center0=tuple(p["center0"]),
                velocity=tuple(p["velocity"]),
                radius=float(p["radius"]),
                intensity=float(p["intensity"]),
                z=int(p["z"]),
            )
            for p in doc["particles"]
        ]
        return cls(config=cfg, particles=particles, background=background,
                   background_ref=doc["background"])

    def particle_arrays(self, t: float):
        """(cx, cy, radius, intensity) arrays at time t, in z order."""
        n = len(self.particles)
        cx = np.empty(n)
        cy = np.empty(n)
        rad = np.empty(n)
        inten = np.empty(n)
        for i, p in enumerate(self.particles):
            cx[i] = p.center0[0] + p.velocity[0] * t
            cy[i] = p.center0[1] + p.velocity[1] * t
            rad[i] = p.radius
            inten[i] = p.intensity
        return cx, cy, rad, inten

    @property
    def max_speed(self) -> float:
        if not self.particles:
            return 0.0
        return max(float(np.hypot(*p.velocity)) for p in self.particles)


def particle_position(p: Particle, t: float) -> tuple:
    """Exact sub-pixel center at time t (linear constant-velocity motion)."""
    if t < 0:
        raise ConfigurationError("t must be >= 0")
    return (p.center0[0] + p.velocity[0] * t, p.center0[1] + p.velocity[1] * t)


def _sample_pool(config: SceneConfig):
    """Draw an oversized, seeded particle pool; scenes use a prefix of it.

    Coverage is monotone in the prefix length, which makes calibration a
    search over one integer.
    """
    rlo, rhi = config.radius_range
    r_sq_mean = (rlo * rlo + rlo * rhi + rhi * rhi) / 3.0
    area = config.width * config.height
    alpha = -np.log(max(1.0 - min(config.target_coverage + 0.05, 0.93), 1e-9))
    pool = int(np.ceil(alpha * area / (np.pi * r_sq_mean) * 1.8)) + 16

    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    cx = rng.uniform(0.0, config.width, pool)
    cy = rng.uniform(0.0, config.height, pool)
    theta = rng.uniform(0.0, 2.0 * np.pi, pool)
    speed = rng.uniform(config.speed_range[0], config.speed_range[1], pool)
    radius = rng.uniform(rlo, rhi, pool)
    intensity = rng.uniform(config.intensity_range[0], config.intensity_range[1], pool)
    vx = speed * np.cos(theta)
    vy = speed * np.sin(theta)
    return cx, cy, vx, vy, radius, intensity


def _prefix_coverage(config: SceneConfig, cx, cy, radius):
    """Fraction of pixels covered by the first n pool discs, for every n.

    Paints each pixel with the index of its first covering disc, then takes
    cumulative counts: one rasterization pays for all prefix queries.
    """
    h, w = config.height, config.width
    first = np.full((h, w), -1, np.int32)
    n = cx.shape[0]
    for i in range(n):
        r = radius[i]
        x0 = max(int(np.ceil(cx[i] - r)), 0)
        x1 = min(int(np.floor(cx[i] + r)), w - 1)
        y0 = max(int(np.ceil(cy[i] - r)), 0)
        y1 = min(int(np.floor(cy[i] + r)), h - 1)
        if x0 > x1 or y0 > y1:
            continue
        dx = np.arange(x0, x1 + 1, dtype=np.float64) - cx[i]
        dy = np.arange(y0, y1 + 1, dtype=np.float64) - cy[i]
        inside = dx[None, :] * dx[None, :] + dy[:, None] * dy[:, None] < r * r
        block = first[y0 : y1 + 1, x0 : x1 + 1]
        block[inside & (block == -1)] = i
    covered = first[first >= 0]
    per_disc = np.bincount(covered, minlength=n)
    return np.cumsum(per_disc) / float(h * w)


def calibrate_count(config: SceneConfig) -> int:
    """Particle count whose measured t=0 coverage hits the target +-0.02.

    Starts from the Boolean-model estimate n = ln(1/(1-c)) * W*H / (pi*E[r^2])
    and refines by bisection against measured prefix coverage (bounded
    iterations; coverage is monotone in the prefix length).
    """
    config.validate()
    if config.target_coverage == 0.0:
        return 0
    cx, cy, vx, vy, radius, intensity = _sample_pool(config)
    cov = _prefix_coverage(config, cx, cy, radius)
    pool = cov.shape[0]

    rlo, rhi = config.radius_range
    r_sq_mean = (rlo * rlo + rlo * rhi + rhi * rhi) / 3.0
    alpha = -np.log(1.0 - config.target_coverage)
    n = int(round(alpha * config.width * config.height / (np.pi * r_sq_mean)))
    n = min(max(n, 1), pool)

    lo, hi = 1, pool
    best_n, best_err = n, abs(cov[n - 1] - config.target_coverage)
    for _ in range(_CALIBRATION_ITERS):
        if best_err <= COVERAGE_TOL:
            break
        if cov[n - 1] < config.target_coverage:
            lo = n + 1
        else:
            hi = n - 1
        if lo > hi:
            break
        n = (lo + hi) // 2
        err = abs(cov[n - 1] - config.target_coverage)
        if err < best_err:
            best_n, best_err = n, err
    if best_err > COVERAGE_TOL:
        raise CoverageCalibrationError(
            f"cannot reach coverage {config.target_coverage:.3f} within "
            f"{COVERAGE_TOL} (closest: {cov[best_n - 1]:.3f} with {best_n} particles)"
        )
    return best_n


def sample_scene(config: SceneConfig, background: np.ndarray) -> SceneScript:
    """Seeded scene whose measured t=0 coverage is within +-0.02 of target."""
    config.validate()
    if background.shape != (config.height, config.width):
        raise DimensionMismatchError(
            f"background shape {background.shape} does not match config "
            f"({config.height}, {config.width})"
        )
    n = calibrate_count(config)
    cx, cy, vx, vy, radius, intensity = _sample_pool(config) if n else ([],) * 6
    particles = [
        Particle(
            center0=(float(cx[i]), float(cy[i])),
            velocity=(float(vx[i]), float(vy[i])),
            radius=float(radius[i]),
            intensity=float(intensity[i]),
            z=i,
        )
        for i in range(n)
    ]
    return SceneScript(config=config, particles=particles, background=background)


def render_frame(script: SceneScript, t: float):
    """Occluded frame and exact occlusion mask at time t.

    Occluded pixel value = intensity of the covering particle with the
    highest z; everything else is the static background.
    """
    cfg = script.config
    if not 0.0 <= t <= cfg.duration:
        raise ConfigurationError(f"t={t} outside scene duration [0, {cfg.duration}]")
    ids = np.full((cfg.height, cfg.width), -1, np.int32)
    frame = script.background.astype(np.float64, copy=True)
    cx, cy, rad, inten = script.particle_arrays(t)
    _kernels.active().paint(ids, frame, cx, cy, rad, inten)
    mask = OcclusionMask(width=cfg.width, height=cfg.height, bits=ids >= 0, t=t)
    return frame, mask


def coverage_ratio(mask: OcclusionMask) -> float:
    """Fraction of pixels flagged occluded."""
    return float(np.count_nonzero(mask.bits)) / (mask.width * mask.height)


def unoccluded_time(script: SceneScript, t0: float, t1: float, rate: float):
    """Per-pixel background exposure (microseconds) on a sampling grid.

    Samples occlusion state at ``rate`` frames per second and credits each
    interval to the state at its start. Returns (total, longest_run): the
    total unoccluded time and the longest contiguous unoccluded stretch per
    pixel. A contiguous stretch is what guarantees an uninterrupted dwell
    for dwell-based reconstruction.
    """
    from .events import render_time_grid  # local import to avoid a cycle

    bounds = render_time_grid(t0, t1, rate)
    cfg = script.config
    ids = np.empty((cfg.height, cfg.width), np.int32)
    vals = np.empty((cfg.height, cfg.width), np.float64)
    c0x, c0y, rad, _ = script.particle_arrays(0.0)
    vx = np.array([p.velocity[0] for p in script.particles])
    vy = np.array([p.velocity[1] for p in script.particles])
    dummy = np.zeros(len(script.particles))
    kern = _kernels.active()
    total = np.zeros((cfg.height, cfg.width), np.int64)
    run = np.zeros((cfg.height, cfg.width), np.int64)
    best = np.zeros((cfg.height, cfg.width), np.int64)
    for i in range(bounds.shape[0] - 1):
        ids.fill(-1)
        t_s = bounds[i] / 1e6
        kern.paint(ids, vals, c0x + vx * t_s, c0y + vy * t_s, rad, dummy)
        free = ids < 0
        dt = int(bounds[i + 1] - bounds[i])
        total[free] += dt
        run[free] += dt
        run[~free] = 0
        np.maximum(best, run, out=best)
    return total, best
