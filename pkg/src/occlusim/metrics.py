"""Image-quality metrics (peak 1.0 floats) and coverage-stratified reports.

PSNR uses peak 1.0 with an infinite sentinel for identical inputs. SSIM is
the classic single-scale formulation: 11x11 Gaussian window (sigma 1.5),
K1=0.01, K2=0.03, dynamic range 1.0, averaged over valid window positions.
All metrics are computed on float values, never on quantized PNG bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d

from .errors import ConfigurationError, DimensionMismatchError

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
BUCKETS = (10, 20, 30, 40, 50, 60)


def _check_pair(pred: np.ndarray, gt: np.ndarray):
    if pred.shape != gt.shape:
        raise DimensionMismatchError(f"shape mismatch: {pred.shape} vs {gt.shape}")


def psnr(pred: np.ndarray, gt: np.ndarray) -> float:
    """10*log10(1 / MSE); +inf for identical inputs."""
    _check_pair(pred, gt)
    diff = pred.astype(np.float64) - gt.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def mae(pred: np.ndarray, gt: np.ndarray) -> float:
    _check_pair(pred, gt)
    return float(np.mean(np.abs(pred.astype(np.float64) - gt.astype(np.float64))))


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = size // 2
    g = np.exp(-((np.arange(size, dtype=np.float64) - half) ** 2) / (2.0 * sigma * sigma))
    g /= g.sum()
    w = np.outer(g, g)
    return w / w.sum()


def _filter_valid(img: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Separable windowed mean, cropped to fully-inside window positions."""
    half = taps.shape[0] // 2
    out = correlate1d(img, taps, axis=0, mode="constant")
    out = correlate1d(out, taps, axis=1, mode="constant")
    return out[half:-half, half:-half]


def ssim(pred: np.ndarray, gt: np.ndarray, window: int = SSIM_WINDOW) -> float:
    """Mean local SSIM over all valid window positions."""
    _check_pair(pred, gt)
    if min(pred.shape) < window:
        raise ConfigurationError(f"frame smaller than the {window}x{window} SSIM window")
    half = window // 2
    g = np.exp(-((np.arange(window, dtype=np.float64) - half) ** 2) / (2.0 * SSIM_SIGMA**2))
    g /= g.sum()
    x = pred.astype(np.float64)
    y = gt.astype(np.float64)
    mu_x = _filter_valid(x, g)
    mu_y = _filter_valid(y, g)
    var_x = _filter_valid(x * x, g) - mu_x * mu_x
    var_y = _filter_valid(y * y, g) - mu_y * mu_y
    cov = _filter_valid(x * y, g) - mu_x * mu_y
    c1 = (SSIM_K1 * 1.0) ** 2
    c2 = (SSIM_K2 * 1.0) ** 2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def coverage_bucket(coverage: float) -> int:
    """Nearest decile bucket (percent), clamped to 10..60."""
    return int(min(max(round(coverage * 10.0), 1), 6) * 10)


@dataclass
class MetricsReport:
    psnr_db: float
    ssim: float
    mae: float
    n_samples: int
    per_bucket: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "psnr_db": self.psnr_db,
            "ssim": self.ssim,
            "mae": self.mae,
            "n_samples": self.n_samples,
            "per_bucket": {
                str(b): {
                    "psnr_db": v[0],
                    "ssim": v[1],
                    "mae": v[2],
                    "n": v[3],
                }
                for b, v in sorted(self.per_bucket.items())
            },
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    def to_text(self) -> str:
        def fmt(v):
            if v is None:
                return "-"
            if math.isinf(v):
                return "inf"
            return f"{v:.4f}"

        cols = [f"{b}%" for b in BUCKETS] + ["overall"]
        rows = {"PSNR [dB]": [], "SSIM": [], "MAE": [], "n": []}
        for b in BUCKETS:
            v = self.per_bucket.get(b)
            rows["PSNR [dB]"].append(fmt(v[0]) if v else "-")
            rows["SSIM"].append(fmt(v[1]) if v else "-")
            rows["MAE"].append(fmt(v[2]) if v else "-")
            rows["n"].append(str(v[3]) if v else "-")
        rows["PSNR [dB]"].append(fmt(self.psnr_db))
        rows["SSIM"].append(fmt(self.ssim))
        rows["MAE"].append(fmt(self.mae))
        rows["n"].append(str(self.n_samples))

        width = 10
        lines = ["Coverage ".ljust(12) + "".join(c.rjust(width) for c in cols)]
        for name, cells in rows.items():
            lines.append(name.ljust(12) + "".join(c.rjust(width) for c in cells))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = ["bucket,psnr_db,ssim,mae,n"]
        for b in sorted(self.per_bucket):
            p, s, m, n = self.per_bucket[b]
            lines.append(f"{b},{p!r},{s!r},{m!r},{n}")
        lines.append(f"overall,{self.psnr_db!r},{self.ssim!r},{self.mae!r},{self.n_samples}")
        return "\n".join(lines) + "\n"


def stratified_report(samples: list) -> MetricsReport:
    """Overall and per-coverage-bucket means of (psnr, ssim, mae).

    ``samples`` holds (pred, gt, coverage) triples; the bucket of a sample
    is the nearest decile of its measured coverage.
    """
    if not samples:
        raise ConfigurationError("stratified_report requires at least one sample")
    per_sample = []
    for pred, gt, coverage in samples:
        per_sample.append(
            (coverage_bucket(coverage), psnr(pred, gt), ssim(pred, gt), mae(pred, gt))
        )
    overall = tuple(
        float(np.mean([s[i] for s in per_sample])) for i in (1, 2, 3)
    )
    per_bucket = {}
    for b in BUCKETS:
        rows = [s for s in per_sample if s[0] == b]
        if rows:
            per_bucket[b] = (
                float(np.mean([r[1] for r in rows])),
                float(np.mean([r[2] for r in rows])),
                float(np.mean([r[3] for r in rows])),
                len(rows),
            )
    return MetricsReport(
        psnr_db=overall[0],
        ssim=overall[1],
        mae=overall[2],
        n_samples=len(samples),
        per_bucket=per_bucket,
    )
