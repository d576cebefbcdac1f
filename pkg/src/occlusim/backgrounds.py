"""Background image loading and seeded procedural synthesis.

Files are read as 8-bit grayscale (PNG or PGM) and normalized to [0, 1] by
dividing by 255. The procedural generator supplies deterministic textured
backgrounds when no image directory is given: multi-scale value noise for
smooth regions plus a few hard-edged patches for structure.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import map_coordinates

from .errors import ConfigurationError

VALUE_RANGE = (0.06, 0.94)


def load_background(path) -> np.ndarray:
    img = Image.open(path).convert("L")
    return np.asarray(img, np.float64) / 255.0


def list_background_files(directory) -> list:
    exts = {".png", ".pgm"}
    files = sorted(p for p in Path(directory).iterdir() if p.suffix.lower() in exts)
    if not files:
        raise ConfigurationError(f"no PNG/PGM backgrounds found in {directory}")
    return files


def _upsample(grid: np.ndarray, h: int, w: int) -> np.ndarray:
    gy = np.linspace(0.0, grid.shape[0] - 1.0, h)
    gx = np.linspace(0.0, grid.shape[1] - 1.0, w)
    yy, xx = np.meshgrid(gy, gx, indexing="ij")
    return map_coordinates(grid, [yy, xx], order=1, mode="nearest")


def synth_background(width: int, height: int, seed: int) -> np.ndarray:
    """Deterministic textured grayscale background in VALUE_RANGE."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xB6]))
    img = np.zeros((height, width))
    amp = 1.0
    for cells in (3, 6, 12, 24, 48):
        gh = max(2, height * cells // 96)
        gw = max(2, width * cells // 96)
        img += amp * _upsample(rng.uniform(-1.0, 1.0, (gh, gw)), height, width)
        amp *= 0.55

    # hard-edged patches give the scene text-like structure
    for _ in range(rng.integers(3, 7)):
        x0 = rng.integers(0, width - 8)
        y0 = rng.integers(0, height - 8)
        pw = int(rng.integers(8, max(9, width // 3)))
        ph = int(rng.integers(8, max(9, height // 3)))
        img[y0 : y0 + ph, x0 : x0 + pw] += rng.uniform(-0.9, 0.9)

    lo, hi = float(img.min()), float(img.max())
    if hi - lo < 1e-12:
        return np.full((height, width), 0.5)
    out = (img - lo) / (hi - lo)
    return VALUE_RANGE[0] + out * (VALUE_RANGE[1] - VALUE_RANGE[0])
