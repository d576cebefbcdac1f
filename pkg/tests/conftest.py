import pytest

from occlusim.backgrounds import synth_background
from occlusim.scene import SceneConfig, sample_scene


@pytest.fixture
def small_background():
    return synth_background(96, 80, seed=3)


@pytest.fixture
def small_config():
    return SceneConfig(
        width=96,
        height=80,
        duration=0.05,
        target_coverage=0.3,
        radius_range=(3.0, 7.0),
        intensity_range=(0.1, 0.4),
        speed_range=(200.0, 500.0),
        seed=7,
    )


@pytest.fixture
def small_scene(small_config, small_background):
    return sample_scene(small_config, small_background)


def make_scene(seed=0, coverage=0.3, width=96, height=80, duration=0.05,
               radius=(3.0, 7.0), intensity=(0.1, 0.4), speed=(200.0, 500.0),
               background=None):
    cfg = SceneConfig(
        width=width,
        height=height,
        duration=duration,
        target_coverage=coverage,
        radius_range=radius,
        intensity_range=intensity,
        speed_range=speed,
        seed=seed,
    )
    if background is None:
        background = synth_background(width, height, seed=seed + 1000)
    return sample_scene(cfg, background)
