import numpy as np
import pytest

from occlusim.errors import SpanError
from occlusim.events import (
    EventCameraParams,
    concat_streams,
    events_between,
    generate_events,
    log_transform,
    render_time_grid,
)
from occlusim.scene import Particle, SceneConfig, SceneScript, render_frame

from conftest import make_scene


def dense_log_change(script, params, t0, t1):
    """Oracle: log difference between the first and last rendered frames."""
    bounds = render_time_grid(t0, t1, params.render_rate)
    f0, _ = render_frame(script, bounds[0] / 1e6)
    f1, _ = render_frame(script, bounds[-1] / 1e6)
    return np.log(f1 + params.log_eps) - np.log(f0 + params.log_eps)


def step_script(bg_value, particle_intensity, radius=2.0):
    """One particle sliding onto pixel (10, 16) within a single frame pair."""
    cfg = SceneConfig(width=32, height=32, duration=0.01, target_coverage=0.0, seed=0)
    p = Particle(center0=(5.0, 16.0), velocity=(500.0, 0.0), radius=radius,
                 intensity=particle_intensity, z=0)
    return SceneScript(config=cfg, particles=[p],
                       background=np.full((32, 32), bg_value))


def test_log_transform_analytic():
    zeros = np.zeros((8, 8))
    lf = log_transform(zeros, 1e-3)
    assert np.allclose(lf.values, np.log(1e-3))
    ones = np.ones((8, 8))
    assert np.allclose(log_transform(ones, 1e-3).values, np.log(1.001))
    a = np.linspace(0, 1, 64).reshape(8, 8)
    b = a + 0.1
    assert (log_transform(b, 1e-3).values > log_transform(a, 1e-3).values).all()


def test_static_scene_empty_stream():
    bg = np.full((32, 32), 0.4)
    cfg = SceneConfig(width=32, height=32, duration=0.02, target_coverage=0.0, seed=0)
    p = Particle(center0=(16.0, 16.0), velocity=(0.0, 0.0), radius=4.0,
                 intensity=0.1, z=0)
    script = SceneScript(config=cfg, particles=[p], background=bg)
    stream = generate_events(script, EventCameraParams(render_rate=1000))
    assert len(stream) == 0
    assert stream.t_begin == 0
    assert stream.t_end == 20000


def test_step_three_and_a_half_thresholds():
    # a +3.5*C log step at one pixel must yield exactly 3 positive events
    params = EventCameraParams(contrast_threshold=0.15, render_rate=100)
    bg = 0.1
    target = (bg + params.log_eps) * np.exp(3.5 * params.contrast_threshold) - params.log_eps
    script = step_script(bg, target)
    stream = generate_events(script, params)
    at_pixel = (stream.x == 10) & (stream.y == 16)
    assert int(at_pixel.sum()) == 3
    assert (stream.p[at_pixel] == 1).all()


def test_sweep_polarity_bursts_and_quantization():
    # occluder darker than background: negative burst at entry, positive at exit
    cfg = SceneConfig(width=48, height=32, duration=0.04, target_coverage=0.0, seed=0)
    p = Particle(center0=(8.0, 16.0), velocity=(800.0, 0.0), radius=3.0,
                 intensity=0.1, z=0)
    script = SceneScript(config=cfg, particles=[p], background=np.full((32, 48), 0.5))
    params = EventCameraParams(contrast_threshold=0.15, render_rate=2000)
    stream = generate_events(script, params)

    at_pixel = (stream.x == 20) & (stream.y == 16)
    pix_t = stream.t[at_pixel].astype(np.int64)
    pix_p = stream.p[at_pixel].astype(np.int64)
    assert pix_t.size > 0
    flips = np.nonzero(np.diff(pix_p))[0]
    assert flips.size == 1  # one negative burst then one positive burst
    assert pix_p[0] == -1 and pix_p[-1] == 1

    resid = stream.signed_counts() * params.contrast_threshold - dense_log_change(
        script, params, 0.0, cfg.duration
    )
    assert np.abs(resid).max() < params.contrast_threshold


def test_quantization_bound_random_scenes():
    params = EventCameraParams(contrast_threshold=0.15, render_rate=2000)
    for seed in range(4):
        script = make_scene(seed=seed, coverage=0.25)
        stream = generate_events(script, params)
        resid = stream.signed_counts() * params.contrast_threshold - dense_log_change(
            script, params, 0.0, script.config.duration
        )
        assert np.abs(resid).max() < params.contrast_threshold


def test_polarity_matches_log_change_direction(small_scene):
    params = EventCameraParams(render_rate=2000)
    stream = generate_events(small_scene, params)
    # the signed sum per pixel must agree in sign with the net log change
    # wherever the change exceeds one threshold
    change = dense_log_change(small_scene, params, 0.0, small_scene.config.duration)
    counts = stream.signed_counts()
    strong = np.abs(change) > params.contrast_threshold
    assert (np.sign(counts[strong]) == np.sign(change[strong])).all()


def test_stream_invariants_and_determinism(small_scene):
    params = EventCameraParams(render_rate=2000)
    s1 = generate_events(small_scene, params)
    s1.validate()
    s2 = generate_events(small_scene, params)
    from occlusim.evio import stream_to_bytes

    assert stream_to_bytes(s1) == stream_to_bytes(s2)


def test_doubling_render_rate_changes_sums_by_at_most_one(small_scene):
    base = EventCameraParams(render_rate=1000)
    double = EventCameraParams(render_rate=2000)
    c1 = generate_events(small_scene, base).signed_counts()
    c2 = generate_events(small_scene, double).signed_counts()
    assert np.abs(c1 - c2).max() <= 1


def test_refractory_suppresses_close_events():
    params = EventCameraParams(contrast_threshold=0.15, render_rate=100)
    bg = 0.1
    target = (bg + params.log_eps) * np.exp(3.5 * params.contrast_threshold) - params.log_eps
    script = step_script(bg, target)
    # the 3 step events land within ~2 ms of each other at 100 fps rendering
    quiet = generate_events(script, params)
    strict = generate_events(
        script,
        EventCameraParams(contrast_threshold=0.15, render_rate=100, refractory_us=20000),
    )
    at_pixel_quiet = int(((quiet.x == 10) & (quiet.y == 16)).sum())
    at_pixel_strict = int(((strict.x == 10) & (strict.y == 16)).sum())
    assert at_pixel_quiet == 3
    assert at_pixel_strict == 1


def test_jitter_stream_valid_and_deterministic(small_scene):
    params = EventCameraParams(render_rate=1000, threshold_jitter_sigma=0.03)
    s1 = generate_events(small_scene, params)
    s1.validate()
    s2 = generate_events(small_scene, params)
    from occlusim.evio import stream_to_bytes

    assert stream_to_bytes(s1) == stream_to_bytes(s2)
    # jitter changes the stream relative to the noiseless run
    noiseless = generate_events(small_scene, EventCameraParams(render_rate=1000))
    assert stream_to_bytes(s1) != stream_to_bytes(noiseless)


def test_aliasing_warning_recorded():
    cfg = SceneConfig(width=32, height=32, duration=0.02, target_coverage=0.0, seed=0)
    p = Particle(center0=(4.0, 16.0), velocity=(1200.0, 0.0), radius=3.0,
                 intensity=0.1, z=0)
    script = SceneScript(config=cfg, particles=[p], background=np.full((32, 32), 0.5))
    stream = generate_events(script, EventCameraParams(render_rate=1000))
    assert any("aliasing" in w for w in stream.metadata["warnings"])
    calm = generate_events(script, EventCameraParams(render_rate=5000))
    assert calm.metadata["warnings"] == []


def test_events_between_identity_and_partition(small_scene):
    stream = generate_events(small_scene, EventCameraParams(render_rate=1000))
    full = events_between(stream, stream.t_begin, stream.t_end + 1)
    assert len(full) == len(stream)
    assert np.array_equal(full.t, stream.t)

    empty = events_between(stream, 1000, 1000)
    assert len(empty) == 0

    mid = (stream.t_begin + stream.t_end) // 2
    left = events_between(stream, stream.t_begin, mid)
    right = events_between(stream, mid, stream.t_end + 1)
    joined = concat_streams(left, right)
    assert np.array_equal(joined.t, stream.t)
    assert np.array_equal(joined.x, stream.x)
    assert np.array_equal(joined.y, stream.y)
    assert np.array_equal(joined.p, stream.p)


def test_generate_window_validation(small_scene):
    params = EventCameraParams()
    with pytest.raises(SpanError):
        generate_events(small_scene, params, 0.03, 0.01)
    with pytest.raises(SpanError):
        generate_events(small_scene, params, 0.0, small_scene.config.duration * 2)
