import numpy as np
import pytest

from occlusim.errors import SpanError
from occlusim.events import EventCameraParams, EventStream, generate_events
from occlusim.representations import (
    AccumFrame,
    accum_from_bytes,
    accum_to_bytes,
    accumulate,
    build_representations,
    event_preview,
)


def random_stream(seed, n=500, width=32, height=24, t_end=100000):
    rng = np.random.default_rng(seed)
    t = np.sort(rng.integers(0, t_end, n).astype(np.uint64))
    x = rng.integers(0, width, n).astype(np.uint16)
    y = rng.integers(0, height, n).astype(np.uint16)
    p = rng.choice([-1, 1], n).astype(np.int8)
    order = np.lexsort((p, x, y, t))
    return EventStream(width=width, height=height, t=t[order], x=x[order],
                       y=y[order], p=p[order], t_begin=0, t_end=t_end)


def test_accumulate_empty_and_single():
    s = random_stream(0, n=0)
    frame = accumulate(s, 0, 1000)
    assert frame.values.dtype == np.int32
    assert not frame.values.any()

    one = EventStream(width=8, height=8, t=np.array([5], np.uint64),
                      x=np.array([3], np.uint16), y=np.array([2], np.uint16),
                      p=np.array([1], np.int8), t_begin=0, t_end=10)
    frame = accumulate(one, 0, 10)
    assert frame.values[2, 3] == 1
    assert frame.values.sum() == 1


def test_accumulate_additivity():
    s = random_stream(1)
    total = accumulate(s, 0, s.t_end)
    left = accumulate(s, 0, s.t_end // 2)
    right = accumulate(s, s.t_end // 2, s.t_end)
    assert np.array_equal(total.values, left.values + right.values)


def test_build_representations_tiling():
    s = random_stream(2, t_end=100000)
    stack = build_representations(s, n=5, tau_us=20000)
    assert len(stack) == 5
    for i, f in enumerate(stack.frames):
        assert f.interval == (i * 20000, (i + 1) * 20000)
    # stack sum equals the direct full-window accumulation
    assert np.array_equal(stack.summed(), accumulate(s, 0, 100000).values)


def test_build_representations_default_n_is_five():
    s = random_stream(3)
    stack = build_representations(s)
    assert len(stack) == 5


def test_build_representations_single_bin():
    s = random_stream(4)
    stack = build_representations(s, n=1, tau_us=s.t_end)
    assert np.array_equal(stack.frames[0].values, accumulate(s, 0, s.t_end).values)


def test_build_representations_span_error():
    s = random_stream(5, t_end=1000)
    with pytest.raises(SpanError):
        build_representations(s, n=5, tau_us=300)


def test_stack_sum_from_generated_scene(small_scene):
    stream = generate_events(small_scene, EventCameraParams(render_rate=1000))
    stack = build_representations(stream, n=5)
    tau = (stream.t_end - stream.t_begin) // 5
    assert np.array_equal(
        stack.summed(), accumulate(stream, stream.t_begin, stream.t_begin + 5 * tau).values
    )


def test_event_preview_colors():
    values = np.zeros((4, 4), np.int32)
    frame = AccumFrame(width=4, height=4, values=values, interval=(0, 10))
    rgb = event_preview(frame)
    assert (rgb == 255).all()

    values[1, 2] = 1
    rgb = event_preview(frame)
    assert rgb[1, 2, 0] == 255 and rgb[1, 2, 1] < 255 and rgb[1, 2, 2] < 255

    flipped = AccumFrame(width=4, height=4, values=-values, interval=(0, 10))
    rgb_flip = event_preview(flipped)
    assert np.array_equal(rgb[..., 0], rgb_flip[..., 2])
    assert np.array_equal(rgb[..., 2], rgb_flip[..., 0])
    assert np.array_equal(rgb[..., 1], rgb_flip[..., 1])


def test_accum_round_trip_bytes():
    values = np.arange(-6, 6, dtype=np.int32).reshape(3, 4)
    frame = AccumFrame(width=4, height=3, values=values, interval=(100, 200))
    raw, sidecar = accum_to_bytes(frame)
    back = accum_from_bytes(raw, sidecar)
    assert np.array_equal(back.values, values)
    assert back.interval == (100, 200)
    assert (back.width, back.height) == (4, 3)
