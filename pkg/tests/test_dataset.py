import json

import numpy as np
import pytest

from occlusim.dataset import (
    SequenceArtifacts,
    checksum64,
    read_manifest,
    read_sequence,
    write_sequence,
)
from occlusim.errors import ChecksumError, MissingFileError, SchemaVersionError
from occlusim.events import EventCameraParams, generate_events
from occlusim.evio import read_evb, read_events_csv, write_evb, write_events_csv
from occlusim.representations import build_representations
from occlusim.scene import coverage_ratio, render_frame

from conftest import make_scene


def build_artifacts(seed=11, coverage=0.25):
    script = make_scene(seed=seed, coverage=coverage)
    params = EventCameraParams(render_rate=1000)
    occluded, mask = render_frame(script, 0.0)
    stream = generate_events(script, params)
    stack = build_representations(stream, 5)
    return SequenceArtifacts(
        seed=script.config.seed,
        scene_config=script.config,
        event_params=params,
        occluded=occluded,
        gt=script.background,
        mask=mask,
        stream=stream,
        repr_stack=stack,
        measured_coverage=coverage_ratio(mask),
        background_ref=f"synth:{script.config.seed}",
    )


def test_evb_round_trip(tmp_path):
    art = build_artifacts()
    path = tmp_path / "events.evb"
    write_evb(path, art.stream)
    back = read_evb(path, t_begin=art.stream.t_begin, t_end=art.stream.t_end)
    assert np.array_equal(back.t, art.stream.t)
    assert np.array_equal(back.x, art.stream.x)
    assert np.array_equal(back.y, art.stream.y)
    assert np.array_equal(back.p, art.stream.p)
    assert (back.width, back.height) == (art.stream.width, art.stream.height)
    # file-level bit exactness: rewrite gives identical bytes
    path2 = tmp_path / "events2.evb"
    write_evb(path2, back)
    assert path.read_bytes() == path2.read_bytes()


def test_evb_rejects_corruption(tmp_path):
    art = build_artifacts()
    path = tmp_path / "events.evb"
    write_evb(path, art.stream)
    data = bytearray(path.read_bytes())
    data[0] ^= 0xFF
    path.write_bytes(bytes(data))
    with pytest.raises(ChecksumError):
        read_evb(path)

    write_evb(path, art.stream)
    path.write_bytes(path.read_bytes()[:-3])  # truncated body
    with pytest.raises(ChecksumError):
        read_evb(path)


def test_events_csv_round_trip(tmp_path):
    art = build_artifacts()
    path = tmp_path / "events.csv"
    write_events_csv(path, art.stream)
    back = read_events_csv(path, art.stream.width, art.stream.height)
    assert np.array_equal(back.t, art.stream.t)
    assert np.array_equal(back.p, art.stream.p)
    assert path.read_text().splitlines()[0] == "t_us,x,y,p"


def test_sequence_round_trip(tmp_path):
    art = build_artifacts()
    manifest = write_sequence(tmp_path / "seq", art)
    assert (tmp_path / "seq" / "manifest.json").exists()

    back = read_sequence(tmp_path / "seq")
    assert np.allclose(back.occluded, art.occluded, atol=1e-7)  # float32 storage
    assert np.allclose(back.gt, art.gt, atol=1e-7)
    assert np.array_equal(back.mask.bits, art.mask.bits)
    assert np.array_equal(back.stream.t, art.stream.t)
    assert back.stream.t_begin == art.stream.t_begin
    assert back.stream.t_end == art.stream.t_end
    for mine, theirs in zip(back.repr_stack.frames, art.repr_stack.frames):
        assert np.array_equal(mine.values, theirs.values)
        assert mine.interval == theirs.interval
    assert back.scene_config == art.scene_config
    assert back.event_params == art.event_params
    assert back.measured_coverage == art.measured_coverage


def test_f32_round_trip_bit_exact(tmp_path):
    art = build_artifacts()
    write_sequence(tmp_path / "seq", art)
    raw = (tmp_path / "seq" / "gt.f32").read_bytes()
    assert raw == art.gt.astype("<f4").tobytes()


def test_same_seed_identical_checksums(tmp_path):
    m1 = write_sequence(tmp_path / "a", build_artifacts(seed=5))
    m2 = write_sequence(tmp_path / "b", build_artifacts(seed=5))
    assert m1.checksums == m2.checksums
    m3 = write_sequence(tmp_path / "c", build_artifacts(seed=6))
    assert m1.checksums != m3.checksums


def test_tampered_file_rejected(tmp_path):
    art = build_artifacts()
    write_sequence(tmp_path / "seq", art)
    evb = tmp_path / "seq" / "events.evb"
    data = bytearray(evb.read_bytes())
    data[40] ^= 0x01
    evb.write_bytes(bytes(data))
    with pytest.raises(ChecksumError):
        read_sequence(tmp_path / "seq")


def test_missing_file_named_in_error(tmp_path):
    art = build_artifacts()
    write_sequence(tmp_path / "seq", art)
    (tmp_path / "seq" / "mask.png").unlink()
    with pytest.raises(MissingFileError, match="mask.png"):
        read_sequence(tmp_path / "seq")


def test_missing_manifest(tmp_path):
    with pytest.raises(MissingFileError):
        read_sequence(tmp_path / "nothing")


def test_unknown_schema_version_rejected(tmp_path):
    art = build_artifacts()
    write_sequence(tmp_path / "seq", art)
    path = tmp_path / "seq" / "manifest.json"
    doc = json.loads(path.read_text())
    doc["schema_version"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(SchemaVersionError):
        read_manifest(tmp_path / "seq")


def test_checksum64_is_stable():
    assert checksum64(b"") == checksum64(b"")
    assert len(checksum64(b"abc")) == 16  # 64-bit hex
    assert checksum64(b"abc") != checksum64(b"abd")


def test_regeneration_from_manifest_reproduces_checksums(tmp_path):
    from occlusim.pipeline import GenerateJob, regenerate_sequence, run_generate_job

    job = GenerateJob(
        seq_dir=str(tmp_path / "orig"),
        scene_config=build_artifacts(seed=9).scene_config,
        event_params=EventCameraParams(render_rate=1000),
        n_repr=5,
        tau_us=None,
        background_path=None,
    )
    run_generate_job(job)
    manifest = read_manifest(tmp_path / "orig")
    regenerate_sequence(manifest, tmp_path / "regen")
    assert read_manifest(tmp_path / "regen").checksums == manifest.checksums
