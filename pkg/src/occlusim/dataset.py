"""Bit-exact on-disk dataset layout for generated sequences.

Each sequence directory holds the occluded frame, ground-truth frame and
mask, the event file, the representation stack, and a manifest written
last (data is fsynced before the manifest, so a present manifest implies a
complete directory). Frames are stored twice: 8-bit PNG for viewing and
raw little-endian float32 for metric-grade reads.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ChecksumError, MissingFileError, SchemaVersionError
from .events import EventCameraParams, EventStream
from .representations import ReprStack, accum_from_bytes, accum_to_bytes
from .scene import OcclusionMask, SceneConfig

SCHEMA_VERSION = 1

FILE_OCCLUDED_PNG = "occluded.png"
FILE_OCCLUDED_F32 = "occluded.f32"
FILE_GT_PNG = "gt.png"
FILE_GT_F32 = "gt.f32"
FILE_MASK_PNG = "mask.png"
FILE_EVENTS = "events.evb"
FILE_MANIFEST = "manifest.json"
REPR_DIR = "repr"


def checksum64(data: bytes) -> str:
    return hashlib.blake2b(data, digest_size=8).hexdigest()


def _write_file(path: Path, data: bytes) -> str:
    with open(path, "wb") as f:
        f.write(data)
        f.flush()
        os.fsync(f.fileno())
    return checksum64(data)


def _png_bytes(arr: np.ndarray) -> bytes:
    import io

    img = Image.fromarray(arr, mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def frame_to_png_bytes(frame: np.ndarray) -> bytes:
    return _png_bytes(np.clip(np.rint(frame * 255.0), 0, 255).astype(np.uint8))


def mask_to_png_bytes(bits: np.ndarray) -> bytes:
    return _png_bytes((bits.astype(np.uint8)) * 255)


def frame_to_f32_bytes(frame: np.ndarray) -> bytes:
    return frame.astype("<f4").tobytes()


def f32_bytes_to_frame(data: bytes, width: int, height: int) -> np.ndarray:
    return np.frombuffer(data, "<f4").reshape(height, width).astype(np.float64)


@dataclass
class SequenceManifest:
    schema_version: int
    seed: int
    scene_config: dict
    event_params: dict
    files: dict
    checksums: dict
    measured_coverage: float
    stream_meta: dict
    background_ref: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema_version": self.schema_version,
                "seed": self.seed,
                "scene_config": self.scene_config,
                "event_params": self.event_params,
                "files": self.files,
                "checksums": self.checksums,
                "measured_coverage": self.measured_coverage,
                "stream_meta": self.stream_meta,
                "background_ref": self.background_ref,
            },
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "SequenceManifest":
        d = json.loads(text)
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaVersionError(f"unknown manifest schema_version {version!r}")
        return cls(
            schema_version=version,
            seed=int(d["seed"]),
            scene_config=d["scene_config"],
            event_params=d["event_params"],
            files=d["files"],
            checksums=d["checksums"],
            measured_coverage=float(d["measured_coverage"]),
            stream_meta=d["stream_meta"],
            background_ref=d.get("background_ref", ""),
        )


@dataclass
class SequenceArtifacts:
    seed: int
    scene_config: SceneConfig
    event_params: EventCameraParams
    occluded: np.ndarray
    gt: np.ndarray
    mask: OcclusionMask
    stream: EventStream
    repr_stack: ReprStack
    measured_coverage: float
    background_ref: str = ""


def write_sequence(seq_dir, art: SequenceArtifacts) -> SequenceManifest:
    """Write all artifacts, fsync them, then write the manifest last."""
    seq_dir = Path(seq_dir)
    (seq_dir / REPR_DIR).mkdir(parents=True, exist_ok=True)

    checksums = {}
    files = {
        "occluded_png": FILE_OCCLUDED_PNG,
        "occluded_f32": FILE_OCCLUDED_F32,
        "gt_png": FILE_GT_PNG,
        "gt_f32": FILE_GT_F32,
        "mask_png": FILE_MASK_PNG,
        "events": FILE_EVENTS,
        "repr": [],
    }
    checksums[FILE_OCCLUDED_PNG] = _write_file(
        seq_dir / FILE_OCCLUDED_PNG, frame_to_png_bytes(art.occluded)
    )
    checksums[FILE_OCCLUDED_F32] = _write_file(
        seq_dir / FILE_OCCLUDED_F32, frame_to_f32_bytes(art.occluded)
    )
    checksums[FILE_GT_PNG] = _write_file(seq_dir / FILE_GT_PNG, frame_to_png_bytes(art.gt))
    checksums[FILE_GT_F32] = _write_file(seq_dir / FILE_GT_F32, frame_to_f32_bytes(art.gt))
    checksums[FILE_MASK_PNG] = _write_file(seq_dir / FILE_MASK_PNG, mask_to_png_bytes(art.mask.bits))

    from .evio import stream_to_bytes

    checksums[FILE_EVENTS] = _write_file(seq_dir / FILE_EVENTS, stream_to_bytes(art.stream))

    for i, frame in enumerate(art.repr_stack.frames):
        raw, sidecar = accum_to_bytes(frame)
        raw_name = f"{REPR_DIR}/{i:02d}.s16"
        side_name = f"{REPR_DIR}/{i:02d}.json"
        checksums[raw_name] = _write_file(seq_dir / raw_name, raw)
        checksums[side_name] = _write_file(seq_dir / side_name, sidecar.encode())
        files["repr"].append(raw_name)

    manifest = SequenceManifest(
        schema_version=SCHEMA_VERSION,
        seed=art.seed,
        scene_config=art.scene_config.to_dict(),
        event_params=art.event_params.to_dict(),
        files=files,
        checksums=checksums,
        measured_coverage=art.measured_coverage,
        stream_meta={
            "t_begin": art.stream.t_begin,
            "t_end": art.stream.t_end,
            "n_events": len(art.stream),
            "warnings": art.stream.metadata.get("warnings", []),
        },
        background_ref=art.background_ref,
    )
    _write_file(seq_dir / FILE_MANIFEST, manifest.to_json().encode())
    dir_fd = os.open(seq_dir, os.O_RDONLY)
    try:
        os.fsync(dir_fd)
    finally:
        os.close(dir_fd)
    return manifest


def _read_checked(seq_dir: Path, name: str, checksums: dict) -> bytes:
    path = seq_dir / name
    if not path.exists():
        raise MissingFileError(f"missing file {name} in {seq_dir}")
    data = path.read_bytes()
    want = checksums.get(name)
    got = checksum64(data)
    if want != got:
        raise ChecksumError(f"checksum mismatch for {name}: manifest {want}, file {got}")
    return data


def read_manifest(seq_dir) -> SequenceManifest:
    path = Path(seq_dir) / FILE_MANIFEST
    if not path.exists():
        raise MissingFileError(f"missing manifest in {seq_dir}")
    return SequenceManifest.from_json(path.read_text())


def read_sequence(seq_dir) -> SequenceArtifacts:
    """Load and checksum-validate a sequence directory."""
    seq_dir = Path(seq_dir)
    manifest = read_manifest(seq_dir)
    cfg = SceneConfig.from_dict(manifest.scene_config)
    params = EventCameraParams.from_dict(manifest.event_params)

    occluded = f32_bytes_to_frame(
        _read_checked(seq_dir, FILE_OCCLUDED_F32, manifest.checksums), cfg.width, cfg.height
    )
    gt = f32_bytes_to_frame(
        _read_checked(seq_dir, FILE_GT_F32, manifest.checksums), cfg.width, cfg.height
    )
    _read_checked(seq_dir, FILE_OCCLUDED_PNG, manifest.checksums)
    _read_checked(seq_dir, FILE_GT_PNG, manifest.checksums)
    mask_png = _read_checked(seq_dir, FILE_MASK_PNG, manifest.checksums)

    import io

    mask_bits = np.asarray(Image.open(io.BytesIO(mask_png)), np.uint8) > 0
    mask = OcclusionMask(cfg.width, cfg.height, mask_bits, 0.0)

    from .evio import bytes_to_stream

    stream = bytes_to_stream(
        _read_checked(seq_dir, FILE_EVENTS, manifest.checksums),
        t_begin=manifest.stream_meta["t_begin"],
        t_end=manifest.stream_meta["t_end"],
    )
    stream.metadata = {"warnings": list(manifest.stream_meta.get("warnings", []))}

    frames = []
    for raw_name in manifest.files["repr"]:
        side_name = raw_name[:-4] + ".json"
        raw = _read_checked(seq_dir, raw_name, manifest.checksums)
        sidecar = _read_checked(seq_dir, side_name, manifest.checksums).decode()
        frames.append(accum_from_bytes(raw, sidecar))

    return SequenceArtifacts(
        seed=manifest.seed,
        scene_config=cfg,
        event_params=params,
        occluded=occluded,
        gt=gt,
        mask=mask,
        stream=stream,
        repr_stack=ReprStack(frames=frames),
        measured_coverage=manifest.measured_coverage,
        background_ref=manifest.background_ref,
    )


def list_sequences(root) -> list:
    root = Path(root)
    if not root.exists():
        return []
    return sorted(p for p in root.iterdir() if (p / FILE_MANIFEST).exists())
