"""Sequence-level orchestration shared by the CLI and tests.

A sequence is fully determined by (scene config, event params, background
source); per-sequence seeds derive from the master seed and the sequence
index, so datasets regenerate bit-identically from their manifests.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .backgrounds import load_background, synth_background
from .dataset import (
    SequenceArtifacts,
    frame_to_f32_bytes,
    frame_to_png_bytes,
    list_sequences,
    read_sequence,
    write_sequence,
)
from .errors import ConfigurationError, MissingFileError
from .events import EventCameraParams, generate_events
from .metrics import MetricsReport, mae, psnr, ssim, stratified_report
from .reconstruct import AccumParams, reconstruct_background
from .representations import build_representations
from .scene import SceneConfig, coverage_ratio, render_frame, sample_scene

COVERAGE_CYCLE = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)

FILE_RECON_F32 = "recon.f32"
FILE_RECON_PNG = "recon.png"
FILE_RECON_META = "recon_meta.json"


def derive_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence((master_seed, index)).generate_state(1, np.uint64)[0])


def sequence_targets(n: int, fixed_coverage: float | None = None) -> list:
    """Per-sequence coverage targets, cycling the six deciles by default."""
    if fixed_coverage is not None:
        return [fixed_coverage] * n
    return [COVERAGE_CYCLE[i % len(COVERAGE_CYCLE)] for i in range(n)]


@dataclass(frozen=True)
class GenerateJob:
    seq_dir: str
    scene_config: SceneConfig
    event_params: EventCameraParams
    n_repr: int
    tau_us: int | None
    background_path: str | None


def run_generate_job(job: GenerateJob) -> dict:
    cfg = job.scene_config
    if job.background_path:
        background = load_background(job.background_path)
        if background.shape != (cfg.height, cfg.width):
            raise ConfigurationError(
                f"background {job.background_path} is {background.shape}, "
                f"config wants ({cfg.height}, {cfg.width})"
            )
        background_ref = str(job.background_path)
    else:
        background = synth_background(cfg.width, cfg.height, cfg.seed)
        background_ref = f"synth:{cfg.seed}"

    script = sample_scene(cfg, background)
    occluded, mask = render_frame(script, 0.0)
    stream = generate_events(script, job.event_params)
    stack = build_representations(stream, job.n_repr, job.tau_us)
    coverage = coverage_ratio(mask)

    art = SequenceArtifacts(
        seed=cfg.seed,
        scene_config=cfg,
        event_params=job.event_params,
        occluded=occluded,
        gt=background,
        mask=mask,
        stream=stream,
        repr_stack=stack,
        measured_coverage=coverage,
        background_ref=background_ref,
    )
    write_sequence(job.seq_dir, art)
    return {"seq_dir": job.seq_dir, "coverage": coverage, "n_events": len(stream)}


def generate_dataset(
    root,
    n_sequences: int,
    master_seed: int,
    scene_config: SceneConfig,
    event_params: EventCameraParams,
    n_repr: int = 5,
    tau_us: int | None = None,
    fixed_coverage: float | None = None,
    background_dir=None,
    workers: int = 1,
) -> list:
    """Generate n sequences under root; returns per-sequence summaries."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    backgrounds = None
    if background_dir:
        from .backgrounds import list_background_files

        backgrounds = list_background_files(background_dir)

    targets = sequence_targets(n_sequences, fixed_coverage)
    jobs = []
    for i in range(n_sequences):
        cfg = replace(
            scene_config, seed=derive_seed(master_seed, i), target_coverage=targets[i]
        )
        jobs.append(
            GenerateJob(
                seq_dir=str(root / f"seq_{i:04d}"),
                scene_config=cfg,
                event_params=event_params,
                n_repr=n_repr,
                tau_us=tau_us,
                background_path=str(backgrounds[i % len(backgrounds)]) if backgrounds else None,
            )
        )
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_generate_job, jobs))
    return [run_generate_job(job) for job in jobs]


def regenerate_sequence(manifest, seq_dir) -> dict:
    """Rebuild a sequence directory from its manifest (seed + configs)."""
    cfg = SceneConfig.from_dict(manifest.scene_config)
    params = EventCameraParams.from_dict(manifest.event_params)
    bg_path = None
    if not manifest.background_ref.startswith("synth:"):
        bg_path = manifest.background_ref
    n_repr = len(manifest.files["repr"])
    job = GenerateJob(
        seq_dir=str(seq_dir),
        scene_config=cfg,
        event_params=params,
        n_repr=n_repr,
        tau_us=None,
        background_path=bg_path,
    )
    return run_generate_job(job)


def reconstruct_sequence(seq_dir, params: AccumParams, use_gt_mask: bool = False) -> dict:
    """Reconstruct one sequence; writes recon.f32/.png and recon_meta.json."""
    seq_dir = Path(seq_dir)
    art = read_sequence(seq_dir)
    gt_mask = art.mask if use_gt_mask else None
    recon, info = reconstruct_background(art.occluded, art.stream, params, gt_mask=gt_mask)

    (seq_dir / FILE_RECON_F32).write_bytes(frame_to_f32_bytes(recon))
    (seq_dir / FILE_RECON_PNG).write_bytes(frame_to_png_bytes(recon))
    meta = {
        "use_gt_mask": use_gt_mask,
        "params": params.to_dict(),
        "n_occluded": info["n_occluded"],
        "n_fallback": info["n_fallback"],
        "occluder_mode": info["occluder_mode"],
        "psnr_db": psnr(recon, art.gt),
        "ssim": ssim(recon, art.gt),
        "mae": mae(recon, art.gt),
        "coverage": art.measured_coverage,
    }
    (seq_dir / FILE_RECON_META).write_text(json.dumps(meta, indent=2, sort_keys=True))
    return meta


def _reconstruct_job(args):
    seq_dir, params, use_gt_mask = args
    return reconstruct_sequence(seq_dir, params, use_gt_mask)


def reconstruct_dataset(root, params: AccumParams, use_gt_mask: bool = False, workers: int = 1):
    seq_dirs = list_sequences(root)
    if not seq_dirs:
        raise MissingFileError(f"no sequences with manifests under {root}")
    jobs = [(d, params, use_gt_mask) for d in seq_dirs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_reconstruct_job, jobs))
    return [_reconstruct_job(j) for j in jobs]


def evaluate_dataset(root) -> MetricsReport:
    """Stratified report over all reconstructed sequences under root."""
    from .dataset import FILE_GT_F32, f32_bytes_to_frame, read_manifest

    seq_dirs = list_sequences(root)
    samples = []
    for d in seq_dirs:
        recon_path = d / FILE_RECON_F32
        if not recon_path.exists():
            raise MissingFileError(f"no reconstruction in {d}; run reconstruct first")
        manifest = read_manifest(d)
        cfg = SceneConfig.from_dict(manifest.scene_config)
        gt = f32_bytes_to_frame((d / FILE_GT_F32).read_bytes(), cfg.width, cfg.height)
        recon = f32_bytes_to_frame(recon_path.read_bytes(), cfg.width, cfg.height)
        samples.append((recon, gt, manifest.measured_coverage))
    if not samples:
        raise MissingFileError(f"no sequences with manifests under {root}")
    return stratified_report(samples)
