"""Command-line interface: generate / reconstruct / evaluate / sweep / preview.

All randomness flows from --seed; outputs depend only on flags, never on
wall clock or environment. The default dataset size is desk scale; pass
--sequences 480 for a full-scale run.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from .dataset import frame_to_png_bytes, read_sequence
from .errors import OcclusimError
from .events import EventCameraParams
from .metrics import BUCKETS
from .pipeline import (
    evaluate_dataset,
    generate_dataset,
    reconstruct_dataset,
)
from .reconstruct import AccumParams
from .representations import accumulate, event_preview
from .scene import SceneConfig


def _add_common(p):
    p.add_argument("--root", default=os.environ.get("OCCLUSIM_ROOT"),
                   help="dataset root directory (default: $OCCLUSIM_ROOT)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)


def _add_scene_flags(p):
    p.add_argument("--sequences", type=int, default=24)
    p.add_argument("--coverage", type=float, default=None,
                   help="fixed coverage target; default cycles 0.1..0.6")
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=384)
    p.add_argument("--duration", type=float, default=0.05)
    p.add_argument("--radius-range", type=float, nargs=2, default=(8.0, 16.0),
                   metavar=("MIN", "MAX"))
    p.add_argument("--intensity-range", type=float, nargs=2, default=(0.11, 0.14),
                   metavar=("MIN", "MAX"))
    p.add_argument("--speed-range", type=float, nargs=2, default=(300.0, 600.0),
                   metavar=("MIN", "MAX"))
    p.add_argument("--background-dir", default=None,
                   help="directory of PNG/PGM backgrounds (default: procedural)")


def _add_event_flags(p):
    p.add_argument("--contrast-threshold", type=float, default=0.15)
    p.add_argument("--log-eps", type=float, default=1e-3)
    p.add_argument("--jitter-sigma", type=float, default=0.0)
    p.add_argument("--refractory-us", type=int, default=0)
    p.add_argument("--render-rate", type=float, default=5000.0)
    p.add_argument("--n-repr", type=int, default=5)
    p.add_argument("--tau-us", type=int, default=None)


def _add_recon_flags(p):
    p.add_argument("--use-gt-mask", action="store_true",
                   help="inject the ground-truth mask instead of segmenting")
    p.add_argument("--similarity-eps", type=float, default=None,
                   help="occluder log-similarity band (default 2*C)")
    p.add_argument("--quiet-period-us", type=int, default=2000)


def _scene_config(args) -> SceneConfig:
    return SceneConfig(
        width=args.width,
        height=args.height,
        duration=args.duration,
        radius_range=tuple(args.radius_range),
        intensity_range=tuple(args.intensity_range),
        speed_range=tuple(args.speed_range),
        seed=args.seed,
    )


def _event_params(args) -> EventCameraParams:
    return EventCameraParams(
        contrast_threshold=args.contrast_threshold,
        log_eps=args.log_eps,
        threshold_jitter_sigma=args.jitter_sigma,
        refractory_us=args.refractory_us,
        render_rate=args.render_rate,
    )


def _accum_params(args) -> AccumParams:
    return AccumParams(
        contrast_threshold=args.contrast_threshold,
        occluder_similarity_eps=args.similarity_eps,
        quiet_period_min_us=args.quiet_period_us,
        log_eps=args.log_eps,
    )


def _require_root(args):
    if not args.root:
        raise OcclusimError("--root is required (or set OCCLUSIM_ROOT)")
    return Path(args.root)


def cmd_generate(args) -> int:
    root = _require_root(args)
    results = generate_dataset(
        root,
        n_sequences=args.sequences,
        master_seed=args.seed,
        scene_config=_scene_config(args),
        event_params=_event_params(args),
        n_repr=args.n_repr,
        tau_us=args.tau_us,
        fixed_coverage=args.coverage,
        background_dir=args.background_dir,
        workers=args.workers,
    )
    for r in results:
        print(f"{r['seq_dir']}: coverage={r['coverage']:.3f} events={r['n_events']}")
    print(f"generated {len(results)} sequences under {root}")
    return 0


def cmd_reconstruct(args) -> int:
    root = _require_root(args)
    metas = reconstruct_dataset(root, _accum_params(args), use_gt_mask=args.use_gt_mask,
                                workers=args.workers)
    for m in metas:
        print(f"coverage={m['coverage']:.3f} psnr={m['psnr_db']:.2f}dB "
              f"ssim={m['ssim']:.4f} mae={m['mae']:.4f}")
    print(f"reconstructed {len(metas)} sequences")
    return 0


def cmd_evaluate(args) -> int:
    root = _require_root(args)
    report = evaluate_dataset(root)
    (root / "report.json").write_text(report.to_json())
    (root / "report.txt").write_text(report.to_text())
    (root / "report.csv").write_text(report.to_csv())
    print(report.to_text())
    return 0


def sweep_svg(rows: list) -> str:
    """Static line plot of bucket PSNR; every CSV row gets a marker."""
    width, height, mx, my = 480, 300, 56, 40
    pw, ph = width - 2 * mx, height - 2 * my
    psnrs = [r["psnr_db"] for r in rows]
    lo = math.floor(min(psnrs) - 1)
    hi = math.ceil(max(psnrs) + 1)

    def sx(bucket):
        return mx + pw * (bucket - BUCKETS[0]) / (BUCKETS[-1] - BUCKETS[0])

    def sy(v):
        return my + ph * (1.0 - (v - lo) / (hi - lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        "<title>Accumulation method PSNR vs occlusion coverage</title>",
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{mx}" y1="{my + ph}" x2="{mx + pw}" y2="{my + ph}" stroke="black"/>',
        f'<line x1="{mx}" y1="{my}" x2="{mx}" y2="{my + ph}" stroke="black"/>',
    ]
    for b in BUCKETS:
        parts.append(
            f'<text x="{sx(b):.1f}" y="{my + ph + 16}" font-size="11" '
            f'text-anchor="middle">{b}%</text>'
        )
    for v in range(lo, hi + 1, max(1, (hi - lo) // 6)):
        parts.append(
            f'<text x="{mx - 6}" y="{sy(v):.1f}" font-size="11" text-anchor="end">{v}</text>'
        )
    pts = " ".join(f"{sx(r['bucket']):.1f},{sy(r['psnr_db']):.1f}" for r in rows)
    parts.append(f'<polyline points="{pts}" fill="none" stroke="#c02020" stroke-width="2"/>')
    for r in rows:
        parts.append(
            f'<circle data-bucket="{r["bucket"]}" cx="{sx(r["bucket"]):.1f}" '
            f'cy="{sy(r["psnr_db"]):.1f}" r="3.5" fill="#c02020"/>'
        )
    parts.append(
        f'<text x="{width / 2:.0f}" y="16" font-size="12" text-anchor="middle">'
        "PSNR [dB] vs occlusion coverage</text>"
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_sweep(args) -> int:
    root = _require_root(args)
    root.mkdir(parents=True, exist_ok=True)
    rows = []
    for b in BUCKETS:
        bucket_root = root / f"bucket_{b:02d}"
        generate_dataset(
            bucket_root,
            n_sequences=args.sequences,
            master_seed=args.seed * 1000 + b,
            scene_config=_scene_config(args),
            event_params=_event_params(args),
            n_repr=args.n_repr,
            tau_us=args.tau_us,
            fixed_coverage=b / 100.0,
            background_dir=args.background_dir,
            workers=args.workers,
        )
        reconstruct_dataset(bucket_root, _accum_params(args), use_gt_mask=args.use_gt_mask,
                            workers=args.workers)
        report = evaluate_dataset(bucket_root)
        rows.append(
            {
                "bucket": b,
                "psnr_db": report.psnr_db,
                "ssim": report.ssim,
                "mae": report.mae,
                "n": report.n_samples,
            }
        )
        print(f"bucket {b}%: psnr={report.psnr_db:.2f}dB ssim={report.ssim:.4f} "
              f"mae={report.mae:.4f} ({report.n_samples} seqs)")

    csv_lines = ["bucket,psnr_db,ssim,mae,n"]
    for r in rows:
        csv_lines.append(f"{r['bucket']},{r['psnr_db']!r},{r['ssim']!r},{r['mae']!r},{r['n']}")
    (root / "sweep.csv").write_text("\n".join(csv_lines) + "\n")
    (root / "sweep.svg").write_text(sweep_svg(rows))
    print(f"wrote {root / 'sweep.csv'} and {root / 'sweep.svg'}")
    return 0


def cmd_preview(args) -> int:
    root = _require_root(args)
    seq_dir = root / args.sequence
    art = read_sequence(seq_dir)
    frame = accumulate(art.stream, art.stream.t_begin, art.stream.t_end)
    rgb = event_preview(frame)
    from PIL import Image

    Image.fromarray(rgb, mode="RGB").save(seq_dir / "events_preview.png")
    for i, accum in enumerate(art.repr_stack.frames):
        Image.fromarray(event_preview(accum), mode="RGB").save(
            seq_dir / f"repr_preview_{i:02d}.png"
        )
    (seq_dir / "background_preview.png").write_bytes(frame_to_png_bytes(art.gt))
    print(f"wrote previews into {seq_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="occlusim",
        description="Dynamic-occlusion scene simulation, event-based background "
        "reconstruction, and stratified evaluation.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("generate", help="generate a dataset of sequences")
    _add_common(p)
    _add_scene_flags(p)
    _add_event_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("reconstruct", help="reconstruct backgrounds for a dataset")
    _add_common(p)
    _add_event_flags(p)
    _add_recon_flags(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("evaluate", help="evaluate reconstructions against ground truth")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="generate/reconstruct/evaluate per coverage bucket")
    _add_common(p)
    _add_scene_flags(p)
    _add_event_flags(p)
    _add_recon_flags(p)
    p.set_defaults(func=cmd_sweep, sequences=4)

    p = sub.add_parser("preview", help="write event/background preview images")
    _add_common(p)
    p.add_argument("--sequence", required=True, help="sequence directory name, e.g. seq_0000")
    p.set_defaults(func=cmd_preview)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OcclusimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
