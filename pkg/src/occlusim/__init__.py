"""Dynamic-occlusion scene simulation with paired frame + event data,
event-integration background reconstruction, and stratified evaluation."""

from ._kernels import available_backends, backend_name
from .events import (
    EventCameraParams,
    EventRecord,
    EventStream,
    LogFrame,
    concat_streams,
    events_between,
    generate_events,
    log_transform,
)
from .metrics import MetricsReport, mae, psnr, ssim, stratified_report
from .reconstruct import (
    AccumParams,
    PixelTimelineField,
    integrate_events,
    reconstruct_background,
    segment_occluded,
)
from .representations import (
    AccumFrame,
    ReprStack,
    accumulate,
    build_representations,
    event_preview,
)
from .scene import (
    OcclusionMask,
    Particle,
    SceneConfig,
    SceneScript,
    calibrate_count,
    coverage_ratio,
    particle_position,
    render_frame,
    sample_scene,
)

__version__ = "0.1.0"

__all__ = [
    "AccumFrame",
    "AccumParams",
    "EventCameraParams",
    "EventRecord",
    "EventStream",
    "LogFrame",
    "MetricsReport",
    "OcclusionMask",
    "Particle",
    "PixelTimelineField",
    "ReprStack",
    "SceneConfig",
    "SceneScript",
    "accumulate",
    "available_backends",
    "backend_name",
    "build_representations",
    "calibrate_count",
    "concat_streams",
    "coverage_ratio",
    "event_preview",
    "events_between",
    "generate_events",
    "integrate_events",
    "log_transform",
    "mae",
    "particle_position",
    "psnr",
    "reconstruct_background",
    "render_frame",
    "sample_scene",
    "segment_occluded",
    "ssim",
    "stratified_report",
]
