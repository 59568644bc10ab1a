"""Python bindings for the raygroup geometry engine."""

from ._core import (
    Error,
    ParseError,
    ValidationError,
    InvalidParameter,
    IoError,
    ShapeMismatch,
    MissingTerm,
    NonFiniteTerm,
    EmptyEvaluation,
    GenerationFailure,
    ray_count,
    ray_directions,
    emit_rays,
    farthest_point_sampling,
    foreground_biased_sampling,
    coarse_anchors,
    fine_sample_fractions,
    fine_anchors,
    ball_query,
    anchor_mask_labels,
    iou3d,
    nms3d,
    average_precision,
    run_pipeline,
    run_eval,
)

__all__ = [name for name in dir() if not name.startswith("_")]
