"""Attribution-based curation of chain-of-thought rationales."""

from ._core import (
    CuratorError,
    IoError,
    StageError,
    ValidationError,
    attribute,
    combined_score,
    default_config,
    detection_metrics,
    extract_prediction,
    filter_verdict,
    kmeans,
    necessity_score,
    perspective_importance,
    run_pipeline,
    segment_steps,
    self_score,
)

__all__ = [
    "CuratorError",
    "IoError",
    "StageError",
    "ValidationError",
    "attribute",
    "combined_score",
    "default_config",
    "detection_metrics",
    "extract_prediction",
    "filter_verdict",
    "kmeans",
    "necessity_score",
    "perspective_importance",
    "run_pipeline",
    "segment_steps",
    "self_score",
]
