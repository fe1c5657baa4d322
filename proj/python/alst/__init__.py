"""Python bindings for the alst mispronunciation detection core."""

from ._core import (
    AudioClip,
    MfccConfig,
    Model,
    ScoringEngine,
    aggregate_seeds,
    compute_class_weights,
    compute_metrics,
    extract_mfcc,
    format_percent_cell,
    frame_count,
    load_model,
    parse_wav,
    read_wav,
    resample_to_16k,
    run_experiment,
    serialize_wav,
    train_model,
)

__all__ = [
    "AudioClip",
    "MfccConfig",
    "Model",
    "ScoringEngine",
    "aggregate_seeds",
    "compute_class_weights",
    "compute_metrics",
    "extract_mfcc",
    "format_percent_cell",
    "frame_count",
    "load_model",
    "parse_wav",
    "read_wav",
    "resample_to_16k",
    "run_experiment",
    "serialize_wav",
    "train_model",
]
