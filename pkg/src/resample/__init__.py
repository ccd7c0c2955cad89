"""Bootstrap inference for the scale effect."""

from src.resample.bootstrap import (
    IntervalEstimate,
    bootstrap_scale_effect,
    intervals_frame,
    replicate_rng,
)

__all__ = [
    "IntervalEstimate",
    "bootstrap_scale_effect",
    "intervals_frame",
    "replicate_rng",
]
