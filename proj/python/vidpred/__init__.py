"""Next-frame video prediction: inference, metrics and data synthesis."""

from ._core import (
    Model,
    __version__,
    copy_last_frame,
    perceptual_distance,
    ssim,
    synth,
)

__all__ = [
    "Model",
    "__version__",
    "copy_last_frame",
    "perceptual_distance",
    "ssim",
    "synth",
]
