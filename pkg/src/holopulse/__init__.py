"""Cardiac pulse analysis and artery/vein feature extraction for power
Doppler image stacks."""

__version__ = "0.1.0"

from .io import ARTERY, BACKGROUND, VEIN, PulseSignal, TemporalStack
from .skeleton import LabeledSegments

__all__ = [
    "ARTERY",
    "BACKGROUND",
    "VEIN",
    "PulseSignal",
    "TemporalStack",
    "LabeledSegments",
    "__version__",
]
