"""Per-segment pulse signals, artery seeding, global pulse, correlation map,
peak detection, and the systolic-minus-diastolic (diasys) image.

Segment signals are spatial means of the stack over each labeled segment's
pixels, optionally dilated to approximate the vessel lumen. Artery seeds
are segments whose normalized signal shows a forward-difference upstroke
above a threshold. The global pulse is the normalized per-frame mean over
the seed pixels; the correlation map is the zero-lag Pearson coefficient
between each pixel's time series and that pulse.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .io import PulseSignal, TemporalStack
from .skeleton import LabeledSegments

logger = logging.getLogger(__name__)

# Relative spread below which a time series counts as constant.
_CONST_RTOL = 1e-9


@dataclass
class PeakSet:
    """Systolic peak and diastolic valley frame indices, each sorted."""

    systolic_peaks: np.ndarray
    diastolic_valleys: np.ndarray

    def __post_init__(self):
        self.systolic_peaks = np.asarray(self.systolic_peaks, dtype=np.int64)
        self.diastolic_valleys = np.asarray(self.diastolic_valleys, dtype=np.int64)


@dataclass
class ArteryClassification:
    """Per-segment upstroke scores and artery-seed flags.

    Arrays are indexed by ``label - 1``. ``constant`` marks segments whose
    raw signal had no variation; they score 0 and stay undecided.
    """

    scores: np.ndarray
    is_artery: np.ndarray
    constant: np.ndarray
    threshold: float

    @property
    def artery_labels(self) -> list[int]:
        return [int(i) + 1 for i in np.nonzero(self.is_artery)[0]]


def _is_constant(values: np.ndarray) -> bool:
    spread = float(np.max(values) - np.min(values))
    return spread <= _CONST_RTOL * max(1.0, abs(float(np.mean(values))))


def normalize_signal(signal: PulseSignal) -> PulseSignal:
    """Rescale to zero mean and unit population standard deviation."""
    values = signal.values.astype(np.float64)
    if _is_constant(values):
        raise ValueError("cannot normalize a constant signal")
    centered = values - values.mean()
    return PulseSignal(values=centered / centered.std(), normalized=True)


def segment_signals(
    stack: TemporalStack,
    segs: LabeledSegments,
    dilation_radius: int = 2,
) -> list[PulseSignal]:
    """Mean time series of the stack over each segment, one raw signal per label.

    Each segment's pixel set is dilated by ``dilation_radius`` steps of the
    8-neighborhood before averaging (clipped at the image border).
    """
    if segs.count < 1:
        raise ValueError("no segments to extract signals from")
    if segs.labels.shape != (stack.height, stack.width):
        raise ValueError(
            f"segment dims {segs.labels.shape} do not match stack dims "
            f"{(stack.height, stack.width)}"
        )
    if dilation_radius < 0:
        raise ValueError("dilation_radius must be >= 0")
    data = stack.data
    signals = []
    for label in range(1, segs.count + 1):
        mask = segs.segment_mask(label)
        if dilation_radius > 0:
            mask = ndimage.binary_dilation(
                mask, structure=np.ones((3, 3), bool), iterations=dilation_radius
            )
        ys, xs = np.nonzero(mask)
        series = data[:, ys, xs].astype(np.float64).mean(axis=1)
        signals.append(PulseSignal(values=series, normalized=False))
    return signals


def classify_artery_segments(
    signals: list[PulseSignal],
    threshold: float,
    smooth_width: int = 1,
) -> ArteryClassification:
    """Flag segments whose normalized signal has an upstroke above ``threshold``.

    The score is the maximum forward difference of the zero-mean,
    unit-variance signal, optionally box-smoothed first (``smooth_width`` 1
    means no smoothing). Constant signals are left undecided with score 0.
    """
    if not signals:
        raise ValueError("no segment signals given")
    if smooth_width < 1:
        raise ValueError("smooth_width must be >= 1")
    n = len(signals)
    scores = np.zeros(n, dtype=np.float64)
    constant = np.zeros(n, dtype=bool)
    for i, sig in enumerate(signals):
        if _is_constant(sig.values):
            constant[i] = True
            logger.warning("segment %d has a constant signal; left undecided", i + 1)
            continue
        v = normalize_signal(sig).values
        if smooth_width > 1:
            v = np.convolve(v, np.ones(smooth_width) / smooth_width, mode="valid")
        scores[i] = float(np.diff(v).max())
    is_artery = (scores > threshold) & ~constant
    return ArteryClassification(
        scores=scores, is_artery=is_artery, constant=constant, threshold=threshold
    )


def artery_seed_mask(segs: LabeledSegments, cls: ArteryClassification) -> np.ndarray:
    """Boolean mask of the pixels of all artery-seed segments."""
    if cls.scores.shape[0] != segs.count:
        raise ValueError(
            f"classification covers {cls.scores.shape[0]} segments, expected {segs.count}"
        )
    seed_labels = np.zeros(segs.count + 1, dtype=bool)
    seed_labels[1:] = cls.is_artery
    return seed_labels[segs.labels]


def global_pulse(stack: TemporalStack, seed_mask: np.ndarray) -> PulseSignal:
    """Normalized per-frame mean of the stack over the seed pixels."""
    seed_mask = np.asarray(seed_mask, dtype=bool)
    if seed_mask.shape != (stack.height, stack.width):
        raise ValueError("seed mask dims do not match stack dims")
    ys, xs = np.nonzero(seed_mask)
    if ys.size == 0:
        raise ValueError("empty seed mask")
    series = stack.data[:, ys, xs].astype(np.float64).mean(axis=1)
    raw = PulseSignal(values=series, normalized=False)
    if _is_constant(raw.values):
        raise ValueError("seed-pixel mean signal is constant; cannot form a pulse")
    return normalize_signal(raw)


def correlation_map(
    stack: TemporalStack, pulse: PulseSignal, row_chunk: int = 64
) -> np.ndarray:
    """Zero-lag Pearson correlation of every pixel's series with the pulse.

    Returns a float64 (H, W) map in [-1, 1]; pixels with a constant series
    map to 0. Computed row-chunk by row-chunk; each pixel's reduction runs
    over its own time axis only, so the result is independent of chunking.
    """
    if not pulse.normalized:
        raise ValueError("pulse must be normalized")
    if len(pulse) != stack.frames:
        raise ValueError(f"pulse length {len(pulse)} != stack frames {stack.frames}")
    p = pulse.values - pulse.values.mean()
    p_norm = float(np.sqrt((p * p).sum()))
    out = np.empty((stack.height, stack.width), dtype=np.float64)
    for r0 in range(0, stack.height, row_chunk):
        block = stack.data[:, r0 : r0 + row_chunk, :].astype(np.float64)
        mean = block.mean(axis=0)
        centered = block - mean[None, :, :]
        sq = (centered * centered).sum(axis=0)
        num = np.tensordot(p, centered, axes=(0, 0))
        denom = np.sqrt(sq) * p_norm
        tiny = _CONST_RTOL * np.maximum(1.0, np.abs(mean))
        r = np.divide(num, denom, out=np.zeros_like(num), where=denom > 0)
        r[np.sqrt(sq / stack.frames) <= tiny] = 0.0
        out[r0 : r0 + row_chunk, :] = np.clip(r, -1.0, 1.0)
    return out


def _plateau_maxima(values: np.ndarray) -> list[tuple[int, float]]:
    """Indices of strict local maxima; a plateau counts once, at its left edge."""
    t = len(values)
    peaks = []
    i = 1
    while i < t - 1:
        if values[i] <= values[i - 1]:
            i += 1
            continue
        # Rising into i: extend over any plateau of equal values.
        j = i
        while j + 1 < t and values[j + 1] == values[i]:
            j += 1
        if j < t - 1 and values[j + 1] < values[i]:
            peaks.append((i, float(values[i])))
        i = j + 1
    return peaks


def _select_separated(candidates: list[tuple[int, float]], min_separation: int) -> np.ndarray:
    """Greedy non-maximum suppression, tallest first, ties by earlier index."""
    chosen: list[int] = []
    for idx, _height in sorted(candidates, key=lambda c: (-c[1], c[0])):
        if all(abs(idx - kept) >= min_separation for kept in chosen):
            chosen.append(idx)
    return np.array(sorted(chosen), dtype=np.int64)


def detect_peaks(pulse: PulseSignal, min_separation: int) -> PeakSet:
    """Locate systolic peaks and diastolic valleys of a normalized pulse.

    Systolic peaks are positive local maxima surviving greedy
    tallest-first suppression at ``min_separation`` frames; diastolic
    valleys are the same on the negated signal. Raises if the signal has
    no extrema at all (flat or monotone).
    """
    if not pulse.normalized:
        raise ValueError("pulse must be normalized")
    if min_separation < 1:
        raise ValueError("min_separation must be >= 1")
    v = pulse.values
    systolic = _select_separated(
        [(i, h) for i, h in _plateau_maxima(v) if h > 0], min_separation
    )
    diastolic = _select_separated(
        [(i, h) for i, h in _plateau_maxima(-v) if h > 0], min_separation
    )
    if systolic.size == 0 and diastolic.size == 0:
        raise ValueError("no peaks found (flat or monotone signal)")
    return PeakSet(systolic_peaks=systolic, diastolic_valleys=diastolic)


def average_frames_around(
    stack: TemporalStack, indices: np.ndarray, half_window: int
) -> np.ndarray:
    """Mean image over the union of +-half_window frame windows at ``indices``."""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size == 0:
        raise ValueError("indices must be non-empty")
    if half_window < 0:
        raise ValueError("half_window must be >= 0")
    if indices.min() < 0 or indices.max() >= stack.frames:
        raise ValueError("peak index out of range")
    selected = np.zeros(stack.frames, dtype=bool)
    for i in indices:
        selected[max(0, i - half_window) : min(stack.frames, i + half_window + 1)] = True
    return stack.data[selected].astype(np.float64).mean(axis=0)


def diasys(systole: np.ndarray, diastole: np.ndarray) -> np.ndarray:
    """Per-pixel systolic-minus-diastolic difference image."""
    systole = np.asarray(systole, dtype=np.float64)
    diastole = np.asarray(diastole, dtype=np.float64)
    if systole.shape != diastole.shape:
        raise ValueError(f"dim mismatch: {systole.shape} vs {diastole.shape}")
    return systole - diastole
