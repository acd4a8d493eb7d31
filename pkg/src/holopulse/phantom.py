"""Synthetic pulsatile stacks with known artery/vein geometry.

Vessels are random-walk polylines rasterized at a fixed width, mutually
separated so each is its own 8-connected component. Artery pixels carry a
periodic pulse with a power-law-sharpened rising half; vein pixels carry
the same pulse delayed, attenuated, and box-smoothed. Gaussian noise is
added everywhere. Everything is drawn from one seeded generator, so a
spec maps to exactly one phantom.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .io import ARTERY, BACKGROUND, VEIN, TemporalStack

_PLACEMENT_TRIES = 500
_STEP = 3.0
_WIGGLE = 0.06
_GAP = 2  # dilation iterations separating vessels (Chebyshev distance 3)


@dataclass
class ArteryWaveformParams:
    upstroke_sharpness: float = 6.0
    pulse_amplitude: float = 1.0
    period: int = 64
    phase: float = 0.0


@dataclass
class VeinWaveformParams:
    amplitude_ratio: float = 0.4
    delay: float = 16.0
    smoothing_width: int = 24


@dataclass
class PhantomSpec:
    """Full description of one synthetic stack; see module docstring."""

    dims: tuple[int, int, int] = (128, 128, 128)  # (H, W, T)
    rng_seed: int = 0
    n_arteries: int = 2
    n_veins: int = 2
    vessel_width: int = 5
    artery_waveform: ArteryWaveformParams = field(default_factory=ArteryWaveformParams)
    vein_waveform: VeinWaveformParams = field(default_factory=VeinWaveformParams)
    noise_std: float = 0.05
    baseline: float = 1.0

    def __post_init__(self):
        if isinstance(self.artery_waveform, dict):
            self.artery_waveform = ArteryWaveformParams(**self.artery_waveform)
        if isinstance(self.vein_waveform, dict):
            self.vein_waveform = VeinWaveformParams(**self.vein_waveform)
        self.dims = tuple(int(d) for d in self.dims)
        if len(self.dims) != 3 or min(self.dims) < 1:
            raise ValueError(f"dims must be (H, W, T) positive, got {self.dims}")
        if self.artery_waveform.period < 8:
            raise ValueError("waveform period must be >= 8 frames")
        if self.dims[2] < 2 * self.artery_waveform.period:
            raise ValueError("stack must cover at least two waveform periods")
        if not 0.0 <= self.vein_waveform.amplitude_ratio < 1.0:
            raise ValueError("amplitude_ratio must be in [0, 1)")
        if self.vein_waveform.smoothing_width < 1:
            raise ValueError("smoothing_width must be >= 1")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.vessel_width < 1:
            raise ValueError("vessel_width must be >= 1")
        if self.n_arteries < 0 or self.n_veins < 0:
            raise ValueError("vessel counts must be >= 0")
        if self.artery_waveform.upstroke_sharpness < 1:
            raise ValueError("upstroke_sharpness must be >= 1")

    @classmethod
    def from_json(cls, path: str | Path) -> "PhantomSpec":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls(**raw)

    def to_json_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "rng_seed": self.rng_seed,
            "n_arteries": self.n_arteries,
            "n_veins": self.n_veins,
            "vessel_width": self.vessel_width,
            "artery_waveform": vars(self.artery_waveform),
            "vein_waveform": vars(self.vein_waveform),
            "noise_std": self.noise_std,
            "baseline": self.baseline,
        }


@dataclass
class VesselRecord:
    kind: str  # "artery" | "vein"
    path: np.ndarray  # polyline vertices, (n, 2) float (y, x)
    pixel_count: int


@dataclass
class PhantomTruth:
    stack: TemporalStack
    gt_mask: np.ndarray
    vessels: list[VesselRecord]


def _pulse_shape(u: np.ndarray, sharpness: float) -> np.ndarray:
    """Unit pulse over one cycle: power-sharpened rising half, raised-cosine fall."""
    u = np.asarray(u, dtype=np.float64) % 1.0
    bump = (1.0 - np.cos(2.0 * np.pi * u)) / 2.0
    return np.where(u < 0.5, bump ** (1.0 / sharpness), bump)


def arterial_waveform(t, spec: PhantomSpec) -> np.ndarray:
    """Arterial intensity at frame(s) t: baseline plus the periodic pulse."""
    p = spec.artery_waveform
    u = (np.asarray(t, dtype=np.float64) - p.phase) / p.period
    return spec.baseline + p.pulse_amplitude * _pulse_shape(u, p.upstroke_sharpness)


def venous_waveform(t, spec: PhantomSpec) -> np.ndarray:
    """Venous intensity: the arterial pulse delayed, attenuated, box-smoothed."""
    v = spec.vein_waveform
    t = np.asarray(t, dtype=np.float64)
    width = v.smoothing_width
    offsets = np.arange(width) - width // 2
    acc = np.zeros(t.shape, dtype=np.float64)
    for k in offsets:
        acc += arterial_waveform(t - v.delay + k, spec) - spec.baseline
    return spec.baseline + v.amplitude_ratio * acc / width


def _walk_path(rng: np.random.Generator, height: int, width: int, margin: float) -> np.ndarray:
    """A wiggly polyline through the interior, grown in both directions."""
    start = np.array(
        [
            rng.uniform(margin, height - margin),
            rng.uniform(margin, width - margin),
        ]
    )
    angle0 = rng.uniform(0.0, 2.0 * np.pi)
    max_steps = max(4, int(0.55 * min(height, width) / _STEP))
    halves = []
    for direction in (0.0, np.pi):
        angle = angle0 + direction
        pos = start.copy()
        pts = [pos.copy()]
        for _ in range(max_steps):
            angle += rng.normal(0.0, _WIGGLE)
            pos = pos + _STEP * np.array([np.sin(angle), np.cos(angle)])
            if not (margin <= pos[0] < height - margin and margin <= pos[1] < width - margin):
                break
            pts.append(pos.copy())
        halves.append(pts)
    back, forth = halves[1][::-1], halves[0]
    return np.array(back + forth[1:], dtype=np.float64)


def _rasterize(path: np.ndarray, height: int, width: int, vessel_width: int) -> np.ndarray:
    """Pixels within ``vessel_width / 2`` of the polyline: a smooth tube."""
    from scipy.spatial import cKDTree

    radius = vessel_width / 2.0
    dense = [path[0]]
    for a, b in zip(path[:-1], path[1:]):
        seg_len = float(np.hypot(*(b - a)))
        for frac in np.arange(0.25, seg_len, 0.25):
            dense.append(a + (b - a) * frac / seg_len)
        dense.append(b)
    dense = np.array(dense)
    tree = cKDTree(dense)
    lo = np.maximum(np.floor(dense.min(axis=0) - radius).astype(int), 0)
    hi = np.minimum(np.ceil(dense.max(axis=0) + radius).astype(int) + 1, (height, width))
    yy, xx = np.mgrid[lo[0] : hi[0], lo[1] : hi[1]]
    pts = np.column_stack([yy.ravel(), xx.ravel()]).astype(np.float64)
    dist, _ = tree.query(pts, k=1)
    mask = np.zeros((height, width), dtype=bool)
    mask[yy.ravel()[dist <= radius], xx.ravel()[dist <= radius]] = True
    return mask


def _place_vessels(spec: PhantomSpec, rng: np.random.Generator) -> tuple[np.ndarray, list[VesselRecord]]:
    height, width, _ = spec.dims
    margin = spec.vessel_width + 3.0
    if 2 * margin >= min(height, width):
        raise ValueError(
            f"dims {height}x{width} too small for vessels of width {spec.vessel_width}"
        )
    min_span = 0.4 * min(height, width)
    gt = np.zeros((height, width), dtype=np.uint8)
    occupied = np.zeros((height, width), dtype=bool)
    records = []
    kinds = ["artery"] * spec.n_arteries + ["vein"] * spec.n_veins
    for kind in kinds:
        for attempt in range(_PLACEMENT_TRIES):
            path = _walk_path(rng, height, width, margin)
            if len(path) < 2 or np.ptp(path, axis=0).max() < min_span:
                continue
            mask = _rasterize(path, height, width, spec.vessel_width)
            forbidden = ndimage.binary_dilation(
                occupied, structure=np.ones((3, 3), bool), iterations=_GAP
            )
            if (mask & forbidden).any():
                continue
            occupied |= mask
            gt[mask] = ARTERY if kind == "artery" else VEIN
            records.append(
                VesselRecord(kind=kind, path=path, pixel_count=int(mask.sum()))
            )
            break
        else:
            raise RuntimeError(
                f"could not place {kind} #{len(records) + 1} without overlap "
                f"after {_PLACEMENT_TRIES} attempts"
            )
    return gt, records


def generate(spec: PhantomSpec) -> PhantomTruth:
    """Build the phantom stack and its ground-truth mask; pure in the spec."""
    height, width, frames = spec.dims
    rng = np.random.default_rng(spec.rng_seed)
    gt, records = _place_vessels(spec, rng)

    t = np.arange(frames)
    data = np.full((frames, height, width), spec.baseline, dtype=np.float64)
    ay, ax = np.nonzero(gt == ARTERY)
    vy, vx = np.nonzero(gt == VEIN)
    if ay.size:
        data[:, ay, ax] = arterial_waveform(t, spec)[:, None]
    if vy.size:
        data[:, vy, vx] = venous_waveform(t, spec)[:, None]
    if spec.noise_std > 0:
        data += spec.noise_std * rng.standard_normal(data.shape)

    stack = TemporalStack(data=data.astype(np.float32))
    return PhantomTruth(stack=stack, gt_mask=gt, vessels=records)
