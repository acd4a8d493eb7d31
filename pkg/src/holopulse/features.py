"""Assembly of the three-channel model input: power Doppler image,
correlation map, and diasys image, each individually normalized.

The stack is exported one scalar-map container per channel plus a manifest
JSON ``{"channels": [{"name", "file", "norm": {...}}], "height", "width"}``
so channels stay independently inspectable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .io import TemporalStack

CHANNEL_ORDER = ("m0", "corr", "diasys")

DEFAULT_NORM_SPEC = {
    "m0": {"method": "percentile_minmax", "p_lo": 1.0, "p_hi": 99.0},
    "corr": {"method": "none"},
    "diasys": {"method": "percentile_minmax", "p_lo": 1.0, "p_hi": 99.0},
}


@dataclass
class Channel:
    name: str
    data: np.ndarray
    norm: dict


@dataclass
class FeatureStack:
    """Ordered, normalized channels sharing one image geometry."""

    channels: list[Channel]

    def __post_init__(self):
        names = [c.name for c in self.channels]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate channel names: {names}")
        shapes = {c.data.shape for c in self.channels}
        if len(shapes) > 1:
            raise ValueError(f"channels disagree on dims: {sorted(shapes)}")

    @property
    def height(self) -> int:
        return self.channels[0].data.shape[0]

    @property
    def width(self) -> int:
        return self.channels[0].data.shape[1]

    def channel(self, name: str) -> Channel:
        for c in self.channels:
            if c.name == name:
                return c
        raise KeyError(name)


def temporal_mean(stack: TemporalStack) -> np.ndarray:
    """Per-pixel mean over all frames (the time-integrated vasculature map)."""
    return stack.data.astype(np.float64).mean(axis=0)


def normalize_channel(img: np.ndarray, spec: dict) -> tuple[np.ndarray, dict]:
    """Normalize one channel, returning the image and the metadata actually used.

    Methods: ``percentile_minmax`` clips at the (p_lo, p_hi) percentiles
    then maps the clip range to [0, 1]; ``zscore`` maps to zero mean / unit
    std; ``none`` is the identity. Constant images cannot be normalized by
    either non-trivial method.
    """
    img = np.asarray(img, dtype=np.float64)
    if not np.all(np.isfinite(img)):
        raise ValueError("channel contains non-finite values")
    method = spec.get("method")
    if method == "none":
        return img.copy(), {"method": "none"}
    if method == "zscore":
        std = float(img.std())
        if std == 0.0:
            raise ValueError("cannot zscore-normalize a constant image")
        mean = float(img.mean())
        return (img - mean) / std, {"method": "zscore", "mean": mean, "std": std}
    if method == "percentile_minmax":
        p_lo = float(spec.get("p_lo", 1.0))
        p_hi = float(spec.get("p_hi", 99.0))
        if not 0.0 <= p_lo < p_hi <= 100.0:
            raise ValueError(f"bad percentile bounds ({p_lo}, {p_hi})")
        lo = float(np.percentile(img, p_lo))
        hi = float(np.percentile(img, p_hi))
        if hi == lo:
            raise ValueError("degenerate percentile range; image is (near-)constant")
        out = (np.clip(img, lo, hi) - lo) / (hi - lo)
        return out, {"method": "percentile_minmax", "p_lo": p_lo, "p_hi": p_hi, "lo": lo, "hi": hi}
    raise ValueError(f"unknown normalization method {method!r}")


def build_feature_stack(
    m0: np.ndarray,
    corr: np.ndarray,
    diasys_img: np.ndarray,
    norm_spec: dict | None = None,
) -> FeatureStack:
    """Normalize and order the three channels canonically (m0, corr, diasys)."""
    inputs = {"m0": m0, "corr": corr, "diasys": diasys_img}
    for name, img in inputs.items():
        if img is None:
            raise ValueError(f"missing channel '{name}'")
    shapes = {np.asarray(img).shape for img in inputs.values()}
    if len(shapes) > 1:
        raise ValueError(f"channel dims disagree: {sorted(shapes)}")
    spec = dict(DEFAULT_NORM_SPEC)
    if norm_spec:
        spec.update(norm_spec)
    channels = []
    for name in CHANNEL_ORDER:
        data, meta = normalize_channel(inputs[name], spec[name])
        channels.append(Channel(name=name, data=data, norm=meta))
    return FeatureStack(channels=channels)


def save_feature_stack(fs: FeatureStack, out_dir: str | Path, manifest_name: str = "features.json") -> Path:
    """Write one map container per channel plus the manifest JSON."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for c in fs.channels:
        header = f"{c.name}.json"
        io.save_map(c.data.astype(np.float32), out_dir / header)
        entries.append({"name": c.name, "file": header, "norm": c.norm})
    manifest = {"channels": entries, "height": fs.height, "width": fs.width}
    manifest_path = out_dir / manifest_name
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest_path


def load_feature_stack(manifest_path: str | Path) -> FeatureStack:
    """Re-read an exported feature stack from its manifest."""
    manifest_path = Path(manifest_path)
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    channels = []
    for entry in manifest["channels"]:
        data = io.load_map(manifest_path.parent / entry["file"])
        channels.append(Channel(name=entry["name"], data=data, norm=entry["norm"]))
    fs = FeatureStack(channels=channels)
    if (fs.height, fs.width) != (manifest["height"], manifest["width"]):
        raise ValueError("manifest dims disagree with channel payloads")
    return fs
