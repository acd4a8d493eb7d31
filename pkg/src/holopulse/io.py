"""File formats for temporal stacks, scalar maps, class masks, and pulse signals.

Stacks and scalar maps share one container: a JSON sidecar ``<name>.json``
holding ``{"height", "width", "frames", "dtype": "f32le", "frame_rate"?}``
next to a raw payload ``<name>.raw`` of little-endian float32 samples,
frame-major, row-major within each frame. A scalar map is a stack with
``frames == 1``.

Class masks are binary PGM (P5, maxval 255). Canonical pixel encoding is
0 = background, 128 = vein, 255 = artery; decoding is banded (0..63
background, 64..191 vein, 192..255 artery) to survive lossy edits.

Pulse signals are two-column CSV: header ``frame,value``, LF line endings.
Values are written with shortest round-trip float repr, so save/load is
bit-exact.

Non-finite data (NaN/Inf) is rejected everywhere, on read and on write.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Class mask label values (internal representation).
BACKGROUND = 0
VEIN = 1
ARTERY = 2

# Canonical PGM encoding per label, and banded decode thresholds.
_LABEL_TO_PGM = {BACKGROUND: 0, VEIN: 128, ARTERY: 255}
_VEIN_BAND_LO = 64
_ARTERY_BAND_LO = 192


@dataclass
class TemporalStack:
    """A T-frame sequence of H x W scalar power-Doppler fields.

    ``data`` has shape (frames, height, width), dtype float32, all finite.
    ``frame_rate`` is optional metadata in frames/second; no algorithm
    depends on it.
    """

    data: np.ndarray
    frame_rate: float | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 3:
            raise ValueError(f"stack data must be 3-D (T, H, W), got shape {self.data.shape}")
        if self.data.shape[0] < 2:
            raise ValueError(f"frames < 2 (got {self.data.shape[0]})")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("stack contains non-finite values")
        if self.frame_rate is not None and not self.frame_rate > 0:
            raise ValueError(f"frame_rate must be > 0, got {self.frame_rate}")

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass
class PulseSignal:
    """A scalar time series, one value per frame of the source stack."""

    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError("signal values must be 1-D")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("signal contains non-finite values")

    def __len__(self) -> int:
        return self.values.shape[0]


def _raw_path(header_path: Path) -> Path:
    return header_path.with_suffix(".raw")


def _read_header(header_path: Path) -> dict:
    if not header_path.is_file():
        raise FileNotFoundError(f"missing header file: {header_path}")
    with open(header_path, "r", encoding="utf-8") as fh:
        header = json.load(fh)
    for key in ("height", "width", "frames"):
        if key not in header:
            raise ValueError(f"header {header_path} missing field '{key}'")
        if not isinstance(header[key], int) or header[key] < 1:
            raise ValueError(f"header field '{key}' must be a positive integer")
    if header.get("dtype") != "f32le":
        raise ValueError(f"unsupported dtype {header.get('dtype')!r}, expected 'f32le'")
    return header


def _read_payload(header_path: Path, header: dict) -> np.ndarray:
    raw_path = _raw_path(header_path)
    if not raw_path.is_file():
        raise FileNotFoundError(f"missing raw payload: {raw_path}")
    expected = header["frames"] * header["height"] * header["width"] * 4
    payload = raw_path.read_bytes()
    if len(payload) != expected:
        raise ValueError(
            f"size mismatch for {raw_path}: header declares {expected} bytes, file has {len(payload)}"
        )
    flat = np.frombuffer(payload, dtype="<f4")
    data = flat.reshape(header["frames"], header["height"], header["width"])
    if not np.all(np.isfinite(data)):
        raise ValueError(f"non-finite values in {raw_path}")
    return data.astype(np.float32)


def load_stack(header_path: str | Path) -> TemporalStack:
    """Load a temporal stack from its JSON header (raw payload alongside)."""
    header_path = Path(header_path)
    header = _read_header(header_path)
    if header["frames"] < 2:
        raise ValueError(f"frames < 2 (got {header['frames']})")
    data = _read_payload(header_path, header)
    return TemporalStack(data=data, frame_rate=header.get("frame_rate"))


def save_stack(stack: TemporalStack, header_path: str | Path) -> None:
    """Write a stack as JSON header + raw little-endian f32 payload."""
    header_path = Path(header_path)
    header = {
        "height": stack.height,
        "width": stack.width,
        "frames": stack.frames,
        "dtype": "f32le",
    }
    if stack.frame_rate is not None:
        header["frame_rate"] = stack.frame_rate
    with open(header_path, "w", encoding="utf-8") as fh:
        json.dump(header, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _raw_path(header_path).write_bytes(stack.data.astype("<f4").tobytes())


def load_map(header_path: str | Path) -> np.ndarray:
    """Load a scalar map (single-frame container) as a float32 (H, W) array."""
    header_path = Path(header_path)
    header = _read_header(header_path)
    if header["frames"] != 1:
        raise ValueError(f"expected a single-frame map container, got frames={header['frames']}")
    return _read_payload(header_path, header)[0]


def save_map(img: np.ndarray, header_path: str | Path) -> None:
    """Write a 2-D scalar map as a single-frame container."""
    img = np.asarray(img, dtype=np.float32)
    if img.ndim != 2:
        raise ValueError(f"map must be 2-D, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("map contains non-finite values")
    header_path = Path(header_path)
    header = {
        "height": img.shape[0],
        "width": img.shape[1],
        "frames": 1,
        "dtype": "f32le",
    }
    with open(header_path, "w", encoding="utf-8") as fh:
        json.dump(header, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _raw_path(header_path).write_bytes(img.astype("<f4").tobytes())


def _parse_pgm_tokens(blob: bytes, path: Path):
    # Header tokens separated by whitespace; '#' starts a comment to EOL.
    pos = 0
    tokens = []
    while len(tokens) < 4:
        if pos >= len(blob):
            raise ValueError(f"malformed PGM (truncated header): {path}")
        ch = blob[pos : pos + 1]
        if ch in b" \t\r\n":
            pos += 1
        elif ch == b"#":
            while pos < len(blob) and blob[pos : pos + 1] not in b"\r\n":
                pos += 1
        else:
            start = pos
            while pos < len(blob) and blob[pos : pos + 1] not in b" \t\r\n#":
                pos += 1
            tokens.append(blob[start:pos])
    # Exactly one whitespace byte separates the maxval token from the payload.
    if pos >= len(blob) or blob[pos : pos + 1] not in b" \t\r\n":
        raise ValueError(f"malformed PGM (missing payload separator): {path}")
    return tokens, pos + 1


def load_mask(path: str | Path) -> np.ndarray:
    """Load a class mask from binary PGM.

    Returns a uint8 (H, W) array with values in {BACKGROUND, VEIN, ARTERY}.
    Decoding is banded: 0..63 background, 64..191 vein, 192..255 artery.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"missing mask file: {path}")
    blob = path.read_bytes()
    tokens, payload_start = _parse_pgm_tokens(blob, path)
    if tokens[0] != b"P5":
        raise ValueError(f"malformed PGM (magic {tokens[0]!r}, expected P5): {path}")
    try:
        width, height, maxval = (int(tokens[i]) for i in (1, 2, 3))
    except ValueError:
        raise ValueError(f"malformed PGM (non-numeric header): {path}") from None
    if maxval != 255:
        raise ValueError(f"unsupported PGM maxval {maxval} (expected 255): {path}")
    if width < 1 or height < 1:
        raise ValueError(f"malformed PGM (bad dimensions {width}x{height}): {path}")
    payload = blob[payload_start:]
    if len(payload) != width * height:
        raise ValueError(
            f"malformed PGM: payload has {len(payload)} bytes, expected {width * height}"
        )
    raw = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    labels = np.full(raw.shape, BACKGROUND, dtype=np.uint8)
    labels[raw >= _VEIN_BAND_LO] = VEIN
    labels[raw >= _ARTERY_BAND_LO] = ARTERY
    return labels


def save_mask(mask: np.ndarray, path: str | Path) -> None:
    """Write a class mask as binary PGM with the canonical 0/128/255 encoding."""
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    if not np.isin(mask, (BACKGROUND, VEIN, ARTERY)).all():
        raise ValueError("mask labels must be in {background, vein, artery}")
    out = np.zeros(mask.shape, dtype=np.uint8)
    out[mask == VEIN] = _LABEL_TO_PGM[VEIN]
    out[mask == ARTERY] = _LABEL_TO_PGM[ARTERY]
    height, width = mask.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + out.tobytes())


def save_binary_mask(mask: np.ndarray, path: str | Path) -> None:
    """Write a boolean mask as PGM, foreground encoded 255."""
    mask = np.asarray(mask, dtype=bool)
    save_mask(np.where(mask, ARTERY, BACKGROUND).astype(np.uint8), path)


def binary_from_mask(labels: np.ndarray) -> np.ndarray:
    """Collapse a class mask to the vessel-vs-background boolean mask."""
    return np.asarray(labels) != BACKGROUND


def save_signal_csv(signal: PulseSignal, path: str | Path) -> None:
    """Write a signal as two-column CSV (frame,value), LF line endings."""
    lines = ["frame,value"]
    for idx, value in enumerate(signal.values):
        lines.append(f"{idx},{float(value)!r}")
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("ascii"))


def load_signal_csv(path: str | Path, normalized: bool = False) -> PulseSignal:
    """Read a two-column CSV signal written by :func:`save_signal_csv`."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"missing signal file: {path}")
    lines = path.read_text(encoding="ascii").splitlines()
    if not lines or lines[0] != "frame,value":
        raise ValueError(f"malformed signal CSV (bad header): {path}")
    values = []
    for n, line in enumerate(lines[1:]):
        try:
            idx_str, val_str = line.split(",")
            idx = int(idx_str)
            values.append(float(val_str))
        except ValueError:
            raise ValueError(f"malformed signal CSV at line {n + 2}: {path}") from None
        if idx != n:
            raise ValueError(f"non-contiguous frame index {idx} at line {n + 2}: {path}")
    return PulseSignal(values=np.array(values, dtype=np.float64), normalized=normalized)
