"""End-to-end runs: feature extraction, evaluation, phantom generation, info.

Each run writes its artifacts under an output directory plus a
``run-manifest.json`` recording every effective parameter. Manifests embed
only parameters, input paths as given, and artifact names relative to the
output directory, so identical inputs yield byte-identical output trees.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import features, io, metrics, phantom, pulse, skeleton

MANIFEST_NAME = "run-manifest.json"


@dataclass
class ExtractParams:
    """Tunables of the extraction pipeline, with their documented defaults."""

    theta: float = 0.3
    dilation_radius: int = 2
    min_len: int = 5
    half_window: int = 2
    min_separation: int | None = None  # None: frames // 8, at least 1
    smooth_width: int = 1
    norm_spec: dict = field(default_factory=lambda: {})

    def resolve_min_separation(self, frames: int) -> int:
        if self.min_separation is not None:
            return self.min_separation
        return max(1, frames // 8)


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out_dir: Path, command: str, inputs: dict, params: dict,
                    artifacts: list[str]) -> None:
    _write_json(
        out_dir / MANIFEST_NAME,
        {"command": command, "inputs": inputs, "params": params, "artifacts": sorted(artifacts)},
    )


def run_extract(
    stack_path: str | Path,
    vessel_mask_path: str | Path,
    out_dir: str | Path,
    params: ExtractParams | None = None,
) -> dict:
    """Run the full pulse-analysis pipeline and write all artifacts.

    Returns a summary dict (segment/seed counts, peak indices, artifact
    names). Raises ValueError/OSError on any precondition failure.
    """
    params = params or ExtractParams()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    stack = io.load_stack(stack_path)
    vessel_mask = io.binary_from_mask(io.load_mask(vessel_mask_path))
    if vessel_mask.shape != (stack.height, stack.width):
        raise ValueError(
            f"mask dims {vessel_mask.shape} do not match stack dims "
            f"{(stack.height, stack.width)}"
        )

    skel = skeleton.skeletonize(vessel_mask)
    segs = skeleton.prune_short_segments(skeleton.label_segments(skel), params.min_len)
    if segs.count == 0:
        raise ValueError("no usable vessel segments after skeletonization/pruning")

    signals = pulse.segment_signals(stack, segs, params.dilation_radius)
    cls = pulse.classify_artery_segments(signals, params.theta, params.smooth_width)
    seed_mask = pulse.artery_seed_mask(segs, cls)
    if not seed_mask.any():
        raise ValueError("no artery seeds found; try lowering --theta")

    global_sig = pulse.global_pulse(stack, seed_mask)
    corr = pulse.correlation_map(stack, global_sig)

    min_sep = params.resolve_min_separation(stack.frames)
    peaks = pulse.detect_peaks(global_sig, min_sep)
    if peaks.systolic_peaks.size == 0:
        raise ValueError("no systolic peaks found in the global pulse")
    if peaks.diastolic_valleys.size == 0:
        raise ValueError("no diastolic valleys found in the global pulse")
    systole = pulse.average_frames_around(stack, peaks.systolic_peaks, params.half_window)
    diastole = pulse.average_frames_around(stack, peaks.diastolic_valleys, params.half_window)
    diasys_img = pulse.diasys(systole, diastole)
    m0 = features.temporal_mean(stack)

    fs = features.build_feature_stack(m0, corr, diasys_img, params.norm_spec or None)

    artifacts: list[str] = []
    features.save_feature_stack(fs, out_dir)
    artifacts += ["features.json"] + [f"{c.name}.json" for c in fs.channels] \
        + [f"{c.name}.raw" for c in fs.channels]
    io.save_map(systole.astype(np.float32), out_dir / "systole.json")
    io.save_map(diastole.astype(np.float32), out_dir / "diastole.json")
    artifacts += ["systole.json", "systole.raw", "diastole.json", "diastole.raw"]
    io.save_binary_mask(seed_mask, out_dir / "artery_seeds.pgm")
    artifacts.append("artery_seeds.pgm")
    io.save_signal_csv(global_sig, out_dir / "global_pulse.csv")
    artifacts.append("global_pulse.csv")
    sig_dir = out_dir / "segment_signals"
    sig_dir.mkdir(exist_ok=True)
    for label, sig in enumerate(signals, start=1):
        name = f"segment_signals/seg_{label:04d}.csv"
        io.save_signal_csv(sig, out_dir / name)
        artifacts.append(name)
    _write_json(
        out_dir / "peaks.json",
        {
            "systolic_peaks": peaks.systolic_peaks.tolist(),
            "diastolic_valleys": peaks.diastolic_valleys.tolist(),
        },
    )
    artifacts.append("peaks.json")
    _write_json(
        out_dir / "segments.json",
        {
            "segment_count": segs.count,
            "segments": [
                {
                    "label": label,
                    "pixel_count": int(segs.pixel_counts()[label]),
                    "score": float(cls.scores[label - 1]),
                    "artery_seed": bool(cls.is_artery[label - 1]),
                    "constant": bool(cls.constant[label - 1]),
                }
                for label in range(1, segs.count + 1)
            ],
        },
    )
    artifacts.append("segments.json")

    effective = {
        "theta": params.theta,
        "dilation_radius": params.dilation_radius,
        "min_len": params.min_len,
        "half_window": params.half_window,
        "min_separation": min_sep,
        "smooth_width": params.smooth_width,
        "norm": {c.name: c.norm for c in fs.channels},
    }
    _write_manifest(
        out_dir,
        "extract",
        {"stack": str(stack_path), "vessel_mask": str(vessel_mask_path)},
        effective,
        artifacts,
    )
    return {
        "out_dir": str(out_dir),
        "segment_count": segs.count,
        "artery_seed_count": len(cls.artery_labels),
        "artery_seed_labels": cls.artery_labels,
        "systolic_peaks": peaks.systolic_peaks.tolist(),
        "diastolic_valleys": peaks.diastolic_valleys.tolist(),
        "params": effective,
        "artifacts": sorted(artifacts + [MANIFEST_NAME]),
    }


def format_report_table(report: metrics.MetricsReport) -> str:
    """Human-readable per-class metric table plus a compact benchmark row."""
    lines = [f"{'class':<8} {'sens':>7} {'dice':>7} {'clDice':>7} {'hd95':>8}"]
    for name in ("vessel", "artery", "vein", "macro_av"):
        m = getattr(report, name)
        lines.append(
            f"{name:<8} {m.sensitivity:7.3f} {m.dice:7.3f} {m.cl_dice:7.3f} {m.hd95:8.2f}"
        )
    bv, av = report.vessel, report.macro_av
    lines.append(
        f"row: BV {bv.sensitivity:.3f}/{bv.dice:.3f}/{bv.cl_dice:.3f}/{bv.hd95:.2f}"
        f" | A/V {av.sensitivity:.3f}/{av.dice:.3f}/{av.cl_dice:.3f}/{av.hd95:.2f}"
    )
    return "\n".join(lines)


def run_evaluate(pred_path: str | Path, gt_path: str | Path, out_path: str | Path) -> dict:
    """Compare two class masks and write the metrics report JSON."""
    pred = io.load_mask(pred_path)
    gt = io.load_mask(gt_path)
    report = metrics.evaluate(pred, gt)
    out_path = Path(out_path)
    if out_path.parent != Path("."):
        out_path.parent.mkdir(parents=True, exist_ok=True)
    _write_json(out_path, report.to_json_dict())
    return {
        "out_path": str(out_path),
        "report": report.to_json_dict(),
        "table": format_report_table(report),
    }


def run_phantom(spec_path: str | Path, out_dir: str | Path) -> dict:
    """Generate a phantom and write stack, masks, and the echoed spec."""
    spec = phantom.PhantomSpec.from_json(spec_path)
    truth = phantom.generate(spec)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    io.save_stack(truth.stack, out_dir / "stack.json")
    io.save_mask(truth.gt_mask, out_dir / "gt_mask.pgm")
    io.save_binary_mask(truth.gt_mask != io.BACKGROUND, out_dir / "vessel_mask.pgm")
    _write_json(out_dir / "spec.json", spec.to_json_dict())
    artifacts = ["stack.json", "stack.raw", "gt_mask.pgm", "vessel_mask.pgm", "spec.json"]
    _write_manifest(out_dir, "phantom", {"spec": str(spec_path)}, spec.to_json_dict(), artifacts)
    return {
        "out_dir": str(out_dir),
        "vessels": [
            {"kind": v.kind, "pixel_count": v.pixel_count} for v in truth.vessels
        ],
        "dims": list(spec.dims),
        "artifacts": sorted(artifacts + [MANIFEST_NAME]),
    }


def run_info(path: str | Path) -> dict:
    """Header fields of a stack/map container or a PGM mask."""
    path = Path(path)
    if path.suffix == ".pgm":
        mask = io.load_mask(path)
        return {
            "kind": "mask",
            "height": mask.shape[0],
            "width": mask.shape[1],
            "labels": {
                "background": int((mask == io.BACKGROUND).sum()),
                "vein": int((mask == io.VEIN).sum()),
                "artery": int((mask == io.ARTERY).sum()),
            },
        }
    with open(path, "r", encoding="utf-8") as fh:
        header = json.load(fh)
    out = {"kind": "map" if header.get("frames") == 1 else "stack"}
    for key in ("height", "width", "frames", "dtype", "frame_rate"):
        if key in header:
            out[key] = header[key]
    return out
