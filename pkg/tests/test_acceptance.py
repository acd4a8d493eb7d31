"""Acceptance suite: one test per release criterion, each printing a
PASS line (run with ``pytest tests/test_acceptance.py -v -s``).

Derived thresholds in criterion 6 are re-verified here from the default
waveforms before the end-to-end phantom checks run.
"""

import hashlib
import json
import math
import time

import numpy as np
import pytest

from holopulse import features, io, metrics, phantom, pipeline, pulse, skeleton
from holopulse.cli import main as cli_main
from oracles import bfs_components, pearson_reference, random_blob_mask

THETA = 0.3  # documented extraction default, pinned here


def _report(n, label):
    print(f"\nACCEPTANCE {n} ({label}): PASS")


def test_criterion_1_metric_oracle_equivalence():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    for _ in range(200):
        pred = rng.random((32, 32)) < rng.uniform(0.05, 0.5)
        gt = rng.random((32, 32)) < rng.uniform(0.05, 0.5)
        if not pred.any() or not gt.any():
            continue
        fast = metrics.hd95(pred, gt)
        slow = metrics.hd95(pred, gt, bruteforce=True)
        assert abs(fast - slow) <= 1e-9

        counts = metrics.confusion_counts(
            np.where(pred, io.ARTERY, 0), np.where(gt, io.ARTERY, 0), io.ARTERY
        )
        tp = fp = fn = 0
        for y in range(32):
            for x in range(32):
                tp += pred[y, x] and gt[y, x]
                fp += pred[y, x] and not gt[y, x]
                fn += gt[y, x] and not pred[y, x]
        if tp + fn:
            assert metrics.sensitivity(counts) == tp / (tp + fn)
        if 2 * tp + fp + fn:
            assert metrics.dice(counts) == 2 * tp / (2 * tp + fp + fn)
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0, f"took {elapsed:.1f}s"
    _report(1, "metric oracle equivalence, 200 pairs")


def test_criterion_2_metric_hand_cases():
    pred = np.zeros((2, 2), np.uint8)
    gt = np.zeros((2, 2), np.uint8)
    pred[0, 0] = pred[0, 1] = io.ARTERY
    gt[0, 1] = gt[1, 1] = io.ARTERY
    assert metrics.dice(metrics.confusion_counts(pred, gt, io.ARTERY)) == 0.5

    a = np.zeros((8, 8), bool)
    b = np.zeros((8, 8), bool)
    a[0, 0] = True
    b[3, 4] = True
    assert metrics.hd95(a, b) == 5.0

    rng = np.random.default_rng(102)
    checked = 0
    while checked < 50:
        mask = rng.random((24, 24)) < rng.uniform(0.05, 0.6)
        if not mask.any():
            continue
        assert metrics.cl_dice(mask, mask) == 1.0
        assert metrics.hd95(mask, mask) == 0.0
        checked += 1
    _report(2, "metric hand cases exact")


def test_criterion_3_skeleton_properties():
    rng = np.random.default_rng(103)
    passed = 0
    for _ in range(100):
        mask = random_blob_mask(rng, shape=(48, 48), max_discs=5)
        skel = skeleton.skeletonize(mask)
        assert not (skel & ~mask).any(), "skeleton not a subset"
        assert (skeleton.skeletonize(skel) == skel).all(), "not idempotent"
        assert not (
            skel[:-1, :-1] & skel[1:, :-1] & skel[:-1, 1:] & skel[1:, 1:]
        ).any(), "2x2 block survived"
        comps = bfs_components(mask)
        touched = sum(1 for comp in comps if any(skel[y, x] for y, x in comp))
        assert touched == len(comps), "component lost"
        segs = skeleton.label_segments(skel)
        labels = segs.labels
        for y, x in np.argwhere(labels > 0):
            same = 0
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    if dy == dx == 0:
                        continue
                    ny, nx = y + dy, x + dx
                    if (
                        0 <= ny < labels.shape[0]
                        and 0 <= nx < labels.shape[1]
                        and labels[ny, nx] == labels[y, x]
                    ):
                        same += 1
            assert same <= 2, "degree > 2 after labeling"
        passed += 1
    assert passed == 100
    _report(3, "skeleton properties 100/100")


def test_criterion_4_correlation_kernel():
    t = np.arange(64)
    g = np.sin(2 * np.pi * t / 16)
    sig = io.PulseSignal(values=(g - g.mean()) / g.std(), normalized=True)

    data = np.zeros((64, 2, 3), dtype=np.float32)
    data[:, 0, 0] = 2.0 * g + 5.0          # positive affine copy
    data[:, 0, 1] = -g                     # negated
    data[:, 0, 2] = np.cos(2 * np.pi * t / 16)  # orthogonal over whole periods
    data[:, 1, 0] = 3.25                   # constant
    cmap = pulse.correlation_map(io.TemporalStack(data=data), sig)
    assert abs(cmap[0, 0] - 1.0) <= 1e-6
    assert abs(cmap[0, 1] + 1.0) <= 1e-6
    assert abs(cmap[0, 2]) <= 1e-6
    assert cmap[1, 0] == 0.0

    rng = np.random.default_rng(104)
    for _ in range(5):
        stack = io.TemporalStack(data=rng.standard_normal((20, 8, 8)).astype(np.float32))
        p = rng.standard_normal(20)
        psig = io.PulseSignal(values=(p - p.mean()) / p.std(), normalized=True)
        cmap = pulse.correlation_map(stack, psig)
        assert (cmap >= -1.0).all() and (cmap <= 1.0).all()
    _report(4, "correlation kernel cases")


def test_criterion_5_peak_detection():
    t = np.arange(128)
    raw = np.sin(2 * np.pi * t / 32)
    sig = io.PulseSignal(values=(raw - raw.mean()) / raw.std(), normalized=True)
    peaks = pulse.detect_peaks(sig, min_separation=16)
    expected_sys = np.array([8, 40, 72, 104])
    expected_dia = np.array([24, 56, 88, 120])
    assert peaks.systolic_peaks.size == 4 and peaks.diastolic_valleys.size == 4
    assert (np.abs(peaks.systolic_peaks - expected_sys) <= 1).all()
    assert (np.abs(peaks.diastolic_valleys - expected_dia) <= 1).all()

    neg = io.PulseSignal(values=-sig.values, normalized=True)
    swapped = pulse.detect_peaks(neg, min_separation=16)
    assert (swapped.systolic_peaks == peaks.diastolic_valleys).all()
    assert (swapped.diastolic_valleys == peaks.systolic_peaks).all()
    _report(5, "peak detection on sine")


def _upstroke_score(values):
    v = (values - values.mean()) / values.std()
    return float(np.diff(v).max())


def test_criterion_6_phantom_separation():
    spec = phantom.PhantomSpec(
        dims=(256, 256, 128),
        rng_seed=7,
        noise_std=0.05 * 1.0,  # 0.05 x pulse_amplitude
    )
    assert spec.vein_waveform.amplitude_ratio == 0.4
    assert spec.vein_waveform.delay == spec.artery_waveform.period / 4

    # derived-threshold verification on the pure default waveforms
    t = np.arange(spec.dims[2])
    artery_wave = phantom.arterial_waveform(t, spec)
    vein_wave = phantom.venous_waveform(t, spec)
    artery_score = _upstroke_score(artery_wave)
    vein_score = _upstroke_score(vein_wave)
    assert artery_score >= 2.0 * THETA          # 2x slack above threshold
    assert vein_score <= THETA / 1.75           # 1.75x slack below (see ledger)
    rho = pearson_reference(artery_wave, vein_wave)
    assert 1.0 - abs(rho) >= 2.0 * 0.2          # predicted correlation gap, 2x slack
    period = spec.artery_waveform.period
    sys_idx = int(np.argmax(artery_wave[:period]))
    dia_idx = int(np.argmin(artery_wave[:period]))
    def windowed(w, i):
        sel = [(i + d) % period for d in range(-2, 3)]
        return float(np.mean(w[sel]))
    artery_swing = windowed(artery_wave, sys_idx) - windowed(artery_wave, dia_idx)
    vein_swing = windowed(vein_wave, sys_idx) - windowed(vein_wave, dia_idx)
    assert artery_swing >= 2.0 * abs(vein_swing)

    # end-to-end run at defaults
    start = time.perf_counter()
    truth = phantom.generate(spec)
    vessel = truth.gt_mask != io.BACKGROUND
    skel = skeleton.skeletonize(vessel)
    segs = skeleton.prune_short_segments(skeleton.label_segments(skel), 5)
    signals = pulse.segment_signals(truth.stack, segs, 2)
    cls = pulse.classify_artery_segments(signals, THETA)
    seed_mask = pulse.artery_seed_mask(segs, cls)
    pulse_sig = pulse.global_pulse(truth.stack, seed_mask)
    corr = pulse.correlation_map(truth.stack, pulse_sig)
    peaks = pulse.detect_peaks(pulse_sig, 128 // 8)
    systole = pulse.average_frames_around(truth.stack, peaks.systolic_peaks, 2)
    diastole = pulse.average_frames_around(truth.stack, peaks.diastolic_valleys, 2)
    diasys_img = pulse.diasys(systole, diastole)
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"pipeline took {elapsed:.1f}s"

    # (a) per-segment classification against ground truth
    art_total = art_seeded = vein_total = vein_seeded = 0
    for label in range(1, segs.count + 1):
        px = segs.segment_mask(label)
        is_artery = (truth.gt_mask[px] == io.ARTERY).sum() > (
            truth.gt_mask[px] == io.VEIN
        ).sum()
        seeded = bool(cls.is_artery[label - 1])
        if is_artery:
            art_total += 1
            art_seeded += seeded
        else:
            vein_total += 1
            vein_seeded += seeded
    assert art_total >= 1 and vein_total >= 1
    assert art_seeded >= 0.9 * art_total
    assert vein_seeded <= 0.1 * vein_total

    # (b) correlation-map separation
    artery_px = truth.gt_mask == io.ARTERY
    vein_px = truth.gt_mask == io.VEIN
    gap = corr[artery_px].mean() - corr[vein_px].mean()
    assert gap >= 0.2

    # (c) diasys ordering
    assert diasys_img[artery_px].mean() > diasys_img[vein_px].mean()
    _report(6, f"phantom separation (corr gap {gap:.2f}, {elapsed:.1f}s)")


def test_criterion_7_determinism(tmp_path):
    spec = {
        "dims": [64, 64, 128],
        "rng_seed": 12,
        "n_arteries": 1,
        "n_veins": 1,
        "vessel_width": 5,
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))

    def run(tag):
        pdir = tmp_path / f"phantom_{tag}"
        edir = tmp_path / f"extract_{tag}"
        assert cli_main(["phantom", str(spec_path), "--out", str(pdir)]) == 0
        assert (
            cli_main(
                [
                    "extract",
                    str(pdir / "stack.json"),
                    str(pdir / "vessel_mask.pgm"),
                    "--out",
                    str(edir),
                ]
            )
            == 0
        )
        return pdir, edir

    p1, e1 = run("a")
    p2, e2 = run("b")

    def payload_hashes(root, skip=()):
        return {
            str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*"))
            if p.is_file() and p.name not in skip
        }

    assert payload_hashes(p1) == payload_hashes(p2)
    # extract manifests embed the as-given input paths, which differ between
    # the two runs; every payload artifact must still match byte for byte
    skip = (pipeline.MANIFEST_NAME,)
    assert payload_hashes(e1, skip) == payload_hashes(e2, skip)
    _report(7, "phantom + extract byte-identical")


def test_criterion_8_io_round_trips(tmp_path):
    rng = np.random.default_rng(108)
    for i in range(50):
        frames = int(rng.integers(2, 9))
        h = int(rng.integers(1, 9))
        w = int(rng.integers(1, 9))

        stack = io.TemporalStack(
            data=rng.standard_normal((frames, h, w)).astype(np.float32)
        )
        io.save_stack(stack, tmp_path / f"s{i}.json")
        assert io.load_stack(tmp_path / f"s{i}.json").data.tobytes() == stack.data.tobytes()

        img = rng.standard_normal((h, w)).astype(np.float32)
        io.save_map(img, tmp_path / f"m{i}.json")
        assert io.load_map(tmp_path / f"m{i}.json").tobytes() == img.tobytes()

        mask = rng.integers(0, 3, size=(h, w)).astype(np.uint8)
        io.save_mask(mask, tmp_path / f"k{i}.pgm")
        assert (io.load_mask(tmp_path / f"k{i}.pgm") == mask).all()

        sig = io.PulseSignal(values=rng.standard_normal(int(rng.integers(2, 65))))
        io.save_signal_csv(sig, tmp_path / f"c{i}.csv")
        assert io.load_signal_csv(tmp_path / f"c{i}.csv").values.tobytes() == sig.values.tobytes()
    _report(8, "I/O round-trips, 50 instances per format")
