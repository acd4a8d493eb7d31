import numpy as np
import pytest

from holopulse import io, phantom
from oracles import bfs_components, pearson_reference


def small_spec(**overrides):
    base = dict(
        dims=(64, 64, 128),
        rng_seed=3,
        n_arteries=1,
        n_veins=1,
        vessel_width=3,
    )
    base.update(overrides)
    return phantom.PhantomSpec(**base)


class TestWaveforms:
    def test_zero_amplitude_constant(self):
        spec = phantom.PhantomSpec(artery_waveform={"pulse_amplitude": 0.0, "period": 16})
        t = np.arange(64)
        assert (phantom.arterial_waveform(t, spec) == spec.baseline).all()

    def test_periodicity(self):
        spec = phantom.PhantomSpec()
        period = spec.artery_waveform.period
        t = np.arange(3 * period)
        w = phantom.arterial_waveform(t, spec)
        assert np.allclose(w, phantom.arterial_waveform(t + period, spec))
        v = phantom.venous_waveform(t, spec)
        assert np.allclose(v, phantom.venous_waveform(t + period, spec))

    def test_vein_zero_ratio_constant(self):
        spec = phantom.PhantomSpec(vein_waveform={"amplitude_ratio": 0.0})
        t = np.arange(128)
        assert np.allclose(phantom.venous_waveform(t, spec), spec.baseline)

    def test_vein_identity_settings_equal_artery(self):
        spec = phantom.PhantomSpec(
            vein_waveform={"amplitude_ratio": 0.999999, "delay": 0.0, "smoothing_width": 1}
        )
        t = np.arange(128)
        a = phantom.arterial_waveform(t, spec)
        v = phantom.venous_waveform(t, spec)
        assert np.allclose(v, a, atol=1e-5)

    def test_upstroke_ratio_at_defaults(self):
        spec = phantom.PhantomSpec()
        t = np.arange(spec.dims[2])
        a = phantom.arterial_waveform(t, spec)
        v = phantom.venous_waveform(t, spec)
        ratio = np.diff(a).max() / np.diff(v).max()
        assert ratio >= 3.0

    def test_waveform_pearson_is_weak_at_defaults(self):
        spec = phantom.PhantomSpec()
        t = np.arange(spec.dims[2])
        rho = pearson_reference(
            phantom.arterial_waveform(t, spec), phantom.venous_waveform(t, spec)
        )
        assert abs(rho) < 0.2

    def test_spec_invariants_enforced(self):
        with pytest.raises(ValueError, match="period"):
            phantom.PhantomSpec(artery_waveform={"period": 4})
        with pytest.raises(ValueError, match="two waveform periods"):
            phantom.PhantomSpec(dims=(32, 32, 100), artery_waveform={"period": 64})
        with pytest.raises(ValueError, match="amplitude_ratio"):
            phantom.PhantomSpec(vein_waveform={"amplitude_ratio": 1.0})
        with pytest.raises(ValueError, match="noise_std"):
            phantom.PhantomSpec(noise_std=-0.1)


class TestGenerate:
    def test_same_seed_bit_identical(self):
        spec = small_spec()
        a = phantom.generate(spec)
        b = phantom.generate(spec)
        assert a.stack.data.tobytes() == b.stack.data.tobytes()
        assert (a.gt_mask == b.gt_mask).all()
        assert [v.kind for v in a.vessels] == [v.kind for v in b.vessels]

    def test_different_seed_differs(self):
        a = phantom.generate(small_spec(rng_seed=1))
        b = phantom.generate(small_spec(rng_seed=2))
        assert a.stack.data.tobytes() != b.stack.data.tobytes()

    def test_noiseless_artery_series_exact(self):
        spec = small_spec(noise_std=0.0, n_veins=0)
        truth = phantom.generate(spec)
        t = np.arange(spec.dims[2])
        expected = phantom.arterial_waveform(t, spec).astype(np.float32)
        ys, xs = np.nonzero(truth.gt_mask == io.ARTERY)
        assert ys.size > 0
        series = truth.stack.data[:, ys, xs]
        assert (series == expected[:, None]).all()

    def test_noiseless_background_is_baseline(self):
        spec = small_spec(noise_std=0.0)
        truth = phantom.generate(spec)
        bg = truth.gt_mask == io.BACKGROUND
        assert (truth.stack.data[:, bg] == np.float32(spec.baseline)).all()

    def test_component_count_matches_vessel_count(self):
        spec = phantom.PhantomSpec(dims=(96, 96, 128), rng_seed=11, n_arteries=2, n_veins=2)
        truth = phantom.generate(spec)
        comps = bfs_components(truth.gt_mask != io.BACKGROUND)
        assert len(comps) == 4
        # classes are disjoint by construction
        artery = truth.gt_mask == io.ARTERY
        vein = truth.gt_mask == io.VEIN
        assert not (artery & vein).any()
        assert sum(v.kind == "artery" for v in truth.vessels) == 2
        assert sum(v.kind == "vein" for v in truth.vessels) == 2

    def test_single_component_per_vessel(self):
        truth = phantom.generate(small_spec(rng_seed=5))
        for cls, kind in ((io.ARTERY, "artery"), (io.VEIN, "vein")):
            comps = bfs_components(truth.gt_mask == cls)
            assert len(comps) == 1

    def test_class_separability_under_noise(self):
        spec = small_spec(rng_seed=9, noise_std=0.1)  # noise_std = 0.1 * amplitude
        truth = phantom.generate(spec)
        t = np.arange(spec.dims[2])
        wave = phantom.arterial_waveform(t, spec)
        data = truth.stack.data.astype(np.float64)

        def mean_corr(cls):
            ys, xs = np.nonzero(truth.gt_mask == cls)
            return np.mean(
                [pearson_reference(data[:, y, x], wave) for y, x in zip(ys, xs)]
            )

        artery_corr = mean_corr(io.ARTERY)
        vein_corr = mean_corr(io.VEIN)
        assert artery_corr >= 0.9
        assert vein_corr < artery_corr

    def test_impossible_placement_raises(self):
        spec = small_spec(n_arteries=12, n_veins=12, vessel_width=7)
        with pytest.raises(RuntimeError, match="could not place"):
            phantom.generate(spec)

    def test_spec_json_round_trip(self, tmp_path):
        import json

        spec = small_spec(rng_seed=21)
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(spec.to_json_dict()))
        back = phantom.PhantomSpec.from_json(path)
        assert back == spec
