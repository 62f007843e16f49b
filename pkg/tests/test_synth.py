import filecmp
import os

import numpy as np
import pytest

from pdtrace import pen_data, synth

RATE = 133.0


def residual_peak_hz(tpl, profile, rate=RATE):
    """Dominant non-DC frequency of the x displacement left after removing the template path."""
    traj = synth.synth_trajectory(tpl, profile, rate)
    t = np.arange(len(traj)) / rate
    ideal, _ = synth.ideal_path(tpl, profile, t)
    r = traj.data[:, 1] - ideal[:, 0]
    power = np.abs(np.fft.rfft(r - r.mean())) ** 2
    freqs = np.fft.rfftfreq(r.size, 1.0 / rate)
    return freqs[1 + np.argmax(power[1:])]


class TestTemplates:
    @pytest.mark.parametrize("shape,strokes", [("pentagon", 2), ("cube", 3)])
    def test_structure(self, shape, strokes):
        tpl = synth.template(shape)
        assert tpl.pen_up_gaps == strokes - 1
        w = tpl.waypoints
        assert np.all((w >= 0) & (w <= 1))

    def test_unknown(self):
        with pytest.raises(synth.SynthError):
            synth.template("circle")


class TestProfiles:
    def test_patient_band(self):
        with pytest.raises(synth.SynthError):
            synth.SubjectProfile(label=1, tremor_freq_hz=6.0, tremor_amplitude=0.01)

    def test_control_without_tremor(self):
        with pytest.raises(synth.SynthError):
            synth.SubjectProfile(label=0, tremor_amplitude=0.01)

    def test_random_profiles_in_bounds(self, rng):
        for _ in range(50):
            p = synth.random_profile(1, rng)
            assert 3.0 <= p.tremor_freq_hz <= 5.0 and p.tremor_amplitude == 0.02
            c = synth.random_profile(0, rng)
            assert c.tremor_amplitude == 0.0 and c.speed_factor > p.speed_factor

    def test_zero_separation_overlaps(self, rng):
        ctl = [synth.random_profile(0, rng, separation=0.0) for _ in range(200)]
        pat = [synth.random_profile(1, rng, separation=0.0) for _ in range(200)]
        assert abs(np.mean([p.pressure_mean for p in ctl]) - np.mean([p.pressure_mean for p in pat])) < 0.03
        assert abs(np.mean([p.tilt_center for p in ctl]) - np.mean([p.tilt_center for p in pat])) < 0.03


class TestSpectrum:
    @pytest.mark.parametrize("seed", range(3))
    def test_control_peak_below_1hz(self, seed):
        prof = synth.SubjectProfile(label=0, seed=seed)
        assert residual_peak_hz(synth.template("cube"), prof) < 1.0

    @pytest.mark.parametrize("seed", range(3))
    def test_patient_peak_at_tremor(self, seed):
        prof = synth.SubjectProfile(label=1, tremor_freq_hz=4.0, tremor_amplitude=0.01, seed=seed)
        assert abs(residual_peak_hz(synth.template("pentagon"), prof) - 4.0) <= 0.3


class TestTrajectory:
    def test_deterministic(self):
        prof = synth.SubjectProfile(label=1, tremor_freq_hz=3.5, tremor_amplitude=0.02, seed=11)
        a = synth.synth_trajectory(synth.template("cube"), prof)
        b = synth.synth_trajectory(synth.template("cube"), prof)
        np.testing.assert_array_equal(a.data, b.data)

    def test_valid_and_has_pen_up(self):
        prof = synth.SubjectProfile(label=0, initial_wait_s=1.0, seed=2)
        traj = synth.synth_trajectory(synth.template("cube"), prof)
        assert pen_data.validate(traj.data).ok
        assert np.all(traj.pressure[: int(RATE) - 1] == 0)
        assert np.any(traj.pressure[int(RATE):] == 0)  # hover moves between strokes

    def test_too_short(self):
        prof = synth.SubjectProfile(label=0, seed=0)
        with pytest.raises(synth.SynthError):
            synth.synth_trajectory(synth.template("cube"), prof, sample_rate_hz=0.5)


class TestCohort:
    def test_87_subject_manifest(self, tmp_path):
        manifest = synth.gen_cohort(tmp_path, 29, 58, "cube", seed=1, sample_rate_hz=20)
        entries = pen_data.read_manifest(manifest)
        assert len(entries) == 87
        assert len([p for p in os.listdir(tmp_path) if p.endswith(".txt")]) == 87
        ids = [e.subject_id for e in entries]
        assert sum("_c_" in i for i in ids) == 29 and sum("_p_" in i for i in ids) == 58
        data = pen_data.load_dataset(manifest)
        assert [t.label for t in data] == [0] * 29 + [1] * 58

    def test_minimal(self, tmp_path):
        synth.gen_cohort(tmp_path, 1, 1, "pentagon", sample_rate_hz=20)
        assert len([p for p in os.listdir(tmp_path) if p.endswith(".txt")]) == 2

    def test_byte_identical_regeneration(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        synth.gen_cohort(a, 2, 3, "pentagon", seed=7)
        synth.gen_cohort(b, 2, 3, "pentagon", seed=7)
        names = sorted(os.listdir(a))
        assert names == sorted(os.listdir(b))
        match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
        assert mismatch == [] and errors == []

    def test_default_length_bounds(self):
        lo, hi = synth.DEFAULT_LENGTH_BOUNDS["cube"]
        trajs = synth.cohort_trajectories(3, 3, "cube", seed=2, length_bounds=(lo, hi))
        assert all(lo <= len(t) <= hi for t in trajs)

    def test_impossible_bounds(self):
        with pytest.raises(synth.SynthError):
            synth.cohort_trajectories(1, 1, "cube", length_bounds=(10, 12), max_redraws=3)

    def test_needs_both_classes(self):
        with pytest.raises(synth.SynthError):
            synth.cohort_trajectories(0, 3, "cube")
