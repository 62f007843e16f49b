import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdtrace import pen_data as pd

ROWS = """0 0.600615155255 0.579739793141 0.67510199546 -0.49513813853 0.052785925567
7 0.600615155255 0.579739793141 0.67510199546 -0.49513813853 0.0596285434995
15 0.600726926327 0.579553723335 0.67510199546 -0.49513813853 0.0655913978494
22 0.600838756561 0.579414129257 0.67510199546 -0.49513813853 0.0703812316716
"""


def traj(pressures, sid="LEEDS_p01"):
    n = len(pressures)
    data = np.zeros((n, 6))
    data[:, 0] = np.arange(n)
    data[:, 1:3] = 0.5
    data[:, 5] = pressures
    return pd.Trajectory(data, sid, pd.label_from_subject(sid))


class TestParse:
    def test_single_row(self):
        t = pd.parse_trajectory(ROWS.splitlines()[0], "LEEDS_c07")
        rec = t.records[0]
        assert rec.timestamp == 0
        assert rec.x == pytest.approx(0.6006, abs=1e-4)
        assert rec.pressure == pytest.approx(0.0528, abs=1e-4)
        assert t.label == 0

    def test_four_rows_in_order(self):
        t = pd.parse_trajectory(ROWS, "LEEDS_p03")
        assert len(t) == 4
        assert [r.timestamp for r in t.records] == [0, 7, 15, 22]
        assert t.label == 1

    def test_header_and_commas(self):
        text = "timestamp,x,y,tilt_x,tilt_y,pressure\n" + ROWS.replace(" ", ",")
        assert len(pd.parse_trajectory(text, "LEEDS_p03")) == 4

    def test_empty(self):
        with pytest.raises(pd.EmptySampleError):
            pd.parse_trajectory("", "LEEDS_c01")

    def test_wrong_column_count_reports_line(self):
        bad = ROWS + "30 0.5 0.5 0.1 0.1\n"
        with pytest.raises(pd.ParseError) as info:
            pd.parse_trajectory(bad, "LEEDS_c01")
        assert info.value.line == 5

    def test_non_numeric(self):
        with pytest.raises(pd.ParseError) as info:
            pd.parse_trajectory(ROWS + "30 0.5 abc 0.1 0.1 0.2\n", "LEEDS_c01")
        assert info.value.line == 5

    @pytest.mark.parametrize("row", [
        "0 1.5 0.5 0 0 0.5",
        "0 0.5 0.5 -1.2 0 0.5",
        "0 0.5 0.5 0 0 -0.1",
        "-3 0.5 0.5 0 0 0.1",
    ])
    def test_out_of_range(self, row):
        with pytest.raises(pd.RangeError):
            pd.parse_trajectory(row, "LEEDS_c01")

    def test_reversed_timestamps(self):
        with pytest.raises(pd.RangeError):
            pd.parse_trajectory("5 0.5 0.5 0 0 0.1\n3 0.5 0.5 0 0 0.1", "LEEDS_c01")

    def test_unknown_subject_prefix(self):
        with pytest.raises(pd.PenDataError):
            pd.parse_trajectory(ROWS, "someone")
        t = pd.parse_trajectory(ROWS, "HC_1", control_prefix="HC_", patient_prefix="PD_")
        assert t.label == 0

    def test_load_keeps_line_number(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text(ROWS + "1 2\n")
        with pytest.raises(pd.ParseError) as info:
            pd.load_trajectory(p, "LEEDS_c01")
        assert info.value.line == 5 and "bad.txt" in str(info.value)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(
        st.floats(0, 1), st.floats(0, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(0, 1),
    ), min_size=1, max_size=20))
    def test_round_trip(self, rows):
        data = np.array([(i * 7, *r) for i, r in enumerate(rows)], dtype=np.float64)
        t = pd.Trajectory(data, "LEEDS_p9", 1)
        back = pd.parse_trajectory(pd.format_trajectory(t), "LEEDS_p9")
        np.testing.assert_allclose(back.data, t.data, rtol=1e-11, atol=1e-12)


class TestCleaning:
    def test_drop_zero_pressure(self):
        out = pd.drop_zero_pressure(traj([0, 0.5, 0, 0.7]))
        assert out.pressure.tolist() == [0.5, 0.7]

    def test_drop_keeps_clean_rows(self):
        t = pd.parse_trajectory(ROWS, "LEEDS_p03")
        np.testing.assert_array_equal(pd.drop_zero_pressure(t).data, t.data)

    @given(st.lists(st.sampled_from([0.0, 0.2, 0.9]), min_size=1, max_size=30))
    def test_drop_idempotent(self, ps):
        t = traj(ps)
        if not any(ps):
            with pytest.raises(pd.EmptySampleError):
                pd.drop_zero_pressure(t)
            return
        once = pd.drop_zero_pressure(t)
        np.testing.assert_array_equal(pd.drop_zero_pressure(once).data, once.data)

    def test_trim_initial_wait(self):
        assert pd.trim_initial_wait(traj([0, 0, 0.3, 0, 0.4])).pressure.tolist() == [0.3, 0, 0.4]
        assert pd.trim_initial_wait(traj([0.3, 0.4])).pressure.tolist() == [0.3, 0.4]
        with pytest.raises(pd.EmptySampleError):
            pd.trim_initial_wait(traj([0, 0]))


class TestPadding:
    def test_cube_like_lengths(self):
        batch = pd.pad_sequences([traj([0.5] * 1268), traj([0.5] * 15968)])
        assert batch.pad_length == 15968
        assert batch.data.shape == (2, 15968, 5)
        assert np.all(batch.data[0, :14700] == 0)
        assert np.all(batch.data[0, 14700:, 4] == 0.5)

    def test_pentagon_like_lengths(self):
        assert pd.pad_sequences([traj([0.5] * 2662), traj([0.5] * 25532)]).pad_length == 25532

    def test_single(self):
        b = pd.pad_sequences([traj([0.1, 0.2, 0.3])])
        assert b.pad_length == 3
        np.testing.assert_array_equal(b.data[0], traj([0.1, 0.2, 0.3]).features)

    def test_empty_list(self):
        with pytest.raises(pd.PenDataError):
            pd.pad_sequences([])

    def test_pad_length_too_short(self):
        with pytest.raises(pd.PenDataError):
            pd.pad_sequences([traj([0.1] * 5)], pad_length=3)


class TestSplit:
    def test_sizes_325(self):
        assert pd.split_sizes(325) == (263, 29, 33)

    def test_sizes_82(self):
        assert pd.split_sizes(82) == (66, 7, 9)

    def test_small_n_has_empty_validation(self):
        with pytest.raises(pd.PenDataError):
            pd.shuffle_split([0, 1] * 5)

    @settings(max_examples=40)
    @given(st.integers(30, 400), st.integers(0, 1000))
    def test_partition(self, n, seed):
        tr, va, te = pd.shuffle_split([i % 2 for i in range(n)], pd.SplitSpec(seed=seed))
        assert sorted(tr + va + te) == list(range(n))
        assert (len(tr), len(va), len(te)) == pd.split_sizes(n)

    def test_deterministic(self):
        labels = [0, 1] * 50
        assert pd.shuffle_split(labels, pd.SplitSpec(seed=4)) == pd.shuffle_split(labels, pd.SplitSpec(seed=4))

    def test_stratified(self):
        labels = [0] * 40 + [1] * 60
        tr, va, te = pd.shuffle_split(labels, pd.SplitSpec(seed=1, stratified=True))
        assert sorted(tr + va + te) == list(range(100))
        assert sum(labels[i] for i in te) == 6


class TestManifest:
    def test_round_trip_and_load(self, tmp_path):
        for sid in ("LEEDS_c01", "LEEDS_p02"):
            (tmp_path / f"{sid}.txt").write_text(ROWS)
        entries = [pd.ManifestEntry(f"{s}.txt", s, "cube") for s in ("LEEDS_c01", "LEEDS_p02")]
        pd.write_manifest(tmp_path / "manifest.csv", entries)
        back = pd.read_manifest(tmp_path / "manifest.csv")
        assert [e.subject_id for e in back] == ["LEEDS_c01", "LEEDS_p02"]
        ds = pd.load_dataset(tmp_path / "manifest.csv")
        assert [t.label for t in ds] == [0, 1]
        assert pd.load_dataset(tmp_path / "manifest.csv", shape="pentagon") == []

    def test_bad_shape(self, tmp_path):
        (tmp_path / "m.csv").write_text("path,subject_id,shape\na.txt,LEEDS_c1,circle\n")
        with pytest.raises(pd.ParseError):
            pd.read_manifest(tmp_path / "m.csv")


class TestValidate:
    def test_report(self):
        t = traj([0, 0.5, 0])
        rep = pd.validate(t.data, t.subject_id)
        assert rep.ok
        assert rep.zero_cells["pressure"] == 2
        assert "status = ok" in rep.to_text()
