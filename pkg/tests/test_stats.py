import json
import math
import os
from collections import Counter
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps
from scipy.integrate import trapezoid

from pdtrace import stats

DATA = os.path.join(os.path.dirname(__file__), "data")
REFERENCE_KAPPAS = [76.92, 0.0] + [76.92] * 8


def enumerate_u(n1, n2):
    """U of the first sample for every way of handing it ``n1`` of the ranks."""
    N = n1 + n2
    out = []
    for chosen in combinations(range(1, N + 1), n1):
        out.append(sum(chosen) - n1 * (n1 + 1) // 2)
    return out


def oracle_p(u, n1, n2):
    us = enumerate_u(n1, n2)
    tail = sum(1 for v in us if v <= u)
    return float(min(Fraction(1), Fraction(2 * tail, len(us))))


class TestMannWhitney:
    def test_interleaved(self):
        r = stats.mann_whitney_u([1, 3, 5], [2, 4, 6], mode="exact")
        assert r.statistic == 3 and r.p_value == pytest.approx(0.7)

    def test_identical_multisets(self):
        r = stats.mann_whitney_u([1, 2, 3, 4], [1, 2, 3, 4])
        assert r.p_value == 1.0 and not r.significant

    def test_all_identical_flagged(self):
        r = stats.mann_whitney_u([2, 2], [2, 2, 2])
        assert r.p_value == 1.0 and "all_values_identical" in r.flags

    @pytest.mark.parametrize("n1,n2", [(n1, n2) for n1 in range(1, 10) for n2 in range(1, 10) if n1 + n2 <= 10])
    def test_exact_distribution_matches_enumeration(self, n1, n2):
        counts = Counter(enumerate_u(n1, n2))
        dist = stats.u_distribution(n1, n2)
        assert [int(c) for c in dist] == [counts.get(u, 0) for u in range(n1 * n2 + 1)]

    @pytest.mark.parametrize("n1,n2", [(n1, n2) for n1 in range(1, 10) for n2 in range(1, 10) if n1 + n2 <= 10])
    def test_exact_p_matches_enumeration(self, n1, n2):
        N = n1 + n2
        for chosen in combinations(range(1, N + 1), n1):
            a = list(chosen)
            b = [r for r in range(1, N + 1) if r not in chosen]
            r = stats.mann_whitney_u(a, b, mode="exact")
            assert r.p_value == oracle_p(r.statistic, n1, n2)

    def test_exact_rejects_ties(self):
        with pytest.raises(stats.StatsError):
            stats.mann_whitney_u([1, 2], [2, 3], mode="exact")

    def test_approx_against_scipy(self, rng):
        a, b = rng.normal(0, 1, 15), rng.normal(0.8, 1, 12)
        ours = stats.mann_whitney_u(a, b, mode="approx")
        ref = sps.mannwhitneyu(a, b, method="asymptotic", use_continuity=True)
        assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-12)

    def test_approx_with_ties_against_scipy(self):
        a = [1, 2, 2, 3, 5, 5, 5]
        b = [2, 3, 4, 4, 6, 7, 7, 8]
        ours = stats.mann_whitney_u(a, b)
        ref = sps.mannwhitneyu(a, b, method="asymptotic", use_continuity=True)
        assert "ties" in ours.flags
        assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-12)

    def test_stored_kappa_fixture(self):
        with open(os.path.join(DATA, "mw_cube32_kappas.json")) as fh:
            d = json.load(fh)
        r = stats.mann_whitney_u(d["cube_32x32_augmented"], d["cube_32x32_imbalanced"])
        assert abs(r.p_value - 0.733) <= 0.02

    @settings(max_examples=50)
    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=12),
           st.lists(st.floats(-100, 100), min_size=1, max_size=12))
    def test_u_pair_sums(self, a, b):
        ua, ub = stats.u_statistics(a, b)
        assert ua + ub == pytest.approx(len(a) * len(b))
        p = stats.mann_whitney_u(a, b).p_value
        assert 0.0 <= p <= 1.0


class TestKruskalWallis:
    def test_identical_groups(self):
        r = stats.kruskal_wallis([[1, 2], [1, 2], [1, 2]])
        assert r.statistic == 0.0 and r.p_value == 1.0

    def test_separated_groups(self):
        r = stats.kruskal_wallis([[1, 2, 3], [10, 11, 12], [20, 21, 22]])
        assert r.statistic == pytest.approx(7.2)
        assert r.p_value == pytest.approx(math.exp(-3.6), rel=1e-12)
        assert r.significant

    @settings(max_examples=60)
    @given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 10**6))
    def test_two_groups_equal_normal_approx(self, n1, n2, seed):
        if n1 + n2 < 3:
            return
        vals = np.random.default_rng(seed).permutation(n1 + n2).astype(float)
        a, b = vals[:n1], vals[n1:]
        kw = stats.kruskal_wallis([a, b]).p_value
        mw = stats.mann_whitney_u(a, b, mode="approx", continuity=False).p_value
        assert abs(kw - mw) <= 1e-9

    def test_against_scipy_with_ties(self):
        groups = [[1, 2, 2, 5], [3, 3, 4, 9, 9], [0, 2, 7]]
        ours = stats.kruskal_wallis(groups)
        ref = sps.kruskal(*groups)
        assert ours.statistic == pytest.approx(ref.statistic, rel=1e-12)
        assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-10)

    def test_all_equal(self):
        r = stats.kruskal_wallis([[4, 4], [4, 4, 4]])
        assert (r.statistic, r.p_value) == (0.0, 1.0)


class TestTukey:
    GROUPS = {"A": [1, 2, 3], "B": [10, 11, 12], "C": [1, 2, 3]}

    def test_abc_fixture(self):
        rows = {(r.group1, r.group2): r for r in stats.tukey_hsd(self.GROUPS)}
        ab, ac = rows[("A", "B")], rows[("A", "C")]
        assert (ab.reject, ac.reject) == (True, False)
        assert ab.meandiff == 9.0 and ac.meandiff == 0.0
        half = (ab.ci_upper - ab.ci_lower) / 2
        assert half == pytest.approx(stats.q_critical(0.05, 3, 6) * math.sqrt(1 / 3), rel=1e-12)
        assert half == pytest.approx(2.51, abs=0.01)

    def test_identical_groups(self):
        rows = stats.tukey_hsd({"a": [1, 2, 4], "b": [1, 2, 4], "c": [1, 2, 4]})
        assert all(r.meandiff == 0 and not r.reject for r in rows)

    def test_zero_variance(self):
        rows = stats.tukey_hsd({"a": [1, 1], "b": [1, 1], "c": [2, 2]})
        assert [r.reject for r in rows] == [False, True, True]
        assert all("zero_within_group_variance" in r.flags for r in rows)

    @settings(max_examples=40)
    @given(st.floats(-1e3, 1e3), st.integers(0, 10**6))
    def test_reject_rule_and_shift_invariance(self, shift, seed):
        rng = np.random.default_rng(seed)
        groups = {g: rng.normal(rng.uniform(-2, 2), 1, rng.integers(2, 7)).tolist() for g in "abcd"}
        base = stats.tukey_hsd(groups)
        moved = stats.tukey_hsd({g: [v + shift for v in vals] for g, vals in groups.items()})
        for r, m in zip(base, moved):
            assert r.reject == (not r.ci_lower <= 0 <= r.ci_upper)
            if abs(r.ci_lower) > 1e-6 and abs(r.ci_upper) > 1e-6:
                assert r.reject == m.reject

    def test_q_critical_against_scipy(self):
        for alpha, k, df in [(0.05, 3, 6), (0.05, 4, 27), (0.01, 5, 15), (0.05, 2, 200), (0.01, 10, 45)]:
            ref = sps.studentized_range.ppf(1 - alpha, k, df)
            assert stats.q_critical(alpha, k, df) == pytest.approx(ref, rel=2e-3)

    def test_q_critical_bounds(self):
        with pytest.raises(stats.StatsError):
            stats.q_critical(0.05, 11, 20)
        with pytest.raises(stats.StatsError):
            stats.q_critical(0.1, 3, 20)
        assert stats.q_critical(0.05, 3, math.inf) == pytest.approx(3.314, abs=1e-3)


class TestSummary:
    def test_reference_kappas(self):
        s = stats.five_number_summary(REFERENCE_KAPPAS)
        assert s.as_tuple() == (76.92,) * 5
        assert s.outliers == (0.0,)

    def test_single_value(self):
        assert stats.five_number_summary([3.5]).as_tuple() == (3.5,) * 5

    def test_one_to_five(self):
        s = stats.five_number_summary([5, 3, 1, 4, 2])
        assert s.as_tuple() == (1, 2, 3, 4, 5) and s.outliers == ()

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40))
    def test_ordering(self, vals):
        s = stats.five_number_summary(vals)
        assert s.min_whisker <= s.q1 <= s.median <= s.q3 <= s.max_whisker
        assert len(s.outliers) < len(vals)


class TestDensity:
    def test_normal_peak(self):
        v = np.random.default_rng(0).standard_normal(10**4)
        c = stats.density_curve(v)
        at_mean = np.interp(v.mean(), c.x, c.density)
        assert abs(at_mean - 1 / math.sqrt(2 * math.pi)) / (1 / math.sqrt(2 * math.pi)) < 0.1

    def test_unit_integral(self, rng):
        c = stats.density_curve(rng.gamma(2.0, size=200))
        assert abs(trapezoid(c.density, c.x) - 1.0) < 1e-3

    def test_symmetric(self):
        c = stats.density_curve([-3, -1, 0, 1, 3])
        np.testing.assert_allclose(c.density, c.density[::-1], atol=1e-12)

    def test_two_values_equal_peaks(self):
        c = stats.density_curve([0.0, 4.0])
        left, right = c.density[: c.x.size // 2].max(), c.density[c.x.size // 2:].max()
        assert left == pytest.approx(right, rel=1e-12)
        assert c.density[c.x.size // 2] < left

    def test_spike(self):
        c = stats.density_curve([2.0, 2.0, 2.0])
        assert c.spike and "all_values_identical" in c.flags

    def test_collapsed_iqr(self):
        c = stats.density_curve(REFERENCE_KAPPAS)
        assert c.bandwidth > 0 and np.all(np.isfinite(c.density))


class TestOutputs:
    def test_files(self, tmp_path):
        groups = [stats.SampleGroup("a", REFERENCE_KAPPAS), stats.SampleGroup("b", [50, 60, 70, 80])]
        stats.write_summary_csv(tmp_path / "s.csv", groups)
        stats.write_boxplot_csv(tmp_path / "b.csv", groups)
        stats.write_density_csv(tmp_path / "d.csv", groups)
        stats.write_points_csv(tmp_path / "p.csv", groups)
        assert "76.92" in (tmp_path / "s.csv").read_text()
        for fn in (stats.boxplot_svg, stats.violin_svg, stats.bean_svg):
            svg = fn(groups)
            assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")

    def test_format_p(self):
        assert stats.format_p(0.733712) == "0.7337"
        assert stats.format_p(0.000851234) == "0.0008512"

    def test_result_dict(self):
        d = stats.mann_whitney_u([1, 3, 5], [2, 4, 6]).to_dict()
        assert d["p_value_4sf"] == "0.7" and d["significant"] is False
