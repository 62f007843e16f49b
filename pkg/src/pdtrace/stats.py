"""Rank tests, Tukey HSD, five-number summaries and kernel densities for
comparing experiments by their per-fold scores.
"""

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import erfc, gammaincc

from ._qtable import DFS, KS, QTABLE

ALPHA = 0.05
EXACT_MAX_N = 14


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class SampleGroup:
    name: str
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise StatsError(f"group {self.name!r} is empty")
        if not all(math.isfinite(v) for v in vals):
            raise StatsError(f"group {self.name!r} has non-finite values")
        object.__setattr__(self, "values", vals)

    @property
    def n(self):
        return len(self.values)

    @property
    def mean(self):
        return float(np.mean(self.values))


def _as_groups(groups):
    if isinstance(groups, dict):
        return [SampleGroup(k, v) for k, v in groups.items()]
    out = []
    for i, g in enumerate(groups):
        out.append(g if isinstance(g, SampleGroup) else SampleGroup(f"g{i + 1}", g))
    return out


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str
    flags: tuple = ()
    alpha: float = ALPHA

    @property
    def significant(self):
        return self.p_value <= self.alpha

    def to_dict(self):
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "p_value_4sf": format_p(self.p_value),
            "method": self.method,
            "significant": self.significant,
            "flags": list(self.flags),
        }


def format_p(p):
    return f"{p:.4g}"


def rankdata(values):
    """Ranks from 1 with ties sharing their mean rank."""
    a = np.asarray(values, dtype=np.float64)
    order = np.argsort(a, kind="mergesort")
    sorted_a = a[order]
    ranks = np.empty(a.size)
    start = 0
    for end in range(1, a.size + 1):
        if end == a.size or sorted_a[end] != sorted_a[start]:
            ranks[order[start:end]] = 0.5 * (start + end + 1)
            start = end
    return ranks


def _tie_sizes(values):
    _, counts = np.unique(np.asarray(values, dtype=np.float64), return_counts=True)
    return counts


# -- Mann-Whitney U -----------------------------------------------------------


def u_statistics(a, b):
    """``(U_a, U_b)``; ``U_a`` counts pairs where ``a`` is larger (ties count 1/2)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ranks = rankdata(np.concatenate([a, b]))
    r_a = ranks[:a.size].sum()
    u_a = r_a - a.size * (a.size + 1) / 2
    return float(u_a), float(a.size * b.size - u_a)


def u_distribution(n1, n2):
    """Counts of each U value ``0 .. n1*n2`` over all ``C(n1+n2, n1)`` rank assignments."""
    # f[i][j] is the count polynomial for i and j items; built one row at a time
    prev = [np.ones(1, dtype=object) for _ in range(n2 + 1)]
    for i in range(1, n1 + 1):
        cur = [np.ones(1, dtype=object)]
        for j in range(1, n2 + 1):
            # the largest item belongs to the first sample (adds j) or not
            a = np.zeros(i * j + 1, dtype=object)
            p = prev[j]
            a[j:j + p.size] += p
            c = cur[j - 1]
            a[:c.size] += c
            cur.append(a)
        prev = cur
    return prev[n2]


def _exact_p(u, n1, n2):
    counts = u_distribution(n1, n2)
    total = sum(counts)
    tail = sum(counts[:int(math.floor(u)) + 1])
    return min(1.0, 2.0 * float(tail) / float(total))


def mann_whitney_u(a, b, mode="auto", continuity=True, alpha=ALPHA):
    """Two-sided Mann-Whitney U test; the statistic is ``min(U_a, U_b)``.

    ``mode="exact"`` counts every rank assignment (no ties allowed).
    ``mode="approx"`` uses the normal approximation with tie correction and,
    unless ``continuity=False``, a continuity correction of 1/2. ``"auto"``
    is exact for ``n1 + n2 <= 14`` without ties.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise StatsError("both groups must be non-empty")
    if mode not in ("auto", "exact", "approx"):
        raise StatsError(f"unknown mode {mode!r}")
    n1, n2 = a.size, b.size
    u_a, u_b = u_statistics(a, b)
    u = min(u_a, u_b)
    pooled = np.concatenate([a, b])
    if np.all(pooled == pooled[0]):
        return TestResult(u, 1.0, "mann-whitney-degenerate", ("all_values_identical",), alpha)
    ties = _tie_sizes(pooled)
    has_ties = bool(np.any(ties > 1))
    if mode == "auto":
        mode = "exact" if n1 + n2 <= EXACT_MAX_N and not has_ties else "approx"
    if mode == "exact":
        if has_ties:
            raise StatsError("exact Mann-Whitney needs tie-free data")
        return TestResult(u, _exact_p(u, n1, n2), "mann-whitney-exact", (), alpha)
    N = n1 + n2
    mu = n1 * n2 / 2.0
    var = n1 * n2 / 12.0 * ((N + 1) - np.sum(ties**3 - ties) / (N * (N - 1)))
    dev = abs(u - mu) - (0.5 if continuity else 0.0)
    if dev <= 0:
        p = 1.0
    else:
        p = min(1.0, float(erfc(dev / math.sqrt(var) / math.sqrt(2.0))))
    method = "mann-whitney-normal" + ("-cc" if continuity else "")
    return TestResult(u, p, method, ("ties",) if has_ties else (), alpha)


# -- Kruskal-Wallis -----------------------------------------------------------


def chi2_sf(x, dof):
    """Upper tail of the chi-square distribution."""
    if x <= 0:
        return 1.0
    return float(gammaincc(dof / 2.0, x / 2.0))


def kruskal_wallis(groups, alpha=ALPHA):
    """Kruskal-Wallis H with tie correction; p from the chi-square tail with k-1 dof."""
    groups = _as_groups(groups)
    if len(groups) < 2:
        raise StatsError("need at least two groups")
    pooled = np.concatenate([np.asarray(g.values) for g in groups])
    N = pooled.size
    if N < 3:
        raise StatsError("need at least three values in total")
    if np.all(pooled == pooled[0]):
        return TestResult(0.0, 1.0, "kruskal-wallis", ("all_values_identical",), alpha)
    ranks = rankdata(pooled)
    h, start = 0.0, 0
    for g in groups:
        r = ranks[start:start + g.n].sum()
        h += r * r / g.n
        start += g.n
    h = 12.0 / (N * (N + 1)) * h - 3.0 * (N + 1)
    ties = _tie_sizes(pooled)
    h /= 1.0 - np.sum(ties**3 - ties) / (N**3 - N)
    h = max(h, 0.0)
    return TestResult(float(h), chi2_sf(h, len(groups) - 1), "kruskal-wallis", (), alpha)


# -- Tukey HSD ---------------------------------------------------------------


def q_critical(alpha, k, df):
    """Studentized range critical value from the embedded table.

    Linear in ``log(df)`` between tabulated degrees of freedom, linear in
    ``1/df`` between 120 and infinity.
    """
    if alpha not in QTABLE:
        raise StatsError(f"alpha must be one of {sorted(QTABLE)}")
    if k not in KS:
        raise StatsError(f"number of groups must be in {KS[0]}..{KS[-1]}, got {k}")
    if df < DFS[0]:
        raise StatsError(f"need at least {DFS[0]} error degrees of freedom, got {df}")
    row = QTABLE[alpha][k]
    if math.isinf(df):
        return row[-1]
    if df >= DFS[-1]:
        # 1/df runs from 1/120 down to 0 at infinity
        w = (1.0 / df) / (1.0 / DFS[-1])
        return row[-1] + w * (row[-2] - row[-1])
    j = int(np.searchsorted(DFS, df, side="right")) - 1
    if DFS[j] == df:
        return row[j]
    lo, hi = DFS[j], DFS[j + 1]
    w = (math.log(df) - math.log(lo)) / (math.log(hi) - math.log(lo))
    return row[j] + w * (row[j + 1] - row[j])


@dataclass(frozen=True)
class TukeyRow:
    group1: str
    group2: str
    meandiff: float
    ci_lower: float
    ci_upper: float
    reject: bool
    flags: tuple = ()

    def to_dict(self):
        return {
            "group1": self.group1, "group2": self.group2, "meandiff": self.meandiff,
            "lower": self.ci_lower, "upper": self.ci_upper, "reject": self.reject, "flags": list(self.flags),
        }


def tukey_hsd(groups, alpha=ALPHA):
    """All-pairs Tukey HSD. ``meandiff`` for ``(group1, group2)`` is ``mean2 - mean1``."""
    groups = _as_groups(groups)
    k = len(groups)
    if k < 2:
        raise StatsError("need at least two groups")
    if any(g.n < 2 for g in groups):
        raise StatsError("every group needs at least two values")
    N = sum(g.n for g in groups)
    df = N - k
    sse = sum(float(np.sum((np.asarray(g.values) - g.mean) ** 2)) for g in groups)
    mse = sse / df
    q = q_critical(alpha, k, df)
    rows = []
    for gi, gj in combinations(groups, 2):
        diff = gj.mean - gi.mean
        half = q * math.sqrt(mse / 2.0 * (1.0 / gi.n + 1.0 / gj.n))
        lo, hi = diff - half, diff + half
        if mse == 0.0:
            rows.append(TukeyRow(gi.name, gj.name, diff, lo, hi, diff != 0.0, ("zero_within_group_variance",)))
        else:
            rows.append(TukeyRow(gi.name, gj.name, diff, lo, hi, not lo <= 0.0 <= hi))
    return rows


# -- descriptive --------------------------------------------------------------


@dataclass(frozen=True)
class SummaryStats:
    min_whisker: float
    q1: float
    median: float
    q3: float
    max_whisker: float
    outliers: tuple
    notch_halfwidth: float
    n: int

    def as_tuple(self):
        return (self.min_whisker, self.q1, self.median, self.q3, self.max_whisker)


def five_number_summary(values):
    """Quartiles by linear interpolation, Tukey whiskers (1.5 IQR) and notch half-width."""
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if v.size == 0:
        raise StatsError("need at least one value")
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    outliers = tuple(float(x) for x in v[(v < lo_fence) | (v > hi_fence)])
    return SummaryStats(
        min_whisker=float(min(inside.min(), q1)),
        q1=float(q1),
        median=float(med),
        q3=float(q3),
        max_whisker=float(max(inside.max(), q3)),
        outliers=outliers,
        notch_halfwidth=float(1.58 * iqr / math.sqrt(v.size)),
        n=int(v.size),
    )


@dataclass(frozen=True)
class DensityCurve:
    x: np.ndarray
    density: np.ndarray
    bandwidth: float
    spike: bool = False
    flags: tuple = field(default_factory=tuple)


def silverman_bandwidth(values):
    v = np.asarray(values, dtype=np.float64)
    sd = float(np.std(v, ddof=1))
    q1, q3 = np.percentile(v, [25, 75])
    spread = min(sd, (q3 - q1) / 1.34)
    if spread <= 0:
        # a collapsed IQR (most values equal) would give zero width
        spread = sd
    return 0.9 * spread * v.size ** (-0.2)


def density_curve(values, bandwidth="auto", points=256):
    """Gaussian kernel density sampled at ``points`` positions over data +- 3 bandwidths.

    The sampled curve is rescaled so its trapezoid integral over that window
    is exactly 1. All-identical data give a single spike (``spike=True``).
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise StatsError("need at least one value")
    if np.all(v == v[0]):
        return DensityCurve(np.array([v[0]]), np.array([1.0]), 0.0, True, ("all_values_identical",))
    bw = silverman_bandwidth(v) if bandwidth == "auto" else float(bandwidth)
    if not bw > 0:
        raise StatsError("bandwidth must be positive")
    x = np.linspace(v.min() - 3 * bw, v.max() + 3 * bw, points)
    z = (x[:, None] - v[None, :]) / bw
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (v.size * bw * math.sqrt(2 * math.pi))
    dens /= trapezoid(dens, x)
    return DensityCurve(x, dens, bw)


# -- plot data ----------------------------------------------------------------

SUMMARY_ROWS = (
    ("Upper whisker", "max_whisker"),
    ("3rd quartile", "q3"),
    ("Median", "median"),
    ("1st quartile", "q1"),
    ("Lower whisker", "min_whisker"),
    ("Nr. of data points", "n"),
)


def write_summary_csv(path, groups):
    groups = _as_groups(groups)
    sums = [five_number_summary(g.values) for g in groups]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("statistic," + ",".join(g.name for g in groups) + "\n")
        for label, attr in SUMMARY_ROWS:
            fh.write(label + "," + ",".join(f"{getattr(s, attr):.2f}" for s in sums) + "\n")


def write_boxplot_csv(path, groups):
    groups = _as_groups(groups)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("group,min_whisker,q1,median,q3,max_whisker,notch_low,notch_high,n,outliers\n")
        for g in groups:
            s = five_number_summary(g.values)
            nums = [s.min_whisker, s.q1, s.median, s.q3, s.max_whisker,
                    s.median - s.notch_halfwidth, s.median + s.notch_halfwidth]
            fh.write(",".join([g.name] + [repr(x) for x in nums] + [str(s.n), ";".join(repr(o) for o in s.outliers)]) + "\n")


def write_density_csv(path, groups):
    groups = _as_groups(groups)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("group,x,density\n")
        for g in groups:
            c = density_curve(g.values)
            for x, d in zip(c.x, c.density):
                fh.write(f"{g.name},{x!r},{d!r}\n")


def write_points_csv(path, groups):
    groups = _as_groups(groups)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("group,value\n")
        for g in groups:
            for v in g.values:
                fh.write(f"{g.name},{v!r}\n")


SVG_W, SVG_H = 640, 400
_PAD = 50


def _scale(lo, hi):
    if hi == lo:
        lo, hi = lo - 1, hi + 1
    span = hi - lo
    lo, hi = lo - 0.05 * span, hi + 0.05 * span
    return lambda v: SVG_H - _PAD - (v - lo) / (hi - lo) * (SVG_H - 2 * _PAD)


def _svg(body, title):
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" '
            f'viewBox="0 0 {SVG_W} {SVG_H}">\n<rect width="100%" height="100%" fill="white"/>\n'
            f'<text x="{SVG_W / 2}" y="24" text-anchor="middle" font-size="16">{title}</text>\n')
    return head + "\n".join(body) + "\n</svg>\n"


def _slots(groups):
    width = (SVG_W - 2 * _PAD) / len(groups)
    return [(_PAD + width * (i + 0.5), width) for i in range(len(groups))]


def _value_range(groups, extra=()):
    vals = [v for g in groups for v in g.values] + list(extra)
    return min(vals), max(vals)


def boxplot_svg(groups, title="Notched box plot"):
    groups = _as_groups(groups)
    sums = [five_number_summary(g.values) for g in groups]
    y = _scale(*_value_range(groups))
    body = []
    for (cx, w), g, s in zip(_slots(groups), groups, sums):
        half = w * 0.25
        notch = half * 0.5
        nl, nh = s.median - s.notch_halfwidth, s.median + s.notch_halfwidth
        pts = [(cx - half, s.q1), (cx - half, max(nl, s.q1)), (cx - notch, s.median), (cx - half, min(nh, s.q3)),
               (cx - half, s.q3), (cx + half, s.q3), (cx + half, min(nh, s.q3)), (cx + notch, s.median),
               (cx + half, max(nl, s.q1)), (cx + half, s.q1)]
        body.append('<polygon fill="#cfe0f3" stroke="black" points="'
                    + " ".join(f"{px:.1f},{y(py):.1f}" for px, py in pts) + '"/>')
        body.append(f'<line x1="{cx - notch:.1f}" x2="{cx + notch:.1f}" y1="{y(s.median):.1f}" y2="{y(s.median):.1f}" stroke="black" stroke-width="2"/>')
        for a, b in ((s.q3, s.max_whisker), (s.q1, s.min_whisker)):
            body.append(f'<line x1="{cx:.1f}" x2="{cx:.1f}" y1="{y(a):.1f}" y2="{y(b):.1f}" stroke="black"/>')
        for o in s.outliers:
            body.append(f'<circle cx="{cx:.1f}" cy="{y(o):.1f}" r="3" fill="none" stroke="black"/>')
        body.append(f'<text x="{cx:.1f}" y="{SVG_H - 20}" text-anchor="middle" font-size="12">{g.name} (median {s.median:.2f})</text>')
    return _svg(body, title)


def _density_shapes(groups, with_points):
    curves = [density_curve(g.values) for g in groups]
    extra = [x for c in curves for x in (c.x[0], c.x[-1])]
    y = _scale(*_value_range(groups, extra))
    body = []
    for (cx, w), g, c in zip(_slots(groups), groups, curves):
        half = w * 0.4
        if c.spike:
            body.append(f'<line x1="{cx - half:.1f}" x2="{cx + half:.1f}" y1="{y(c.x[0]):.1f}" y2="{y(c.x[0]):.1f}" stroke="black" stroke-width="2"/>')
        else:
            d = c.density / c.density.max() * half
            left = [(cx - di, y(xi)) for xi, di in zip(c.x, d)]
            right = [(cx + di, y(xi)) for xi, di in zip(c.x[::-1], d[::-1])]
            body.append('<polygon fill="#e8d5f0" stroke="black" points="'
                        + " ".join(f"{px:.1f},{py:.1f}" for px, py in left + right) + '"/>')
        if with_points:
            for v in g.values:
                body.append(f'<line x1="{cx - half * 0.3:.1f}" x2="{cx + half * 0.3:.1f}" y1="{y(v):.1f}" y2="{y(v):.1f}" stroke="#333"/>')
        med = float(np.median(g.values))
        body.append(f'<circle cx="{cx:.1f}" cy="{y(med):.1f}" r="3" fill="white" stroke="black"/>')
        body.append(f'<text x="{cx:.1f}" y="{SVG_H - 20}" text-anchor="middle" font-size="12">{g.name} (median {med:.2f})</text>')
    return body


def violin_svg(groups, title="Violin plot"):
    return _svg(_density_shapes(_as_groups(groups), False), title)


def bean_svg(groups, title="Bean plot"):
    return _svg(_density_shapes(_as_groups(groups), True), title)
