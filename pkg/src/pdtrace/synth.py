"""Synthetic pen-exam cohorts.

Drawings follow a fixed template at constant speed. Every subject adds slow
hand drift and sensor jitter; patients also carry a sinusoidal tremor and
draw more slowly. The output uses the regular trajectory file and manifest
formats, so the rest of the pipeline cannot tell it from recorded data.
"""

import os
from dataclasses import dataclass

import numpy as np

from . import pen_data
from ._rng import derive_seed
from .pen_data import CONTROL_PREFIX, PATIENT_PREFIX, ManifestEntry, Trajectory

MIN_LENGTH = 16
DEFAULT_RATE_HZ = 133.0
BASE_SPEED = 0.25  # canvas widths per second
DEFAULT_LENGTH_BOUNDS = {"cube": (500, 16000), "pentagon": (700, 25000)}


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class TemplatePath:
    """Strokes as ``(m, 2)`` waypoint arrays in ``[0, 1]^2``; the pen lifts between strokes."""

    shape: str
    strokes: tuple

    @property
    def waypoints(self):
        return np.concatenate(self.strokes)

    @property
    def pen_up_gaps(self):
        return len(self.strokes) - 1


def _pentagon(cx, cy, r, phase):
    ang = phase + 2 * np.pi * np.arange(6) / 5
    return np.column_stack([cx + r * np.cos(ang), cy + r * np.sin(ang)])


def template(shape):
    """Waypoints for the two exam drawings (no randomness)."""
    if shape == "pentagon":
        # two overlapping pentagons, each closed in one stroke
        return TemplatePath(shape, (
            _pentagon(0.36, 0.5, 0.25, -np.pi / 2),
            _pentagon(0.64, 0.5, 0.25, np.pi / 2),
        ))
    if shape == "cube":
        x0, x1, y0, y1 = 0.15, 0.6, 0.35, 0.85
        dx, dy = 0.25, -0.25
        front = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]])
        top = np.array([[x0, y0], [x0 + dx, y0 + dy], [x1 + dx, y0 + dy], [x1, y0]])
        side = np.array([[x1 + dx, y0 + dy], [x1 + dx, y1 + dy], [x1, y1]])
        return TemplatePath(shape, (front, top, side))
    raise SynthError(f"unknown shape {shape!r}")


@dataclass(frozen=True)
class SubjectProfile:
    """Kinematic parameters of one synthetic subject.

    ``label`` is 0 for a control and 1 for a patient. Amplitudes are
    fractions of the canvas width.
    """

    label: int
    tremor_freq_hz: float = 0.0
    tremor_amplitude: float = 0.0
    speed_factor: float = 1.0
    pressure_mean: float = 0.6
    pressure_jitter: float = 0.03
    drift_sd: float = 0.003
    drift_tau_s: float = 1.5
    jitter_sd: float = 0.0005
    tilt_center: float = 0.0
    tilt_walk_sd: float = 0.02
    initial_wait_s: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.label not in (0, 1):
            raise SynthError("label must be 0 (control) or 1 (patient)")
        if self.label == 1 and not 3.0 <= self.tremor_freq_hz <= 5.0:
            raise SynthError(f"patient tremor frequency must lie in [3, 5] Hz, got {self.tremor_freq_hz}")
        if self.label == 0 and self.tremor_amplitude != 0:
            raise SynthError("controls have no tremor")
        if self.tremor_amplitude < 0 or self.speed_factor <= 0:
            raise SynthError("tremor_amplitude must be >= 0 and speed_factor > 0")
        for name in ("pressure_mean", "pressure_jitter"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise SynthError(f"{name} must lie in (0, 1], got {v}")
        if not -1.0 <= self.tilt_center <= 1.0:
            raise SynthError("tilt_center must lie in [-1, 1]")
        if self.initial_wait_s < 0:
            raise SynthError("initial_wait_s must be >= 0")


def random_profile(label, rng, tremor_amplitude=0.02, separation=1.0):
    """Draw a profile within the class bounds.

    ``separation`` scales how far apart the class-typical pen inclination and
    contact pressure sit; at 0 only tremor and speed tell the classes apart.
    """
    sign = -1.0 if label == 0 else 1.0
    common = dict(
        tilt_center=float(sign * 0.5 * separation + rng.uniform(-0.15, 0.15)),
        pressure_jitter=float(rng.uniform(0.02, 0.05)),
        drift_sd=float(rng.uniform(0.002, 0.004)),
        initial_wait_s=float(rng.uniform(0.5, 2.0)),
        seed=int(rng.integers(0, 2**63 - 1)),
    )
    if label == 0:
        return SubjectProfile(
            label=0,
            speed_factor=float(rng.uniform(0.9, 1.2)),
            pressure_mean=float(np.clip(0.55 + 0.15 * separation + rng.uniform(-0.1, 0.1), 0.05, 1.0)),
            **common,
        )
    return SubjectProfile(
        label=1,
        tremor_freq_hz=float(rng.uniform(3.0, 5.0)),
        tremor_amplitude=float(tremor_amplitude),
        speed_factor=float(rng.uniform(0.55, 0.85)),
        pressure_mean=float(np.clip(0.55 - 0.15 * separation + rng.uniform(-0.1, 0.1), 0.05, 1.0)),
        **common,
    )


def _route(tpl):
    """One polyline through every stroke with hover moves between them.

    Returns vertices and, per segment, whether the pen is down.
    """
    verts = [tpl.strokes[0][0]]
    down = []
    for k, stroke in enumerate(tpl.strokes):
        if k > 0:
            verts.append(stroke[0])
            down.append(False)
        for p in stroke[1:]:
            verts.append(p)
            down.append(True)
    return np.asarray(verts), np.asarray(down)


def _sample_times(tpl, profile, sample_rate_hz):
    verts, _ = _route(tpl)
    length = np.sum(np.hypot(*np.diff(verts, axis=0).T))
    duration = profile.initial_wait_s + length / (BASE_SPEED * profile.speed_factor)
    n = int(np.floor(duration * sample_rate_hz)) + 1
    return np.arange(n) / sample_rate_hz


def ideal_path(tpl, profile, t):
    """Noise-free pen position and pen-down flag at times ``t`` (seconds)."""
    verts, seg_down = _route(tpl)
    seg_len = np.hypot(*np.diff(verts, axis=0).T)
    cum = np.r_[0.0, np.cumsum(seg_len)]
    s = np.clip((np.asarray(t) - profile.initial_wait_s) * BASE_SPEED * profile.speed_factor, 0.0, cum[-1])
    seg = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg_len) - 1)
    frac = (s - cum[seg]) / seg_len[seg]
    xy = verts[seg] + frac[:, None] * (verts[seg + 1] - verts[seg])
    down = seg_down[seg] & (np.asarray(t) >= profile.initial_wait_s)
    return xy, down


def _ou(rng, n, dt, sd, tau):
    """Stationary Ornstein-Uhlenbeck path with standard deviation ``sd``."""
    a = np.exp(-dt / tau)
    noise = rng.normal(0.0, sd * np.sqrt(1 - a * a), n)
    out = np.empty(n)
    out[0] = rng.normal(0.0, sd)
    for k in range(1, n):
        out[k] = a * out[k - 1] + noise[k]
    return out


def _tilt_walk(rng, n, center, sd_per_sqrt_s, dt):
    walk = center + np.cumsum(rng.normal(0.0, sd_per_sqrt_s * np.sqrt(dt), n))
    # reflect into [-1, 1]
    walk = np.mod(walk + 1.0, 4.0)
    return np.where(walk > 2.0, 4.0 - walk, walk) - 1.0


def synth_trajectory(tpl, profile, sample_rate_hz=DEFAULT_RATE_HZ, subject_id=None):
    """Sample one drawing of ``tpl`` by the subject described by ``profile``."""
    if sample_rate_hz <= 0:
        raise SynthError("sample_rate_hz must be positive")
    rng = np.random.Generator(np.random.PCG64(profile.seed))
    t = _sample_times(tpl, profile, sample_rate_hz)
    n = t.size
    if n < MIN_LENGTH:
        raise SynthError(f"trajectory would have {n} samples, fewer than {MIN_LENGTH}")
    xy, down = ideal_path(tpl, profile, t)
    dt = 1.0 / sample_rate_hz
    x = xy[:, 0] + _ou(rng, n, dt, profile.drift_sd, profile.drift_tau_s) + rng.normal(0, profile.jitter_sd, n)
    y = xy[:, 1] + _ou(rng, n, dt, profile.drift_sd, profile.drift_tau_s) + rng.normal(0, profile.jitter_sd, n)
    tilt_x = _tilt_walk(rng, n, profile.tilt_center, profile.tilt_walk_sd, dt)
    tilt_y = _tilt_walk(rng, n, profile.tilt_center, profile.tilt_walk_sd, dt)
    pressure = profile.pressure_mean + rng.normal(0.0, profile.pressure_jitter, n)
    if profile.tremor_amplitude > 0:
        phase = rng.uniform(0, 2 * np.pi)
        w = 2 * np.pi * profile.tremor_freq_hz * t + phase
        x += profile.tremor_amplitude * np.sin(w)
        y += profile.tremor_amplitude * np.sin(w + np.pi / 3)
        # the shaking hand also rocks the pen and its contact force
        tilt_x += 5 * profile.tremor_amplitude * np.sin(w + np.pi / 2)
        pressure += 2 * profile.tremor_amplitude * np.sin(w)
    data = np.column_stack([
        np.round(t * 1000.0),
        np.clip(x, 0.0, 1.0),
        np.clip(y, 0.0, 1.0),
        np.clip(tilt_x, -1.0, 1.0),
        np.clip(tilt_y, -1.0, 1.0),
        np.where(down, np.clip(pressure, 0.01, 1.0), 0.0),
    ])
    if subject_id is None:
        prefix = CONTROL_PREFIX if profile.label == 0 else PATIENT_PREFIX
        subject_id = f"{prefix}_synth"
    return Trajectory(data, subject_id, profile.label, tpl.shape)


def subject_id(label, number):
    prefix = CONTROL_PREFIX if label == 0 else PATIENT_PREFIX
    return f"{prefix}_synth_{number:04d}"


def cohort_trajectories(n_controls, n_patients, shape, seed=0, sample_rate_hz=DEFAULT_RATE_HZ,
                        tremor_amplitude=0.02, length_bounds=None, separation=1.0, max_redraws=100):
    """In-memory cohort: controls first, then patients.

    Profiles whose drawing length falls outside ``length_bounds`` are redrawn
    from the same subject stream.
    """
    if n_controls < 1 or n_patients < 1:
        raise SynthError("need at least one control and one patient")
    tpl = template(shape)
    lo, hi = length_bounds if length_bounds is not None else (MIN_LENGTH, np.inf)
    out = []
    for label, count in ((0, n_controls), (1, n_patients)):
        for i in range(1, count + 1):
            rng = np.random.default_rng(derive_seed(seed, label, i))
            for _ in range(max_redraws):
                profile = random_profile(label, rng, tremor_amplitude, separation)
                n = _sample_times(tpl, profile, sample_rate_hz).size
                if lo <= n <= hi:
                    break
            else:
                raise SynthError(f"no profile within length bounds {length_bounds} after {max_redraws} draws")
            out.append(synth_trajectory(tpl, profile, sample_rate_hz, subject_id(label, i)))
    return out


def gen_cohort(out_dir, n_controls, n_patients, shape, seed=0, sample_rate_hz=DEFAULT_RATE_HZ,
               tremor_amplitude=0.02, length_bounds=None, separation=1.0):
    """Write one trajectory file per subject plus ``manifest.csv``; returns the manifest path."""
    if length_bounds is None and sample_rate_hz == DEFAULT_RATE_HZ:
        length_bounds = DEFAULT_LENGTH_BOUNDS[shape]
    trajs = cohort_trajectories(n_controls, n_patients, shape, seed, sample_rate_hz, tremor_amplitude,
                                length_bounds, separation)
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for traj in trajs:
        name = f"{traj.subject_id}_{shape}.txt"
        with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(pen_data.format_trajectory(traj))
        entries.append(ManifestEntry(name, traj.subject_id, shape))
    manifest = os.path.join(out_dir, "manifest.csv")
    pen_data.write_manifest(manifest, entries)
    return manifest
