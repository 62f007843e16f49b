"""Pen time-series: parsing, validation, cleaning and RNN batch preparation.

A trajectory file holds one drawing, one pen sample per row::

    timestamp  x  y  tilt_x  tilt_y  pressure

Whitespace- or comma-separated, with an optional header row. Coordinates
and pressure live in ``[0, 1]``, tilts in ``[-1, 1]``; zero pressure means the
pen is hovering.
"""

import csv
import io
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from ._rng import fisher_yates

COLUMNS = ("timestamp", "x", "y", "tilt_x", "tilt_y", "pressure")
FEATURES = COLUMNS[1:]
TS, X, Y, TILT_X, TILT_Y, PRESSURE = range(6)

SHAPES = ("pentagon", "cube")
CONTROL_PREFIX = "LEEDS_c"
PATIENT_PREFIX = "LEEDS_p"

_BOUNDS = {
    X: (0.0, 1.0),
    Y: (0.0, 1.0),
    TILT_X: (-1.0, 1.0),
    TILT_Y: (-1.0, 1.0),
    PRESSURE: (0.0, 1.0),
}


class PenDataError(ValueError):
    pass


class ParseError(PenDataError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class RangeError(PenDataError):
    pass


class EmptySampleError(PenDataError):
    pass


class PenRecord(NamedTuple):
    timestamp: int
    x: float
    y: float
    tilt_x: float
    tilt_y: float
    pressure: float


@dataclass(frozen=True)
class Trajectory:
    """One drawing. ``data`` is an ``(n, 6)`` float array in :data:`COLUMNS` order."""

    data: np.ndarray
    subject_id: str
    label: int
    shape: str = "cube"

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, copy=True).reshape(-1, 6)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    def __len__(self):
        return self.data.shape[0]

    @property
    def records(self):
        return [PenRecord(int(r[0]), *map(float, r[1:])) for r in self.data]

    @property
    def features(self):
        """``(n, 5)`` view without the timestamp column."""
        return self.data[:, 1:]

    @property
    def pressure(self):
        return self.data[:, PRESSURE]

    def replace(self, data):
        return Trajectory(data, self.subject_id, self.label, self.shape)


@dataclass(frozen=True)
class SequenceBatch:
    data: np.ndarray  # (samples, pad_length, 5)
    labels: np.ndarray
    pad_length: int
    lengths: np.ndarray


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.10
    val_fraction_of_trainval: float = 0.10
    seed: int = 0
    stratified: bool = False

    def __post_init__(self):
        for name in ("test_fraction", "val_fraction_of_trainval"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")


@dataclass
class ValidationReport:
    subject_id: str
    rows: int
    zero_cells: dict = field(default_factory=dict)
    range_violations: dict = field(default_factory=dict)
    timestamp_reversals: int = 0

    @property
    def ok(self):
        return self.rows > 0 and not any(self.range_violations.values()) and not self.timestamp_reversals

    def to_text(self):
        zeros = " ".join(f"{k}={v}" for k, v in self.zero_cells.items())
        bad = " ".join(f"{k}={v}" for k, v in self.range_violations.items())
        return (
            f"[trajectory {self.subject_id}]\n"
            f"rows = {self.rows}\n"
            f"zero_cells = {zeros}\n"
            f"range_violations = {bad}\n"
            f"timestamp_reversals = {self.timestamp_reversals}\n"
            f"status = {'ok' if self.ok else 'invalid'}\n"
        )


def label_from_subject(subject_id, control_prefix=CONTROL_PREFIX, patient_prefix=PATIENT_PREFIX):
    if subject_id.startswith(control_prefix):
        return 0
    if subject_id.startswith(patient_prefix):
        return 1
    raise PenDataError(
        f"cannot derive label from subject id {subject_id!r} "
        f"(expected prefix {control_prefix!r} or {patient_prefix!r})"
    )


def _is_number(tok):
    try:
        float(tok)
    except ValueError:
        return False
    return True


def read_rows(text):
    """Parse raw text into an ``(n, 6)`` array. No range checks.

    ``text`` may be a string or a readable text stream.
    """
    if not isinstance(text, str):
        text = text.read()
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        tokens = stripped.replace(",", " ").split()
        if not rows and not _is_number(tokens[0]):
            continue  # header
        if len(tokens) != 6:
            raise ParseError(f"expected 6 columns, found {len(tokens)}", lineno)
        try:
            values = [float(t) for t in tokens]
        except ValueError:
            raise ParseError(f"non-numeric value in {stripped!r}", lineno) from None
        if not all(math.isfinite(v) for v in values):
            raise ParseError("non-finite value", lineno)
        rows.append(values)
    if not rows:
        raise EmptySampleError("no data rows")
    return np.asarray(rows, dtype=np.float64)


def validate(data, subject_id=""):
    data = np.asarray(data, dtype=np.float64).reshape(-1, 6)
    zero_cells = {name: int(np.count_nonzero(data[:, i] == 0)) for i, name in enumerate(COLUMNS)}
    violations = {}
    for col, (lo, hi) in _BOUNDS.items():
        v = data[:, col]
        violations[COLUMNS[col]] = int(np.count_nonzero((v < lo) | (v > hi)))
    ts = data[:, TS]
    violations["timestamp"] = int(np.count_nonzero((ts < 0) | (ts != np.round(ts))))
    reversals = int(np.count_nonzero(np.diff(ts) < 0))
    return ValidationReport(subject_id, data.shape[0], zero_cells, violations, reversals)


def parse_trajectory(text, subject_id, shape="cube", control_prefix=CONTROL_PREFIX, patient_prefix=PATIENT_PREFIX):
    """Parse and validate one trajectory file's contents.

    Raises :class:`ParseError` (with line number) for malformed rows,
    :class:`RangeError` for out-of-range values or decreasing timestamps, and
    :class:`EmptySampleError` for files without data rows.
    """
    if shape not in SHAPES:
        raise PenDataError(f"unknown shape {shape!r}")
    label = label_from_subject(subject_id, control_prefix, patient_prefix)
    data = read_rows(text)
    report = validate(data, subject_id)
    if not report.ok:
        bad = {k: v for k, v in report.range_violations.items() if v}
        if report.timestamp_reversals:
            bad["timestamp_reversals"] = report.timestamp_reversals
        raise RangeError(f"{subject_id}: values outside the allowed ranges {bad}")
    return Trajectory(data, subject_id, label, shape)


def format_trajectory(traj, header=True):
    """Inverse of :func:`parse_trajectory` (12 significant digits)."""
    out = io.StringIO()
    if header:
        out.write(" ".join(COLUMNS) + "\n")
    for row in traj.data:
        out.write(f"{int(row[0])} " + " ".join(f"{v:.12g}" for v in row[1:]) + "\n")
    return out.getvalue()


def load_trajectory(path, subject_id, shape="cube", **prefixes):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_trajectory(fh, subject_id, shape, **prefixes)
    except ParseError as exc:
        err = ParseError(f"{path}: {exc}")
        err.line = exc.line
        raise err from None
    except PenDataError as exc:
        raise type(exc)(f"{path}: {exc}") from None


# -- cleaning ---------------------------------------------------------------


def drop_zero_pressure(traj):
    keep = traj.pressure > 0
    if not keep.any():
        raise EmptySampleError(f"{traj.subject_id}: every record has zero pressure")
    return traj.replace(traj.data[keep])


def trim_initial_wait(traj):
    down = np.flatnonzero(traj.pressure > 0)
    if down.size == 0:
        raise EmptySampleError(f"{traj.subject_id}: every record has zero pressure")
    return traj.replace(traj.data[down[0]:])


# -- RNN input preparation ----------------------------------------------------


def pad_sequences(trajs, pad_length=None, dtype=np.float64):
    """Stack trajectories into ``(samples, pad_length, 5)`` with zero rows
    prepended. ``pad_length`` defaults to the longest trajectory."""
    trajs = list(trajs)
    if not trajs:
        raise PenDataError("cannot pad an empty list of trajectories")
    lengths = np.array([len(t) for t in trajs], dtype=np.int64)
    if lengths.min() == 0:
        raise EmptySampleError("empty trajectory in batch")
    longest = int(lengths.max())
    if pad_length is None:
        pad_length = longest
    elif pad_length < longest:
        raise PenDataError(f"pad_length {pad_length} shorter than longest sample {longest}")
    data = np.zeros((len(trajs), pad_length, len(FEATURES)), dtype=dtype)
    for i, t in enumerate(trajs):
        data[i, pad_length - len(t):] = t.features
    labels = np.array([t.label for t in trajs], dtype=np.int64)
    return SequenceBatch(data, labels, int(pad_length), lengths)


def split_sizes(n, spec=SplitSpec()):
    """``(train, validation, test)`` sizes for ``n`` samples."""
    # exact rational arithmetic: 0.9 * 82 must floor to 73, not 73.79999...
    trainval = math.floor((1 - Fraction(repr(spec.test_fraction))) * n)
    val = math.floor(Fraction(repr(spec.val_fraction_of_trainval)) * trainval)
    return trainval - val, val, n - trainval


def shuffle_split(labels, spec=SplitSpec()):
    """Seeded shuffle then train/validation/test partition.

    ``labels`` is the per-sample class list (its length is ``N``). Sizes:
    ``trainval = floor((1 - test_fraction) N)``, ``validation =
    floor(val_fraction * trainval)``, the rest is train. Returns three index
    lists in shuffled order.
    """
    labels = list(labels)
    n = len(labels)
    if n < 3:
        raise PenDataError(f"need at least 3 samples to split, got {n}")
    if spec.stratified:
        return _stratified_split(labels, spec)
    n_train, n_val, n_test = split_sizes(n, spec)
    if min(n_train, n_val, n_test) <= 0:
        raise PenDataError(f"split of {n} samples leaves an empty part: train={n_train} val={n_val} test={n_test}")
    perm = fisher_yates(n, spec.seed)
    return perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:]


def _stratified_split(labels, spec):
    perm = fisher_yates(len(labels), spec.seed)
    parts = ([], [], [])
    for cls in sorted(set(labels)):
        members = [i for i in perm if labels[i] == cls]
        n_train, n_val, _ = split_sizes(len(members), spec)
        parts[0].extend(members[:n_train])
        parts[1].extend(members[n_train:n_train + n_val])
        parts[2].extend(members[n_train + n_val:])
    if not all(parts):
        raise PenDataError("stratified split leaves an empty part")
    order = {idx: pos for pos, idx in enumerate(perm)}
    return tuple(sorted(p, key=order.__getitem__) for p in parts)


# -- manifest -----------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    subject_id: str
    shape: str


def read_manifest(path):
    """Entries of a ``path,subject_id,shape`` manifest; relative paths are
    resolved against the manifest's directory."""
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if lineno == 1 and row[0].strip() == "path":
                continue
            if len(row) != 3:
                raise ParseError(f"manifest rows need 3 fields, found {len(row)}", lineno)
            p, sid, shape = (c.strip() for c in row)
            if shape not in SHAPES:
                raise ParseError(f"unknown shape {shape!r}", lineno)
            entries.append(ManifestEntry(os.path.join(base, p), sid, shape))
    return entries


def write_manifest(path, entries):
    base = os.path.dirname(os.path.abspath(path))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "subject_id", "shape"])
        for e in entries:
            rel = os.path.relpath(os.path.abspath(e.path), base) if os.path.isabs(e.path) else e.path
            w.writerow([rel.replace(os.sep, "/"), e.subject_id, e.shape])


def load_dataset(manifest_path, shape=None, **prefixes):
    """Load every trajectory listed in a manifest, optionally one shape only."""
    out = []
    for e in read_manifest(manifest_path):
        if shape is not None and e.shape != shape:
            continue
        out.append(load_trajectory(e.path, e.subject_id, e.shape, **prefixes))
    return out
