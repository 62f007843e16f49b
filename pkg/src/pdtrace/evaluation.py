"""Cross-validated experiments and binary classification metrics.

The positive class is the patient (label 1). Metrics with a zero denominator
come back as NaN and are named in a ``flags`` tuple rather than being
silently replaced by zero.
"""

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import pen_data, raster
from ._rng import derive_seed, fisher_yates
from .nn import checkpoint
from .nn.network import build_cnn, build_rnn
from .nn.train import History, TrainConfig, train

SCHEMA_VERSION = 1
WALL_CLOCK_FIELDS = ("train_time_minutes", "created_unix")


class EvaluationError(ValueError):
    pass


class SchemaError(EvaluationError):
    pass


# -- confusion matrix metrics --------------------------------------------------


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise EvaluationError("confusion counts must be non-negative")
        if self.total < 1:
            raise EvaluationError("confusion matrix is empty")

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn

    def swapped(self):
        """The same matrix with the class labels exchanged."""
        return ConfusionMatrix(tp=self.tn, tn=self.tp, fp=self.fn, fn=self.fp)


def confusion(predictions, labels, threshold=0.5):
    """Count outcomes; a score equal to ``threshold`` counts as positive."""
    p = np.asarray(predictions, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if p.shape != y.shape:
        raise EvaluationError(f"{p.size} predictions for {y.size} labels")
    if p.size == 0:
        raise EvaluationError("no predictions")
    pred = p >= threshold
    pos = y == 1
    return ConfusionMatrix(
        tp=int(np.sum(pred & pos)),
        tn=int(np.sum(~pred & ~pos)),
        fp=int(np.sum(pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


def _ratio(num, den):
    return num / den if den else float("nan")


@dataclass(frozen=True)
class Rates:
    accuracy: float
    precision: float
    recall: float
    specificity: float
    flags: tuple = ()


def metrics(cm):
    """Accuracy plus patient-class precision, recall (sensitivity) and specificity."""
    vals = {
        "accuracy": _ratio(cm.tp + cm.tn, cm.total),
        "precision": _ratio(cm.tp, cm.tp + cm.fp),
        "recall": _ratio(cm.tp, cm.tp + cm.fn),
        "specificity": _ratio(cm.tn, cm.tn + cm.fp),
    }
    flags = tuple(f"{k}_undefined" for k, v in vals.items() if math.isnan(v))
    return Rates(flags=flags, **vals)


def per_class_report(cm):
    """Precision, recall and support for class 0 and class 1."""
    return {
        0: {"precision": _ratio(cm.tn, cm.tn + cm.fn), "recall": _ratio(cm.tn, cm.tn + cm.fp), "support": cm.tn + cm.fp},
        1: {"precision": _ratio(cm.tp, cm.tp + cm.fp), "recall": _ratio(cm.tp, cm.tp + cm.fn), "support": cm.tp + cm.fn},
    }


def weighted_precision_recall(cm):
    """Support-weighted precision and recall over both classes.

    A class that was never predicted has no precision; it enters the average
    as 0 and its name is returned in the flags so the substitution is visible.
    """
    report = per_class_report(cm)
    flags = []
    prec = rec = 0.0
    for cls, row in report.items():
        w = row["support"] / cm.total
        if math.isnan(row["precision"]):
            flags.append(f"class{cls}_precision_undefined")
        else:
            prec += w * row["precision"]
        if not math.isnan(row["recall"]):
            rec += w * row["recall"]
    return prec, rec, tuple(flags)


def kappa(cm):
    """Cohen's kappa. A matrix with chance agreement 1 gives 0 (see :func:`kappa_is_degenerate`)."""
    n = cm.total
    observed = (cm.tp + cm.tn) / n
    expected = ((cm.tn + cm.fp) * (cm.tn + cm.fn) + (cm.fn + cm.tp) * (cm.fp + cm.tp)) / n**2
    if expected == 1.0:
        return 0.0
    return (observed - expected) / (1.0 - expected)


def kappa_is_degenerate(cm):
    n = cm.total
    return (cm.tn + cm.fp) * (cm.tn + cm.fn) + (cm.fn + cm.tp) * (cm.fp + cm.tp) == n * n


# -- precision-recall curve ----------------------------------------------------


@dataclass(frozen=True)
class PRCurve:
    thresholds: tuple
    recall: tuple
    precision: tuple

    def points(self):
        return list(zip(self.recall, self.precision))


def _pr_counts(scores, labels):
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise EvaluationError(f"{s.size} scores for {y.size} labels")
    n_pos = int(np.sum(y == 1))
    if n_pos == 0:
        raise EvaluationError("precision-recall needs at least one positive label")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    # last index of each run of equal scores: ties sit on the positive side
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp = np.cumsum(y == 1)[ends]
    fp = (ends + 1) - tp
    return s[ends], tp, fp, n_pos


def pr_curve(scores, labels):
    """Precision and recall at every distinct score, highest threshold first."""
    thr, tp, fp, n_pos = _pr_counts(scores, labels)
    return PRCurve(
        thresholds=tuple(float(t) for t in thr),
        recall=tuple(float(t / n_pos) for t in tp),
        precision=tuple(float(t / (t + f)) for t, f in zip(tp, fp)),
    )


def average_precision(scores, labels):
    """``sum_n (R_n - R_{n-1}) P_n`` over the distinct-score thresholds.

    Evaluated in exact rational arithmetic, then rounded once.
    """
    _, tp, fp, n_pos = _pr_counts(scores, labels)
    total = Fraction(0)
    prev = 0
    for t, f in zip(tp.tolist(), fp.tolist()):
        if t != prev:
            total += Fraction(t - prev, n_pos) * Fraction(t, t + f)
            prev = t
    return float(total)


# -- folds ---------------------------------------------------------------------


def kfold_indices(n, k=10, seed=0):
    """``k`` disjoint test folds covering ``range(n)`` after a seeded shuffle.

    The first ``n % k`` folds hold one extra index.
    """
    if k < 2:
        raise EvaluationError("k must be >= 2")
    if n < k:
        raise EvaluationError(f"cannot make {k} folds from {n} samples")
    perm = fisher_yates(n, seed)
    base, extra = divmod(n, k)
    folds, start = [], 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(perm[start:start + size])
        start += size
    return folds


def train_val_split(indices, seed, val_fraction=0.1):
    """Shuffle the non-test indices; the first ``floor(val_fraction * n)`` validate."""
    indices = list(indices)
    perm = fisher_yates(len(indices), seed)
    n_val = math.floor(Fraction(repr(val_fraction)) * len(indices))
    shuffled = [indices[p] for p in perm]
    return shuffled[n_val:], shuffled[:n_val]


# -- results -------------------------------------------------------------------


@dataclass
class MetricSet:
    accuracy: float
    precision: float
    recall: float
    specificity: float
    kappa: float
    average_precision: float
    train_time_minutes: float
    patient_precision: float = float("nan")
    patient_recall: float = float("nan")
    flags: tuple = ()


def metric_set(scores, labels, train_time_minutes=0.0, threshold=0.5):
    """Every fold-level number from test-set probabilities and true labels."""
    cm = confusion(scores, labels, threshold)
    rates = metrics(cm)
    prec, rec, wflags = weighted_precision_recall(cm)
    flags = list(rates.flags) + list(wflags)
    if kappa_is_degenerate(cm):
        flags.append("kappa_degenerate")
    try:
        ap = average_precision(scores, labels)
    except EvaluationError:
        ap = float("nan")
        flags.append("average_precision_undefined")
    ms = MetricSet(
        accuracy=rates.accuracy,
        precision=prec,
        recall=rec,
        specificity=rates.specificity,
        kappa=kappa(cm),
        average_precision=ap,
        train_time_minutes=float(train_time_minutes),
        patient_precision=rates.precision,
        patient_recall=rates.recall,
        flags=tuple(flags),
    )
    return cm, ms


@dataclass
class FoldResult:
    fold: int
    confusion: ConfusionMatrix
    metrics: MetricSet
    pr: PRCurve
    test_ids: list
    scores: list
    labels: list
    history: list = field(default_factory=list)
    audit: dict = field(default_factory=dict)


@dataclass
class ExperimentResult:
    experiment_id: str
    config: dict
    folds: list
    status: str = "ok"
    error: str = ""
    created_unix: float = 0.0
    schema_version: int = SCHEMA_VERSION

    @property
    def kappa_vector(self):
        return [f.metrics.kappa for f in sorted(self.folds, key=lambda f: f.fold)]

    def metric_vector(self, name):
        return [getattr(f.metrics, name) for f in sorted(self.folds, key=lambda f: f.fold)]

    def best_fold(self):
        """Highest AP, then highest kappa, then the shorter training time."""
        ok = [f for f in self.folds if not math.isnan(f.metrics.average_precision)]
        if not ok:
            raise EvaluationError("no fold has a defined average precision")
        return max(ok, key=lambda f: (f.metrics.average_precision, f.metrics.kappa, -f.metrics.train_time_minutes))

    # -- JSON ------------------------------------------------------------------

    def to_dict(self):
        return {
            "schema_version": self.schema_version,
            "experiment_id": self.experiment_id,
            "status": self.status,
            "error": self.error,
            "created_unix": self.created_unix,
            "config": self.config,
            "kappa_vector": [_num(v) for v in self.kappa_vector],
            "folds": [_fold_to_dict(f) for f in sorted(self.folds, key=lambda f: f.fold)],
        }

    def to_json(self, path=None, strip_wall_clock=False):
        d = self.to_dict()
        if strip_wall_clock:
            d = strip_wall_clock_fields(d)
        text = json.dumps(d, indent=2, sort_keys=True, allow_nan=False) + "\n"
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_dict(cls, d):
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaError(f"result schema version {version!r}, expected {SCHEMA_VERSION}")
        try:
            folds = [_fold_from_dict(f) for f in d["folds"]]
            return cls(
                experiment_id=d["experiment_id"],
                config=d["config"],
                folds=folds,
                status=d["status"],
                error=d.get("error", ""),
                created_unix=d.get("created_unix", 0.0),
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed experiment result: {exc}") from None

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}: not JSON ({exc})") from None
        return cls.from_dict(d)


def _num(v):
    # JSON has no NaN; undefined metrics travel as null
    return None if isinstance(v, float) and math.isnan(v) else v


def _unnum(v):
    return float("nan") if v is None else v


def _fold_to_dict(f):
    m = {k: _num(v) for k, v in asdict(f.metrics).items()}
    m["flags"] = list(f.metrics.flags)
    return {
        "fold": f.fold,
        "confusion": asdict(f.confusion),
        "metrics": m,
        "pr_curve": {"thresholds": list(f.pr.thresholds), "recall": list(f.pr.recall), "precision": list(f.pr.precision)},
        "test_ids": list(f.test_ids),
        "scores": [float(s) for s in f.scores],
        "labels": [int(y) for y in f.labels],
        "history": [[_num(v) for v in r] for r in f.history],
        "audit": f.audit,
    }


def _fold_from_dict(d):
    m = {k: _unnum(v) for k, v in d["metrics"].items() if k != "flags"}
    return FoldResult(
        fold=d["fold"],
        confusion=ConfusionMatrix(**d["confusion"]),
        metrics=MetricSet(flags=tuple(d["metrics"].get("flags", ())), **m),
        pr=PRCurve(*(tuple(d["pr_curve"][k]) for k in ("thresholds", "recall", "precision"))),
        test_ids=d["test_ids"],
        scores=d["scores"],
        labels=d["labels"],
        history=[tuple(_unnum(v) for v in r) for r in d.get("history", [])],
        audit=d.get("audit", {}),
    )


def strip_wall_clock_fields(obj):
    """Copy of a result dict without timing fields (for reproducibility checks)."""
    if isinstance(obj, dict):
        return {k: strip_wall_clock_fields(v) for k, v in obj.items() if k not in WALL_CLOCK_FIELDS}
    if isinstance(obj, list):
        return [strip_wall_clock_fields(v) for v in obj]
    return obj


# -- experiment harness --------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that defines one cross-validated experiment."""

    experiment_id: str = "experiment"
    arch: str = "rnn"
    k: int = 10
    seed: int = 0
    val_fraction: float = 0.1
    zero_pressure: str = "keep"
    image_side: int = 32
    render_side: int = 288
    augment: bool = False
    augment_mode: str = "post_split"
    rotation_max_deg: float = 15.0
    zoom_low: float = 0.9
    zoom_high: float = 1.1
    hflip_prob: float = 0.5
    control_multiplier: int = 23
    patient_multiplier: int = 11
    conv_dropout: float = 0.2
    dense_dropout: float = 0.5
    lstm_variant: str = "standard"
    lstm_masked: bool = False
    hidden: int = 32
    batch_size: int = 8
    epochs: int = 125
    lr0: float = 0.003
    decay: float = 1e-6
    momentum: float = 0.9
    dtype: str = "float64"

    def __post_init__(self):
        if self.arch not in ("rnn", "cnn"):
            raise EvaluationError(f"arch must be 'rnn' or 'cnn', got {self.arch!r}")
        if self.zero_pressure not in ("keep", "drop"):
            raise EvaluationError("zero_pressure must be 'keep' or 'drop'")
        if self.augment_mode not in ("post_split", "pre_split"):
            raise EvaluationError("augment_mode must be 'post_split' or 'pre_split'")
        if self.dtype not in ("float64", "float32"):
            raise EvaluationError("dtype must be 'float64' or 'float32'")
        if self.arch == "cnn" and self.image_side not in (32, 64, 128):
            raise EvaluationError("image_side must be 32, 64 or 128")

    def train_config(self, fold):
        return TrainConfig(
            batch_size=self.batch_size,
            epochs=self.epochs,
            lr0=self.lr0,
            decay=self.decay,
            momentum=self.momentum,
            seed=derive_seed(self.seed, 2, fold),
        )

    def augment_params(self):
        return raster.AugmentParams(
            rotation_max_deg=self.rotation_max_deg,
            zoom_range=(self.zoom_low, self.zoom_high),
            hflip_prob=self.hflip_prob,
            control_multiplier=self.control_multiplier,
            patient_multiplier=self.patient_multiplier,
            seed=derive_seed(self.seed, 3),
        )


def _prepare_rnn(dataset, cfg):
    trajs = list(dataset)
    if cfg.zero_pressure == "drop":
        trajs = [pen_data.drop_zero_pressure(t) for t in trajs]
    batch = pen_data.pad_sequences(trajs, dtype=np.dtype(cfg.dtype))
    return batch.data, batch.labels


def _source_images(dataset, cfg):
    return [raster.resize(raster.render(t, cfg.render_side), cfg.image_side) for t in dataset]


def _run_fold(dataset, cfg, fold, test_idx, inputs=None):
    """Train and test one fold. ``inputs`` carries the pre-computed RNN arrays
    or source images so they are built once per experiment."""
    n = len(dataset)
    test_set = set(test_idx)
    rest = [i for i in range(n) if i not in test_set]
    train_idx, val_idx = train_val_split(rest, derive_seed(cfg.seed, 1, fold), cfg.val_fraction)
    ids = [t.subject_id for t in dataset]
    audit = {"train_ids": sorted(ids[i] for i in train_idx), "val_ids": sorted(ids[i] for i in val_idx)}
    if cfg.arch == "rnn":
        x, y = inputs if inputs is not None else _prepare_rnn(dataset, cfg)
        x_tr, y_tr = x[train_idx], y[train_idx]
        x_va, y_va = x[val_idx], y[val_idx]
        x_te, y_te = x[test_idx], y[test_idx]
        net = build_rnn(x.shape[2], cfg.hidden, cfg.lstm_variant, cfg.lstm_masked, derive_seed(cfg.seed, 4, fold), cfg.dtype)
    else:
        images = inputs if inputs is not None else _source_images(dataset, cfg)
        train_imgs = [images[i] for i in train_idx]
        if cfg.augment and cfg.augment_mode == "post_split":
            train_imgs = raster.balance_augment(train_imgs, cfg.augment_params(), include_originals=True,
                                                index_offset=derive_seed(cfg.seed, 5, fold) >> 40)
            audit["augment_source_ids"] = sorted({im.source_id for im in train_imgs})
        stats = raster.compute_norm_stats(train_imgs)
        audit["norm_source_ids"] = sorted({im.source_id for im in train_imgs})

        def tensor(imgs):
            return raster.to_tensor([raster.normalize(im, stats) for im in imgs], np.dtype(cfg.dtype), cfg.image_side)

        x_tr = tensor(train_imgs)
        y_tr = np.array([im.label for im in train_imgs])
        x_va = tensor([images[i] for i in val_idx])
        y_va = np.array([images[i].label for i in val_idx])
        x_te = tensor([images[i] for i in test_idx])
        y_te = np.array([images[i].label for i in test_idx])
        net = build_cnn(cfg.image_side, cfg.conv_dropout, cfg.dense_dropout, derive_seed(cfg.seed, 4, fold), cfg.dtype)
    started = time.perf_counter()
    history = train(net, x_tr, y_tr, x_va, y_va, cfg.train_config(fold))
    minutes = (time.perf_counter() - started) / 60.0
    scores = net.predict(x_te)
    cm, ms = metric_set(scores, y_te, minutes)
    try:
        pr = pr_curve(scores, y_te)
    except EvaluationError:
        pr = PRCurve((), (), ())
    return FoldResult(
        fold=fold,
        confusion=cm,
        metrics=ms,
        pr=pr,
        test_ids=[ids[i] for i in test_idx],
        scores=[float(s) for s in scores],
        labels=[int(v) for v in y_te],
        history=list(history.rows),
        audit=audit,
    ), net


def fold_dir(root, fold):
    return os.path.join(root, f"fold_{fold + 1:02d}")


def write_pr_csv(path, pr):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("threshold,recall,precision\n")
        for t, r, p in zip(pr.thresholds, pr.recall, pr.precision):
            fh.write(f"{t!r},{r!r},{p!r}\n")


def _fold_job(args):
    dataset, cfg, fold, test_idx, inputs, artifact_dir = args
    result, net = _run_fold(dataset, cfg, fold, test_idx, inputs)
    if artifact_dir is not None:
        d = fold_dir(artifact_dir, fold)
        os.makedirs(d, exist_ok=True)
        checkpoint.save(net, os.path.join(d, "model.ckpt"))
        History(list(result.history)).write_csv(os.path.join(d, "history.csv"))
        write_pr_csv(os.path.join(d, "pr_curve.csv"), result.pr)
    return result


def run_experiment(dataset, cfg, jobs=1, on_fold=None, artifact_dir=None):
    """Cross-validate ``cfg`` over a list of trajectories.

    Folds are independent; with ``jobs > 1`` they run in worker processes and
    are reassembled by fold index. If a fold raises, the result is returned
    with ``status="failed"`` and the folds that finished. With
    ``artifact_dir`` each fold also leaves its checkpoint, history and PR
    curve in ``fold_NN/``.
    """
    dataset = list(dataset)
    if len(dataset) < cfg.k:
        raise EvaluationError(f"{len(dataset)} samples cannot fill {cfg.k} folds")
    result = ExperimentResult(cfg.experiment_id, asdict(cfg), [], created_unix=time.time())
    if cfg.arch == "cnn" and cfg.augment and cfg.augment_mode == "pre_split":
        # augmented copies of every drawing join the pool before folding
        images = raster.balance_augment(_source_images(dataset, cfg), cfg.augment_params(), include_originals=True)
        dataset = [_ImageBacked(im, k) for k, im in enumerate(images)]
        inputs = images
    elif cfg.arch == "cnn":
        inputs = _source_images(dataset, cfg)
    else:
        inputs = _prepare_rnn(dataset, cfg)
    folds = kfold_indices(len(dataset), cfg.k, derive_seed(cfg.seed, 0))
    tasks = [(dataset, cfg, f, idx, inputs, artifact_dir) for f, idx in enumerate(folds)]
    try:
        if jobs <= 1:
            for task in tasks:
                fr = _fold_job(task)
                result.folds.append(fr)
                if on_fold is not None:
                    on_fold(fr)
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for fr in pool.map(_fold_job, tasks):
                    result.folds.append(fr)
                    if on_fold is not None:
                        on_fold(fr)
    except Exception as exc:  # any fold failure marks the experiment, keeps partial folds
        result.status = "failed"
        result.error = f"{type(exc).__name__}: {exc}"
    result.folds.sort(key=lambda f: f.fold)
    return result


@dataclass(frozen=True)
class _ImageBacked:
    """Stand-in for a trajectory when the pool is already made of images."""

    image: raster.ImageSample
    index: int

    @property
    def subject_id(self):
        return f"{self.image.source_id}#{self.index}"

    @property
    def label(self):
        return self.image.label


def replay_experiment(fold_predictions, experiment_id="replay", config=None):
    """Rebuild an :class:`ExperimentResult` from stored per-fold predictions.

    Each entry needs ``scores`` and ``labels``; ``train_time_minutes`` and
    ``test_ids`` are optional.
    """
    folds = []
    for k, fp in enumerate(fold_predictions):
        scores = np.asarray(fp["scores"], dtype=np.float64)
        labels = np.asarray(fp["labels"], dtype=np.int64)
        cm, ms = metric_set(scores, labels, fp.get("train_time_minutes", 0.0))
        try:
            pr = pr_curve(scores, labels)
        except EvaluationError:
            pr = PRCurve((), (), ())
        folds.append(FoldResult(
            fold=int(fp.get("fold", k)),
            confusion=cm,
            metrics=ms,
            pr=pr,
            test_ids=list(fp.get("test_ids", [f"sample{j}" for j in range(len(labels))])),
            scores=scores.tolist(),
            labels=labels.tolist(),
        ))
    return ExperimentResult(experiment_id, dict(config or {"mode": "replay"}), folds)
