"""Command-line entry point: ``pdtrace synth | run | compare | report``.

Failures exit non-zero and print a one-line JSON error record to stderr.
"""

import argparse
import dataclasses
import hashlib
import json
import os
import sys

import numpy as np

from . import evaluation, pen_data, stats, synth
from .evaluation import ExperimentConfig, ExperimentResult

OUT_ENV = "PDTRACE_OUT"
EXIT_USAGE = 2
EXIT_FAILURE = 1

# RunConfig keys beyond the experiment fields
RUN_KEYS = ("manifest", "shape")


class CliError(Exception):
    def __init__(self, message, kind="error", code=EXIT_FAILURE):
        super().__init__(message)
        self.kind = kind
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message, "usage", EXIT_USAGE)


# -- configuration -------------------------------------------------------------


def _field_types():
    return {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def _coerce(key, raw, types):
    kind = types.get(key, "str")
    kind = getattr(kind, "__name__", kind)
    try:
        if kind == "bool":
            low = raw.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise CliError(f"config key {key!r}: cannot read {raw!r} as {kind}", "config") from None
    return raw.strip()


def parse_config_text(text, origin="<config>"):
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    types = _field_types()
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{origin}:{lineno}: expected key = value", "config")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in types and key not in RUN_KEYS:
            raise CliError(f"{origin}:{lineno}: unknown config key {key!r}", "config")
        out[key] = _coerce(key, raw, types)
    return out


def read_config_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config_text(fh.read(), path)
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror}", "missing_file") from None


def resolve_config(file_values, cli_values):
    """Defaults, overridden by the file, overridden by the command line."""
    merged = {**file_values, **{k: v for k, v in cli_values.items() if v is not None}}
    run = {k: merged.pop(k) for k in RUN_KEYS if k in merged}
    try:
        cfg = ExperimentConfig(**merged)
    except evaluation.EvaluationError as exc:
        raise CliError(str(exc), "config") from None
    return cfg, run


def format_config(cfg, run):
    lines = [f"{k} = {v}" for k, v in run.items() if v is not None]
    lines += [f"{k} = {v}" for k, v in dataclasses.asdict(cfg).items()]
    return "\n".join(lines) + "\n"


# -- helpers -------------------------------------------------------------------


def _out_dir(args, default_name):
    root = args.out or os.environ.get(OUT_ENV) or "."
    return root if args.out else os.path.join(root, default_name)


def _hash_inputs(manifest):
    h = hashlib.sha256()
    paths = [manifest] + [e.path for e in pen_data.read_manifest(manifest)]
    for p in paths:
        with open(p, "rb") as fh:
            h.update(os.path.basename(p).encode() + b"\0" + fh.read())
    return h.hexdigest()


def _load_result(path):
    if not os.path.exists(path):
        raise CliError(f"no such file: {path}", "missing_file")
    try:
        return ExperimentResult.from_json(path)
    except evaluation.SchemaError as exc:
        raise CliError(str(exc), "schema") from None


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# -- report --------------------------------------------------------------------


def _cell(v, scale=1.0):
    return "n/a" if v is None or (isinstance(v, float) and np.isnan(v)) else f"{v * scale:.2f}"


REPORT_ROWS = (
    ("accuracy", "accuracy", 100.0),
    ("precision", "precision", 1.0),
    ("recall", "recall", 1.0),
    ("specificity", "specificity", 100.0),
    ("kappa", "kappa", 100.0),
    ("AP", "average_precision", 1.0),
    ("Time(hr)", "train_time_minutes", 1.0 / 60.0),
)


def metric_grid(result):
    """Rows of ``(label, [cell per fold])`` formatted to two decimals."""
    folds = sorted(result.folds, key=lambda f: f.fold)
    return [(label, [_cell(getattr(f.metrics, attr), scale) for f in folds]) for label, attr, scale in REPORT_ROWS]


def render_report(result):
    folds = sorted(result.folds, key=lambda f: f.fold)
    lines = [f"# Experiment {result.experiment_id}", "", f"status: {result.status}"]
    if result.error:
        lines.append(f"error: {result.error}")
    lines += ["", "## Metrics per fold", ""]
    lines.append("| Metric/Fold | " + " | ".join(str(f.fold + 1) for f in folds) + " |")
    lines.append("|---" * (len(folds) + 1) + "|")
    for label, cells in metric_grid(result):
        lines.append(f"| {label} | " + " | ".join(cells) + " |")
    kv = np.array(result.kappa_vector)
    lines += ["", f"mean accuracy: {np.mean(result.metric_vector('accuracy')):.4f}", f"mean kappa: {np.mean(kv):.4f}"]
    flagged = [(f.fold + 1, f.metrics.flags) for f in folds if f.metrics.flags]
    if flagged:
        lines += ["", "flags: " + "; ".join(f"fold {k}: {', '.join(fl)}" for k, fl in flagged)]
    try:
        best = result.best_fold()
        m = best.metrics
        lines += ["", "## Best fold", "",
                  f"fold {best.fold + 1} (highest AP {m.average_precision:.2f}, kappa {m.kappa * 100:.2f})"]
    except evaluation.EvaluationError:
        best = None
    lines += ["", "## Confusion matrices", ""]
    for f in folds:
        c = f.confusion
        lines += [f"fold {f.fold + 1}:", "", "| | predicted 0 | predicted 1 |", "|---|---|---|",
                  f"| 0 (Control) | TN={c.tn} | FP={c.fp} |", f"| 1 (Patient) | FN={c.fn} | TP={c.tp} |", ""]
    if best is not None:
        rep = evaluation.per_class_report(best.confusion)
        lines += [f"## Per-class precision and recall, fold {best.fold + 1}", "",
                  "| class | precision | recall | support |", "|---|---|---|---|"]
        for cls, name in ((0, "0 (Control)"), (1, "1 (Patient)")):
            r = rep[cls]
            lines.append(f"| {name} | {_cell(r['precision'])} | {_cell(r['recall'])} | {r['support']} |")
        lines.append("")
    return "\n".join(lines)


# -- commands ------------------------------------------------------------------


def cmd_synth(args):
    out = _out_dir(args, f"synth_{args.shape}")
    seed = args.seed if args.seed is not None else 0
    manifest = synth.gen_cohort(out, args.controls, args.patients, args.shape, seed=seed,
                                sample_rate_hz=args.rate, tremor_amplitude=args.tremor,
                                separation=args.separation)
    print(json.dumps({"manifest": manifest, "subjects": args.controls + args.patients}))
    return 0


def _replay(args, out):
    try:
        with open(args.replay, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError:
        raise CliError(f"no such file: {args.replay}", "missing_file") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"{args.replay}: not JSON ({exc})", "schema") from None
    if "folds" not in doc:
        raise CliError(f"{args.replay}: expected a 'folds' list of stored predictions", "schema")
    result = evaluation.replay_experiment(doc["folds"], doc.get("experiment_id", "replay"),
                                         {"mode": "replay", "source": os.path.abspath(args.replay)})
    os.makedirs(out, exist_ok=True)
    result.to_json(os.path.join(out, "result.json"))
    _write(os.path.join(out, "report.md"), render_report(result))
    return result


def cmd_run(args):
    out = _out_dir(args, "run")
    if args.replay:
        result = _replay(args, out)
    else:
        file_values = read_config_file(args.config) if args.config else {}
        cli_values = dict(kv for kv in (_parse_set(s) for s in args.set))
        cli_values.update({"manifest": args.manifest, "shape": args.shape, "arch": args.arch,
                           "epochs": args.epochs, "seed": args.seed, "experiment_id": args.experiment_id})
        cfg, run = resolve_config(file_values, cli_values)
        manifest = run.get("manifest")
        if not manifest:
            raise CliError("run needs --manifest (or a manifest key in the config file)", "usage", EXIT_USAGE)
        if not os.path.exists(manifest):
            raise CliError(f"no such file: {manifest}", "missing_file")
        dataset = pen_data.load_dataset(manifest, shape=run.get("shape"))
        os.makedirs(out, exist_ok=True)
        run["manifest"] = os.path.abspath(manifest)
        _write(os.path.join(out, "run_config.txt"), format_config(cfg, run))
        _write(os.path.join(out, "inputs.sha256"), _hash_inputs(manifest) + "\n")
        result = evaluation.run_experiment(dataset, cfg, jobs=args.jobs, artifact_dir=out)
        result.to_json(os.path.join(out, "result.json"))
        _write(os.path.join(out, "report.md"), render_report(result))
    summary = {"result": os.path.join(out, "result.json"), "status": result.status,
               "kappa_vector": [None if np.isnan(k) else round(k, 6) for k in result.kappa_vector]}
    print(json.dumps(summary))
    if result.status != "ok":
        raise CliError(result.error or "experiment failed", "experiment_failed")
    return 0


def _parse_set(item):
    if "=" not in item:
        raise CliError(f"--set expects key=value, got {item!r}", "usage", EXIT_USAGE)
    key, raw = (p.strip() for p in item.split("=", 1))
    return key, parse_config_text(f"{key} = {raw}", "--set")[key]


def cmd_compare(args):
    if len(args.results) < 2:
        raise CliError("compare needs at least two result files", "usage", EXIT_USAGE)
    results = [_load_result(p) for p in args.results]
    names = [r.experiment_id for r in results]
    if len(set(names)) != len(names):
        names = [f"{r.experiment_id}#{i + 1}" for i, r in enumerate(results)]
    groups = [stats.SampleGroup(n, [v * args.scale for v in r.metric_vector(args.metric)]) for n, r in zip(names, results)]
    out = _out_dir(args, "compare")
    os.makedirs(out, exist_ok=True)
    doc = {"metric": args.metric, "groups": {g.name: list(g.values) for g in groups}}
    if len(groups) == 2:
        doc["mann_whitney"] = stats.mann_whitney_u(groups[0].values, groups[1].values).to_dict()
    else:
        doc["kruskal_wallis"] = stats.kruskal_wallis(groups).to_dict()
        doc["tukey_hsd"] = [row.to_dict() for row in stats.tukey_hsd(groups)]
    doc["summaries"] = {g.name: dataclasses.asdict(stats.five_number_summary(g.values)) for g in groups}
    _write(os.path.join(out, "tests.json"), json.dumps(doc, indent=2, sort_keys=True) + "\n")
    stats.write_summary_csv(os.path.join(out, "summary.csv"), groups)
    stats.write_boxplot_csv(os.path.join(out, "boxplot.csv"), groups)
    stats.write_density_csv(os.path.join(out, "violin.csv"), groups)
    stats.write_points_csv(os.path.join(out, "bean_points.csv"), groups)
    _write(os.path.join(out, "boxplot.svg"), stats.boxplot_svg(groups))
    _write(os.path.join(out, "violin.svg"), stats.violin_svg(groups))
    _write(os.path.join(out, "bean.svg"), stats.bean_svg(groups))
    print(json.dumps({k: v for k, v in doc.items() if k in ("mann_whitney", "kruskal_wallis")}))
    return 0


def cmd_report(args):
    result = _load_result(args.result)
    text = render_report(result)
    if args.out:
        os.makedirs(os.path.dirname(os.path.abspath(args.out)) or ".", exist_ok=True)
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


# -- parser ----------------------------------------------------------------------


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed")
    common.add_argument("--jobs", type=int, default=1, help="folds trained concurrently")
    common.add_argument("--out", default=None, help=f"output location (default: ${OUT_ENV} or .)")

    parser = _Parser(prog="pdtrace", description="Pen-drawing classification experiments.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic cohort")
    p.add_argument("--controls", type=int, default=29)
    p.add_argument("--patients", type=int, default=58)
    p.add_argument("--shape", choices=pen_data.SHAPES, default="cube")
    p.add_argument("--rate", type=float, default=synth.DEFAULT_RATE_HZ, help="sample rate in Hz")
    p.add_argument("--tremor", type=float, default=0.02, help="patient tremor amplitude")
    p.add_argument("--separation", type=float, default=1.0, help="class separation of pressure and tilt")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", parents=[common], help="cross-validate one experiment")
    p.add_argument("--manifest")
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--shape", choices=pen_data.SHAPES)
    p.add_argument("--arch", choices=("rnn", "cnn"))
    p.add_argument("--epochs", type=int)
    p.add_argument("--experiment-id", dest="experiment_id")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    p.add_argument("--replay", help="rebuild a result from stored per-fold predictions instead of training")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", parents=[common], help="test experiments against each other")
    p.add_argument("results", nargs="+")
    p.add_argument("--metric", default="kappa")
    p.add_argument("--scale", type=float, default=100.0, help="multiply metric values (100 gives percent)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", parents=[common], help="markdown report of one result")
    p.add_argument("result")
    p.set_defaults(func=cmd_report)
    return parser


def _error_record(exc, command):
    return json.dumps({"error": {"kind": exc.kind, "message": str(exc), "command": command}})


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    command = argv[0] if argv else None
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "jobs", 1) < 1:
            raise CliError("--jobs must be >= 1", "usage", EXIT_USAGE)
        return args.func(args)
    except CliError as exc:
        print(_error_record(exc, command), file=sys.stderr)
        return exc.code
    except (pen_data.PenDataError, evaluation.EvaluationError, stats.StatsError, synth.SynthError) as exc:
        print(_error_record(CliError(str(exc), type(exc).__name__), command), file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(_error_record(CliError(str(exc), "io"), command), file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
