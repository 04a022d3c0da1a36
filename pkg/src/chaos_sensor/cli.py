"""Command-line entry point: ``chaos-sensor <command> [flags]``.

Every command writes one CSV (or model file) atomically and echoes its fully
resolved configuration to stderr as a JSON line.  Exit status is 2 for usage
errors and 1 for runtime failures; diagnostics are single ``error: ...`` lines.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import tempfile
from contextlib import contextmanager

import numpy as np

from . import datasets, evaluation, hr, perceptron, recordings
from .fuzzy import FuzzyEnParams, fuzzy_entropy

__all__ = ["main", "build_parser"]


class CommandError(Exception):
    pass


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


@contextmanager
def _atomic(path):
    """Yield a temp path next to ``path``; rename over it on success."""
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _add_hr(p, r=True):
    if r:
        p.add_argument("--r", type=_positive_float, default=0.0055)
    p.add_argument("--i-ex", type=float, default=3.25)
    p.add_argument("--dt", type=_positive_float, default=0.01)
    p.add_argument("--t-transient", type=float, default=1000.0)
    p.add_argument("--threshold", type=float, default=1.0)


def _add_grid(p):
    p.add_argument("--r-min", type=_positive_float, default=5e-3)
    p.add_argument("--r-max", type=_positive_float, default=1.5e-2)
    p.add_argument("--n-r", type=_positive_int, default=100)


def _add_fe(p):
    p.add_argument("--m", type=_positive_int, default=1)
    p.add_argument("--r1", type=_positive_float, default=0.01)
    p.add_argument("--r2", type=_positive_float, default=1.0)
    p.add_argument("--r1-absolute", action="store_true",
                   help="use --r1 as an absolute tolerance instead of a multiple of std")


def _add_train(p, nh=50):
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--nh", type=_positive_int, default=nh)
    p.add_argument("--epochs", type=_positive_int, default=300)
    p.add_argument("--lr", type=_positive_float, default=1e-3)
    p.add_argument("--batch-size", type=_positive_int, default=200)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--normalize", action="store_true",
                   help="subtract each dataset's element mean before training")


def build_parser():
    parser = argparse.ArgumentParser(prog="chaos-sensor", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key=value file; keys are flag names, flags override")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="inter-spike intervals of one HR run")
    _add_hr(p)
    p.add_argument("--n-intervals", type=_nonneg_int, default=500)
    p.add_argument("--out", required=True)

    p = sub.add_parser("bifurcate", help="intervals over an r grid (long format r,interval)")
    _add_hr(p, r=False)
    _add_grid(p)
    p.add_argument("--per-r", type=_positive_int, default=100)
    p.add_argument("--out", required=True)

    p = sub.add_parser("dataset", help="labeled window dataset from HR or recordings")
    _add_hr(p, r=False)
    _add_grid(p)
    _add_fe(p)
    p.add_argument("--nl", type=_positive_int, default=50)
    p.add_argument("--s", type=_positive_int, default=None, help="default 4 (HR) or 1 (recordings)")
    p.add_argument("--count", type=_positive_int, default=100, help="windows per r (HR only)")
    p.add_argument("--rest", nargs="*", default=[], help="period CSVs recorded at rest")
    p.add_argument("--stim", nargs="*", default=[], help="period CSVs recorded under stimulation")
    p.add_argument("--waveform", action="store_true", help="--rest/--stim files are t,v waveforms")
    p.add_argument("--out", required=True)

    p = sub.add_parser("entropy", help="fuzzy entropy of one CSV column")
    _add_fe(p)
    p.add_argument("--input", required=True)
    p.add_argument("--column", default=None, help="header name or 0-based index (default: last)")

    p = sub.add_parser("train", help="train a perceptron on a dataset CSV")
    _add_train(p)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("cv", help="k-fold cross-validation")
    _add_train(p)
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=_positive_int, default=10)
    p.add_argument("--trace", help="also write index,sfu,spe,spe_avg20 for held-out predictions")
    p.add_argument("--out", required=True)

    p = sub.add_parser("cross", help="train on one dataset, test on another")
    _add_train(p)
    p.add_argument("--train", dest="train_path", required=True)
    p.add_argument("--test", dest="test_path", required=True)
    p.add_argument("--trace")
    p.add_argument("--out", required=True)

    p = sub.add_parser("characterize", help="sensor characteristics of SFU (and SPE)")
    _add_hr(p, r=False)
    _add_fe(p)
    p.add_argument("--model", help="perceptron model file; adds SPE rows")
    p.add_argument("--mean", type=float, default=0.0, help="value subtracted before the model")
    p.add_argument("--average", type=_positive_int, default=20)
    p.add_argument("--nl", type=_positive_int, default=50)
    p.add_argument("--std-mode", choices=["within", "pooled"], default="within")
    p.add_argument("--out", required=True)

    p = sub.add_parser("lengthstudy", help="SFU characteristics versus window length")
    _add_hr(p, r=False)
    _add_fe(p)
    p.add_argument("--nl-values", type=_int_list, default=list(range(10, 101, 10)))
    p.add_argument("--std-mode", choices=["within", "pooled"], default="within")
    p.add_argument("--out", required=True)

    p = sub.add_parser("peaks", help="inter-peak intervals of a t,v waveform CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--cutoff", type=_positive_float, default=10e3)
    p.add_argument("--height", type=float, default=0.2)
    p.add_argument("--local-points", type=_positive_int, default=2)
    p.add_argument("--out", required=True)

    p = sub.add_parser("predict", help="model output for each window row")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="dataset CSV or plain rows of nl numbers")
    p.add_argument("--mean", type=float, default=0.0)
    p.add_argument("--out", required=True)
    return parser


# ---------------------------------------------------------------- helpers

def _hr_params(a, **extra):
    return hr.HRParameters(r=extra.pop("r", getattr(a, "r", 0.0055)), i_ex=a.i_ex, dt=a.dt,
                           t_transient=a.t_transient, spike_threshold=a.threshold, **extra)


def _fe(a):
    return FuzzyEnParams(m=a.m, r1=a.r1, r2=a.r2, relative=not a.r1_absolute)


def _train_cfg(a):
    return perceptron.TrainConfig(seed=a.seed, epochs=a.epochs, learning_rate=a.lr,
                                  batch_size=a.batch_size, l2=a.l2)


def _maybe_normalize(ds, a):
    if not a.normalize:
        return ds, 0.0
    mean = ds.stats.mean
    return datasets.normalize(ds, mean), mean


def _write_csv(path, header, rows):
    with _atomic(path) as tmp:
        with open(tmp, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)


def _read_column(path, column):
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise CommandError(f"{path}: empty file")
    header = None
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        header, rows = rows[0], rows[1:]
    if column is None:
        col = -1
    elif column.lstrip("-").isdigit():
        col = int(column)
    elif header is not None and column in header:
        col = header.index(column)
    else:
        raise CommandError(f"{path}: no column {column!r}")
    try:
        return np.array([float(row[col]) for row in rows])
    except (ValueError, IndexError) as exc:
        raise CommandError(f"{path}: {exc}") from exc


def _read_windows(path):
    with open(path, newline="") as fh:
        first = fh.readline()
    if first.startswith("tag,r,i_ex,start,target"):
        return datasets.load_dataset(path).values
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        rows = rows[1:]
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise CommandError(f"{path}: ragged window rows")
    return np.array([[float(c) for c in row] for row in rows])


# ---------------------------------------------------------------- commands

def cmd_simulate(a):
    values = np.empty(0)
    if a.n_intervals > 0:
        values = hr.spike_intervals(_hr_params(a, target_intervals=a.n_intervals))
    with _atomic(a.out) as tmp:
        hr.save_intervals_csv(values, tmp)
    return {"rows": len(values)}


def cmd_bifurcate(a):
    if not a.r_min < a.r_max:
        raise argparse.ArgumentTypeError("--r-min must be below --r-max")
    grid = np.linspace(a.r_min, a.r_max, a.n_r) if a.n_r > 1 else np.array([a.r_min])
    rows, failed = [], 0
    for r in grid:
        try:
            values = hr.spike_intervals(_hr_params(a, r=float(r), target_intervals=a.per_r))
        except hr.IntegrationError as exc:
            print(f"error: bifurcate r={r:.12g}: {exc}", file=sys.stderr)
            failed += 1
            continue
        rows.extend([f"{r:.12g}", repr(float(v))] for v in values)
    _write_csv(a.out, ["r", "interval"], rows)
    return {"rows": len(rows), "failed_r": failed}


def cmd_dataset(a):
    fe = _fe(a)
    if a.rest or a.stim:
        cfg = datasets.WindowingConfig(nl=a.nl, s=a.s or 1, count=None)
        sources = []
        for tag, paths in (("rest", a.rest), ("stimulation", a.stim)):
            for path in paths:
                data = (recordings.load_waveform_csv(path) if a.waveform
                        else recordings.load_periods_csv(path))
                sources.append((tag, data))
        ds = recordings.build_experimental_base(sources, cfg, fe)
        for tag in ds.skipped:
            print(f"warning: dataset: source {tag} too short, skipped", file=sys.stderr)
    else:
        cfg = datasets.WindowingConfig(nl=a.nl, s=a.s or 4, count=a.count)
        if a.n_r > 1 and not a.r_min < a.r_max:
            raise argparse.ArgumentTypeError("--r-min must be below --r-max")
        ds = datasets.build_base(a.i_ex, a.r_min, a.r_max, a.n_r, cfg, _hr_params(a), fe)
    with _atomic(a.out) as tmp:
        datasets.save_dataset(ds, tmp)
    info = {"windows": len(ds)}
    if len(ds):
        info.update(dataclasses.asdict(ds.stats))
    return info


def cmd_entropy(a):
    series = _read_column(a.input, a.column)
    value, info = fuzzy_entropy(series, _fe(a), full_output=True)
    print(f"{value:.12g}")
    return {"n": len(series), "r1_resolved": info.r1, "clamped": info.clamped,
            "degenerate": info.degenerate}


def cmd_train(a):
    ds, mean = _maybe_normalize(datasets.load_dataset(a.input), a)
    model = perceptron.train(ds, a.nh, _train_cfg(a))
    with _atomic(a.out) as tmp:
        perceptron.save_model(model, tmp)
    return {"windows": len(ds), "mean_subtracted": mean}


def cmd_cv(a):
    raw = datasets.load_dataset(a.input)
    ds, mean = _maybe_normalize(raw, a)
    report = evaluation.kfold_cv(ds, a.k, a.nh, _train_cfg(a))
    with _atomic(a.out) as tmp:
        evaluation.write_metrics_csv(report, tmp)
    if a.trace:
        with _atomic(a.trace) as tmp:
            evaluation.write_trace_csv(tmp, ds.targets, report.predictions, raw.block_ids())
    return {"mean_subtracted": mean, **report.aggregate._asdict()}


def cmd_cross(a):
    train_raw = datasets.load_dataset(a.train_path)
    test_raw = datasets.load_dataset(a.test_path)
    train_ds, m_train = _maybe_normalize(train_raw, a)
    test_ds, m_test = _maybe_normalize(test_raw, a)
    result, pred = evaluation.cross_base(train_ds, test_ds, a.nh, _train_cfg(a),
                                         return_predictions=True)
    _write_csv(a.out, ["r2", "rmse", "mape_percent"], [[f"{v:.12g}" for v in result]])
    if a.trace:
        with _atomic(a.trace) as tmp:
            evaluation.write_trace_csv(tmp, test_ds.targets, pred, test_raw.block_ids())
    return {"train_mean": m_train, "test_mean": m_test, **result._asdict()}


def cmd_characterize(a):
    base = _hr_params(a, r=0.0055)
    fe = _fe(a)
    common = dict(i_ex=a.i_ex, nl=a.nl, std_mode=a.std_mode, hr=base)
    rows = {"SFU": evaluation.sensor_characteristics(evaluation.sfu_predictor(fe), **common)}
    if a.model:
        spe = evaluation.spe_predictor(perceptron.load_model(a.model), a.mean)
        rows["SPE"] = evaluation.sensor_characteristics(spe, **common)
        rows[f"SPE_avg{a.average}"] = evaluation.sensor_characteristics(
            spe, average=a.average, **common)
    with _atomic(a.out) as tmp:
        evaluation.write_characteristics_csv(rows, tmp)
    return {k: v.en_err_percent for k, v in rows.items()}


def cmd_lengthstudy(a):
    rows = evaluation.length_study(a.nl_values, a.i_ex, fe=_fe(a), std_mode=a.std_mode,
                                   hr=_hr_params(a, r=0.0055))
    with _atomic(a.out) as tmp:
        evaluation.write_length_study_csv(rows, tmp)
    return {"rows": len(rows)}


def cmd_peaks(a):
    w = recordings.load_waveform_csv(a.input)
    values = recordings.recording_intervals(w, a.cutoff, a.height, a.local_points)
    with _atomic(a.out) as tmp:
        recordings.save_periods_csv(values, tmp)
    return {"sample_rate": w.sample_rate, "intervals": len(values)}


def cmd_predict(a):
    model = perceptron.load_model(a.model)
    X = _read_windows(a.input)
    out = perceptron.predict(model, X - a.mean) if len(X) else np.empty(0)
    _write_csv(a.out, ["index", "prediction"], [[i, f"{v:.15g}"] for i, v in enumerate(out)])
    return {"rows": len(out)}


COMMANDS = {
    "simulate": cmd_simulate,
    "bifurcate": cmd_bifurcate,
    "dataset": cmd_dataset,
    "entropy": cmd_entropy,
    "train": cmd_train,
    "cv": cmd_cv,
    "cross": cmd_cross,
    "characterize": cmd_characterize,
    "lengthstudy": cmd_lengthstudy,
    "peaks": cmd_peaks,
    "predict": cmd_predict,
}


def _config_tokens(parser, command, path):
    """Turn a key=value file into flags for ``command``."""
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    actions = {opt: act for act in sub.choices[command]._actions for opt in act.option_strings}
    tokens = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise argparse.ArgumentTypeError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            flag = "--" + key.replace("_", "-")
            act = actions.get(flag)
            if act is None:
                raise argparse.ArgumentTypeError(f"{path}:{lineno}: unknown key {key!r} for {command}")
            if isinstance(act, argparse._StoreTrueAction):
                if value.lower() in ("1", "true", "yes", "on"):
                    tokens.append(flag)
            elif act.nargs in ("*", "+"):
                tokens += [flag, *value.split()]
            else:
                tokens += [flag, value]
    return tokens


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if known.config:
        command = next((t for t in rest if t in COMMANDS), None)
        if command is None:
            parser.error("a command is required")
        try:
            tokens = _config_tokens(parser, command, known.config)
        except (OSError, argparse.ArgumentTypeError) as exc:
            parser.error(str(exc))
        at = rest.index(command)
        rest = rest[:at + 1] + tokens + rest[at + 1:]
    args = parser.parse_args(rest)
    args.config = known.config

    effective = {k: v for k, v in sorted(vars(args).items())}
    print("config: " + json.dumps(effective, sort_keys=True, default=str), file=sys.stderr)
    try:
        info = COMMANDS[args.command](args)
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))
    except (hr.IntegrationError, perceptron.TrainingDivergedError, perceptron.ModelFormatError,
            datasets.DatasetFormatError, CommandError, ValueError, OSError) as exc:
        print(f"error: {args.command}: {exc}".replace("\n", " "), file=sys.stderr)
        return 1
    if info:
        print("result: " + json.dumps(info, sort_keys=True, default=float), file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
