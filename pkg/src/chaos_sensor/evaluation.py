"""Accuracy metrics, cross-validation and chaos-sensor figures of merit."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .datasets import LabeledDataset, WindowingConfig, _window_matrix, label_windows
from .fuzzy import FuzzyEnParams
from .hr import HRParameters, spike_intervals
from .perceptron import MlpModel, TrainConfig, predict, train

__all__ = [
    "CHAOTIC_R",
    "REGULAR_R",
    "Metrics",
    "MetricsReport",
    "SensorCharacteristics",
    "r2",
    "rmse",
    "mape",
    "metrics",
    "kfold_indices",
    "kfold_cv",
    "cross_base",
    "sfu_predictor",
    "spe_predictor",
    "regime_windows",
    "sensor_characteristics",
    "averaging_over_n",
    "length_study",
    "write_metrics_csv",
    "write_characteristics_csv",
    "write_length_study_csv",
    "write_trace_csv",
]

#: r values of the chaotic and regular reference series at I_ex = 3.25
CHAOTIC_R = (0.0056, 0.0076, 0.0082, 0.0119, 0.0141)
REGULAR_R = (0.0068, 0.0070, 0.0099, 0.0105, 0.0108)

MAPE_EPS = 1e-9


def _pair(targets, predictions):
    t = np.asarray(targets, dtype=float).reshape(-1)
    p = np.asarray(predictions, dtype=float).reshape(-1)
    if t.shape != p.shape or t.size == 0:
        raise ValueError(f"need equal nonempty lengths, got {t.size} and {p.size}")
    return t, p


def r2(targets, predictions):
    """Coefficient of determination, ``1 - SS_res / SS_tot``."""
    t, p = _pair(targets, predictions)
    ss_tot = float(np.sum((t - t.mean()) ** 2))
    if ss_tot == 0:
        raise ValueError("R^2 undefined for targets with zero variance")
    return 1.0 - float(np.sum((t - p) ** 2)) / ss_tot


def rmse(targets, predictions):
    t, p = _pair(targets, predictions)
    return float(np.sqrt(np.mean((t - p) ** 2)))


def mape(targets, predictions):
    """Mean absolute percentage error, in percent."""
    t, p = _pair(targets, predictions)
    if np.any(np.abs(t) < MAPE_EPS):
        raise ValueError("MAPE undefined: a target is within 1e-9 of zero")
    return float(np.mean(np.abs((t - p) / t)) * 100.0)


class Metrics(NamedTuple):
    r2: float
    rmse: float
    mape: float


def metrics(targets, predictions) -> Metrics:
    return Metrics(r2(targets, predictions), rmse(targets, predictions), mape(targets, predictions))


@dataclass
class MetricsReport:
    """Per-fold metrics, their mean, and the out-of-fold predictions."""

    per_fold: list
    predictions: np.ndarray = field(default=None, repr=False)

    @property
    def aggregate(self) -> Metrics:
        arr = np.array(self.per_fold, dtype=float)
        return Metrics(*(float(v) for v in arr.mean(axis=0)))


def kfold_indices(n, k, seed=0):
    """Seeded shuffle split into ``k`` contiguous blocks (sizes differ by <= 1)."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise ValueError(f"dataset of {n} samples is smaller than k={k}")
    order = np.random.default_rng(seed).permutation(n)
    return np.array_split(order, k)


def _fold_cfg(cfg, fold):
    seed = int(np.random.SeedSequence([cfg.seed, fold]).generate_state(1)[0])
    return replace(cfg, seed=seed)


def kfold_cv(ds: LabeledDataset, k=10, nh=50, cfg: TrainConfig | None = None) -> MetricsReport:
    """Train on k-1 folds, score the held-out fold, for every fold in turn."""
    cfg = TrainConfig() if cfg is None else cfg
    folds = kfold_indices(len(ds), k, cfg.seed)
    oof = np.empty(len(ds))
    per_fold = []
    everything = np.arange(len(ds))
    for i, test in enumerate(folds):
        train_idx = np.setdiff1d(everything, test, assume_unique=True)
        model = train(ds.subset(train_idx), nh, _fold_cfg(cfg, i))
        oof[test] = predict(model, ds.values[test])
        per_fold.append(metrics(ds.targets[test], oof[test]))
    return MetricsReport(per_fold, oof)


def cross_base(train_ds: LabeledDataset, test_ds: LabeledDataset, nh=50,
               cfg: TrainConfig | None = None, return_predictions=False):
    """Train once on ``train_ds`` and score on ``test_ds``."""
    if train_ds.nl != test_ds.nl:
        raise ValueError(f"window length mismatch: {train_ds.nl} vs {test_ds.nl}")
    model = train(train_ds, nh, cfg)
    pred = predict(model, test_ds.values)
    result = metrics(test_ds.targets, pred)
    return (result, pred) if return_predictions else result


def sfu_predictor(fe: FuzzyEnParams | None = None) -> Callable:
    """Batch predictor computing fuzzy entropy directly."""
    fe = FuzzyEnParams() if fe is None else fe
    return lambda windows: label_windows(np.asarray(windows, dtype=float), fe)


def spe_predictor(model: MlpModel, mean=0.0) -> Callable:
    """Batch predictor running ``model`` on windows shifted by ``-mean``."""
    return lambda windows: predict(model, np.asarray(windows, dtype=float) - mean)


@dataclass(frozen=True)
class SensorCharacteristics:
    en_av_order: float
    en_av_chaos: float
    en_r: float
    std_en_order: float
    std_en_chaos: float
    en_sens: float
    en_err_percent: float
    degenerate: bool = False

    @classmethod
    def from_values(cls, chaos_blocks, order_blocks, std_mode="within"):
        chaos = np.concatenate(chaos_blocks)
        order = np.concatenate(order_blocks)
        en_av_chaos = float(chaos.mean())
        en_av_order = float(order.mean())
        en_r = en_av_chaos - en_av_order
        std_chaos = _spread(chaos_blocks, std_mode)
        std_order = _spread(order_blocks, std_mode)
        if en_r == 0 or std_chaos == 0:
            sens = err = float("nan")
            degenerate = True
        else:
            sens = en_r / std_chaos
            err = 100.0 * std_chaos / en_r
            degenerate = False
        return cls(en_av_order, en_av_chaos, en_r, std_order, std_chaos, sens, err, degenerate)


def _spread(blocks, mode):
    """Entropy spread of one regime.

    ``"within"``: mean over series of each series' standard deviation.
    ``"pooled"``: standard deviation of all values of all series together.
    """
    if mode == "within":
        return float(np.mean([np.std(b) for b in blocks]))
    if mode == "pooled":
        return float(np.std(np.concatenate(blocks)))
    raise ValueError(f"unknown std_mode {mode!r}")


def regime_windows(r, i_ex=3.25, windowing=None, hr=None, series_length=500):
    """The windows of one reference series (count windows, shift s)."""
    windowing = WindowingConfig() if windowing is None else windowing
    hr = HRParameters() if hr is None else hr
    series = spike_intervals(replace(hr, r=float(r), i_ex=float(i_ex),
                                     target_intervals=max(series_length, windowing.required_length())))
    return _window_matrix(series, windowing)[1]


def sensor_characteristics(predict_fn: Callable, chaotic_r: Sequence[float] = CHAOTIC_R,
                           regular_r: Sequence[float] = REGULAR_R, i_ex=3.25, windows_per_r=100,
                           nl=50, s=4, average=1, std_mode="within", hr=None,
                           return_blocks=False):
    """Run ``predict_fn`` over the reference series of both regimes.

    ``predict_fn`` maps an (n, nl) array of raw interval windows to n entropy
    values.  ``average`` > 1 applies a trailing moving average within each
    series before the statistics are taken.
    """
    if not chaotic_r or not regular_r:
        raise ValueError("both regime lists must be nonempty")
    windowing = WindowingConfig(nl=nl, s=s, count=windows_per_r)

    def run(rs):
        blocks = []
        for r in rs:
            out = np.asarray(predict_fn(regime_windows(r, i_ex, windowing, hr)), dtype=float)
            blocks.append(averaging_over_n(out, average))
        return blocks

    chaos, order = run(chaotic_r), run(regular_r)
    result = SensorCharacteristics.from_values(chaos, order, std_mode)
    return (result, chaos, order) if return_blocks else result


def averaging_over_n(predictions, n, blocks=None):
    """Trailing mean over the last ``n`` values, restarted at each block.

    ``blocks`` labels each position; a new block starts wherever the label
    changes.  The first n - 1 outputs of a block average its shorter prefix.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    p = np.asarray(predictions, dtype=float).reshape(-1)
    if n == 1 or p.size == 0:
        return p.copy()
    if blocks is None:
        starts = np.zeros(p.size, dtype=np.int64)
    else:
        labels = np.asarray(blocks)
        if labels.shape != p.shape:
            raise ValueError("blocks must label every prediction")
        new = np.r_[True, labels[1:] != labels[:-1]]
        starts = np.maximum.accumulate(np.where(new, np.arange(p.size), 0))
    i = np.arange(p.size)
    lo = np.maximum(starts, i - n + 1)
    csum = np.r_[0.0, np.cumsum(p)]
    return (csum[i + 1] - csum[lo]) / (i + 1 - lo)


@dataclass(frozen=True)
class LengthStudyRow:
    nl: int
    en_av_chaos: float
    en_av_order: float
    en_r: float
    std_chaos: float
    std_order: float
    en_sens: float
    en_err: float


def length_study(nl_values, i_ex=3.25, chaotic_r=CHAOTIC_R, regular_r=REGULAR_R, fe=None,
                 std_mode="within", hr=None):
    """Fuzzy-entropy sensor characteristics for each window length."""
    rows = []
    for nl in nl_values:
        if nl < 4:
            raise ValueError(f"window length must be >= 4, got {nl}")
        c = sensor_characteristics(sfu_predictor(fe), chaotic_r, regular_r, i_ex, 100, nl, 4,
                                   std_mode=std_mode, hr=hr)
        rows.append(LengthStudyRow(int(nl), c.en_av_chaos, c.en_av_order, c.en_r,
                                   c.std_en_chaos, c.std_en_order, c.en_sens, c.en_err_percent))
    return rows


def _g(v):
    return f"{v:.12g}"


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_metrics_csv(report: MetricsReport, path):
    rows = [[i + 1, _g(m.r2), _g(m.rmse), _g(m.mape)] for i, m in enumerate(report.per_fold)]
    agg = report.aggregate
    rows.append(["mean", _g(agg.r2), _g(agg.rmse), _g(agg.mape)])
    _write_rows(path, ["fold", "r2", "rmse", "mape_percent"], rows)


def write_characteristics_csv(rows, path):
    """``rows`` maps a sensor label to its :class:`SensorCharacteristics`."""
    names = [f for f in SensorCharacteristics.__dataclass_fields__]
    out = [[label] + [_g(v) if isinstance(v, float) else str(v) for v in asdict(c).values()]
           for label, c in rows.items()]
    _write_rows(path, ["sensor"] + names, out)


def write_length_study_csv(rows, path):
    names = list(LengthStudyRow.__dataclass_fields__)
    _write_rows(path, names, [[r.nl] + [_g(getattr(r, f)) for f in names[1:]] for r in rows])


def write_trace_csv(path, sfu, spe, blocks=None, n=20):
    """Entropy versus window index: ``index,sfu,spe,spe_avg20``."""
    sfu = np.asarray(sfu, dtype=float)
    spe = np.asarray(spe, dtype=float)
    avg = averaging_over_n(spe, n, blocks)
    _write_rows(path, ["index", "sfu", "spe", f"spe_avg{n}"],
                [[i, _g(a), _g(b), _g(c)] for i, (a, b, c) in enumerate(zip(sfu, spe, avg))])
