"""
Perceptron approximation of the entropy sensor
==============================================

Build the I_ex = 3.25 window base, train a perceptron to reproduce the fuzzy
entropy labels, and compare the trained sensor with the direct computation.
Takes a couple of minutes on one core.
"""

import numpy as np

from chaos_sensor import (
    TrainConfig,
    build_base,
    kfold_cv,
    normalize,
    predict,
    r2,
    save_model,
    sensor_characteristics,
    simplify_equal_weights,
    spe_predictor,
    train,
)
from chaos_sensor.evaluation import write_metrics_csv, write_trace_csv

# %%
base = build_base(3.25)
print(f"{len(base)} windows, stats: {base.stats}")
mean = base.stats.mean
ds = normalize(base, mean)

# %%
# Held-out accuracy with ten folds.  Without subtracting the mean the
# logistic units saturate and the fit collapses.
cfg = TrainConfig(seed=0)
report = kfold_cv(ds, k=10, nh=50, cfg=cfg)
print("10-fold CV, NH=50:", report.aggregate)
write_metrics_csv(report, "cv_nh50.csv")
write_trace_csv("cv_trace.csv", ds.targets, report.predictions, base.block_ids())

# %%
# A model trained on the whole base, used as a sensor on the reference series
model = train(ds, 50, cfg)
save_model(model, "spe_nh50.txt")
spe = spe_predictor(model, mean)
for n in (1, 20):
    c = sensor_characteristics(spe, average=n)
    print(f"SPE average={n:2d}: EnErr {c.en_err_percent:.1f}%  EnSens {c.en_sens:.1f}")

# %%
# One hidden unit with all input weights replaced by their mean: the output
# then depends only on the window's mean interval
single = train(ds, 1, cfg)
simple = simplify_equal_weights(single)
print("NH=1 R^2:", round(r2(ds.targets, predict(single, ds.values)), 3))
print("equal weights R^2:", round(r2(ds.targets, predict(simple, ds.values)), 3))
print("shared weight:", float(np.round(simple.w1[0, 0], 5)))
