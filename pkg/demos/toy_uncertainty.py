"""
Heteroscedastic toy regression: direct head against MC dropout
==============================================================

Both models see the same noisy samples.  The direct model outputs a mean
and a standard deviation; the MC model outputs one value and gets its
spread from repeated dropout passes.  Since the true noise is known we can
score the predicted sigma as well as the calibration.
"""

import numpy as np

from uqdense.datasets import split_random, toy_generate, toy_sigma
from uqdense.evalkit import calibration_curve, calibration_report, normalized_mae_percent
from uqdense.nn import Architecture, TrainingData, init_model, train
from uqdense.uq import direct_predict, mc_dropout_predict

x, y, sd = toy_generate(1, 4000, seed=0)
s = split_random(len(x), seed=0)
data = TrainingData(x[s.train], y[s.train], x[s.validation], y[s.validation])
xt, yt = x[s.test, None], y[s.test, None]

# %%
# direct probabilistic head: 2 outputs per target, sigma through softplus
direct = init_model(Architecture(1, 1, [64, 64], head="direct"), seed=1)
train(direct, data, "nlpd_direct", epochs=250, learning_rate=3e-3, patience=60, seed=2)
pd = direct_predict(direct, xt)

# %%
# MC dropout: dropout stays on at prediction time, k passes per input
mc = init_model(Architecture(1, 1, [64, 64], dropout=[0.0, 0.2]), seed=1)
train(mc, data, "nlpd_mc", k=16, epochs=150, learning_rate=5e-3, patience=40, seed=2)
pm = mc_dropout_predict(mc, xt, k=200, seed=3)

# %%
for name, p in (("direct", pd), ("mc dropout", pm)):
    rep = calibration_report(p, yt)
    sig_err = np.sqrt(np.mean((p.sigma[:, 0] - toy_sigma(1, xt[:, 0])) ** 2)) / sd.mean()
    print(f"{name:>10}: MAE {normalized_mae_percent(yt, p.mu):5.2f}%  calibration {rep.score:5.2f}%  "
          f"sigma RMSE {100 * sig_err:5.1f}% of mean sigma")

# %%
# observed against expected coverage for the direct model
for row in calibration_curve(calibration_report(pd, yt))[::4]:
    print(row)
