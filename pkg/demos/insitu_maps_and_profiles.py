"""
In-situ density model: maps and uncertainty profiles
====================================================

A direct probabilistic model is fitted to a synthetic satellite track
(log10 density at the satellite position).  Once trained it can be
queried anywhere: here on a latitude x local-time grid for two seasons,
and along altitude for different solar activity levels.
"""

import numpy as np

from uqdense import pipelines
from uqdense.config import RunConfig

cfg = RunConfig(task="local_synth", n_days=12, cadence_s=60.0, hidden=[64, 64], epochs=40, patience=None,
                alt_range=[350.0, 500.0, 25.0], seed=0).resolved()
res = pipelines.run(cfg)
print("test MAE %.2f%%, calibration %.2f%%" % (res.metrics["test"]["mae_percent"],
                                               res.metrics["test"]["calibration_score"]))

# %%
# June and December solstice at 400 km: the density bulge follows the sun
for cond in ("doy 2", "doy 3"):
    mean, std = pipelines.predict_grid(cfg, res.model, cond, [400.0])["maps"][400.0]
    lat = pipelines.MAP_LAT[np.argmax(mean.mean(axis=1))]
    print(f"{cond}: densest latitude band {lat:+.1f} deg, mean relative std {np.mean(std / mean):.3f}")

# %%
# relative uncertainty grows away from where the satellite flew
out = pipelines.predict_grid(cfg, res.model, "Solar 2", [400.0, 700.0])
print(out["meta"]["warnings"])

# %%
profiles = pipelines.uncertainty_profiles(cfg, res.model, ["Solar 1", "Solar 2", "Solar 3"])
for name, (alts, pct) in profiles.items():
    print(f"{name}: 100 sigma/mu from {alts[0]:.0f} to {alts[-1]:.0f} km:", np.round(pct, 1))
