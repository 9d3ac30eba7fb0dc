"""
Ornstein-Uhlenbeck transient
============================

dx = -a x dt + sqrt(2/beta) dw started from N(5, 0.04). The law stays
Gaussian, so every snapshot can be held against the exact mean and
variance and the weights against the exact density at the particles.
"""

import math

import numpy as np
from scipy import stats

from wassprox import models
from wassprox.runner import propagate, validate_config

cfg = validate_config("scenario = ou\nK = 1000\nstride = 250\nseed = 0\n")
print(cfg.to_text())

result = propagate(cfg)
params = models.OUParams()

print("   t    mean  (exact)    var  (exact)   corr(w, pdf)")
for k, cloud in sorted(result.snapshots.items()):
    t = k * cfg.h
    mean, var = models.ou_analytic(params, t)
    x = cloud.states[:, 0]
    pdf = stats.norm.pdf(x, mean, math.sqrt(var))
    r = np.corrcoef(cloud.weights, pdf)[0, 1]
    print(f"{t:5.2f}  {x.mean():6.3f} ({mean:6.3f})  {x.var(ddof=1):6.3f} ({var:6.3f})   {r:.4f}")

wall = np.array([rep.wall_ns for rep in result.reports]) / 1e6
print(f"\nproximal step wall time: median {np.median(wall):.2f} ms, p95 {np.percentile(wall, 95):.2f} ms")
