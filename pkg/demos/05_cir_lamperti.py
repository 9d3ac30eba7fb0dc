"""
Cox-Ingersoll-Ross via a change of variables
============================================

dx = a (theta - x) dt + b sqrt(x) dw has state-dependent noise. With
y = 2 sqrt(x) / b it becomes a unit-noise gradient system, which the
proximal recursion handles. The clouds are mapped back to x for
comparison with the noncentral chi-square transient density.
"""

import numpy as np

from wassprox import models
from wassprox.runner import propagate, validate_config

params = models.CIRParams()
wrapped = models.cir_system(params)
print("q =", params.q, " psi(1) =", wrapped.inner.psi(np.array([[1.0]]))[0])

cfg = validate_config("scenario = cir\nK = 1000\nstride = 100\n")
result = propagate(cfg)

print("\n   t    mean x  (oracle)  corr(w, pdf)")
for k in (100, 300, 600, 1000):
    t = k * cfg.h
    cloud = result.snapshots[k]
    x = cloud.states[:, 0]
    r = np.corrcoef(cloud.weights, models.cir_transient_pdf(params, x, t))[0, 1]
    print(f"{t:5.2f}  {x.mean():7.4f}  ({models.cir_moment(params, t):7.4f})  {r:.4f}")

y = result.sim_snapshots[1000].states[:, 0]
print("\ny-space range at t = 1:", y.min().round(3), "to", y.max().round(3))
