"""
Six-dimensional orbit uncertainty
=================================

Damped two-body motion with the J2 oblateness perturbation, driven by
noise in the momentum only. The run happens in orbit units
(R = geostationary radius, T = one sidereal day) and the snapshots are
mapped back to meters and meters per second.
"""

import numpy as np

from wassprox import models
from wassprox.sde import nondimensional_coefficients
from wassprox.runner import propagate, validate_config

params = models.SatelliteParams()
for name, value in nondimensional_coefficients(params).items():
    print(f"{name:13s} {value:.6g}")

R = params.R
g, f = models.satellite_drift(np.array([[R, 0.0, 0.0]]), params)
print(f"\nat r = R: gravity {np.linalg.norm(g):.4g} m/s^2, J2 term {np.linalg.norm(f):.4g} m/s^2")

cfg = validate_config("scenario = satellite\nK = 1000\nstride = 250\n")
result = propagate(cfg)

print("\n  t [s]      mean position [km]                  weight sum")
for k, cloud in sorted(result.snapshots.items()):
    q = cloud.states[:, :3].mean(axis=0) / 1e3
    print(f"{cloud.time:7.1f}  ({q[0]:10.2f}, {q[1]:8.2f}, {q[2]:8.2f})   {cloud.weights.sum():.15f}")

converged = sum(rep.converged for rep in result.reports)
print(f"\n{converged} of {len(result.reports)} proximal steps converged")
