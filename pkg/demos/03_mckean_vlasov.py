"""
Mean-field interaction
======================

Quadratic confinement a x^2/2 plus quadratic attraction b |x - y|^2/2
between particles. The drift reads the current weights, and the proximal
step freezes the interaction at the previous weights.
"""

import numpy as np

from wassprox import models
from wassprox.runner import propagate, validate_config

cfg = validate_config("scenario = mckean-vlasov\nK = 2000\nstride = 250\n")
result = propagate(cfg)

print("   t    mean  (exact)    var  (exact)")
for k, cloud in sorted(result.snapshots.items()):
    t = k * cfg.h
    mean, var = models.mv_analytic(1.0, 1.0, 1.0, 5.0, 9.0, t)
    x = cloud.states[:, 0]
    print(f"{t:5.2f}  {x.mean():6.3f} ({mean:6.3f})  {x.var(ddof=1):6.3f} ({var:6.3f})")

print("\nstationary variance 1/((a+b) beta) = 0.5")

F = np.array([e for _, e in result.energies])
print("free energy every 250 steps:", np.round(F[::250], 3))
