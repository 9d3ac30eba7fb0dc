"""
Linear system reference moments
===============================

dx = A x dt + B dw with a non-symmetric A. Only the moment curves are
produced here: mean and covariance from the moment ODEs, and the
stationary covariance from the Lyapunov equation.
"""

import numpy as np
from scipy import linalg

from wassprox import models

params = models.LTIParams()
print("eigenvalues of A:", np.linalg.eigvals(params.A))

for t in (0.0, 0.1, 0.5, 1.0, 10.0):
    mean, cov = models.lti_moments(params, t)
    print(f"t = {t:4.1f}  mean {np.round(mean, 4)}  cov {np.round(cov[np.triu_indices(2)], 5)}")

S = linalg.solve_continuous_lyapunov(params.A, -params.B @ params.B.T)
print("\nLyapunov solution:", np.round(S[np.triu_indices(2)], 5))
