"""
One proximal step by hand
=========================

Builds two small point clouds, runs a single weight update and checks
the two optimality conditions the iteration is solving.
"""

import numpy as np

from wassprox import ProxConfig, cost_matrix_euclidean, fixed_point_residuals, gibbs_kernel, normalize, prox_recur
from wassprox.prox import contraction_factor

rng = np.random.default_rng(0)

# previous cloud and its weights
X_prev = rng.normal(size=(8, 1))
w_prev = normalize(np.exp(-0.5 * X_prev[:, 0] ** 2))

# points after a small random move
X_new = X_prev + 0.05 * rng.normal(size=X_prev.shape)
C = cost_matrix_euclidean(X_prev, X_new)
psi = 0.5 * X_prev[:, 0] ** 2

cfg = ProxConfig(h=1e-3, beta=1.0, epsilon=5e-2, delta=1e-12, L=500)
print("contraction factor 1/(1 + beta eps/h) =", contraction_factor(cfg))

w_new, report = prox_recur(w_prev, psi, C, cfg, rng=rng)
print("iterations:", report.iterations, "converged:", report.converged)
print("mass before renormalization:", report.mass)

Gamma = gibbs_kernel(C, cfg.epsilon)
print("residuals of the two conditions:", fixed_point_residuals(report.y, report.z, Gamma, psi, w_prev, cfg))

print("\n  x_prev    w_prev    x_new     w_new")
for a, b, c, d in zip(X_prev[:, 0], w_prev, X_new[:, 0], w_new):
    print(f"{a:8.4f}  {b:8.5f}  {c:8.4f}  {d:8.5f}")

# a second random start lands on the same weights
w_again, _ = prox_recur(w_prev, psi, C, cfg, rng=np.random.default_rng(99))
print("\nmax difference between two random starts:", np.abs(w_new - w_again).max())
