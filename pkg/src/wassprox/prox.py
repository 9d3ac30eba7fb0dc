"""
Entropic Wasserstein proximal step on a weighted point cloud.

One step maps the previous weight vector ``rho_prev`` (living on the
previous points) to new weights on the transported points by solving

    min_rho  min_{M in Pi(rho_prev, rho)}  1/2 <C, M> + eps <M, log M>
             + h <psi + log(rho) / beta, rho>

through its dual. With ``Gamma = exp(-C / 2 eps)`` and
``xi = exp(-beta psi - 1)`` the dual optimality conditions read

    y * (Gamma z)   = rho_prev
    z * (Gamma^T y) = xi * z ** (-beta eps / h)

and the update is ``rho = z * (Gamma^T y)``. Rows of ``C`` index the
previous cloud (the ``rho_prev`` marginal); columns index the new cloud.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .cloud import normalize
from .errors import KernelUnderflowError, NumericalError


@dataclass(frozen=True)
class ProxConfig:
    """Scalars of one proximal step.

    Parameters
    ----------
    h : float
        Physical time step.
    beta : float
        Inverse temperature.
    epsilon : float
        Entropic regularization.
    delta : float
        Stopping tolerance on successive iterates (Euclidean norm).
    L : int
        Maximum number of sub-iterations.
    strict_kernel : bool
        If True, any kernel entry underflowing to zero is an error. The
        default only rejects kernels with an all-zero row or column, which
        is the case that actually breaks the iteration.
    """

    h: float = 1e-3
    beta: float = 1.0
    epsilon: float = 5e-2
    delta: float = 1e-3
    L: int = 100
    strict_kernel: bool = False

    def __post_init__(self):
        for name in ("h", "beta", "epsilon", "delta"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if int(self.L) != self.L or self.L < 1:
            raise ValueError(f"L must be a positive integer, got {self.L!r}")

    @property
    def exponent(self):
        """``beta * epsilon / h``, the power on ``z`` in the second condition."""
        return self.beta * self.epsilon / self.h


@dataclass
class ProxReport:
    """Convergence data of one :func:`prox_recur` call."""

    iterations: int
    res_y: float
    res_z: float
    converged: bool
    wall_ns: int
    mass: float
    y: np.ndarray = field(repr=False)
    z: np.ndarray = field(repr=False)

    def to_json(self, k, **extra):
        record = {
            "k": int(k),
            "iters": int(self.iterations),
            "res_y": float(self.res_y),
            "res_z": float(self.res_z),
            "converged": bool(self.converged),
            "wall_ns": int(self.wall_ns),
        }
        record.update(extra)
        return json.dumps(record)


def _check_states(A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    A = A[:, None] if A.ndim == 1 else A
    B = B[:, None] if B.ndim == 1 else B
    if A.ndim != 2 or A.shape != B.shape:
        raise ValueError(f"state matrices do not conform: {A.shape} vs {B.shape}")
    return A, B


def cost_matrix_euclidean(X_a, X_b):
    """``C[i, j] = ||X_a[i] - X_b[j]||^2``."""
    A, B = _check_states(X_a, X_b)
    return cdist(A, B, "sqeuclidean")


def cost_matrix_underdamped(Q_a, P_a, Q_b, P_b, grad_V, h):
    """Kinetic transport cost between position/momentum clouds.

    ``C[i, j] = s(q, p; qt, pt)`` with ``(q, p)`` row ``i`` of
    ``(Q_a, P_a)`` and ``(qt, pt)`` row ``j`` of ``(Q_b, P_b)``::

        s = ||pt - p + h grad_V(q)||^2 + 12 ||(qt - q) / h - (pt + p) / 2||^2

    Not symmetric. Both terms are squared distances between shifted
    point sets, so they are evaluated with :func:`cdist` on the shifted
    coordinates, which avoids forming ``(N, N, n)`` temporaries.
    """
    if not h > 0:
        raise ValueError(f"h must be positive, got {h!r}")
    Q_a, Q_b = _check_states(Q_a, Q_b)
    P_a, P_b = _check_states(P_a, P_b)
    if Q_a.shape != P_a.shape:
        raise ValueError("position and momentum blocks do not conform")
    g = np.asarray(grad_V(Q_a), dtype=float).reshape(Q_a.shape)
    kinetic = cdist(P_a - h * g, P_b, "sqeuclidean")
    positional = cdist(Q_a / h + P_a / 2, Q_b / h - P_b / 2, "sqeuclidean")
    return kinetic + 12.0 * positional


def gibbs_kernel(C, epsilon, strict=True):
    """``exp(-C / (2 epsilon))`` with an underflow check.

    With ``strict=True`` any entry equal to zero raises
    :class:`KernelUnderflowError`. With ``strict=False`` only a row or a
    column that is zero everywhere raises, since that makes the scaling
    iteration divide by zero.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or not np.all(np.isfinite(C)):
        raise ValueError("cost matrix must be a finite 2-D array")
    if np.any(C < 0):
        raise ValueError("cost matrix must be nonnegative")
    ratio = C / (2.0 * epsilon)
    G = np.exp(-ratio)
    zero = G == 0.0
    if strict:
        bad = zero.any()
    else:
        bad = zero.all(axis=0).any() or zero.all(axis=1).any()
    if bad:
        max_ratio = float(ratio.max())
        raise KernelUnderflowError(
            f"Gibbs kernel underflowed (max C/(2 eps) = {max_ratio:.4g}); "
            "increase epsilon or decrease h",
            max_ratio,
        )
    return G


def xi_vector(psi, beta):
    """``exp(-beta psi - 1)``."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    arg = -beta * np.asarray(psi, dtype=float) - 1.0
    with np.errstate(over="ignore"):
        xi = np.exp(arg)
    if not np.all(np.isfinite(xi)):
        raise NumericalError("xi overflowed: potential too negative for exp")
    return xi


def contraction_factor(cfg):
    """Thompson-metric contraction factor ``1 / (1 + beta eps / h)``."""
    return 1.0 / (1.0 + cfg.exponent)


def thompson_distance(z, zt):
    """``log max(max(z / zt), max(zt / z))`` for positive vectors."""
    z = np.asarray(z, dtype=float)
    zt = np.asarray(zt, dtype=float)
    if z.shape != zt.shape:
        raise ValueError("vectors must have equal length")
    if np.any(z <= 0) or np.any(zt <= 0):
        raise ValueError("Thompson distance needs strictly positive vectors")
    return float(max(np.max(np.log(z) - np.log(zt)), np.max(np.log(zt) - np.log(z)), 0.0))


def _log_z_update(log_xi, Gamma, y, r):
    back = Gamma.T @ y
    if np.any(back <= 0) or not np.all(np.isfinite(back)):
        raise NumericalError("Gamma^T y has zero or non-finite entries")
    return r * (log_xi - np.log(back))


def _y_update(prev_weights, Gamma, z):
    fwd = Gamma @ z
    if np.any(fwd <= 0) or not np.all(np.isfinite(fwd)):
        raise NumericalError("Gamma z has zero or non-finite entries")
    return prev_weights / fwd


def z_map(z, Gamma, psi, prev_weights, cfg):
    """One composite z-update ``z -> (xi / Gamma^T (rho_prev / Gamma z))^r``."""
    y = _y_update(np.asarray(prev_weights, dtype=float), Gamma, np.asarray(z, dtype=float))
    log_xi = -cfg.beta * np.asarray(psi, dtype=float) - 1.0
    return np.exp(_log_z_update(log_xi, Gamma, y, contraction_factor(cfg)))


def fixed_point_residuals(y, z, Gamma, psi, prev_weights, cfg):
    """Infinity-norm residuals of the two optimality conditions."""
    log_xi = -cfg.beta * np.asarray(psi, dtype=float) - 1.0
    res_a = y * (Gamma @ z) - prev_weights
    res_b = z * (Gamma.T @ y) - np.exp(log_xi - cfg.exponent * np.log(z))
    return float(np.max(np.abs(res_a))), float(np.max(np.abs(res_b)))


def prox_recur(prev_weights, psi, C, cfg, rng=None, z0=None):
    """Proximal weight update by block-coordinate scaling iterations.

    Parameters
    ----------
    prev_weights : ndarray, shape (N,)
        Simplex weights of the previous cloud.
    psi : ndarray, shape (N,)
        Potential evaluated at the previous cloud.
    C : ndarray, shape (N, N)
        Cost matrix, rows indexing the previous cloud.
    cfg : ProxConfig
    rng : numpy.random.Generator, optional
        Source of the random positive start ``z0 ~ U(0, 1)^N``.
    z0 : ndarray, optional
        Explicit start; takes precedence over ``rng``.

    Returns
    -------
    weights : ndarray
        New simplex weights.
    report : ProxReport
        ``mass`` holds the sum of the weights before re-normalization.
    """
    start = time.perf_counter_ns()
    prev_weights = np.asarray(prev_weights, dtype=float).reshape(-1)
    psi = np.asarray(psi, dtype=float).reshape(-1)
    N = prev_weights.shape[0]
    if psi.shape[0] != N or np.shape(C) != (N, N):
        raise ValueError("prev_weights, psi and C do not conform")
    if not np.all(np.isfinite(psi)):
        raise NumericalError("potential vector has non-finite entries")

    Gamma = gibbs_kernel(C, cfg.epsilon, strict=cfg.strict_kernel)
    log_xi = -cfg.beta * psi - 1.0
    r = contraction_factor(cfg)

    if z0 is None:
        if rng is None:
            rng = np.random.default_rng()
        z0 = rng.uniform(size=N)
        # uniform(0, 1) can return exactly 0
        z0[z0 == 0.0] = np.finfo(float).tiny
    z = np.asarray(z0, dtype=float).copy()
    if np.any(z <= 0):
        raise ValueError("z0 must be strictly positive")
    y = _y_update(prev_weights, Gamma, z)

    converged = False
    res_y = res_z = math.inf
    iterations = 0
    for iterations in range(1, int(cfg.L) + 1):
        z_new = np.exp(_log_z_update(log_xi, Gamma, y, r))
        y_new = _y_update(prev_weights, Gamma, z_new)
        res_y = float(np.linalg.norm(y_new - y))
        res_z = float(np.linalg.norm(z_new - z))
        y, z = y_new, z_new
        if res_y < cfg.delta and res_z < cfg.delta:
            converged = True
            break

    raw = z * (Gamma.T @ y)
    if not np.all(np.isfinite(raw)) or not np.any(raw > 0):
        raise NumericalError("proximal update produced invalid weights")
    mass = math.fsum(raw)
    weights = normalize(raw)
    report = ProxReport(
        iterations=iterations,
        res_y=res_y,
        res_z=res_z,
        converged=converged,
        wall_ns=time.perf_counter_ns() - start,
        mass=mass,
        y=y,
        z=z,
    )
    return weights, report
