"""Scalar functionals over weight vectors and couplings."""

from __future__ import annotations

import math

import numpy as np

from .errors import NumericalError


def _positive_weights(weights):
    w = np.asarray(weights, dtype=float).reshape(-1)
    if np.any(w <= 0):
        raise ValueError("free energy needs strictly positive weights (log singularity)")
    return w


def discrete_free_energy(weights, psi, beta):
    """``<psi + log(w) / beta, w>``."""
    w = _positive_weights(weights)
    psi = np.asarray(psi, dtype=float).reshape(-1)
    if psi.shape != w.shape:
        raise ValueError("weights and potential do not conform")
    return float(np.dot(psi, w) + np.dot(np.log(w), w) / beta)


def underdamped_free_energy(weights, P, beta):
    """Kinetic free energy ``<|p|^2 / 2 + log(w) / beta, w>``."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    return discrete_free_energy(weights, 0.5 * np.sum(P * P, axis=1), beta)


def interaction_matrix(states, phi):
    """``D[i, j] = phi(x^i - x^j)``, symmetrized to kill rounding asymmetry."""
    X = np.asarray(states, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    N, n = X.shape
    diff = (X[:, None, :] - X[None, :, :]).reshape(N * N, n)
    D = np.asarray(phi(diff), dtype=float).reshape(N, N)
    return 0.5 * (D + D.T)


def semi_implicit_potential(psi, D, prev_weights):
    """Effective potential ``psi + D w_prev`` with the interaction frozen."""
    psi = np.asarray(psi, dtype=float).reshape(-1)
    D = np.asarray(D, dtype=float)
    w = np.asarray(prev_weights, dtype=float).reshape(-1)
    if D.shape != (psi.size, psi.size) or w.size != psi.size:
        raise ValueError("potential, interaction matrix and weights do not conform")
    return psi + D @ w


def kl_divergence(p, q):
    """``sum p log(p / q)`` with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float).reshape(-1)
    q = np.asarray(q, dtype=float).reshape(-1)
    if p.shape != q.shape:
        raise ValueError("distributions have different lengths")
    support = p > 0
    if np.any(q[support] <= 0):
        raise ValueError("q vanishes where p has mass")
    ps, qs = p[support], q[support]
    return max(float(np.sum(ps * (np.log(ps) - np.log(qs)))), 0.0)


def sinkhorn_distance(mu, nu, C, epsilon, tol=1e-9, max_iter=10_000):
    """Entropic transport cost between two weight vectors.

    Solves ``min 1/2 <C, M> + eps <M, log M>`` over couplings with marginals
    ``(mu, nu)`` by alternating scaling, and reports ``<C, M>``. This is a
    diagnostic, independent of the proximal iteration.

    Returns
    -------
    cost : float
    info : dict
        ``coupling``, ``iterations``, ``converged`` and the marginal
        ``error`` at exit.
    """
    mu = np.asarray(mu, dtype=float).reshape(-1)
    nu = np.asarray(nu, dtype=float).reshape(-1)
    C = np.asarray(C, dtype=float)
    if C.shape != (mu.size, nu.size):
        raise ValueError("cost matrix does not match the marginals")
    if np.any(C < 0):
        raise ValueError("cost matrix must be nonnegative")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    K = np.exp(-C / (2.0 * epsilon))
    u = np.ones_like(mu)
    v = np.ones_like(nu)
    converged = False
    err = math.inf
    it = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        for it in range(1, max_iter + 1):
            Kv = K @ v
            u = np.where(mu > 0, mu / Kv, 0.0)
            Ktu = K.T @ u
            v = np.where(nu > 0, nu / Ktu, 0.0)
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
                raise NumericalError("Sinkhorn scaling diverged (kernel underflow?)")
            err = float(np.abs(u * (K @ v) - mu).sum())
            if err < tol:
                converged = True
                break
    M = u[:, None] * K * v[None, :]
    return float(np.sum(C * M)), {
        "coupling": M,
        "iterations": it,
        "converged": converged,
        "error": err,
    }
