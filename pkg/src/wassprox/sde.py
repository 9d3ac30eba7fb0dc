"""
Euler-Maruyama particle transport.

Every step function takes the current :class:`~wassprox.cloud.ParticleCloud`
and returns the new ``(N, n)`` state matrix; weights are left to the
proximal step. Noise is drawn from the supplied generator as one
``(N, n_noise)`` standard normal block, row by row (particle-major), so a
seeded generator reproduces a run exactly. Passing ``dW`` replaces the
Brownian increments (``dW=0`` gives the deterministic drift step).

Potential evaluators are vectorized: ``psi(X)`` maps ``(N, n)`` to ``(N,)``
and ``grad_psi(X)`` maps ``(N, n)`` to ``(N, n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cloud import ParticleCloud, normalize
from .errors import NumericalError


@dataclass(frozen=True)
class GradientDriftSystem:
    """``dx = -grad psi(x) dt + sqrt(2 / beta) dw``."""

    psi: Callable
    grad_psi: Callable
    beta: float


@dataclass(frozen=True)
class McKeanVlasovSystem:
    """Gradient drift plus a symmetric pairwise interaction ``phi``.

    ``phi`` and ``grad_phi`` act on difference vectors, shape ``(M, n)``.
    """

    psi: Callable
    grad_psi: Callable
    beta: float
    phi: Callable
    grad_phi: Callable


@dataclass(frozen=True)
class UnderdampedSystem:
    """Langevin system on ``(q, p)``; states are ``[q | p]`` columns.

    ``dq = p dt``, ``dp = (-grad V(q) - gamma p) dt + sqrt(2 gamma / beta) dw``.
    """

    V: Callable
    grad_V: Callable
    gamma: float
    beta: float
    n_pos: int

    def hamiltonian(self, states):
        q, p = split_phase(states, self.n_pos)
        return 0.5 * np.sum(p * p, axis=1) + np.asarray(self.V(q), dtype=float)


@dataclass(frozen=True)
class LampertiWrappedSystem:
    """A gradient system in ``y = forward(x)`` coordinates.

    ``jacobian(x)`` is ``|d forward / dx|``.
    """

    inner: GradientDriftSystem
    forward: Callable
    inverse: Callable
    jacobian: Callable


def split_phase(states, n_pos):
    states = np.asarray(states, dtype=float)
    if states.shape[1] != 2 * n_pos:
        raise ValueError(f"expected {2 * n_pos} state columns, got {states.shape[1]}")
    return states[:, :n_pos], states[:, n_pos:]


def _increments(rng, shape, h, dW):
    if dW is not None:
        return np.broadcast_to(np.asarray(dW, dtype=float), shape)
    if rng is None:
        raise ValueError("either rng or dW must be given")
    return math.sqrt(h) * rng.standard_normal(shape)


def _check_drift(drift, what="drift"):
    bad = ~np.all(np.isfinite(drift), axis=1)
    if bad.any():
        idx = np.flatnonzero(bad)
        raise NumericalError(f"non-finite {what} at particle(s) {idx[:10].tolist()}")


def _check_h(h):
    if not h > 0:
        raise ValueError(f"h must be positive, got {h!r}")


def em_step_gradient(cloud, sys, h, rng=None, dW=None):
    """``x <- x - h grad psi(x) + sqrt(2 / beta) dW``."""
    _check_h(h)
    X = cloud.states
    drift = np.asarray(sys.grad_psi(X), dtype=float).reshape(X.shape)
    _check_drift(drift)
    noise = _increments(rng, X.shape, h, dW)
    return X - h * drift + math.sqrt(2.0 / sys.beta) * noise


def interaction_drift(states, weights, grad_phi):
    """``sum_j grad_phi(x^i - x^j) w^j`` for every particle ``i``."""
    X = np.asarray(states, dtype=float)
    N, n = X.shape
    diff = (X[:, None, :] - X[None, :, :]).reshape(N * N, n)
    g = np.asarray(grad_phi(diff), dtype=float).reshape(N, N, n)
    return np.einsum("ijk,j->ik", g, np.asarray(weights, dtype=float))


def em_step_mckean_vlasov(cloud, sys, h, rng=None, dW=None):
    """Euler-Maruyama step whose drift reads the current weights."""
    _check_h(h)
    X = cloud.states
    drift = np.asarray(sys.grad_psi(X), dtype=float).reshape(X.shape)
    drift = drift + interaction_drift(X, cloud.weights, sys.grad_phi)
    _check_drift(drift)
    noise = _increments(rng, X.shape, h, dW)
    return X - h * drift + math.sqrt(2.0 / sys.beta) * noise


def em_step_underdamped(cloud, sys, h, rng=None, dW=None):
    """Semi-discrete Langevin step; noise enters the momentum block only.

    ``dW`` (if given) has shape ``(N, n_pos)``.
    """
    _check_h(h)
    q, p = split_phase(cloud.states, sys.n_pos)
    force = np.asarray(sys.grad_V(q), dtype=float).reshape(q.shape)
    _check_drift(force, "potential gradient")
    noise = _increments(rng, p.shape, h, dW)
    q_new = q + h * p
    p_new = p - h * (force + sys.gamma * p) + math.sqrt(2.0 * sys.gamma / sys.beta) * noise
    return np.hstack([q_new, p_new])


def lamperti_transform_cir(a, b, theta):
    """Unit-diffusion form of ``dx = a (theta - x) dt + b sqrt(x) dw``.

    With ``y = 2 sqrt(x) / b`` the process is a gradient system with
    ``beta = 2`` and ``psi(y) = a y^2 / 4 - (q + 1/2) log y``,
    ``q = 2 a theta / b^2 - 1``.
    """
    if not (b > 0 and theta > 0 and 2 * a > b * b):
        raise ValueError(
            f"Feller condition 2a > b^2 > 0, theta > 0 violated (a={a}, b={b}, theta={theta})"
        )
    q = 2.0 * a * theta / b**2 - 1.0

    def psi(Y):
        y = np.asarray(Y, dtype=float)[:, 0]
        return a * y**2 / 4.0 - (q + 0.5) * np.log(y)

    def grad_psi(Y):
        y = np.asarray(Y, dtype=float)
        return a * y / 2.0 - (q + 0.5) / y

    inner = GradientDriftSystem(psi=psi, grad_psi=grad_psi, beta=2.0)
    return LampertiWrappedSystem(
        inner=inner,
        forward=lambda x: 2.0 * np.sqrt(x) / b,
        inverse=lambda y: b * b * np.asarray(y, dtype=float) ** 2 / 4.0,
        jacobian=lambda x: 1.0 / (b * np.sqrt(x)),
    )


def pushforward_density(weights, states_y, inverse, jacobian):
    """Map a cloud from ``y`` back to ``x = inverse(y)``.

    The density at the mapped point is ``rho_Y(y) * |dy/dx|(x)``; the
    result is re-normalized onto the simplex.
    """
    states_x = np.asarray(inverse(np.asarray(states_y, dtype=float)), dtype=float)
    jac = np.abs(np.asarray(jacobian(states_x), dtype=float)).reshape(-1)
    if not np.all(np.isfinite(jac)) or np.any(jac == 0):
        raise NumericalError("change-of-measure jacobian is zero or non-finite")
    return normalize(np.asarray(weights, dtype=float) * jac), states_x


def nondimensional_coefficients(params):
    """Coefficients of the scaled satellite SDE.

    ``q' = q / R``, ``p' = p T / R``, ``t' = t / T``. Returns the gravity
    coefficient ``T^2 mu / R^3``, the perturbation scale ``T^2 / R``, the
    damping ``gamma T``, the noise coefficient
    ``T^{3/2} / R * sqrt(2 gamma / beta)`` and the equivalent scaled
    inverse temperature ``beta R^2 / T^2``.
    """
    R, T = params.R, params.T
    if not (R > 0 and T > 0):
        raise ValueError("R and T must be positive")
    return {
        "gravity": T * T * params.mu_grav / R**3,
        "perturbation": T * T / R,
        "damping": params.gamma * T,
        "noise": T**1.5 / R * math.sqrt(2.0 * params.gamma / params.beta),
        "beta": params.beta * R * R / (T * T),
    }


def nondimensionalize(cloud, params):
    """Scale a dimensional ``[q | p]`` cloud (m, m/s, s) to orbit units."""
    R, T = params.R, params.T
    if not (R > 0 and T > 0):
        raise ValueError("R and T must be positive")
    q, p = split_phase(cloud.states, 3)
    return ParticleCloud(np.hstack([q / R, p * T / R]), cloud.weights, cloud.time / T)


def redimensionalize(cloud, params):
    """Inverse of :func:`nondimensionalize`."""
    R, T = params.R, params.T
    q, p = split_phase(cloud.states, 3)
    return ParticleCloud(np.hstack([q * R, p * R / T]), cloud.weights, cloud.time * T)
