"""
Benchmark systems and their closed-form references.

Each benchmark has a parameter dataclass, a builder returning the drift
system used by :mod:`wassprox.sde`, and an analytic oracle (moments or a
density) to compare propagated clouds against.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .cloud import normalize
from .errors import NumericalError
from .sde import (
    GradientDriftSystem,
    McKeanVlasovSystem,
    UnderdampedSystem,
    lamperti_transform_cir,
    nondimensional_coefficients,
)

BESSEL_MAX_ARG = 5000.0


# ---------------------------------------------------------------- parameters


@dataclass(frozen=True)
class OUParams:
    a: float = 1.0
    beta: float = 1.0
    mu0: float = 5.0
    sigma0_sq: float = 0.04

    def __post_init__(self):
        if not (self.a > 0 and self.beta > 0 and self.sigma0_sq > 0):
            raise ValueError("OU parameters a, beta, sigma0_sq must be positive")


@dataclass(frozen=True)
class MVParams:
    a: float = 1.0
    b: float = 1.0
    beta: float = 1.0
    mu0: float = 5.0
    sigma0_sq: float = 9.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.beta > 0 and self.sigma0_sq > 0):
            raise ValueError("McKean-Vlasov parameters must be positive")


@dataclass(frozen=True)
class LTIParams:
    A: np.ndarray = field(default_factory=lambda: np.array([[-10.0, 5.0], [-30.0, 0.0]]))
    B: np.ndarray = field(default_factory=lambda: np.array([[2.0], [2.5]]))
    mu0: np.ndarray = field(default_factory=lambda: np.array([4.0, 4.0]))
    Sigma0: np.ndarray = field(default_factory=lambda: 4.0 * np.eye(2))

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float).reshape(A.shape[0], -1)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "mu0", np.asarray(self.mu0, dtype=float).reshape(-1))
        object.__setattr__(self, "Sigma0", np.atleast_2d(np.asarray(self.Sigma0, dtype=float)))


@dataclass(frozen=True)
class CIRParams:
    a: float = 3.0
    b: float = 2.0
    theta: float = 2.0
    x0: float = 5.0

    def __post_init__(self):
        if not (self.b > 0 and 2 * self.a > self.b**2 and self.theta > 0):
            raise ValueError("CIR parameters violate 2a > b^2 > 0, theta > 0")
        if not self.x0 > 0:
            raise ValueError("x0 must be positive")

    @property
    def q(self):
        return 2.0 * self.a * self.theta / self.b**2 - 1.0


@dataclass(frozen=True)
class SatelliteParams:
    """Perturbed two-body constants (SI units) and orbit scales."""

    mu_grav: float = 3.9859e14
    J2: float = 1.082e-3
    R_E: float = 6.3781e6
    gamma: float = 1.0
    beta: float = 1.0
    R: float = 4.2164e7
    T: float = 86164.0

    def __post_init__(self):
        for name in ("mu_grav", "J2", "R_E", "gamma", "beta", "R", "T"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def k(self):
        return 3.0 * self.J2 * self.R_E**2 * self.mu_grav


# ------------------------------------------------------------------ oracles


def ou_analytic(params, t):
    """Mean and variance of the Ornstein-Uhlenbeck law at time ``t``."""
    a, beta = params.a, params.beta
    mean = params.mu0 * math.exp(-a * t)
    # written as a convex blend so t = 0 returns sigma0_sq exactly
    decay = math.exp(-2.0 * a * t)
    var = params.sigma0_sq * decay - math.expm1(-2.0 * a * t) / (a * beta)
    return mean, var


def mv_analytic(a, b, beta, mu0, sigma0_sq, t):
    """Mean and variance of the quadratic McKean-Vlasov flow."""
    if not (a > 0 and b > 0 and beta > 0):
        raise ValueError("a, b, beta must be positive")
    s_inf = 1.0 / ((a + b) * beta)
    rate = -2.0 * (a + b) * t
    return mu0 * math.exp(-a * t), sigma0_sq * math.exp(rate) - s_inf * math.expm1(rate)


def _lyapunov_rhs(A, BBt):
    def rhs(mu, S):
        return A @ mu, A @ S + S @ A.T + BBt

    return rhs


def _rk4(rhs, mu, S, t, n_steps):
    dt = t / n_steps
    for _ in range(n_steps):
        k1m, k1s = rhs(mu, S)
        k2m, k2s = rhs(mu + 0.5 * dt * k1m, S + 0.5 * dt * k1s)
        k3m, k3s = rhs(mu + 0.5 * dt * k2m, S + 0.5 * dt * k2s)
        k4m, k4s = rhs(mu + dt * k3m, S + dt * k3s)
        mu = mu + dt / 6.0 * (k1m + 2 * k2m + 2 * k3m + k4m)
        S = S + dt / 6.0 * (k1s + 2 * k2s + 2 * k3s + k4s)
    return mu, 0.5 * (S + S.T)


def lti_moments(params, t, tol=1e-8):
    """Mean and covariance of ``dx = A x dt + B dw`` at time ``t``.

    Classical RK4 on the moment ODEs with step ``1e-4 * max(1, t)``,
    halved until two successive results agree to ``tol``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    A, B = params.A, params.B
    if np.any(np.linalg.eigvals(A).real >= 0):
        warnings.warn("A is not Hurwitz; the moments grow without bound", RuntimeWarning)
    if t == 0:
        return params.mu0.copy(), params.Sigma0.copy()
    rhs = _lyapunov_rhs(A, B @ B.T)
    n = max(1, math.ceil(t / (1e-4 * max(1.0, t))))
    prev = _rk4(rhs, params.mu0, params.Sigma0, t, n)
    for _ in range(6):
        n *= 2
        cur = _rk4(rhs, params.mu0, params.Sigma0, t, n)
        scale = max(1.0, np.abs(cur[1]).max(), np.abs(cur[0]).max())
        diff = max(np.abs(cur[0] - prev[0]).max(), np.abs(cur[1] - prev[1]).max())
        if diff <= tol * scale:
            return cur
        prev = cur
    return prev


def log_bessel_i(q, x):
    """``log I_q(x)`` from the ascending power series, summed in log space."""
    if q < 0 or x < 0:
        raise ValueError("need order q >= 0 and argument x >= 0")
    if x > BESSEL_MAX_ARG:
        raise ValueError(f"argument {x} exceeds the power-series range {BESSEL_MAX_ARG}")
    if x == 0:
        return 0.0 if q == 0 else -math.inf
    half_log = math.log(x / 2.0)
    log_term = q * half_log - math.lgamma(q + 1.0)
    peak = log_term
    total = 1.0  # running sum scaled by exp(-peak)
    m = 0
    while True:
        m += 1
        log_term += 2.0 * half_log - math.log(m) - math.log(m + q)
        if log_term > peak:
            total = total * math.exp(peak - log_term) + 1.0
            peak = log_term
        else:
            rel = math.exp(log_term - peak)
            total += rel
            # terms decay once m exceeds x / 2
            if rel < 1e-16 * total and m > x / 2.0:
                break
    return peak + math.log(total)


def bessel_i(q, x):
    """Modified Bessel function of the first kind ``I_q(x)``."""
    value = log_bessel_i(q, x)
    if value > 709.0:
        raise ValueError(f"I_{q}({x}) overflows double precision")
    return math.exp(value)


def cir_transient_pdf(params, x, t):
    """Density of the CIR process started at ``x0``, evaluated at ``x``."""
    if not t > 0:
        raise ValueError("the CIR law at t = 0 is a Dirac mass; need t > 0")
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    a, b, q = params.a, params.b, params.q
    c = 2.0 * a / (b * b * (-math.expm1(-a * t)))
    u = c * params.x0 * math.exp(-a * t)
    out = np.zeros_like(x_arr)
    for idx, xi in enumerate(x_arr):
        if xi <= 0:
            continue
        v = c * xi
        log_val = (
            math.log(c) - (u + v) + 0.5 * q * (math.log(v) - math.log(u))
            + log_bessel_i(q, 2.0 * math.sqrt(u * v))
        )
        out[idx] = math.exp(log_val)
    return out if np.ndim(x) else float(out[0])


def _cir_upper(params, t):
    # mean plus many standard deviations; the density is negligible beyond
    a, b, theta = params.a, params.b, params.theta
    mean = theta + (params.x0 - theta) * math.exp(-a * t)
    var = params.x0 * b * b / a * (math.exp(-a * t) - math.exp(-2 * a * t)) + theta * b * b / (
        2 * a
    ) * (1 - math.exp(-a * t)) ** 2
    return mean + 60.0 * math.sqrt(var) + 10.0


def cir_moment(params, t, order=1):
    """``E[X_t^order]`` by adaptive quadrature of :func:`cir_transient_pdf`."""
    value, _ = integrate.quad(
        lambda x: x**order * cir_transient_pdf(params, x, t),
        0.0,
        _cir_upper(params, t),
        limit=400,
        epsabs=1e-12,
        epsrel=1e-10,
    )
    return value


def gibbs_stationary(psi, beta, points):
    """Weights proportional to ``exp(-beta psi)`` at the given points."""
    values = np.asarray(psi(np.asarray(points, dtype=float)), dtype=float).reshape(-1)
    if not np.all(np.isfinite(values)):
        raise ValueError("potential is not finite at every point")
    logw = -beta * (values - values.min())
    w = np.exp(logw)
    if not np.any(w > 0):
        raise NumericalError("Gibbs weights underflowed at every point")
    return normalize(w)


# ----------------------------------------------------------------- potentials


def quadratic_potential(a):
    """``psi(x) = a |x|^2 / 2`` and its gradient."""

    def psi(X):
        X = np.asarray(X, dtype=float)
        return 0.5 * a * np.sum(X * X, axis=-1)

    def grad(X):
        return a * np.asarray(X, dtype=float)

    return psi, grad


def bimodal_psi(X):
    """``(1 + x1^4) / 4 + (x2^2 - x1^2) / 2``."""
    X = np.asarray(X, dtype=float)
    x1, x2 = X[..., 0], X[..., 1]
    return 0.25 * (1.0 + x1**4) + 0.5 * (x2**2 - x1**2)


def bimodal_grad_psi(X):
    X = np.asarray(X, dtype=float)
    x1, x2 = X[..., 0], X[..., 1]
    return np.stack([x1**3 - x1, x2], axis=-1)


def ou_system(params):
    psi, grad = quadratic_potential(params.a)
    return GradientDriftSystem(psi=psi, grad_psi=grad, beta=params.beta)


def mv_system(params):
    psi, grad = quadratic_potential(params.a)
    phi, grad_phi = quadratic_potential(params.b)
    return McKeanVlasovSystem(psi=psi, grad_psi=grad, beta=params.beta, phi=phi, grad_phi=grad_phi)


def bimodal_system(beta=1.0):
    return GradientDriftSystem(psi=bimodal_psi, grad_psi=bimodal_grad_psi, beta=beta)


def cir_system(params):
    return lamperti_transform_cir(params.a, params.b, params.theta)


# ------------------------------------------------------------------ satellite


def _spherical_terms(q):
    q = np.atleast_2d(np.asarray(q, dtype=float))
    r = np.linalg.norm(q, axis=1)
    if np.any(r == 0) or not np.all(np.isfinite(r)):
        raise NumericalError("satellite position at the origin (gravity singularity)")
    ctheta = q[:, 2] / r
    return q, r, ctheta


def satellite_perturbation_potential(q, params=SatelliteParams()):
    """``V_pert = k (3 s_theta^2 - 1) / (6 r^3)``, theta the polar angle."""
    q, r, ct = _spherical_terms(q)
    st2 = 1.0 - ct * ct
    return params.k * (3.0 * st2 - 1.0) / (6.0 * r**3)


def satellite_drift(q, params=SatelliteParams()):
    """Gravitational acceleration and oblateness perturbation (m/s^2).

    With ``c_theta = z / r``::

        f_r     = k / (2 r^4) (3 s_theta^2 - 1)
        f_theta = -k / r^4 s_theta c_theta
        f_phi   = 0

    rotated to cartesian axes. ``s_theta * (c_phi, s_phi) = (x, y) / r``,
    so the rotation has no singularity at the poles.

    Returns
    -------
    gravity, f_pert : ndarray, shape (M, 3)
    """
    q, r, ct = _spherical_terms(q)
    st2 = 1.0 - ct * ct
    k = params.k
    f_r = k / (2.0 * r**4) * (3.0 * st2 - 1.0)
    r_hat = q / r[:, None]
    # f_theta * theta_hat = (f_theta / s_theta) * s_theta * theta_hat, where
    # s_theta * theta_hat = (c_theta x / r, c_theta y / r, -s_theta^2)
    theta_st = np.column_stack([ct * q[:, 0] / r, ct * q[:, 1] / r, -st2])
    f_pert = f_r[:, None] * r_hat + (-k / r**4 * ct)[:, None] * theta_st
    gravity = -params.mu_grav * q / r[:, None] ** 3
    return gravity, f_pert


def satellite_potential(q, params=SatelliteParams()):
    """Total potential ``V = -mu / r + V_pert`` in SI units."""
    q, r, _ = _spherical_terms(q)
    return -params.mu_grav / r + satellite_perturbation_potential(q, params)


def satellite_system(params=SatelliteParams()):
    """Underdamped system in orbit units (``q / R``, ``p T / R``, ``t / T``)."""
    coef = nondimensional_coefficients(params)
    R, T = params.R, params.T

    def V(Qn):
        # V * T^2 / R^2 expressed in scaled coordinates
        return satellite_potential(R * np.asarray(Qn, dtype=float), params) * T * T / (R * R)

    def grad_V(Qn):
        Qn = np.atleast_2d(np.asarray(Qn, dtype=float))
        rn = np.linalg.norm(Qn, axis=1)
        if np.any(rn == 0):
            raise NumericalError("satellite position at the origin (gravity singularity)")
        _, f_pert = satellite_drift(R * Qn, params)
        return coef["gravity"] * Qn / rn[:, None] ** 3 - coef["perturbation"] * f_pert

    return UnderdampedSystem(
        V=V, grad_V=grad_V, gamma=coef["damping"], beta=coef["beta"], n_pos=3
    )
