"""
Registry of benchmark scenarios.

A scenario bundles the initial law, the particle transport step, the
transport cost, the potential fed to the proximal step and the free
energy, all in the coordinates the recursion runs in. ``report`` maps a
simulation cloud to the coordinates written to disk (``x`` for the
Lamperti-wrapped CIR process, SI units for the satellite).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from . import energy, models, sde
from .cloud import ParticleCloud, init_cloud
from .prox import ProxConfig, cost_matrix_euclidean, cost_matrix_underdamped

# prox defaults shared by every benchmark
_PROX = {"h": 1e-3, "beta": 1.0, "epsilon": 5e-2, "delta": 1e-3, "L": 100, "N": 400}


def _gaussian_cloud(rng, N, mean, cov):
    """Cloud drawn from N(mean, cov) weighted by that density."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    law = stats.multivariate_normal(mean=mean, cov=cov)

    def sampler(g, n):
        return g.multivariate_normal(mean, cov, size=n, method="cholesky")

    def density(X):
        return np.atleast_1d(law.pdf(X))

    return init_cloud(density, sampler, N, rng)


class Model:
    """Scenario instance with resolved parameters."""

    cost_label = "euclidean"

    def __init__(self, params, prox):
        self.params = params
        self.prox = prox

    def initial_cloud(self, rng, N):
        raise NotImplementedError

    def em_step(self, cloud, h, rng):
        raise NotImplementedError

    def cost(self, prev_states, new_states, h):
        return cost_matrix_euclidean(prev_states, new_states)

    def potential(self, cloud):
        raise NotImplementedError

    def free_energy(self, cloud):
        raise NotImplementedError

    def report(self, cloud):
        return cloud


class GradientModel(Model):
    def __init__(self, params, prox, system, mean, cov):
        super().__init__(params, prox)
        self.system = system
        self.mean = mean
        self.cov = cov

    def initial_cloud(self, rng, N):
        return _gaussian_cloud(rng, N, self.mean, self.cov)

    def em_step(self, cloud, h, rng):
        return sde.em_step_gradient(cloud, self.system, h, rng)

    def potential(self, cloud):
        return self.system.psi(cloud.states)

    def free_energy(self, cloud):
        return energy.discrete_free_energy(cloud.weights, self.system.psi(cloud.states), self.system.beta)


class McKeanVlasovModel(GradientModel):
    _last = (None, None)

    def _interaction(self, states):
        # the free energy of step k and the potential of step k + 1 share D
        if self._last[0] is not states:
            self._last = (states, energy.interaction_matrix(states, self.system.phi))
        return self._last[1]

    def em_step(self, cloud, h, rng):
        return sde.em_step_mckean_vlasov(cloud, self.system, h, rng)

    def potential(self, cloud):
        D = self._interaction(cloud.states)
        return energy.semi_implicit_potential(self.system.psi(cloud.states), D, cloud.weights)

    def free_energy(self, cloud):
        D = self._interaction(cloud.states)
        psi = self.system.psi(cloud.states) + 0.5 * D @ cloud.weights
        return energy.discrete_free_energy(cloud.weights, psi, self.system.beta)


class LampertiModel(GradientModel):
    """CIR process propagated in Lamperti coordinates ``y = 2 sqrt(x) / b``."""

    def __init__(self, params, prox, wrapped, x_mean, x_var):
        super().__init__(params, prox, wrapped.inner, None, None)
        self.wrapped = wrapped
        self.x_mean = x_mean
        self.x_var = x_var

    def initial_cloud(self, rng, N):
        law = stats.norm(self.x_mean, np.sqrt(self.x_var))
        wrapped = self.wrapped

        def sampler(g, n):
            x = g.normal(self.x_mean, np.sqrt(self.x_var), size=n)
            if np.any(x <= 0):
                raise ValueError("initial CIR samples must be positive")
            return wrapped.forward(x)[:, None]

        def density(Y):
            x = wrapped.inverse(Y[:, 0])
            # rho_Y(y) = rho_X(x) |dx/dy|
            return law.pdf(x) / wrapped.jacobian(x)

        return init_cloud(density, sampler, N, rng)

    def report(self, cloud):
        w, x = sde.pushforward_density(cloud.weights, cloud.states, self.wrapped.inverse, self.wrapped.jacobian)
        return ParticleCloud(x, w, cloud.time)


class SatelliteModel(Model):
    """Perturbed two-body Langevin system run in orbit units."""

    cost_label = "underdamped"

    def __init__(self, params, prox, sat, mean, cov):
        super().__init__(params, prox)
        self.sat = sat
        self.system = models.satellite_system(sat)
        self.mean = mean
        self.cov = cov

    def initial_cloud(self, rng, N):
        return _gaussian_cloud(rng, N, self.mean, self.cov)

    def em_step(self, cloud, h, rng):
        return sde.em_step_underdamped(cloud, self.system, h, rng)

    def cost(self, prev_states, new_states, h):
        q0, p0 = sde.split_phase(prev_states, 3)
        q1, p1 = sde.split_phase(new_states, 3)
        return cost_matrix_underdamped(q0, p0, q1, p1, self.system.grad_V, h)

    def potential(self, cloud):
        # h gamma <|p|^2/2 + log(w)/beta, w> == h <gamma |p|^2/2 + log(w)/(beta/gamma), w>
        _, p = sde.split_phase(cloud.states, 3)
        return self.system.gamma * 0.5 * np.sum(p * p, axis=1)

    def free_energy(self, cloud):
        _, p = sde.split_phase(cloud.states, 3)
        return energy.underdamped_free_energy(cloud.weights, p, self.system.beta)

    def report(self, cloud):
        return sde.redimensionalize(cloud, self.sat)


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    defaults: dict
    params: dict
    oracle_only: bool = False

    def build(self, cfg):
        """Instantiate the model for a validated :class:`RunConfig`."""
        p = dict(self.params)
        p.update(cfg.params)
        prox = ProxConfig(h=cfg.h, beta=cfg.beta, epsilon=cfg.epsilon, delta=cfg.delta, L=cfg.L)
        return _BUILDERS[self.name](p, prox, cfg)


def _build_ou(p, prox, cfg):
    op = models.OUParams(a=p["a"], beta=cfg.beta, mu0=p["mu0"], sigma0_sq=p["sigma0_sq"])
    return GradientModel(op, prox, models.ou_system(op), [op.mu0], [[op.sigma0_sq]])


def _build_mv(p, prox, cfg):
    mp = models.MVParams(a=p["a"], b=p["b"], beta=cfg.beta, mu0=p["mu0"], sigma0_sq=p["sigma0_sq"])
    return McKeanVlasovModel(mp, prox, models.mv_system(mp), [mp.mu0], [[mp.sigma0_sq]])


def _build_bimodal(p, prox, cfg):
    return GradientModel(p, prox, models.bimodal_system(cfg.beta), p["mu0"], np.asarray(p["Sigma0"]))


def _build_cir(p, prox, cfg):
    cp = models.CIRParams(a=p["a"], b=p["b"], theta=p["theta"], x0=p["x0"])
    wrapped = models.cir_system(cp)
    if cfg.beta != wrapped.inner.beta:
        raise ValueError("the Lamperti-transformed CIR process has beta = 2")
    return LampertiModel(cp, prox, wrapped, cp.x0, p["init_var"])


def _build_satellite(p, prox, cfg):
    sat = models.SatelliteParams(gamma=p["gamma"], beta=cfg.beta)
    coef = sde.nondimensional_coefficients(sat)
    # fold h*gamma*F into the generic step: beta_eff = beta'/gamma', psi_eff = gamma' psi
    prox = replace(prox, beta=coef["beta"] / coef["damping"])
    cov = np.diag(np.asarray(p["Sigma0_diag"], dtype=float))
    return SatelliteModel(sat, prox, sat, np.asarray(p["mu0"], dtype=float), cov)


def _build_lti(p, prox, cfg):
    return models.LTIParams(A=p["A"], B=p["B"], mu0=p["mu0"], Sigma0=p["Sigma0"])


_BUILDERS = {
    "ou": _build_ou,
    "mckean-vlasov": _build_mv,
    "bimodal": _build_bimodal,
    "cir": _build_cir,
    "satellite": _build_satellite,
    "lti": _build_lti,
}

SCENARIOS = {
    s.name: s
    for s in [
        Scenario(
            "ou",
            "Ornstein-Uhlenbeck process, psi = a x^2 / 2",
            dict(_PROX, K=1000, stride=50),
            {"a": 1.0, "mu0": 5.0, "sigma0_sq": 0.04},
        ),
        Scenario(
            "mckean-vlasov",
            "quadratic confinement and interaction, semi-implicit step",
            dict(_PROX, K=1000, stride=50),
            {"a": 1.0, "b": 1.0, "mu0": 5.0, "sigma0_sq": 9.0},
        ),
        Scenario(
            "bimodal",
            "planar double-well potential (1 + x1^4)/4 + (x2^2 - x1^2)/2",
            dict(_PROX, K=3000, stride=100),
            {"mu0": [2.0, 2.0], "Sigma0": [[4.0, 0.0], [0.0, 4.0]]},
        ),
        Scenario(
            "cir",
            "Cox-Ingersoll-Ross process via the Lamperti transform",
            dict(_PROX, beta=2.0, K=1000, stride=50),
            {"a": 3.0, "b": 2.0, "theta": 2.0, "x0": 5.0, "init_var": 1e-4},
        ),
        Scenario(
            "satellite",
            "J2-perturbed two-body Langevin dynamics in orbit units",
            dict(_PROX, h=1e-5, K=1000, stride=100),
            {
                "gamma": 1.0,
                "mu0": [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                "Sigma0_diag": [3.335e-4, 6.133e-4, 3.933e-4, 6.562e-4, 9.246e-4, 5.761e-4],
            },
        ),
        Scenario(
            "lti",
            "linear SDE dx = Ax dt + B dw, moment reference curves only",
            dict(_PROX, K=1000, stride=50),
            {
                "A": [[-10.0, 5.0], [-30.0, 0.0]],
                "B": [[2.0], [2.5]],
                "mu0": [4.0, 4.0],
                "Sigma0": [[4.0, 0.0], [0.0, 4.0]],
            },
            oracle_only=True,
        ),
    ]
}


def get_scenario(name):
    try:
        return SCENARIOS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}") from None
