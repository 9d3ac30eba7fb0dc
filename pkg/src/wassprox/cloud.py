"""
Probability-weighted scattered point clouds.

A cloud is ``N`` points in ``R^n`` with a weight vector on the probability
simplex. Weights are kept proportional to the density evaluated at the
points, so the cloud is a pointwise representation of the PDF rather than
a quadrature rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InitializationError

SIMPLEX_ATOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ParticleCloud:
    """Immutable snapshot ``{x^i, w^i}`` at a given time.

    Parameters
    ----------
    states : ndarray, shape (N, n)
    weights : ndarray, shape (N,)
        Simplex weights.
    time : float
    """

    states: np.ndarray
    weights: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if states.ndim != 2 or states.shape[0] < 1 or states.shape[1] < 1:
            raise ValueError(f"states must be an (N, n) array, got shape {states.shape}")
        if not np.all(np.isfinite(states)):
            raise ValueError("states contain non-finite entries")
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if weights.shape[0] != states.shape[0]:
            raise ValueError(
                f"{weights.shape[0]} weights for {states.shape[0]} particles"
            )
        if np.any(weights < 0) or abs(math.fsum(weights) - 1.0) > SIMPLEX_ATOL:
            raise ValueError("weights are not on the probability simplex")
        object.__setattr__(self, "states", _frozen(states))
        object.__setattr__(self, "weights", _frozen(weights))
        object.__setattr__(self, "time", float(self.time))

    @property
    def n_particles(self):
        return self.states.shape[0]

    @property
    def dim(self):
        return self.states.shape[1]

    def evolve(self, states=None, weights=None, time=None):
        """Return the next snapshot, replacing any of the given fields."""
        return ParticleCloud(
            self.states if states is None else states,
            self.weights if weights is None else weights,
            self.time if time is None else time,
        )


def normalize(raw_weights):
    """Scale a nonnegative vector onto the probability simplex.

    The sum is accumulated with :func:`math.fsum`; after the division the
    rounding residual is folded into the largest entry until the correctly
    rounded sum is exactly one. A vector that already sums to one is
    returned unchanged, so ``normalize(normalize(w))`` is bitwise equal to
    ``normalize(w)``.
    """
    w = np.array(raw_weights, dtype=float).reshape(-1)
    if w.size == 0:
        raise ValueError("cannot normalize an empty weight vector")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights contain non-finite entries")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    total = math.fsum(w)
    if total <= 0:
        raise ValueError("weights sum to zero")
    if total == 1.0:
        return w
    w = w / total
    imax = int(np.argmax(w))
    for _ in range(4):
        total = math.fsum(w)
        if total == 1.0:
            break
        # push the rounding residual into the largest entry
        w[imax] += math.fsum([1.0, -total])
    return w


def init_cloud(density, sampler, n_particles, seed):
    """Draw the initial cloud from a known PDF.

    Parameters
    ----------
    density : callable
        ``density(X) -> (N,)`` array of nonnegative PDF values, ``X`` of
        shape ``(N, n)``.
    sampler : callable
        ``sampler(rng, N) -> (N, n)`` i.i.d. draws from the same PDF.
    n_particles : int
    seed : int or numpy.random.Generator
        A Generator is used as is, so a run can keep drawing from it.

    Returns
    -------
    ParticleCloud
        Samples with weights ``density(x^i) / sum_j density(x^j)`` at ``t = 0``.
    """
    if n_particles < 1:
        raise InitializationError(f"need at least one particle, got {n_particles}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    states = np.asarray(sampler(rng, n_particles), dtype=float)
    if states.ndim == 1:
        states = states[:, None]
    if states.shape[0] != n_particles:
        raise InitializationError(
            f"sampler returned {states.shape[0]} points, expected {n_particles}"
        )
    values = np.asarray(density(states), dtype=float).reshape(-1)
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise InitializationError("initial density returned negative or non-finite values")
    if not np.any(values > 0):
        raise InitializationError("initial density vanishes at every sampled point")
    return ParticleCloud(states, normalize(values), 0.0)


def empirical_moments(cloud, mode="empirical"):
    """Mean vector and covariance matrix of a cloud.

    ``mode="empirical"`` treats the states as equally weighted samples
    (unbiased covariance). ``mode="mass_weighted"`` uses the simplex
    weights as probability masses.
    """
    X = cloud.states
    N = X.shape[0]
    if N < 2:
        raise ValueError("covariance needs at least two particles")
    if mode == "empirical":
        return X.mean(axis=0), np.atleast_2d(np.cov(X, rowvar=False, ddof=1))
    if mode == "mass_weighted":
        w = cloud.weights
        mean = w @ X
        dX = X - mean
        return mean, (dX * w[:, None]).T @ dX
    raise ValueError(f"unknown moment mode {mode!r}")


def snapshot_filename(k):
    return f"snapshot_k={k}.csv"


def write_snapshot(path, cloud):
    """Write ``x1,...,xn,weight`` rows with 17 significant digits."""
    n = cloud.dim
    header = ",".join([f"x{i + 1}" for i in range(n)] + ["weight"])
    data = np.column_stack([cloud.states, cloud.weights])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=header, comments="")


def read_snapshot(path, time=0.0):
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    if header[-1] != "weight":
        raise ValueError(f"{path}: last column must be 'weight'")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return ParticleCloud(data[:, :-1], normalize(data[:, -1]), time)
