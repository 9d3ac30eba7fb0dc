"""
End-to-end acceptance checks at fixed tolerances.

Each check appends a one-line PASS/FAIL verdict to ``VERDICTS``; the
conftest hook prints them at the end of the session. Running this file as
a script prints the same lines without pytest.

All runs use seed 0 and the scenario defaults (N = 400, h = 1e-3,
eps = 5e-2, delta = 1e-3, L = 100) unless a criterion says otherwise.
"""

import math
import sys

import numpy as np
import pytest
from scipy import integrate, linalg, stats

from wassprox import models
from wassprox.cloud import normalize
from wassprox.energy import kl_divergence
from wassprox.prox import (
    ProxConfig,
    contraction_factor,
    cost_matrix_euclidean,
    fixed_point_residuals,
    gibbs_kernel,
    prox_recur,
    thompson_distance,
    z_map,
)
from wassprox.runner import propagate, validate_config

SEED = 0
VERDICTS = []
_RUNS = {}


def verdict(label, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
    VERDICTS.append(line)
    print(line)
    return passed


def run(name, **overrides):
    key = (name, tuple(sorted(overrides.items())))
    if key not in _RUNS:
        text = f"scenario = {name}\nseed = {SEED}\n" + "".join(f"{k} = {v}\n" for k, v in overrides.items())
        _RUNS[key] = propagate(validate_config(text))
    return _RUNS[key]


def pearson(a, b):
    return float(np.corrcoef(a, b)[0, 1])


def gaussian_checks(label, result, k_list, law):
    """Mean within 3 standard errors, variance within 25%, weight/PDF correlation."""
    ok = True
    h = result.config.h
    N = result.config.N
    for k in k_list:
        cloud = result.snapshots[k]
        t = k * h
        mean, var = law(t)
        x = cloud.states[:, 0]
        se = math.sqrt(var / N)
        err = abs(x.mean() - mean)
        ok &= verdict(f"{label}a mean t={t:g}", err <= 3 * se, f"|{x.mean():.4f} - {mean:.4f}| = {err:.4f} (3 SE = {3 * se:.4f})")
        rel = abs(x.var(ddof=1) - var) / var
        ok &= verdict(f"{label}b variance t={t:g}", rel <= 0.25, f"{x.var(ddof=1):.4f} vs {var:.4f}, rel err {rel:.3f} (<= 0.25)")
        rho = pearson(cloud.weights, stats.norm.pdf(x, mean, math.sqrt(var)))
        ok &= verdict(f"{label}c weight/pdf correlation t={t:g}", rho >= 0.95, f"r = {rho:.4f} (>= 0.95)")
    return ok


def test_ou_transient_law():
    p = models.OUParams()
    res = run("ou", K=1000, stride=250)
    assert gaussian_checks("1", res, [250, 500, 1000], lambda t: models.ou_analytic(p, t))


def test_mckean_vlasov():
    res = run("mckean-vlasov", K=3000, stride=250)
    law = lambda t: models.mv_analytic(1.0, 1.0, 1.0, 5.0, 9.0, t)
    ok = gaussian_checks("2", res, [250, 500, 1000], law)
    x = res.snapshots[3000].states[:, 0]
    rel = abs(x.var(ddof=1) - 0.5) / 0.5
    ok &= verdict("2d stationary variance t=3", rel <= 0.25, f"{x.var(ddof=1):.4f} vs 0.5, rel err {rel:.3f} (<= 0.25)")
    assert ok


def test_cir_lamperti():
    p = models.CIRParams()
    res = run("cir", K=1000, stride=100)
    ok = True
    for k in (300, 1000):
        t = k * res.config.h
        cloud = res.snapshots[k]
        x = cloud.states[:, 0]
        m1 = models.cir_moment(p, t, 1)
        var = models.cir_moment(p, t, 2) - m1**2
        se = math.sqrt(var / res.config.N)
        err = abs(x.mean() - m1)
        ok &= verdict(f"3a CIR mean t={t:g}", err <= 3 * se, f"|{x.mean():.4f} - {m1:.4f}| = {err:.4f} (3 SE = {3 * se:.4f})")
        rho = pearson(cloud.weights, models.cir_transient_pdf(p, x, t))
        ok &= verdict(f"3b CIR weight/pdf correlation t={t:g}", rho >= 0.90, f"r = {rho:.4f} (>= 0.90)")
    assert ok


def test_bimodal_relaxation():
    res = run("bimodal", K=3000, stride=500)
    F = np.array([e for _, e in res.energies])
    rises = np.diff(F[50:])
    worst = float(rises.max())
    ok = verdict(
        "4a free energy non-increasing after step 50",
        worst <= 1e-3,
        f"max per-step increase {worst:.3e} (<= 1e-3), {int(np.sum(rises > 1e-3))} of {rises.size} steps exceed; "
        f"F: {F[50]:.4f} -> {F[-1]:.4f}",
    )
    cloud = res.snapshots[3000]
    kl = kl_divergence(cloud.weights, models.gibbs_stationary(models.bimodal_psi, 1.0, cloud.states))
    ok &= verdict("4b terminal KL to Gibbs", kl <= 0.1, f"KL = {kl:.4f} (<= 0.1)")
    assert ok


def test_contraction():
    g = np.random.default_rng(SEED)
    cfg = ProxConfig()
    r = contraction_factor(cfg)
    worst = -np.inf
    fails = 0
    total = 0
    for N in (2, 5, 20):
        for _ in range(1000):
            X = g.normal(size=(N, 1))
            Gamma = gibbs_kernel(cost_matrix_euclidean(X, X + 0.3 * g.normal(size=(N, 1))), cfg.epsilon, strict=False)
            psi = 0.5 * X[:, 0] ** 2 + g.normal(size=N)
            w = normalize(g.uniform(0.05, 1, N))
            z = np.exp(g.normal(scale=2, size=N))
            zt = np.exp(g.normal(scale=2, size=N))
            lhs = thompson_distance(z_map(z, Gamma, psi, w, cfg), z_map(zt, Gamma, psi, w, cfg))
            bound = r * thompson_distance(z, zt) + 1e-12
            worst = max(worst, lhs - bound)
            fails += lhs > bound
            total += 1
    assert verdict("5 Thompson contraction", fails == 0, f"{total - fails}/{total} within r*d + 1e-12, r = {r:.6f}, worst slack {worst:.2e}")


def test_fixed_point():
    g = np.random.default_rng(SEED)
    cfg = ProxConfig(delta=1e-13, L=1000)
    worst_res = 0.0
    worst_gap = 0.0
    worst_iter = 0
    ok_count = 0
    for i in range(100):
        N = 3 + i % 8
        X = g.normal(size=(N, 1))
        C = cost_matrix_euclidean(X, X + 0.3 * g.normal(size=(N, 1)))
        psi = 0.5 * X[:, 0] ** 2
        w0 = normalize(g.uniform(0.1, 1, N))
        w1, r1 = prox_recur(w0, psi, C, cfg, rng=np.random.default_rng(1000 + i))
        w2, r2 = prox_recur(w0, psi, C, cfg, rng=np.random.default_rng(2000 + i))
        Gamma = gibbs_kernel(C, cfg.epsilon, strict=False)
        res = max(fixed_point_residuals(r1.y, r1.z, Gamma, psi, w0, cfg))
        gap = float(np.max(np.abs(w1 - w2)))
        good = r1.converged and r2.converged and r1.iterations < cfg.L and res <= 1e-8 and gap <= 1e-8
        ok_count += good
        worst_res = max(worst_res, res)
        worst_gap = max(worst_gap, gap)
        worst_iter = max(worst_iter, r1.iterations, r2.iterations)
    assert verdict(
        "6 fixed point",
        ok_count == 100,
        f"{ok_count}/100 ok, max residual {worst_res:.1e} (<= 1e-8), max seed gap {worst_gap:.1e} (<= 1e-8), max iters {worst_iter}",
    )


def test_mass_conservation():
    runs = [run("ou", K=1000, stride=250), run("mckean-vlasov", K=3000, stride=250), run("cir", K=1000, stride=100),
            run("bimodal", K=3000, stride=500), run("satellite", K=1000, stride=100)]
    worst = 0.0
    steps = 0
    for res in runs:
        for rep in res.reports:
            if rep.converged:
                worst = max(worst, abs(rep.mass - 1.0))
                steps += 1
    assert verdict("7 mass conservation", worst <= 1e-8, f"max |sum - 1| = {worst:.2e} over {steps} converged steps (<= 1e-8)")


def test_runtime():
    res = run("ou", K=1000, stride=250)
    ms = np.array([r.wall_ns for r in res.reports]) / 1e6
    q = np.percentile(ms, [5, 25, 50, 75, 95, 99])
    dist = ", ".join(f"p{p}={v:.2f}" for p, v in zip([5, 25, 50, 75, 95, 99], q))
    iters = np.array([r.iterations for r in res.reports])
    assert verdict(
        "8 prox wall time N=400",
        q[2] <= 10.0,
        f"median {q[2]:.2f} ms (<= 10 ms); {dist} ms; iterations median {np.median(iters):.0f}, max {iters.max()}",
    )


def deterministic_satellite(params, x0, t_end):
    sys_ = models.satellite_system(params)

    def rhs(t, s):
        q, p = s[:3], s[3:]
        return np.concatenate([p, -sys_.grad_V(q[None])[0] - sys_.gamma * p])

    sol = integrate.solve_ivp(rhs, (0.0, t_end), x0, method="DOP853", rtol=1e-12, atol=1e-14)
    return sol.y[:, -1]


def test_satellite():
    res = run("satellite", K=1000, stride=100)
    ok = verdict("9a satellite run completes", len(res.reports) == 1000, f"{len(res.reports)} steps, no numerical error")
    sums = [abs(c.weights.sum() - 1) for c in res.snapshots.values()]
    ok &= verdict("9b satellite weight sums", max(sums) <= 1e-8, f"max |sum - 1| = {max(sums):.1e} (<= 1e-8)")
    finite = all(np.all(np.isfinite(m)) for _, m, _ in res.moments)
    ok &= verdict("9c satellite marginal means finite", finite, f"{len(res.moments)} steps checked")
    p = models.SatelliteParams()
    mu0 = np.array([1.0, 0, 0, 0, 0, 0])
    worst = 0.0
    for k, sim in res.sim_snapshots.items():
        if k == 0:
            continue
        det = deterministic_satellite(p, mu0, sim.time)
        mean_q = sim.states[:, :3].mean(axis=0)
        worst = max(worst, np.linalg.norm(mean_q - det[:3]) / np.linalg.norm(det[:3]))
    ok &= verdict("9d satellite position means vs deterministic orbit", worst <= 0.1, f"max relative deviation {worst:.2e} (<= 0.1)")
    assert ok


def test_lti_lyapunov():
    p = models.LTIParams()
    _, S = models.lti_moments(p, 10.0)
    BBt = p.B @ p.B.T
    res = float(np.max(np.abs(p.A @ S + S @ p.A.T + BBt)))
    ref = linalg.solve_continuous_lyapunov(p.A, -BBt)
    gap = float(np.max(np.abs(S - ref)))
    assert verdict("10 LTI Lyapunov residual t=10", res <= 1e-6, f"residual {res:.1e} (<= 1e-6), |S - S_lyap| = {gap:.1e}")


if __name__ == "__main__":
    failed = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
