"""
Scenario runner: config parsing, the propagate loop and artifact output.

Each step performs, in order: Euler-Maruyama transport of the points,
the transport cost between the previous and the new points, the
potential at the previous points, and the proximal weight update. One
``numpy.random.Generator`` seeded from the config feeds the initial
sampler, then per step the EM noise followed by the proximal start
vector, so a config and seed fix every output byte.

Config files are flat ``key = value`` lines (``#`` starts a comment).
Values are JSON literals, bare words are read as strings. Keys other
than the run-level ones below are scenario parameter overrides.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import models
from .cloud import ParticleCloud, empirical_moments, snapshot_filename, write_snapshot
from .errors import ConfigError, WassProxError
from .prox import prox_recur
from .scenarios import SCENARIOS, get_scenario

RUN_KEYS = ("scenario", "h", "beta", "epsilon", "delta", "L", "N", "seed", "K", "stride", "out", "moment_mode")
MOMENT_MODES = ("empirical", "mass_weighted")

# error codes reported by validate_config
E_UNPARSABLE = "unparsable"
E_UNKNOWN_SCENARIO = "unknown_scenario"
E_NONPOSITIVE = "nonpositive"
E_BAD_N = "bad_particle_count"
E_BAD_STEPS = "bad_step_count"
E_UNKNOWN_KEY = "unknown_key"
E_BAD_VALUE = "bad_value"


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one run."""

    scenario: str
    h: float
    beta: float
    epsilon: float
    delta: float
    L: int
    N: int
    seed: int = 0
    K: int = 1000
    stride: int = 50
    out: str = "runs/out"
    moment_mode: str = "empirical"
    params: dict = field(default_factory=dict)

    def to_text(self):
        """Serialize to the flat config format; inverse of :func:`validate_config`."""
        lines = []
        for key in RUN_KEYS:
            lines.append(f"{key} = {json.dumps(getattr(self, key))}")
        for key in sorted(self.params):
            lines.append(f"{key} = {json.dumps(self.params[key])}")
        return "\n".join(lines) + "\n"

    def echo(self):
        return json.loads(json.dumps(asdict(self)))


def _parse_value(raw):
    raw = raw.strip()
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _parse_lines(text):
    entries = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'", E_UNPARSABLE)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value", E_UNPARSABLE)
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}", E_UNPARSABLE)
        entries[key] = _parse_value(value)
    return entries


def _number(entries, key, kind):
    value = entries[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}", E_BAD_VALUE)
    if kind is int:
        if int(value) != value:
            raise ConfigError(f"{key} must be an integer, got {value!r}", E_BAD_VALUE)
        return int(value)
    return float(value)


def validate_config(text):
    """Parse config text, fill scenario defaults and enforce invariants.

    Raises
    ------
    ConfigError
        With ``code`` one of ``unparsable``, ``unknown_scenario``,
        ``nonpositive``, ``bad_particle_count``, ``bad_step_count``,
        ``unknown_key`` or ``bad_value``.
    """
    if not isinstance(text, str):
        raise ConfigError("config text must be a string", E_UNPARSABLE)
    entries = _parse_lines(text)
    if "scenario" not in entries:
        raise ConfigError("config must name a scenario", E_UNPARSABLE)
    name = entries.pop("scenario")
    if not isinstance(name, str) or name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}", E_UNKNOWN_SCENARIO)
    scenario = SCENARIOS[name]

    merged = dict(scenario.defaults)
    params = {}
    for key, value in entries.items():
        if key in RUN_KEYS:
            merged[key] = value
        elif key in scenario.params:
            params[key] = value
        else:
            raise ConfigError(f"unknown key {key!r} for scenario {name!r}", E_UNKNOWN_KEY)

    values = {}
    for key in ("h", "beta", "epsilon", "delta"):
        v = _number(merged, key, float)
        if not (math.isfinite(v) and v > 0):
            raise ConfigError(f"{key} must be positive and finite, got {v!r}", E_NONPOSITIVE)
        values[key] = v
    values["L"] = _number(merged, "L", int)
    if values["L"] < 1:
        raise ConfigError("L must be at least 1", E_NONPOSITIVE)
    values["N"] = _number(merged, "N", int)
    if values["N"] < 1:
        raise ConfigError(f"N must be at least 1, got {values['N']}", E_BAD_N)
    for key in ("K", "stride"):
        values[key] = _number(merged, key, int)
        if values[key] < 1:
            raise ConfigError(f"{key} must be at least 1, got {values[key]}", E_BAD_STEPS)
    values["seed"] = _number(merged, "seed", int) if "seed" in merged else 0
    if values["seed"] < 0:
        raise ConfigError("seed must be nonnegative", E_BAD_VALUE)
    mode = merged.get("moment_mode", "empirical")
    if mode not in MOMENT_MODES:
        raise ConfigError(f"moment_mode must be one of {MOMENT_MODES}", E_BAD_VALUE)
    out = merged.get("out", f"runs/{name}")
    if not isinstance(out, str):
        raise ConfigError("out must be a path string", E_BAD_VALUE)

    cfg = RunConfig(scenario=name, moment_mode=mode, out=out, params=params, **values)
    try:
        if not scenario.oracle_only:
            scenario.build(cfg)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"scenario parameters rejected: {exc}", E_BAD_VALUE) from exc
    return cfg


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}", E_UNPARSABLE) from exc
    return validate_config(text)


class StepError(WassProxError):
    """A module error raised while computing step ``k``."""

    def __init__(self, k, cause):
        super().__init__(f"step {k}: {type(cause).__name__}: {cause}")
        self.k = k
        self.cause = cause

    def record(self):
        return {"k": self.k, "error": type(self.cause).__name__, "message": str(self.cause)}


@dataclass
class RunResult:
    """In-memory outputs of :func:`propagate`.

    ``moments`` holds ``(t, mean, cov)`` for every step ``0..K`` in the
    reported coordinates; ``snapshots`` the reported clouds at the stride
    and ``sim_snapshots`` the clouds in simulation coordinates (only kept
    when the two differ). ``timing`` has one dict per step.
    """

    config: RunConfig
    moments: list
    energies: list
    snapshots: dict
    sim_snapshots: dict
    timing: list
    reports: list


def _oracle_lti(cfg):
    scenario = get_scenario(cfg.scenario)
    params = scenario.build(cfg)
    moments = [(0.0, np.asarray(params.mu0, float), np.asarray(params.Sigma0, float))]
    for k in range(cfg.stride, cfg.K + 1, cfg.stride):
        t = k * cfg.h
        mean, cov = models.lti_moments(params, t)
        moments.append((t, mean, cov))
    return RunResult(cfg, moments, [], {}, {}, [], [])


def propagate(cfg, keep_all=False):
    """Run the recursion and return a :class:`RunResult`.

    Parameters
    ----------
    cfg : RunConfig
    keep_all : bool
        Keep the cloud of every step, not only those at the stride.

    Raises
    ------
    StepError
        Wrapping any library error, with the failing step index.
    """
    scenario = get_scenario(cfg.scenario)
    if scenario.oracle_only:
        return _oracle_lti(cfg)
    model = scenario.build(cfg)
    rng = np.random.default_rng(cfg.seed)
    try:
        cloud = model.initial_cloud(rng, cfg.N)
    except (ValueError, ArithmeticError) as exc:
        raise StepError(0, exc) from exc
    reported = model.report(cloud)
    separate = reported is not cloud

    moments, energies, timing, reports = [], [], [], []
    snapshots, sim_snapshots = {}, {}

    def record(k, cloud, reported):
        mean, cov = empirical_moments(reported, mode=cfg.moment_mode) if cfg.N > 1 else (reported.states[0], None)
        moments.append((reported.time, mean, cov))
        energies.append((cloud.time, model.free_energy(cloud)))
        if keep_all or k % cfg.stride == 0 or k == cfg.K:
            snapshots[k] = reported
            if separate:
                sim_snapshots[k] = cloud

    record(0, cloud, reported)
    t0 = time.perf_counter_ns()
    h = model.prox.h
    for k in range(1, cfg.K + 1):
        try:
            em_start = time.perf_counter_ns() - t0
            states = model.em_step(cloud, h, rng)
            em_done = time.perf_counter_ns() - t0
            C = model.cost(cloud.states, states, h)
            psi = model.potential(cloud)
            prox_start = time.perf_counter_ns() - t0
            weights, rep = prox_recur(cloud.weights, psi, C, model.prox, rng=rng)
            cloud = ParticleCloud(states, weights, k * h)
            reported = model.report(cloud)
            record(k, cloud, reported)
        except (ValueError, ArithmeticError) as exc:
            raise StepError(k, exc) from exc
        reports.append(rep)
        timing.append(
            {
                "k": k,
                "iters": rep.iterations,
                "res_y": rep.res_y,
                "res_z": rep.res_z,
                "converged": rep.converged,
                "wall_ns": rep.wall_ns,
                "mass": rep.mass,
                "em_start_ns": em_start,
                "em_done_ns": em_done,
                "prox_start_ns": prox_start,
            }
        )
    return RunResult(cfg, moments, energies, snapshots, sim_snapshots, timing, reports)


def _fmt(x):
    return "%.17g" % x


def _moment_header(n):
    cols = ["t"] + [f"mean_{i + 1}" for i in range(n)]
    cols += [f"var_{i + 1}{j + 1}" for i in range(n) for j in range(i, n)]
    return ",".join(cols)


def _write_moments(path, moments):
    n = moments[0][1].size
    iu = np.triu_indices(n)
    lines = [_moment_header(n)]
    for t, mean, cov in moments:
        cov = np.full((n, n), np.nan) if cov is None else np.atleast_2d(cov)
        row = [t, *np.atleast_1d(mean), *cov[iu]]
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _write_energies(path, energies):
    lines = ["t,F"] + [f"{_fmt(t)},{_fmt(F)}" for t, F in energies]
    Path(path).write_text("\n".join(lines) + "\n")


def blob_sha1(data):
    """Git blob hash of ``data`` (bytes)."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def write_outputs(result, out_dir):
    """Write snapshots, ``moments.csv``, ``free_energy.csv``, ``timing.jsonl``
    and ``manifest.json`` into ``out_dir``; existing files are overwritten.

    Lamperti and satellite runs also get the simulation-coordinate clouds
    under ``transformed/``.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise PermissionError(f"directory {out} is not writable")
    except OSError as exc:
        raise OSError(f"cannot write outputs to {out}: {exc}") from exc

    numeric = []
    for k, cloud in sorted(result.snapshots.items()):
        name = snapshot_filename(k)
        write_snapshot(out / name, cloud)
        numeric.append(name)
    if result.sim_snapshots:
        (out / "transformed").mkdir(exist_ok=True)
        for k, cloud in sorted(result.sim_snapshots.items()):
            name = f"transformed/{snapshot_filename(k)}"
            write_snapshot(out / name, cloud)
            numeric.append(name)
    _write_moments(out / "moments.csv", result.moments)
    numeric.append("moments.csv")
    _write_energies(out / "free_energy.csv", result.energies)
    numeric.append("free_energy.csv")
    with open(out / "timing.jsonl", "w") as fh:
        for rec in result.timing:
            fh.write(json.dumps(rec) + "\n")

    hashes = {name: blob_sha1((out / name).read_bytes()) for name in numeric}
    combined = hashlib.sha1("".join(f"{n}:{h}\n" for n, h in hashes.items()).encode()).hexdigest()
    manifest = {
        "config": result.config.echo(),
        "files": hashes,
        "numeric_sha1": combined,
        "steps": len(result.timing),
        "converged_steps": int(sum(r["converged"] for r in result.timing)),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def run_scenario(cfg, out_dir=None):
    """Propagate and write artifacts; returns an exit status.

    ``0`` on success, ``3`` when a numerical or model error stops the run
    (an ``error.json`` naming the step is written to the output directory).
    """
    out = Path(out_dir if out_dir is not None else cfg.out)
    try:
        result = propagate(cfg)
    except StepError as exc:
        out.mkdir(parents=True, exist_ok=True)
        record = dict(exc.record(), config=cfg.echo())
        (out / "error.json").write_text(json.dumps(record, indent=2) + "\n")
        return 3, record
    manifest = write_outputs(result, out)
    return 0, manifest
