"""Density propagation on weighted point clouds by entropic Wasserstein
proximal steps."""

from .cloud import (
    ParticleCloud,
    empirical_moments,
    init_cloud,
    normalize,
    read_snapshot,
    snapshot_filename,
    write_snapshot,
)
from .energy import (
    discrete_free_energy,
    interaction_matrix,
    kl_divergence,
    semi_implicit_potential,
    sinkhorn_distance,
    underdamped_free_energy,
)
from .errors import ConfigError, InitializationError, KernelUnderflowError, NumericalError, WassProxError
from .prox import (
    ProxConfig,
    ProxReport,
    contraction_factor,
    cost_matrix_euclidean,
    cost_matrix_underdamped,
    fixed_point_residuals,
    gibbs_kernel,
    prox_recur,
    thompson_distance,
    xi_vector,
    z_map,
)
from .runner import RunConfig, RunResult, propagate, run_scenario, validate_config, write_outputs
from .scenarios import SCENARIOS, get_scenario

__version__ = "0.1.0"
