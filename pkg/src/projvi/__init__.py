"""Lower bounds on log partition functions from mean field under random parity projections."""

from .errors import ConfigError, DomainEmptyError, EnumerationCapError, ModelFormatError
from .exact_oracle import (
    WishConfig,
    constrained_map,
    exact_constrained_log_z,
    exact_log_z,
    exact_marginals,
    wish_estimate,
)
from .gf2_linalg import ConstraintSystem, Gf2Matrix, count_solutions, member, rref_mod2, sample_projection
from .meanfield import MfState, elbo, mf_ascent, mf_estimate
from .mfrp import (
    MarginalState,
    ProjectionEstimate,
    aggregate_marginals,
    constrained_pairwise,
    constrained_singleton,
    coordinate_update,
    mfrp_run,
    mfrp_sweep,
    projected_elbo,
)
from .model import PairwiseModel, RbmParams, ising_grid, load_model, rbm_to_model, save_model, theta_dot_phi

__version__ = "0.1.0"
