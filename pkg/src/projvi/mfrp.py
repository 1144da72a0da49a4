"""Mean field with random parity projections.

The projected distribution keeps the free variables of a reduced parity
system independent and sets every pivot variable so its constraint holds.
Singleton and pairwise marginals of the pivots are closed-form multilinear
functions of the free marginals, so the projected bound

    theta . mu + sum_{i free} H(mu_i)   <=   log Z(A, b)

is concave in each free coordinate and can be maximized one coordinate at
a time with a logistic update.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import _kernels as K
from ._rng import stream
from .errors import DomainEmptyError
from .exact_oracle import log_median
from .gf2_linalg import ConstraintSystem, empty_system, rref_mod2, sample_projection
from .model import PairwiseModel

LOG2 = math.log(2.0)


class _Layout:
    """Flat arrays describing one (model, constraint system) pair for the kernels."""

    def __init__(self, model: PairwiseModel, cs: ConstraintSystem):
        if cs.n != model.n:
            raise ValueError(f"system has {cs.n} variables, model has {model.n}")
        if not cs.consistent:
            raise DomainEmptyError("constraint system is inconsistent")
        n, r = model.n, cs.rank
        self.free_var = cs.free
        self.row_var = cs.pivots
        self.is_pivot = np.zeros(n, dtype=np.bool_)
        self.is_pivot[self.row_var] = True
        self.pos = np.empty(n, dtype=np.int64)
        self.pos[self.row_var] = np.arange(r)
        self.pos[self.free_var] = np.arange(n - r)
        self.cf = np.ascontiguousarray(cs.free_block, dtype=np.uint8)
        self.sgn = 1.0 - 2.0 * cs.b_array.astype(np.float64)
        self.row_off, self.row_col, self.col_off, self.col_row = K.support_lists(self.cf)
        self.unary = model.unary
        self.const = model.const_offset
        self.ei = np.ascontiguousarray(model.edge_index[:, 0])
        self.ej = np.ascontiguousarray(model.edge_index[:, 1])
        self.ew = model.edge_weight
        self.nb_off, self.nb_var, self.nb_eid = model.neighbors()

    def products(self, mu: np.ndarray) -> np.ndarray:
        prod = np.empty(self.cf.shape[0])
        K.refresh_products(prod, self.row_off, self.row_col, mu)
        return prod

    def objective(self, mu, prod) -> float:
        return K.objective(
            self.unary, self.const, self.ei, self.ej, self.ew,
            self.is_pivot, self.pos, self.cf, self.sgn, prod, self.row_off, self.row_col, mu,
        )

    def kernel_args(self, mu, prod, stamp, tick):
        return (
            self.unary, self.free_var, self.row_var, self.nb_off, self.nb_eid,
            self.ei, self.ej, self.ew, self.is_pivot, self.pos, self.cf, self.sgn, prod,
            self.row_off, self.row_col, self.col_off, self.col_row, mu, stamp, tick,
        )


class MarginalState:
    """Free marginals plus the cached row products that determine the pivots.

    Variable indices in the public methods are original model indices.
    """

    def __init__(self, model: PairwiseModel, cs: ConstraintSystem, mu_free, _layout=None):
        self.model = model
        self.cs = cs
        self._layout = _layout if _layout is not None else _Layout(model, cs)
        mu = np.array(mu_free, dtype=np.float64).reshape(-1)
        if mu.shape[0] != cs.n - cs.rank:
            raise ValueError(f"expected {cs.n - cs.rank} free marginals, got {mu.shape[0]}")
        if np.any(mu < 0.0) or np.any(mu > 1.0):
            raise ValueError("free marginals must lie in [0, 1]")
        self.mu_free = mu
        self.prod = self._layout.products(mu)
        self._stamp = np.zeros(model.num_edges, dtype=np.int64)
        self._tick = 1

    def copy(self) -> MarginalState:
        return MarginalState(self.model, self.cs, self.mu_free.copy(), _layout=self._layout)

    @property
    def mu_constrained(self) -> np.ndarray:
        """Pivot marginals in row order."""
        return 0.5 * (1.0 - self._layout.sgn * self.prod)

    def marginals(self) -> np.ndarray:
        """Singleton marginals of all variables, original order."""
        out = np.empty(self.cs.n)
        out[self._layout.free_var] = self.mu_free
        out[self._layout.row_var] = self.mu_constrained
        return out

    def is_free(self, v: int) -> bool:
        return not self._layout.is_pivot[v]

    def refresh(self) -> None:
        K.refresh_products(self.prod, self._layout.row_off, self._layout.row_col, self.mu_free)

    def _sweep(self) -> None:
        L = self._layout
        self._tick = K.sweep(*L.kernel_args(self.mu_free, self.prod, self._stamp, self._tick))

    def _slope(self, k: int) -> float:
        L = self._layout
        self._tick += 1
        return K.slope_constant(k, *L.kernel_args(self.mu_free, self.prod, self._stamp, self._tick))

    def _update(self, k: int) -> float:
        L = self._layout
        self._tick += 1
        return K.update(k, *L.kernel_args(self.mu_free, self.prod, self._stamp, self._tick))


def _check_var(state: MarginalState, v: int) -> int:
    v = int(v)
    if not 0 <= v < state.cs.n:
        raise ValueError(f"variable {v} out of range")
    return v


def constrained_singleton(state: MarginalState, k: int) -> float:
    """Marginal of pivot ``k``: ``(1 - (1 - 2 b_l) prod_i (1 - 2 C_li mu_i)) / 2``."""
    k = _check_var(state, k)
    if state.is_free(k):
        raise ValueError(f"variable {k} is free, not a pivot")
    L = state._layout
    return float(K.singleton(k, L.is_pivot, L.pos, L.sgn, state.prod, state.mu_free))


def constrained_pairwise(state: MarginalState, k: int, l: int) -> float:
    """``E_q[x_k x_l]`` under the projected product distribution."""
    k, l = _check_var(state, k), _check_var(state, l)
    if k == l:
        raise ValueError("pairwise marginal needs two distinct variables")
    L = state._layout
    value = K.pairwise(k, l, L.is_pivot, L.pos, L.cf, L.sgn, state.prod, L.row_off, L.row_col, state.mu_free)
    # Rounding can step just outside the Frechet bounds; the ascent never uses this path.
    marg = state.marginals()
    mk, ml = marg[k], marg[l]
    return float(min(max(value, mk + ml - 1.0, 0.0), mk, ml))


def projected_elbo(model: PairwiseModel, state: MarginalState) -> float:
    if model is not state.model and model != state.model:
        raise ValueError("state was built for a different model")
    return float(state._layout.objective(state.mu_free, state.prod))


def coordinate_constant(state: MarginalState, k: int) -> float:
    """The part of ``d objective / d mu_k`` that does not depend on ``mu_k``.

    The full derivative is this constant plus ``log((1 - mu_k) / mu_k)``.
    """
    k = _check_var(state, k)
    if not state.is_free(k):
        raise ValueError(f"variable {k} is a pivot; only free marginals are updated")
    return float(state._slope(int(state._layout.pos[k])))


def coordinate_update(model: PairwiseModel, state: MarginalState, k: int) -> MarginalState:
    """Return a copy of ``state`` with free marginal ``k`` set to its coordinate optimum."""
    if model is not state.model and model != state.model:
        raise ValueError("state was built for a different model")
    k = _check_var(state, k)
    if not state.is_free(k):
        raise ValueError(f"variable {k} is a pivot; only free marginals are updated")
    out = state.copy()
    out._update(int(state._layout.pos[k]))
    return out


@dataclass
class SolveResult:
    state: MarginalState
    elbo: float
    sweeps: int
    converged: bool


def ascend(state: MarginalState, tol: float = 1e-8, max_sweeps: int = 1000, timeout: float | None = None) -> SolveResult:
    """Coordinate ascent in place until a sweep gains less than ``tol``."""
    deadline = None if timeout is None else time.perf_counter() + timeout
    value = state._layout.objective(state.mu_free, state.prod)
    sweeps, converged = 0, False
    while sweeps < max_sweeps:
        state._sweep()
        sweeps += 1
        new = state._layout.objective(state.mu_free, state.prod)
        gain, value = new - value, new
        if gain < tol:
            converged = True
            break
        if deadline is not None and time.perf_counter() > deadline:
            break
    return SolveResult(state, float(value), sweeps, converged)


@dataclass
class ProjectionEstimate:
    """Outcome of the T projections at one constraint level ``m``.

    ``log_gamma[t]`` is the best projected bound over the restarts for
    projection ``t`` (``-inf`` if its system was inconsistent) and
    ``ranks[t]`` the rank it was rescaled by.
    """

    m: int
    log_gamma: np.ndarray
    ranks: np.ndarray
    aggregate_log: float
    mean_log: float
    states: list = field(repr=False)
    wall_time: float = 0.0
    sweeps: int = 0

    @property
    def rescaled(self) -> np.ndarray:
        return self.log_gamma + self.ranks * LOG2

    @property
    def T(self) -> int:
        return self.log_gamma.shape[0]


def solve_projection(model, cs, J, seed, key, tol=1e-8, max_sweeps=1000, timeout=None) -> SolveResult | None:
    """Best of ``J`` uniform-random restarts on one reduced system."""
    if not cs.consistent:
        return None
    layout = _Layout(model, cs)
    best = None
    sweeps = 0
    for j in range(J):
        init = stream(seed, "init", *key, j).uniform(size=cs.n - cs.rank)
        res = ascend(MarginalState(model, cs, init, _layout=layout), tol, max_sweeps, timeout)
        sweeps += res.sweeps
        if best is None or res.elbo > best.elbo:
            best = res
    best.sweeps = sweeps
    return best


def mfrp_run(
    model: PairwiseModel,
    m: int,
    T: int = 5,
    J: int = 10,
    tol: float = 1e-8,
    max_sweeps: int = 1000,
    timeout: float | None = None,
    seed: int = 0,
) -> ProjectionEstimate:
    """T random projections with ``m`` parity constraints each.

    The aggregate is the median over projections of the best bound,
    rescaled by ``2**rank`` (``rank == m`` unless the sampled matrix is
    rank deficient); the mean aggregate is kept alongside.
    """
    if not 0 <= m <= model.n:
        raise ValueError(f"m={m} outside [0, {model.n}]")
    if T < 1 or J < 1:
        raise ValueError("T and J must be at least 1")
    start = time.perf_counter()
    log_gamma = np.empty(T)
    ranks = np.empty(T, dtype=np.int64)
    states = []
    sweeps = 0
    best = None
    for t in range(T):
        A, b = sample_projection(model.n, m, stream(seed, "proj", m, t))
        cs = rref_mod2(A, b)
        # m = 0 projects onto the same vacuous system every time; solve it once.
        if m > 0 or t == 0:
            best = solve_projection(model, cs, J, seed, (m, t), tol, max_sweeps, timeout)
        ranks[t] = cs.rank
        if best is None:
            log_gamma[t] = -math.inf
            states.append(None)
        else:
            log_gamma[t] = best.elbo
            states.append(best.state)
            sweeps += best.sweeps
    rescaled = log_gamma + ranks * LOG2
    return ProjectionEstimate(
        m=m,
        log_gamma=log_gamma,
        ranks=ranks,
        aggregate_log=log_median(rescaled),
        mean_log=float(logsumexp(rescaled) - math.log(T)),
        states=states,
        wall_time=time.perf_counter() - start,
        sweeps=sweeps,
    )


def mfrp_sweep(model: PairwiseModel, m_values, T=5, J=10, tol=1e-8, max_sweeps=1000, timeout=None, seed=0):
    """Run every level in ``m_values``; return ``(best, curve)``."""
    m_values = list(m_values)
    if not m_values:
        raise ValueError("m_values must be non-empty")
    curve = [mfrp_run(model, m, T, J, tol, max_sweeps, timeout, seed) for m in m_values]
    best = max(curve, key=lambda est: est.aggregate_log)
    return best, curve


def aggregate_marginals(model: PairwiseModel, runs, rule: str = "mean") -> np.ndarray:
    """Combine the full singleton marginals of each run's best state.

    ``runs`` is a list of states or a :class:`ProjectionEstimate`;
    projections with an empty domain are skipped. ``rule`` is ``"mean"``
    (unweighted, the default), ``"median"`` (per variable) or ``"gamma"``
    (weights proportional to each run's rescaled bound; needs a
    :class:`ProjectionEstimate`).
    """
    if rule not in ("mean", "median", "gamma"):
        raise ValueError(f"unknown aggregation rule {rule!r}")
    if rule == "gamma" and not isinstance(runs, ProjectionEstimate):
        raise ValueError("gamma weighting needs a ProjectionEstimate")
    logw = runs.rescaled if isinstance(runs, ProjectionEstimate) else None
    states = runs.states if isinstance(runs, ProjectionEstimate) else list(runs)
    keep = [t for t, s in enumerate(states) if s is not None]
    if not keep:
        raise ValueError("no run with a non-empty domain to aggregate")
    vectors = np.array([states[t].marginals() for t in keep])
    if vectors.shape[1] != model.n:
        raise ValueError("run does not match the model size")
    if rule == "median":
        return np.median(vectors, axis=0)
    if rule == "gamma":
        w = np.exp(logw[keep] - np.max(logw[keep]))
        return w @ vectors / w.sum()
    return vectors.mean(axis=0)


def initial_state(model: PairwiseModel, cs: ConstraintSystem | None = None, mu_free=None, rng=None) -> MarginalState:
    """Convenience constructor; defaults to no constraints and uniform-random marginals."""
    cs = empty_system(model.n) if cs is None else cs
    if mu_free is None:
        mu_free = np.random.default_rng(rng).uniform(size=cs.n - cs.rank)
    return MarginalState(model, cs, mu_free)
