"""Fully factored mean field: the unconstrained baseline."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from ._rng import stream
from .model import PairwiseModel


@dataclass
class MfState:
    mu: np.ndarray
    elbo: float
    iterations: int
    converged: bool


def _check_mu(model: PairwiseModel, mu) -> np.ndarray:
    mu = np.array(mu, dtype=np.float64).reshape(-1)
    if mu.shape[0] != model.n:
        raise ValueError(f"mu has length {mu.shape[0]}, expected {model.n}")
    if np.any(~np.isfinite(mu)) or np.any(mu < 0.0) or np.any(mu > 1.0):
        raise ValueError("marginals must lie in [0, 1]")
    return mu


def _elbo(model: PairwiseModel, mu: np.ndarray) -> float:
    ei = np.ascontiguousarray(model.edge_index[:, 0])
    ej = np.ascontiguousarray(model.edge_index[:, 1])
    return float(K.mf_elbo(model.unary, model.const_offset, ei, ej, model.edge_weight, mu))


def elbo(model: PairwiseModel, mu) -> float:
    """``theta . mu + sum_i H(mu_i)`` with ``mu_ij = mu_i mu_j``; a lower bound on log Z."""
    return _elbo(model, _check_mu(model, mu))


def mf_ascent(model: PairwiseModel, init_mu, tol: float = 1e-8, max_sweeps: int = 1000, timeout: float | None = None) -> MfState:
    """Index-order coordinate ascent ``mu_k <- sigmoid(theta_k + sum_j theta_kj mu_j)``.

    Stops once a full sweep improves the bound by less than ``tol``.
    """
    mu = _check_mu(model, init_mu)
    nb_off, nb_var, nb_eid = model.neighbors()
    deadline = None if timeout is None else time.perf_counter() + timeout
    value = _elbo(model, mu)
    sweeps, converged = 0, False
    while sweeps < max_sweeps:
        K.mf_sweep(model.unary, nb_off, nb_var, nb_eid, model.edge_weight, mu)
        sweeps += 1
        new = _elbo(model, mu)
        gain, value = new - value, new
        if gain < tol:
            converged = True
            break
        if deadline is not None and time.perf_counter() > deadline:
            break
    return MfState(mu, value, sweeps, converged)


def mf_estimate(model: PairwiseModel, J: int = 10, tol: float = 1e-8, max_sweeps: int = 1000, seed: int = 0, timeout: float | None = None) -> MfState:
    """Best of ``J`` ascents from uniform-random starts.

    Restart ``j`` draws its start from the same stream the projected solver
    uses for ``m = 0``, projection 0, restart ``j``.
    """
    if J < 1:
        raise ValueError("J must be at least 1")
    best = None
    for j in range(J):
        init = stream(seed, "init", 0, 0, j).uniform(size=model.n)
        res = mf_ascent(model, init, tol, max_sweeps, timeout)
        if best is None or res.elbo > best.elbo:
            best = res
    return best
