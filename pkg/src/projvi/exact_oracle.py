"""Brute-force ground truth for small models.

Everything here enumerates assignments of the free variables of a
(possibly empty) parity system in fixed-size blocks and accumulates in the
log domain, so ``|theta . phi|`` in the hundreds does not overflow.  Free
assignments are visited in lexicographic order (first free variable most
significant), which is what the MAP tie-break relies on.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from ._rng import stream
from .errors import DomainEmptyError, EnumerationCapError
from .gf2_linalg import ConstraintSystem, empty_system, rref_mod2, sample_projection
from .model import PairwiseModel, energies

ENUMERATION_CAP = 25
_BLOCK_BITS = 14


@lru_cache(maxsize=None)
def _lex_patterns(bits: int) -> np.ndarray:
    """All ``2**bits`` 0/1 rows in lexicographic order."""
    codes = np.arange(1 << bits, dtype=np.int64)
    shifts = np.arange(bits - 1, -1, -1, dtype=np.int64)
    out = ((codes[:, None] >> shifts) & 1).astype(np.uint8)
    out.setflags(write=False)
    return out


def _check_cap(n: int, cap: int | None) -> None:
    cap = ENUMERATION_CAP if cap is None else cap
    if n > cap:
        raise EnumerationCapError(f"n={n} exceeds the enumeration cap of {cap} variables")


def _blocks(cs: ConstraintSystem):
    """Yield blocks of full assignments satisfying ``cs``."""
    f = cs.n - cs.rank
    low = min(f, _BLOCK_BITS)
    high = f - low
    tail = _lex_patterns(low)
    head_patterns = _lex_patterns(high)
    for h in range(1 << high):
        free = np.empty((tail.shape[0], f), dtype=np.uint8)
        free[:, :high] = head_patterns[h]
        free[:, high:] = tail
        yield cs.assemble(free)


def exact_constrained_log_z(model: PairwiseModel, cs: ConstraintSystem, cap: int | None = None) -> float:
    """``log Z(A, b)``; ``-inf`` for an inconsistent system."""
    if cs.n != model.n:
        raise ValueError(f"system has {cs.n} variables, model has {model.n}")
    _check_cap(model.n, cap)
    if not cs.consistent:
        return -math.inf
    total = -math.inf
    for X in _blocks(cs):
        total = np.logaddexp(total, logsumexp(energies(model, X)))
    return float(total)


def exact_log_z(model: PairwiseModel, cap: int | None = None) -> float:
    return exact_constrained_log_z(model, empty_system(model.n), cap)


def constrained_map(model: PairwiseModel, cs: ConstraintSystem, cap: int | None = None) -> tuple[np.ndarray, float]:
    """Maximizer of ``theta . phi`` on ``{x : Ax = b}``.

    Ties go to the lexicographically smallest free-variable assignment.
    """
    if cs.n != model.n:
        raise ValueError(f"system has {cs.n} variables, model has {model.n}")
    _check_cap(model.n, cap)
    if not cs.consistent:
        raise DomainEmptyError("constraint system is inconsistent")
    best_x, best = None, -math.inf
    for X in _blocks(cs):
        e = energies(model, X)
        k = int(np.argmax(e))
        if best_x is None or e[k] > best:
            best_x, best = X[k].copy(), float(e[k])
    return best_x, best


def exact_marginals(model: PairwiseModel, cap: int | None = None) -> np.ndarray:
    """Exact ``P(x_i = 1)`` for every variable."""
    _check_cap(model.n, cap)
    log_total = -math.inf
    log_on = np.full(model.n, -math.inf)
    with np.errstate(divide="ignore"):
        for X in _blocks(empty_system(model.n)):
            e = energies(model, X)
            top = e.max()
            w = np.exp(e - top)
            log_total = np.logaddexp(log_total, math.log(w.sum()) + top)
            log_on = np.logaddexp(log_on, np.log(w @ X) + top)
    return np.exp(log_on - log_total)


@dataclass(frozen=True)
class WishConfig:
    T: int
    delta: float = 0.1
    alpha: float = 0.0042
    seed: int = 0

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be at least 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not 0 < self.alpha <= 0.0042:
            raise ValueError("alpha must lie in (0, 0.0042]")


def required_trials(n: int, delta: float, alpha: float = 0.0042) -> int:
    """Smallest ``T`` with ``T >= log(n / delta) / alpha``."""
    return max(1, math.ceil(math.log(n / delta) / alpha))


def log_median(values) -> float:
    """Log of the median of ``exp(values)``; even counts average the middle pair."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    mid = v.shape[0] // 2
    if v.shape[0] % 2:
        return float(v[mid])
    return float(np.logaddexp(v[mid - 1], v[mid]) - math.log(2.0))


def wish_level_maxima(model: PairwiseModel, cfg: WishConfig, cap: int | None = None) -> np.ndarray:
    """``(n + 1, T)`` array of constrained MAP values, ``-inf`` where the system is empty."""
    _check_cap(model.n, cap)
    out = np.empty((model.n + 1, cfg.T))
    for i in range(model.n + 1):
        for t in range(cfg.T):
            A, b = sample_projection(model.n, i, stream(cfg.seed, "wish", i, t))
            cs = rref_mod2(A, b)
            out[i, t] = constrained_map(model, cs, cap)[1] if cs.consistent else -math.inf
    return out


def wish_estimate(model: PairwiseModel, cfg: WishConfig, cap: int | None = None) -> float:
    """Log of ``sum_i exp(median_t max_{Ax=b} theta . phi) 2^(i-1)``.

    Each ``(i, t)`` pair gets a fresh projection.  The 32-approximation
    guarantee needs ``cfg.T >= required_trials(n, delta, alpha)``; smaller
    ``T`` runs but warns.
    """
    need = required_trials(max(model.n, 1), cfg.delta, cfg.alpha)
    if cfg.T < need:
        warnings.warn(f"T={cfg.T} is below the {need} trials the guarantee requires", stacklevel=2)
    maxima = wish_level_maxima(model, cfg, cap)
    levels = [log_median(row) + (i - 1) * math.log(2.0) for i, row in enumerate(maxima)]
    return float(logsumexp(levels))
