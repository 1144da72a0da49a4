"""Compiled inner loops for constrained mean field.

Layout conventions shared by every kernel:

* variable ``v`` is a pivot iff ``is_pivot[v]``; ``pos[v]`` is then its
  constraint row, otherwise its position in the free vector ``mu``;
* ``cf[l, i]`` is the ``A'`` block of the reduced system and ``sgn[l]`` is
  ``1 - 2 b_l``;
* ``row_off/row_col`` list the free positions with ``cf[l, i] = 1`` and
  ``col_off/col_row`` list the rows containing free position ``i``;
* ``prod[l]`` caches ``prod_i (1 - 2 cf[l, i] mu_i)``.

With no constraints every variable is free and ``pos`` is the identity.
"""

import math

import numpy as np
from numba import njit

EPS = 1e-12


@njit(cache=True)
def clamp(p):
    if p < EPS:
        return EPS
    if p > 1.0 - EPS:
        return 1.0 - EPS
    return p


@njit(cache=True)
def entropy(p):
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)


@njit(cache=True)
def sigmoid(c):
    return 1.0 / (1.0 + math.exp(-c))


@njit(cache=True)
def row_residual(l, skip_a, skip_b, row_off, row_col, mu):
    """Product over the support of row ``l`` excluding two free positions."""
    out = 1.0
    for q in range(row_off[l], row_off[l + 1]):
        i = row_col[q]
        if i != skip_a and i != skip_b:
            out *= 1.0 - 2.0 * mu[i]
    return out


@njit(cache=True)
def pair_residual(p, l, skip, cf, mu):
    """``prod_{i != skip} (1 - mu_i (2C_pi + 2C_li - 4C_pi C_li))``."""
    out = 1.0
    for i in range(mu.shape[0]):
        if i != skip and cf[p, i] != cf[l, i]:
            out *= 1.0 - 2.0 * mu[i]
    return out


@njit(cache=True)
def refresh_products(prod, row_off, row_col, mu):
    for l in range(prod.shape[0]):
        prod[l] = row_residual(l, -1, -1, row_off, row_col, mu)


@njit(cache=True)
def singleton(v, is_pivot, pos, sgn, prod, mu):
    if is_pivot[v]:
        l = pos[v]
        return 0.5 * (1.0 - sgn[l] * prod[l])
    return mu[pos[v]]


@njit(cache=True)
def pairwise(u, v, is_pivot, pos, cf, sgn, prod, row_off, row_col, mu):
    if not is_pivot[u] and not is_pivot[v]:
        return mu[pos[u]] * mu[pos[v]]
    if is_pivot[u] and is_pivot[v]:
        p, l = pos[u], pos[v]
        return 0.25 * (
            1.0
            + sgn[p] * sgn[l] * pair_residual(p, l, -1, cf, mu)
            - sgn[p] * prod[p]
            - sgn[l] * prod[l]
        )
    if is_pivot[u]:
        u, v = v, u
    k, l = pos[u], pos[v]
    if cf[l, k]:
        return mu[k] * 0.5 * (1.0 + sgn[l] * row_residual(l, k, -1, row_off, row_col, mu))
    return mu[k] * 0.5 * (1.0 - sgn[l] * prod[l])


@njit(cache=True)
def objective(unary, const, ei, ej, ew, is_pivot, pos, cf, sgn, prod, row_off, row_col, mu):
    """``theta . mu`` plus the entropy of the free marginals."""
    total = const
    for v in range(unary.shape[0]):
        total += unary[v] * singleton(v, is_pivot, pos, sgn, prod, mu)
    for e in range(ew.shape[0]):
        total += ew[e] * pairwise(ei[e], ej[e], is_pivot, pos, cf, sgn, prod, row_off, row_col, mu)
    for i in range(mu.shape[0]):
        total += entropy(mu[i])
    return total


@njit(cache=True)
def _edge_slope(a, b, k, is_pivot, pos, cf, sgn, prod, row_off, row_col, mu):
    """Derivative of the pairwise marginal of edge (a, b) in free marginal ``k``."""
    if not is_pivot[a] and not is_pivot[b]:
        if pos[a] == k:
            return mu[pos[b]]
        if pos[b] == k:
            return mu[pos[a]]
        return 0.0
    if is_pivot[a] and is_pivot[b]:
        p, l = pos[a], pos[b]
        slope = 0.0
        if cf[p, k]:
            slope += 0.5 * sgn[p] * row_residual(p, k, -1, row_off, row_col, mu)
        if cf[l, k]:
            slope += 0.5 * sgn[l] * row_residual(l, k, -1, row_off, row_col, mu)
        if cf[p, k] != cf[l, k]:
            slope -= 0.5 * sgn[p] * sgn[l] * pair_residual(p, l, k, cf, mu)
        return slope
    if is_pivot[a]:
        a, b = b, a
    q, l = pos[a], pos[b]
    if q == k:
        if cf[l, k]:
            return 0.5 * (1.0 + sgn[l] * row_residual(l, k, -1, row_off, row_col, mu))
        return 0.5 * (1.0 - sgn[l] * prod[l])
    if not cf[l, k]:
        return 0.0
    if cf[l, q]:
        return -mu[q] * sgn[l] * row_residual(l, k, q, row_off, row_col, mu)
    return mu[q] * sgn[l] * row_residual(l, k, -1, row_off, row_col, mu)


@njit(cache=True)
def slope_constant(
    k, unary, free_var, row_var, nb_off, nb_eid, ei, ej, ew,
    is_pivot, pos, cf, sgn, prod, row_off, row_col, col_off, col_row, mu, stamp, tick,
):
    """Slope of the objective in ``mu[k]``, minus the entropy term.

    Only terms that can depend on ``mu[k]`` are visited: the unary and
    edges of ``k`` itself and of the pivots whose row contains ``k``.
    ``stamp``/``tick`` keep an edge from being counted twice.
    """
    vk = free_var[k]
    c = unary[vk]
    for q in range(col_off[k], col_off[k + 1]):
        l = col_row[q]
        c += unary[row_var[l]] * sgn[l] * row_residual(l, k, -1, row_off, row_col, mu)
    for q in range(nb_off[vk], nb_off[vk + 1]):
        e = nb_eid[q]
        stamp[e] = tick
        c += ew[e] * _edge_slope(ei[e], ej[e], k, is_pivot, pos, cf, sgn, prod, row_off, row_col, mu)
    for q in range(col_off[k], col_off[k + 1]):
        w = row_var[col_row[q]]
        for s in range(nb_off[w], nb_off[w + 1]):
            e = nb_eid[s]
            if stamp[e] == tick:
                continue
            stamp[e] = tick
            c += ew[e] * _edge_slope(ei[e], ej[e], k, is_pivot, pos, cf, sgn, prod, row_off, row_col, mu)
    return c


@njit(cache=True)
def update(
    k, unary, free_var, row_var, nb_off, nb_eid, ei, ej, ew,
    is_pivot, pos, cf, sgn, prod, row_off, row_col, col_off, col_row, mu, stamp, tick,
):
    """Exact maximization over ``mu[k]``; refreshes the affected row products."""
    c = slope_constant(
        k, unary, free_var, row_var, nb_off, nb_eid, ei, ej, ew,
        is_pivot, pos, cf, sgn, prod, row_off, row_col, col_off, col_row, mu, stamp, tick,
    )
    mu[k] = clamp(sigmoid(c))
    for q in range(col_off[k], col_off[k + 1]):
        l = col_row[q]
        prod[l] = row_residual(l, -1, -1, row_off, row_col, mu)
    return c


@njit(cache=True)
def sweep(
    unary, free_var, row_var, nb_off, nb_eid, ei, ej, ew,
    is_pivot, pos, cf, sgn, prod, row_off, row_col, col_off, col_row, mu, stamp, tick,
):
    """One pass over the free coordinates in order; returns the next tick."""
    for k in range(mu.shape[0]):
        update(
            k, unary, free_var, row_var, nb_off, nb_eid, ei, ej, ew,
            is_pivot, pos, cf, sgn, prod, row_off, row_col, col_off, col_row, mu, stamp, tick,
        )
        tick += 1
    return tick


@njit(cache=True)
def mf_sweep(unary, nb_off, nb_var, nb_eid, ew, mu):
    """Plain mean-field pass: ``mu_k <- sigmoid(theta_k + sum_j theta_kj mu_j)``."""
    for k in range(mu.shape[0]):
        c = unary[k]
        for q in range(nb_off[k], nb_off[k + 1]):
            c += ew[nb_eid[q]] * mu[nb_var[q]]
        mu[k] = clamp(sigmoid(c))


@njit(cache=True)
def mf_elbo(unary, const, ei, ej, ew, mu):
    total = const
    for v in range(unary.shape[0]):
        total += unary[v] * mu[v]
    for e in range(ew.shape[0]):
        total += ew[e] * (mu[ei[e]] * mu[ej[e]])
    for v in range(mu.shape[0]):
        total += entropy(mu[v])
    return total


def support_lists(cf: np.ndarray):
    """CSR row supports and column supports of a 0/1 matrix."""
    r, f = cf.shape
    rows, cols = np.nonzero(cf)
    row_off = np.zeros(r + 1, dtype=np.int64)
    np.add.at(row_off, rows + 1, 1)
    order = np.lexsort((rows, cols))
    col_off = np.zeros(f + 1, dtype=np.int64)
    np.add.at(col_off, cols + 1, 1)
    return (
        np.cumsum(row_off),
        cols.astype(np.int64),
        np.cumsum(col_off),
        rows[order].astype(np.int64),
    )
