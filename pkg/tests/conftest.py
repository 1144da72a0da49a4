import itertools
import math
import sys

import numpy as np
import pytest

from projvi.gf2_linalg import Gf2Matrix, rref_mod2
from projvi.model import PairwiseModel


def random_model(rng, n, density=0.5, scale=1.0, const=0.0):
    unary = rng.normal(0.0, scale, size=n)
    edges = [
        (i, j, rng.normal(0.0, scale))
        for i, j in itertools.combinations(range(n), 2)
        if rng.uniform() < density
    ]
    return PairwiseModel.from_edges(n, unary, edges, const)


def random_system(rng, n, m):
    A = rng.integers(0, 2, size=(m, n))
    b = rng.integers(0, 2, size=m)
    return A, b, rref_mod2(Gf2Matrix.from_array(A), b)


def all_assignments(n):
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int64)


def brute_energy(model, x):
    """Factor-by-factor evaluation of theta . phi(x)."""
    total = model.const_offset
    for i in range(model.n):
        total += model.unary[i] * x[i]
    for i, j, w in model.edges:
        total += w * x[i] * x[j]
    return total


def brute_log_z(model, A=None, b=None):
    """log-sum-exp over all 2^n states satisfying A x = b, checked bit by bit."""
    values = []
    for x in all_assignments(model.n):
        if A is not None and len(b) and np.any((np.asarray(A) @ x) % 2 != np.asarray(b)):
            continue
        values.append(brute_energy(model, x))
    if not values:
        return -math.inf
    top = max(values)
    return top + math.log(sum(math.exp(v - top) for v in values))


def product_expectations(A, b, free, mu_free):
    """E[x] and E[x x^T] under independent free variables with the pivots forced.

    Enumerates all 2^n states, keeps those solving the original A x = b,
    and weights each by the product of its free-variable probabilities.
    """
    n = np.asarray(A).shape[1]
    q = dict(zip(free.tolist(), mu_free))
    first = np.zeros(n)
    second = np.zeros((n, n))
    for x in all_assignments(n):
        if np.asarray(A).size and np.any((np.asarray(A) @ x) % 2 != np.asarray(b)):
            continue
        w = 1.0
        for v, p in q.items():
            w *= p if x[v] else 1.0 - p
        first += w * x
        second += w * np.outer(x, x)
    return first, second


@pytest.fixture
def rng():
    return np.random.default_rng(20161016)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
