import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_assignments, brute_energy, random_model
from projvi._rng import stream
from projvi.exact_oracle import exact_log_z
from projvi.meanfield import elbo, mf_ascent, mf_estimate
from projvi.model import PairwiseModel, ising_grid


def sigmoid(t):
    return 1.0 / (1.0 + math.exp(-t))


class TestElbo:
    def test_uniform(self):
        model = PairwiseModel.from_edges(6, np.zeros(6), [])
        assert elbo(model, np.full(6, 0.5)) == pytest.approx(6 * math.log(2), abs=1e-14)

    def test_corner_is_energy(self, rng):
        model = random_model(rng, 7, const=0.4)
        for x in all_assignments(7)[::9]:
            assert elbo(model, x) == pytest.approx(brute_energy(model, x), abs=1e-12)

    def test_out_of_range(self):
        model = PairwiseModel.from_edges(2, [0, 0], [])
        with pytest.raises(ValueError):
            elbo(model, [0.5, 1.2])
        with pytest.raises(ValueError):
            elbo(model, [0.5])

    def test_matches_product_enumeration(self, rng):
        model = random_model(rng, 6)
        mu = rng.uniform(size=6)
        X = all_assignments(6)
        q = np.prod(np.where(X == 1, mu, 1 - mu), axis=1)
        energy = sum(qi * brute_energy(model, x) for qi, x in zip(q, X))
        entropy = -np.sum(q * np.log(q))
        assert elbo(model, mu) == pytest.approx(energy + entropy, abs=1e-12)

    def test_lower_bound(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 13))
            model = random_model(rng, n, scale=2.0)
            assert elbo(model, rng.uniform(size=n)) <= exact_log_z(model) + 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 10), st.floats(0.1, 5.0), st.integers(0, 2**32 - 1))
def test_elbo_never_exceeds_log_z(n, scale, seed):
    rng = np.random.default_rng(seed)
    model = random_model(rng, n, scale=scale)
    mu = rng.uniform(size=n)
    mu[rng.uniform(size=n) < 0.2] = 1.0
    assert elbo(model, mu) <= exact_log_z(model) + 1e-10


class TestAscent:
    def test_uniform_model(self, rng):
        model = PairwiseModel.from_edges(5, np.zeros(5), [])
        st_ = mf_ascent(model, rng.uniform(size=5))
        np.testing.assert_allclose(st_.mu, 0.5)
        assert st_.elbo == pytest.approx(5 * math.log(2), abs=1e-14)
        assert st_.converged and st_.iterations <= 2

    def test_single_variable_is_exact(self):
        t = -0.8
        model = PairwiseModel.from_edges(1, [t], [])
        st_ = mf_ascent(model, [0.9])
        assert st_.mu[0] == pytest.approx(sigmoid(t), abs=1e-15)
        assert st_.elbo == pytest.approx(math.log1p(math.exp(t)), abs=1e-14)
        assert st_.elbo == pytest.approx(exact_log_z(model), abs=1e-14)

    def test_grid_bounds(self):
        model = ising_grid(2, 2, rng=4)
        init = np.random.default_rng(4).uniform(size=4)
        st_ = mf_ascent(model, init)
        assert elbo(model, init) <= st_.elbo <= exact_log_z(model) + 1e-12

    def test_fixed_point(self, rng):
        model = random_model(rng, 8)
        st_ = mf_ascent(model, rng.uniform(size=8), tol=1e-14)
        for k in range(8):
            c = model.unary[k] + sum(
                w * st_.mu[j if i == k else i] for i, j, w in model.edges if k in (i, j)
            )
            assert st_.mu[k] == pytest.approx(sigmoid(c), abs=1e-6)

    def test_each_update_is_monotone(self, rng):
        model = random_model(rng, 9, scale=3.0)
        mu = rng.uniform(size=9)
        value = elbo(model, mu)
        for _ in range(5):
            for k in range(9):
                c = model.unary[k] + sum(w * mu[j if i == k else i] for i, j, w in model.edges if k in (i, j))
                mu[k] = min(max(sigmoid(c), 1e-12), 1 - 1e-12)
                new = elbo(model, mu)
                assert new >= value - 1e-12
                value = new

    def test_max_sweeps(self, rng):
        model = ising_grid(3, 3, rng=1)
        st_ = mf_ascent(model, rng.uniform(size=9), tol=-1.0, max_sweeps=3)
        assert st_.iterations == 3 and not st_.converged

    def test_clamped(self):
        model = PairwiseModel.from_edges(2, [200.0, -200.0], [])
        st_ = mf_ascent(model, [0.5, 0.5])
        assert st_.mu[0] == 1 - 1e-12 and st_.mu[1] == 1e-12
        assert math.isfinite(st_.elbo)


class TestEstimate:
    def test_single_restart(self):
        model = ising_grid(3, 3, rng=5)
        best = mf_estimate(model, J=1, seed=3)
        single = mf_ascent(model, stream(3, "init", 0, 0, 0).uniform(size=9))
        assert best.elbo == single.elbo
        np.testing.assert_array_equal(best.mu, single.mu)

    def test_more_restarts_never_worse(self):
        model = ising_grid(4, 4, rng=6)
        assert mf_estimate(model, J=10, seed=8).elbo >= mf_estimate(model, J=1, seed=8).elbo

    def test_deterministic(self):
        model = ising_grid(3, 3, rng=5)
        assert mf_estimate(model, J=4, seed=2).elbo == mf_estimate(model, J=4, seed=2).elbo

    def test_lower_bound_on_mixed_grid(self):
        model = ising_grid(3, 3, rng=21)
        assert mf_estimate(model, J=20, seed=1).elbo <= exact_log_z(model)

    def test_rejects_zero_restarts(self):
        with pytest.raises(ValueError):
            mf_estimate(ising_grid(2, 2, rng=0), J=0)
