import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_assignments, random_system
from projvi.errors import DomainEmptyError
from projvi.gf2_linalg import (
    Gf2Matrix,
    count_solutions,
    empty_system,
    member,
    rref_mod2,
    sample_projection,
)


def direct_member(A, b, x):
    """Row-by-row parity check of A x = b without any reduction."""
    for row, rhs in zip(A, b):
        parity = 0
        for a, xi in zip(row, x):
            parity ^= int(a) & int(xi)
        if parity != rhs:
            return False
    return True


class TestGf2Matrix:
    def test_round_trip(self, rng):
        arr = rng.integers(0, 2, size=(5, 70))
        mat = Gf2Matrix.from_array(arr)
        assert mat.rows == 5 and mat.cols == 70
        np.testing.assert_array_equal(mat.to_array(), arr)
        assert mat[3, 69] == arr[3, 69]

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            Gf2Matrix.from_array([[0, 2]])
        with pytest.raises(ValueError):
            Gf2Matrix(1, 2, (4,))

    def test_row_ops_preserve_shape(self, rng):
        mat = Gf2Matrix.from_array(rng.integers(0, 2, size=(4, 9)))
        arr = mat.to_array()
        xored = mat.xor_rows(0, 2)
        swapped = mat.swap_rows(1, 3)
        assert (xored.rows, xored.cols) == (swapped.rows, swapped.cols) == (4, 9)
        np.testing.assert_array_equal(xored.to_array()[0], arr[0] ^ arr[2])
        np.testing.assert_array_equal(swapped.to_array()[[1, 3]], arr[[3, 1]])

    def test_matvec(self, rng):
        arr = rng.integers(0, 2, size=(6, 11))
        x = rng.integers(0, 2, size=11)
        np.testing.assert_array_equal(Gf2Matrix.from_array(arr).matvec(x), (arr @ x) % 2)


class TestSampleProjection:
    def test_zero_constraints(self):
        A, b = sample_projection(4, 0, np.random.default_rng(0))
        assert (A.rows, A.cols) == (0, 4)
        assert b.shape == (0,)

    def test_deterministic(self):
        A1, b1 = sample_projection(8, 3, np.random.default_rng(7))
        A2, b2 = sample_projection(8, 3, np.random.default_rng(7))
        assert A1 == A2
        np.testing.assert_array_equal(b1, b2)

    def test_too_many_constraints(self):
        with pytest.raises(ValueError):
            sample_projection(3, 4, np.random.default_rng(0))

    def test_fair_bits(self):
        total = 0
        for seed in range(10000):
            A, _ = sample_projection(32, 16, np.random.default_rng(seed))
            total += sum(w.bit_count() for w in A.bits)
        mean = total / (10000 * 32 * 16)
        assert 0.49 <= mean <= 0.51


class TestRref:
    def test_example(self):
        cs = rref_mod2(Gf2Matrix.from_array([[1, 1], [0, 1]]), [1, 0])
        np.testing.assert_array_equal(cs.C.to_array(), [[1, 0], [0, 1]])
        assert cs.b == (1, 0)
        assert cs.rank == 2 and cs.perm == (0, 1) and cs.consistent

    def test_contradiction(self):
        cs = rref_mod2(Gf2Matrix.from_array([[1, 1], [1, 1]]), [0, 1])
        assert not cs.consistent
        assert cs.rank == 1

    def test_vacuous_row(self):
        cs = rref_mod2(Gf2Matrix.from_array([[0, 0]]), [0])
        assert cs.rank == 0 and cs.consistent and cs.m == 1
        assert cs.C.rows == 0
        assert count_solutions(cs) == 4

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            rref_mod2(Gf2Matrix.from_array([[1, 0]]), [0, 1])

    def test_identity_block_and_permutation(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 12))
            _, _, cs = random_system(rng, n, int(rng.integers(0, n + 1)))
            C = cs.C.to_array()
            np.testing.assert_array_equal(C[:, : cs.rank], np.eye(cs.rank, dtype=np.uint8))
            assert sorted(cs.perm) == list(range(cs.n))

    def test_idempotent(self, rng):
        for _ in range(50):
            _, _, cs = random_system(rng, 10, int(rng.integers(0, 8)))
            if not cs.consistent:
                continue
            again = rref_mod2(cs.C, cs.b)
            assert again.C == cs.C and again.b == cs.b
            assert again.perm == tuple(range(cs.n))

    def test_same_solution_set(self, rng):
        for _ in range(30):
            A, b, cs = random_system(rng, 8, int(rng.integers(0, 6)))
            if not cs.consistent:
                assert not any(direct_member(A, b, x) for x in all_assignments(8))
                continue
            for x in all_assignments(8):
                assert member(cs, x) == direct_member(A, b, x)


class TestMembership:
    def test_examples(self):
        cs = rref_mod2(Gf2Matrix.from_array([[1, 1]]), [0])
        assert member(cs, [0, 0])
        assert not member(cs, [1, 0])

    def test_inconsistent_raises(self):
        cs = rref_mod2(Gf2Matrix.from_array([[1, 1], [1, 1]]), [0, 1])
        with pytest.raises(DomainEmptyError):
            member(cs, [0, 0])

    def test_member_count_matches_rank(self, rng):
        for _ in range(10):
            _, _, cs = random_system(rng, 10, 4)
            if not cs.consistent:
                continue
            hits = sum(member(cs, x) for x in all_assignments(10))
            assert hits == 2 ** (10 - cs.rank) == count_solutions(cs)

    def test_count_solutions(self):
        full = rref_mod2(Gf2Matrix.from_array(np.eye(5, dtype=int)), [1, 0, 1, 1, 0])
        assert count_solutions(full) == 1
        bad = rref_mod2(Gf2Matrix.from_array([[1, 0, 0, 0, 0]] * 2), [0, 1])
        assert count_solutions(bad) == 0

    def test_count_matches_enumeration_n12(self, rng):
        done = 0
        while done < 3:
            A, b, cs = random_system(rng, 12, 7)
            if not cs.consistent:
                continue
            hits = sum(direct_member(A, b, x) for x in all_assignments(12))
            assert count_solutions(cs) == hits
            done += 1

    def test_empty_system(self):
        cs = empty_system(3)
        assert cs.rank == 0 and cs.perm == (0, 1, 2)
        assert all(member(cs, x) for x in all_assignments(3))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 9), st.integers(0, 5), st.integers(0, 2**32 - 1))
def test_member_agrees_with_direct_evaluation(n, m, seed):
    m = min(m, n)
    rng = np.random.default_rng(seed)
    A, b, cs = random_system(rng, n, m)
    if not cs.consistent:
        return
    for x in all_assignments(n):
        assert member(cs, x) == direct_member(A, b, x)


def test_partition_over_all_right_hand_sides(rng):
    for n, m in [(6, 3), (9, 4), (12, 5)]:
        A = rng.integers(0, 2, size=(m, n))
        mat = Gf2Matrix.from_array(A)
        counts = np.zeros(2**n, dtype=int)
        X = all_assignments(n)
        for b in itertools.product((0, 1), repeat=m):
            cs = rref_mod2(mat, b)
            if not cs.consistent:
                continue
            counts += np.array([member(cs, x) for x in X]) if n <= 9 else cs_members(cs, X)
        assert np.all(counts == 1)


def cs_members(cs, X):
    permuted = X[:, list(cs.perm)]
    return np.all((permuted @ cs.C.to_array().T.astype(np.int64)) % 2 == np.array(cs.b), axis=1).astype(int)
