"""Dense GF(2) linear algebra for random parity-constraint systems.

Rows are stored as packed bit vectors (Python ints, bit ``j`` is column
``j``) so that row XOR is word-wise.  A sampled system ``A x = b (mod 2)``
is reduced to ``C x' = b'`` where ``x' = x[perm]`` and the first ``rank``
columns of ``C`` form the identity: the pivot variables ``perm[:rank]`` are
determined by the free variables ``perm[rank:]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainEmptyError


def _pack(bits) -> int:
    word = 0
    for j, bit in enumerate(bits):
        if bit:
            word |= 1 << j
    return word


@dataclass(frozen=True)
class Gf2Matrix:
    """Binary matrix with packed rows."""

    rows: int
    cols: int
    bits: tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.bits) != self.rows:
            raise ValueError(f"expected {self.rows} packed rows, got {len(self.bits)}")
        limit = 1 << self.cols
        for word in self.bits:
            if word < 0 or word >= limit:
                raise ValueError("row has bits outside the column range")

    @classmethod
    def from_array(cls, array) -> Gf2Matrix:
        arr = np.asarray(array)
        if arr.ndim != 2:
            raise ValueError("expected a 2-D array")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("entries must be 0 or 1")
        return cls(arr.shape[0], arr.shape[1], tuple(_pack(row) for row in arr))

    def to_array(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols), dtype=np.uint8)
        for i, word in enumerate(self.bits):
            for j in range(self.cols):
                out[i, j] = (word >> j) & 1
        return out

    def __getitem__(self, index: tuple[int, int]) -> int:
        i, j = index
        return (self.bits[i] >> j) & 1

    def xor_rows(self, target: int, source: int) -> Gf2Matrix:
        bits = list(self.bits)
        bits[target] ^= bits[source]
        return Gf2Matrix(self.rows, self.cols, tuple(bits))

    def swap_rows(self, i: int, j: int) -> Gf2Matrix:
        bits = list(self.bits)
        bits[i], bits[j] = bits[j], bits[i]
        return Gf2Matrix(self.rows, self.cols, tuple(bits))

    def matvec(self, x) -> np.ndarray:
        """Return ``self @ x (mod 2)`` for a 0/1 vector ``x``."""
        word = _pack(x)
        return np.array([(row & word).bit_count() & 1 for row in self.bits], dtype=np.uint8)


@dataclass(frozen=True)
class ConstraintSystem:
    """Row-reduced parity constraints ``C x[perm] = b (mod 2)``.

    ``C`` holds only the ``rank`` independent rows; ``consistent`` is False
    when elimination produced a row ``0 = 1``.
    """

    m: int
    n: int
    C: Gf2Matrix
    b: tuple[int, ...]
    perm: tuple[int, ...]
    rank: int
    consistent: bool

    @property
    def pivots(self) -> np.ndarray:
        """Original indices of the constrained (pivot) variables, one per row."""
        return np.asarray(self.perm[: self.rank], dtype=np.int64)

    @property
    def free(self) -> np.ndarray:
        """Original indices of the free variables, in reduced-column order."""
        return np.asarray(self.perm[self.rank :], dtype=np.int64)

    @cached_property
    def free_block(self) -> np.ndarray:
        """The ``A'`` block of ``C = [I | A']`` as a ``rank x (n - rank)`` uint8 array."""
        full = self.C.to_array()
        out = np.ascontiguousarray(full[:, self.rank :])
        out.setflags(write=False)
        return out

    @cached_property
    def b_array(self) -> np.ndarray:
        out = np.asarray(self.b, dtype=np.uint8)
        out.setflags(write=False)
        return out

    def pivot_values(self, free_values: np.ndarray) -> np.ndarray:
        """Pivot assignments forced by free assignments (rows of ``free_values``)."""
        free_values = np.asarray(free_values, dtype=np.int64)
        return ((free_values @ self.free_block.T.astype(np.int64)) + self.b_array) & 1

    def assemble(self, free_values: np.ndarray) -> np.ndarray:
        """Full assignments (original variable order) from free assignments."""
        free_values = np.atleast_2d(np.asarray(free_values, dtype=np.uint8))
        out = np.empty((free_values.shape[0], self.n), dtype=np.uint8)
        out[:, self.free] = free_values
        out[:, self.pivots] = self.pivot_values(free_values)
        return out


def sample_projection(n: int, m: int, rng: np.random.Generator) -> tuple[Gf2Matrix, np.ndarray]:
    """Draw ``A`` (m x n) and ``b`` (m) with iid fair bits.

    ``b`` is drawn before ``A``.
    """
    if m < 0 or n < 0:
        raise ValueError("m and n must be non-negative")
    if m > n:
        raise ValueError(f"cannot impose m={m} constraints on n={n} variables")
    b = rng.integers(0, 2, size=m, dtype=np.uint8)
    A = rng.integers(0, 2, size=(m, n), dtype=np.uint8)
    return Gf2Matrix.from_array(A), b


def rref_mod2(A: Gf2Matrix, b) -> ConstraintSystem:
    """Gauss-Jordan elimination over GF(2) with column pivoting.

    Pivot columns are taken left to right; the permutation lists pivot
    columns first (in row order) followed by the remaining columns in
    increasing order.
    """
    b = [int(v) for v in np.asarray(b).reshape(-1)]
    if len(b) != A.rows:
        raise ValueError(f"b has length {len(b)} but A has {A.rows} rows")
    if any(v not in (0, 1) for v in b):
        raise ValueError("b entries must be 0 or 1")

    rows = list(A.bits)
    rhs = list(b)
    pivot_cols: list[int] = []
    r = 0
    for col in range(A.cols):
        if r == len(rows):
            break
        bit = 1 << col
        found = next((i for i in range(r, len(rows)) if rows[i] & bit), -1)
        if found < 0:
            continue
        rows[r], rows[found] = rows[found], rows[r]
        rhs[r], rhs[found] = rhs[found], rhs[r]
        for i in range(len(rows)):
            if i != r and rows[i] & bit:
                rows[i] ^= rows[r]
                rhs[i] ^= rhs[r]
        pivot_cols.append(col)
        r += 1

    consistent = not any(rhs[i] for i in range(r, len(rows)))
    pivot_set = set(pivot_cols)
    perm = tuple(pivot_cols + [j for j in range(A.cols) if j not in pivot_set])

    permuted = []
    for word in rows[:r]:
        packed = 0
        for new_j, old_j in enumerate(perm):
            if (word >> old_j) & 1:
                packed |= 1 << new_j
        permuted.append(packed)

    return ConstraintSystem(
        m=A.rows,
        n=A.cols,
        C=Gf2Matrix(r, A.cols, tuple(permuted)),
        b=tuple(rhs[:r]),
        perm=perm,
        rank=r,
        consistent=consistent,
    )


def empty_system(n: int) -> ConstraintSystem:
    """The vacuous system (no constraints) on ``n`` variables."""
    return rref_mod2(Gf2Matrix(0, n, ()), [])


def member(cs: ConstraintSystem, x) -> bool:
    """True iff ``x`` satisfies every constraint of ``cs``."""
    if not cs.consistent:
        raise DomainEmptyError("constraint system is inconsistent")
    x = np.asarray(x).reshape(-1)
    if x.shape[0] != cs.n:
        raise ValueError(f"x has length {x.shape[0]}, expected {cs.n}")
    permuted = x[list(cs.perm)]
    return bool(np.array_equal(cs.C.matvec(permuted), cs.b_array))


def count_solutions(cs: ConstraintSystem) -> int:
    if not cs.consistent:
        return 0
    return 1 << (cs.n - cs.rank)
