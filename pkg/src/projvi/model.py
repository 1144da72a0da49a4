"""Binary pairwise exponential-family models.

A model assigns an unnormalized log-mass

    theta . phi(x) = sum_i u_i x_i + sum_(i,j) w_ij x_i x_j + const

to every ``x`` in ``{0, 1}^n``.  Spin (+/-1) models enter through
:func:`spin_to_model`, which rewrites them in indicator form and keeps the
leftover constant in ``const_offset``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ModelFormatError


@dataclass(frozen=True, eq=False)
class PairwiseModel:
    n: int
    unary: np.ndarray
    edge_index: np.ndarray
    edge_weight: np.ndarray
    const_offset: float = 0.0

    def __post_init__(self):
        unary = np.array(self.unary, dtype=np.float64).reshape(-1)
        edge_index = np.array(self.edge_index, dtype=np.int64).reshape(-1, 2)
        edge_weight = np.array(self.edge_weight, dtype=np.float64).reshape(-1)
        if unary.shape[0] != self.n:
            raise ValueError(f"unary has length {unary.shape[0]}, expected n={self.n}")
        if edge_index.shape[0] != edge_weight.shape[0]:
            raise ValueError("edge_index and edge_weight disagree in length")
        if edge_index.size:
            i, j = edge_index[:, 0], edge_index[:, 1]
            if np.any(i < 0) or np.any(j >= self.n) or np.any(i >= j):
                raise ValueError("edges must satisfy 0 <= i < j < n")
            if len({(a, b) for a, b in edge_index.tolist()}) != edge_index.shape[0]:
                raise ValueError("duplicate edge")
        if not (np.all(np.isfinite(unary)) and np.all(np.isfinite(edge_weight))):
            raise ValueError("weights must be finite")
        if not math.isfinite(self.const_offset):
            raise ValueError("const_offset must be finite")
        for arr in (unary, edge_index, edge_weight):
            arr.setflags(write=False)
        object.__setattr__(self, "unary", unary)
        object.__setattr__(self, "edge_index", edge_index)
        object.__setattr__(self, "edge_weight", edge_weight)
        object.__setattr__(self, "const_offset", float(self.const_offset))

    @classmethod
    def from_edges(cls, n, unary, edges, const_offset=0.0) -> PairwiseModel:
        """Build from an iterable of ``(i, j, weight)`` triples."""
        edges = list(edges)
        index = [(int(i), int(j)) for i, j, _ in edges]
        weight = [float(w) for _, _, w in edges]
        return cls(n, unary, np.array(index, dtype=np.int64).reshape(-1, 2), weight, const_offset)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(i), int(j), float(w)) for (i, j), w in zip(self.edge_index, self.edge_weight)]

    @property
    def num_edges(self) -> int:
        return self.edge_index.shape[0]

    def neighbors(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR adjacency: ``(offsets, neighbor, edge_id)`` over both edge directions."""
        i, j = self.edge_index[:, 0], self.edge_index[:, 1]
        src = np.concatenate([i, j])
        dst = np.concatenate([j, i])
        eid = np.concatenate([np.arange(self.num_edges)] * 2)
        order = np.lexsort((dst, src))
        offsets = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(offsets, src + 1, 1)
        return np.cumsum(offsets), dst[order].astype(np.int64), eid[order].astype(np.int64)

    def __eq__(self, other):
        if not isinstance(other, PairwiseModel):
            return NotImplemented
        return (
            self.n == other.n
            and self.const_offset == other.const_offset
            and np.array_equal(self.unary, other.unary)
            and np.array_equal(self.edge_index, other.edge_index)
            and np.array_equal(self.edge_weight, other.edge_weight)
        )

    def relabel(self, order) -> PairwiseModel:
        """Model with variable ``v`` renamed to ``order[v]``."""
        order = np.asarray(order, dtype=np.int64)
        unary = np.empty(self.n)
        unary[order] = self.unary
        edges = []
        for (i, j), w in zip(self.edge_index, self.edge_weight):
            a, b = sorted((int(order[i]), int(order[j])))
            edges.append((a, b, w))
        return PairwiseModel.from_edges(self.n, unary, edges, self.const_offset)


@dataclass(frozen=True, eq=False)
class RbmParams:
    W: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        W = np.array(self.W, dtype=np.float64)
        b = np.array(self.b, dtype=np.float64).reshape(-1)
        c = np.array(self.c, dtype=np.float64).reshape(-1)
        if W.ndim != 2 or W.shape != (c.shape[0], b.shape[0]):
            raise ValueError(f"W must be n_h x n_v = {c.shape[0]} x {b.shape[0]}, got {W.shape}")
        if not all(np.all(np.isfinite(a)) for a in (W, b, c)):
            raise ValueError("RBM parameters must be finite")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def n_v(self) -> int:
        return self.b.shape[0]

    @property
    def n_h(self) -> int:
        return self.c.shape[0]


def theta_dot_phi(model: PairwiseModel, x) -> float:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != model.n:
        raise ValueError(f"x has length {x.shape[0]}, expected {model.n}")
    return float(energies(model, x[None, :])[0])


def energies(model: PairwiseModel, X: np.ndarray) -> np.ndarray:
    """Vectorized ``theta . phi(x)`` for each row of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    out = X @ model.unary + model.const_offset
    if model.num_edges:
        i, j = model.edge_index[:, 0], model.edge_index[:, 1]
        out += (X[:, i] * X[:, j]) @ model.edge_weight
    return out


def grid_edges(rows: int, cols: int) -> list[tuple[int, int]]:
    """Nearest-neighbour pairs of a row-major ``rows x cols`` grid."""
    pairs = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                pairs.append((v, v + 1))
            if r + 1 < rows:
                pairs.append((v, v + cols))
    return pairs


@dataclass(frozen=True)
class SpinGrid:
    """Raw spin-form grid parameters: couplings per edge and one field per site."""

    rows: int
    cols: int
    pairs: tuple[tuple[int, int], ...]
    couplings: np.ndarray
    fields: np.ndarray

    def log_potential(self, spins) -> float:
        """``sum_(i,j) w_ij s_i s_j + f_i s_i + f_j s_j`` over grid edges."""
        s = np.asarray(spins, dtype=np.float64)
        total = 0.0
        for (i, j), w in zip(self.pairs, self.couplings):
            total += w * s[i] * s[j] + self.fields[i] * s[i] + self.fields[j] * s[j]
        return total


def sample_spin_grid(rows, cols, w_range=(-10.0, 10.0), f_range=(-1.0, 1.0), rng=None) -> SpinGrid:
    if rows < 1 or cols < 1:
        raise ValueError("grid dimensions must be at least 1")
    w_lo, w_hi = w_range
    f_lo, f_hi = f_range
    if w_lo > w_hi:
        raise ValueError(f"empty coupling range [{w_lo}, {w_hi}]")
    if f_lo > f_hi:
        raise ValueError(f"empty field range [{f_lo}, {f_hi}]")
    rng = np.random.default_rng(rng)
    pairs = tuple(grid_edges(rows, cols))
    couplings = rng.uniform(w_lo, w_hi, size=len(pairs))
    fields = rng.uniform(f_lo, f_hi, size=rows * cols)
    return SpinGrid(rows, cols, pairs, couplings, fields)


def spin_to_model(grid: SpinGrid) -> PairwiseModel:
    """Indicator form of the spin grid via ``s = 2x - 1``.

    Each edge potential ``w s_i s_j + f_i s_i + f_j s_j`` contributes
    ``4w x_i x_j + (2f_i - 2w) x_i + (2f_j - 2w) x_j + (w - f_i - f_j)``,
    so a field enters once per incident edge.
    """
    n = grid.rows * grid.cols
    unary = np.zeros(n)
    const = 0.0
    edges = []
    for (i, j), w in zip(grid.pairs, grid.couplings):
        fi, fj = grid.fields[i], grid.fields[j]
        edges.append((i, j, 4.0 * w))
        unary[i] += 2.0 * fi - 2.0 * w
        unary[j] += 2.0 * fj - 2.0 * w
        const += w - fi - fj
    return PairwiseModel.from_edges(n, unary, edges, const)


def ising_grid(rows, cols, w_range=(-10.0, 10.0), f_range=(-1.0, 1.0), rng=None) -> PairwiseModel:
    """Mixed Ising grid with couplings ~ U(w_range) and fields ~ U(f_range)."""
    return spin_to_model(sample_spin_grid(rows, cols, w_range, f_range, rng))


def rbm_to_model(params: RbmParams) -> PairwiseModel:
    """Visible units get indices ``0..n_v-1``, hidden unit ``i`` gets ``n_v + i``."""
    n_v, n_h = params.n_v, params.n_h
    unary = np.concatenate([params.b, params.c])
    hid, vis = np.nonzero(params.W)
    order = np.lexsort((hid, vis))
    hid, vis = hid[order], vis[order]
    index = np.stack([vis, n_v + hid], axis=1)
    return PairwiseModel(n_v + n_h, unary, index, params.W[hid, vis], 0.0)


def load_rbm(path) -> RbmParams:
    """Read RBM parameters from an ``.npz`` archive with arrays ``W``, ``b``, ``c``."""
    with np.load(path) as data:
        return RbmParams(data["W"], data["b"], data["c"])


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def save_model(model: PairwiseModel, path) -> None:
    lines = [f"n {model.n}"]
    lines += [f"u {i} {_fmt(t)}" for i, t in enumerate(model.unary)]
    lines += [f"e {i} {j} {_fmt(w)}" for i, j, w in model.edges]
    lines.append(f"k {_fmt(model.const_offset)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_model(text: str) -> PairwiseModel:
    n = None
    unary: dict[int, float] = {}
    edges: dict[tuple[int, int], float] = {}
    const = 0.0

    def number(token, lineno, kind=float):
        try:
            value = kind(token)
        except ValueError:
            raise ModelFormatError(f"bad number {token!r}", lineno) from None
        if kind is float and not math.isfinite(value):
            raise ModelFormatError(f"non-finite weight {token!r}", lineno)
        return value

    def index(token, lineno):
        i = number(token, lineno, int)
        if not 0 <= i < n:
            raise ModelFormatError(f"variable index {i} out of range [0, {n})", lineno)
        return i

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tag, *args = line.split()
        if n is None:
            if tag != "n" or len(args) != 1:
                raise ModelFormatError("expected header 'n <count>'", lineno)
            n = number(args[0], lineno, int)
            if n < 0:
                raise ModelFormatError("variable count must be non-negative", lineno)
        elif tag == "u" and len(args) == 2:
            i = index(args[0], lineno)
            if i in unary:
                raise ModelFormatError(f"duplicate unary term for variable {i}", lineno)
            unary[i] = number(args[1], lineno)
        elif tag == "e" and len(args) == 3:
            i, j = index(args[0], lineno), index(args[1], lineno)
            if i == j:
                raise ModelFormatError(f"self-loop edge ({i}, {j})", lineno)
            key = (min(i, j), max(i, j))
            if key in edges:
                raise ModelFormatError(f"duplicate edge {key}", lineno)
            edges[key] = number(args[2], lineno)
        elif tag == "k" and len(args) == 1:
            const = number(args[0], lineno)
        else:
            raise ModelFormatError(f"unrecognised line {raw.strip()!r}", lineno)

    if n is None:
        raise ModelFormatError("missing header 'n <count>'")
    theta = np.zeros(n)
    for i, t in unary.items():
        theta[i] = t
    return PairwiseModel.from_edges(n, theta, [(i, j, w) for (i, j), w in edges.items()], const)


def load_model(path) -> PairwiseModel:
    return parse_model(Path(path).read_text(encoding="utf-8"))
