"""Experiment runner: seeded estimator runs and flat-file reports."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ._rng import stream
from .errors import ConfigError
from .exact_oracle import ENUMERATION_CAP, WishConfig, exact_log_z, required_trials, wish_estimate
from .gf2_linalg import rref_mod2, sample_projection
from .meanfield import mf_estimate
from .mfrp import MarginalState, mfrp_run, mfrp_sweep
from .model import PairwiseModel, ising_grid, load_model, load_rbm, rbm_to_model

MODES = ("mf", "mfrp", "exact", "wish", "sweep", "compare")
FORMATS = ("csv", "json")
CSV_HEADER = ("model", "method", "m", "T", "J", "estimate", "exact", "log_ratio_vs_mf", "wall_ms", "seed")


@dataclass
class ExperimentConfig:
    mode: str
    seed: int | None
    model_path: str | None = None
    rbm_path: str | None = None
    grid: tuple[int, int] | None = None
    grids: int = 1
    w_range: tuple[float, float] = (-10.0, 10.0)
    f_range: tuple[float, float] = (-1.0, 1.0)
    m: int | None = None
    m_max: int | None = None
    T: int | None = None
    J: int = 10
    tol: float = 1e-8
    max_sweeps: int = 1000
    timeout: float | None = None
    delta: float = 0.1
    alpha: float = 0.0042
    cap: int = ENUMERATION_CAP
    timing: bool = False
    out: str | None = None
    format: str = "csv"

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if self.seed is None:
            raise ConfigError("a seed is required")
        if self.format not in FORMATS:
            raise ConfigError(f"unknown format {self.format!r}")
        sources = [s for s in (self.model_path, self.rbm_path, self.grid) if s is not None]
        if len(sources) != 1:
            raise ConfigError("give exactly one model source: --model, --rbm or --grid")
        if self.grid is not None and (self.grid[0] < 1 or self.grid[1] < 1):
            raise ConfigError("grid dimensions must be positive")
        if self.grids < 1:
            raise ConfigError("--grids must be at least 1")
        if self.w_range[0] > self.w_range[1] or self.f_range[0] > self.f_range[1]:
            raise ConfigError("ranges must satisfy lo <= hi")
        if self.mode == "mfrp" and self.m is None:
            raise ConfigError("mode mfrp needs --m")
        if self.m is not None and self.m < 0:
            raise ConfigError("--m must be non-negative")
        if self.m_max is not None and self.m_max < 0:
            raise ConfigError("--m-max must be non-negative")
        if (self.T is not None and self.T < 1) or self.J < 1:
            raise ConfigError("T and J must be at least 1")
        if self.max_sweeps < 1 or self.tol < 0:
            raise ConfigError("max_sweeps must be positive and tol non-negative")
        if self.timeout is not None and self.timeout <= 0:
            raise ConfigError("timeout must be positive")
        if not 0 < self.delta < 1 or not 0 < self.alpha <= 0.0042:
            raise ConfigError("need 0 < delta < 1 and 0 < alpha <= 0.0042")


@dataclass
class ReportRow:
    model: str
    method: str
    m: int | None
    T: int | None
    J: int | None
    estimate: float
    exact: float | None
    log_ratio_vs_mf: float | None
    wall_ms: float | None
    seed: int


def load_models(config: ExperimentConfig) -> list[tuple[str, PairwiseModel]]:
    try:
        if config.model_path is not None:
            return [(Path(config.model_path).stem, load_model(config.model_path))]
        if config.rbm_path is not None:
            return [(Path(config.rbm_path).stem, rbm_to_model(load_rbm(config.rbm_path)))]
    except OSError as exc:
        raise ConfigError(f"cannot read model: {exc}") from exc
    rows, cols = config.grid
    return [
        (f"ising{rows}x{cols}-{k}", ising_grid(rows, cols, config.w_range, config.f_range, stream(config.seed, "grid", k)))
        for k in range(config.grids)
    ]


def _timed(fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, 1000.0 * (time.perf_counter() - start)


def _run_model(config: ExperimentConfig, name: str, model: PairwiseModel) -> list[ReportRow]:
    c = config
    rows: list[ReportRow] = []
    T = c.T if c.T is not None else 5
    solver = dict(J=c.J, tol=c.tol, max_sweeps=c.max_sweeps, timeout=c.timeout, seed=c.seed)

    def row(method, estimate, wall, m=None, T_=None, J=None, exact=None, mf=None):
        ratio = None if mf is None else estimate - mf
        rows.append(ReportRow(name, method, m, T_, J, estimate, exact, ratio, wall if c.timing else None, c.seed))

    def check_m(m):
        if m > model.n:
            raise ConfigError(f"m={m} exceeds the {model.n} variables of {name}")
        return m

    if c.mode == "exact":
        log_z, wall = _timed(exact_log_z, model, c.cap)
        row("exact", log_z, wall, exact=log_z)
    elif c.mode == "wish":
        wT = c.T if c.T is not None else required_trials(max(model.n, 1), c.delta, c.alpha)
        cfg = WishConfig(T=wT, delta=c.delta, alpha=c.alpha, seed=c.seed)
        est, wall = _timed(wish_estimate, model, cfg, c.cap)
        row("wish", est, wall, T_=wT)
    elif c.mode == "mf":
        st, wall = _timed(mf_estimate, model, c.J, c.tol, c.max_sweeps, c.seed, c.timeout)
        row("mf", st.elbo, wall, m=0, J=c.J)
    elif c.mode == "mfrp":
        est, wall = _timed(mfrp_run, model, check_m(c.m), T, **solver)
        row("mfrp", est.aggregate_log, wall, m=c.m, T_=T, J=c.J)
    else:
        m_max = c.m_max if c.m_max is not None else min(model.n, 20)
        m_values = range(0, check_m(m_max) + 1)
        exact = None
        if c.mode == "compare" and model.n <= c.cap:
            exact, exact_wall = _timed(exact_log_z, model, c.cap)
        mf, mf_wall = _timed(mf_estimate, model, c.J, c.tol, c.max_sweeps, c.seed, c.timeout)
        row("mf", mf.elbo, mf_wall, m=0, J=c.J, exact=exact, mf=mf.elbo)
        (best, curve), wall = _timed(mfrp_sweep, model, m_values, T, **solver)
        for est in curve:
            row("mfrp", est.aggregate_log, 1000.0 * est.wall_time, m=est.m, T_=T, J=c.J, exact=exact, mf=mf.elbo)
        row("mfrp_sweep", best.aggregate_log, wall, m=best.m, T_=T, J=c.J, exact=exact, mf=mf.elbo)
        if exact is not None:
            row("exact", exact, exact_wall, exact=exact, mf=mf.elbo)
    return rows


def run(config: ExperimentConfig) -> list[ReportRow]:
    config.validate()
    rows = []
    for name, model in load_models(config):
        rows.extend(_run_model(config, name, model))
    return rows


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


def format_report(rows: list[ReportRow], fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow([_cell(getattr(r, name)) for name in CSV_HEADER])
        return buf.getvalue()
    if fmt == "json":
        def jsonable(v):
            return _cell(v) if isinstance(v, float) and not math.isfinite(v) else v

        records = [{k: jsonable(v) for k, v in asdict(r).items()} for r in rows]
        return json.dumps(records, indent=2) + "\n"
    raise ConfigError(f"unknown format {fmt!r}")


def write_report(rows: list[ReportRow], path, fmt: str = "csv") -> None:
    Path(path).write_text(format_report(rows, fmt), encoding="utf-8")


def read_csv_report(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# Runtime scaling -----------------------------------------------------------


def seconds_per_sweep(model: PairwiseModel, m: int, sweeps: int = 50, seed: int = 0, repeats: int = 3) -> float:
    """Median wall time of one coordinate-ascent sweep at constraint level ``m``.

    Sweeps run for a fixed count (no convergence test); the state is
    re-initialised between repeats.
    """
    rng = stream(seed, "timing", m)
    while True:
        cs = rref_mod2(*sample_projection(model.n, m, rng))
        if cs.consistent:
            break
    state = MarginalState(model, cs, rng.uniform(size=cs.n - cs.rank))
    state._sweep()  # compile / warm caches
    times = []
    for _ in range(repeats):
        state = MarginalState(model, cs, rng.uniform(size=cs.n - cs.rank))
        start = time.perf_counter()
        for _ in range(sweeps):
            state._sweep()
        times.append((time.perf_counter() - start) / sweeps)
    return float(np.median(times))


def linear_fit_r2(x, y) -> float:
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = np.sum((y - y.mean()) ** 2)
    return float(1.0 - np.sum(resid**2) / total)


def runtime_scaling(sizes, m_values, sweeps: int = 50, seed: int = 0, repeats: int = 3) -> list[dict]:
    """Per-sweep time on ``k x k`` mixed Ising grids for every ``k`` in ``sizes``."""
    out = []
    for k in sizes:
        model = ising_grid(k, k, rng=stream(seed, "grid", k))
        for m in m_values:
            out.append({"size": k, "n": model.n, "m": m, "seconds_per_sweep": seconds_per_sweep(model, m, sweeps, seed, repeats)})
    return out

