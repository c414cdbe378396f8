"""Bivariate functional process with a known causal direction, and the
Monte Carlo experiment that counts how often GcGMC recovers it.

X is a FAR(1) process driven by Brownian motion; Y is an AR(1) curve
process fed contemporaneously by X through the kernel ``sqrt(u v)``::

    X_t(v) = int psi(v, s) X_{t-1}(s) ds + B_t(v),  psi(v, s) = c exp((v^2 + s^2) / 2)
    Y_t(u) = a Y_{t-1}(u) + int X_t(v) sqrt(u v) dv + eps_t(u)
"""
from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import erfi

from .fda import CurveSeries, Grid, InputError
from .gcgmc import ForecastConfig, WindowPlan, run_expanding_window

logger = logging.getLogger(__name__)

# int_0^1 exp(v^2) dv; the Hilbert-Schmidt norm of psi is psi_scale times this.
_EXP_SQ_INTEGRAL = float(np.sqrt(np.pi) / 2 * erfi(1.0))


def psi_hilbert_schmidt_norm(psi_scale: float) -> float:
    return abs(psi_scale) * _EXP_SQ_INTEGRAL


@dataclass(frozen=True)
class SimConfig:
    n: int = 250
    p: int = 50
    burn_in: int = 50
    ar_coefficient: float = 0.6
    psi_scale: float = 0.34
    noise_scale: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n < 10:
            raise InputError(f"n must be at least 10, got {self.n}")
        if self.p < 3:
            raise InputError(f"p must be at least 3, got {self.p}")
        if self.burn_in < 0:
            raise InputError(f"burn_in must be nonnegative, got {self.burn_in}")
        hs = psi_hilbert_schmidt_norm(self.psi_scale)
        if hs >= 1:
            raise InputError(
                f"psi_scale={self.psi_scale} gives Hilbert-Schmidt norm {hs:.4f} >= 1 "
                "(non-stationary FAR(1))"
            )

    @property
    def grid(self) -> Grid:
        return Grid.uniform(self.p)


@dataclass(frozen=True)
class McPlan:
    n_values: tuple[int, ...] = (250, 500, 1000)
    p_values: tuple[int, ...] = (50, 100, 200, 400)
    replications: int = 100
    train_fraction: float = 0.8
    master_seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise InputError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.replications < 1:
            raise InputError(f"replications must be at least 1, got {self.replications}")
        if not self.n_values or not self.p_values:
            raise InputError("n_values and p_values must be non-empty")
        object.__setattr__(self, "n_values", tuple(int(v) for v in self.n_values))
        object.__setattr__(self, "p_values", tuple(int(v) for v in self.p_values))


@dataclass
class McCell:
    n: int
    p: int
    count_predictable: int = 0
    count_causal: int = 0
    replications: int = 0
    undefined_count: int = 0
    gcgmc: list[tuple[float | None, float | None]] = field(default_factory=list, repr=False)

    @property
    def predictable_rate(self) -> float:
        return self.count_predictable / self.replications

    @property
    def causal_rate(self) -> float:
        return self.count_causal / self.replications


CSV_COLUMNS = ("n", "p", "count_predictable", "count_causal", "replications", "undefined_count")


@dataclass
class McResult:
    cells: list[McCell]

    def cell(self, n: int, p: int) -> McCell:
        for c in self.cells:
            if c.n == n and c.p == p:
                return c
        raise KeyError((n, p))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for c in self.cells:
            w.writerow([getattr(c, k) for k in CSV_COLUMNS])
        return buf.getvalue()


def brownian_path(p: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Standard Brownian motion on the uniform ``p``-point grid over ``[0, 1]``.

    Returns shape ``(p,)``, or ``(size, p)`` for ``size`` independent paths.
    """
    if p < 3:
        raise InputError(f"p must be at least 3, got {p}")
    shape = (p - 1,) if size is None else (size, p - 1)
    steps = np.sqrt(1.0 / (p - 1)) * rng.standard_normal(shape)
    path = np.zeros(shape[:-1] + (p,))
    np.cumsum(steps, axis=-1, out=path[..., 1:])
    return path


def _operator_matrices(config: SimConfig) -> tuple[np.ndarray, np.ndarray]:
    grid = config.grid
    u = grid.points
    w = grid.trapezoid_weights
    psi = config.psi_scale * np.exp(0.5 * (u[:, None] ** 2 + u[None, :] ** 2))
    beta = np.sqrt(np.outer(u, u))
    # (A @ f)_i = sum_j w_j kernel(u_i, u_j) f_j
    return psi * w, beta * w


def _far1_values(config: SimConfig, rng: np.random.Generator) -> np.ndarray:
    total = config.n + config.burn_in
    psi_op, _ = _operator_matrices(config)
    drivers = brownian_path(config.p, rng, size=total)
    x = np.empty_like(drivers)
    x[0] = drivers[0]
    for t in range(1, total):
        x[t] = psi_op @ x[t - 1] + drivers[t]
    return x


def y_from_x(x_values: np.ndarray, config: SimConfig, rng: np.random.Generator) -> np.ndarray:
    """Run the Y recursion given the full (pre burn-in) X path."""
    _, beta_op = _operator_matrices(config)
    eps = config.noise_scale * brownian_path(config.p, rng, size=x_values.shape[0])
    y = np.empty_like(x_values)
    y[0] = eps[0]
    for t in range(1, x_values.shape[0]):
        y[t] = config.ar_coefficient * y[t - 1] + beta_op @ x_values[t] + eps[t]
    return y


def simulate_far1_x(config: SimConfig, rng: np.random.Generator) -> CurveSeries:
    x = _far1_values(config, rng)
    return CurveSeries(config.grid, x[config.burn_in:], "X")


def simulate_pair(config: SimConfig) -> tuple[CurveSeries, CurveSeries]:
    """Draw ``(X, Y)``; bitwise reproducible for a fixed ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    x = _far1_values(config, rng)
    y = y_from_x(x, config, rng)
    grid = config.grid
    b = config.burn_in
    return CurveSeries(grid, x[b:], "X"), CurveSeries(grid, y[b:], "Y")


def replication_seed(master_seed: int, n: int, p: int, rep: int) -> int:
    """Stable 64-bit seed for one replication of cell ``(n, p)``."""
    ss = np.random.SeedSequence([master_seed, n, p, rep])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _one_replication(args) -> tuple[float | None, float | None]:
    config, train_fraction, forecast_config = args
    x, y = simulate_pair(config)
    plan = WindowPlan.from_fraction(config.n, train_fraction)
    report = run_expanding_window(x, y, plan, forecast_config)
    return report.gcgmc_x, report.gcgmc_y


def default_workers() -> int:
    cap = os.environ.get("FGC_THREADS")
    cpus = os.cpu_count() or 1
    if cap:
        try:
            return max(1, min(cpus, int(cap)))
        except ValueError:
            logger.warning("ignoring non-integer FGC_THREADS=%r", cap)
    return cpus


def run_monte_carlo(
    plan: McPlan,
    config_template: SimConfig = SimConfig(),
    forecast_config: ForecastConfig = ForecastConfig(),
    workers: int | None = None,
) -> McResult:
    """Tally correct-decision counts for every ``(n, p)`` cell of the plan.

    A replication counts as *predictable* when GcGMC(Y) > GcGMC(X) and as
    *causal* when GcGMC(Y) > 0 > GcGMC(X).  Undefined GcGMC values count
    toward neither and are tallied in ``undefined_count``.
    """
    workers = default_workers() if workers is None else max(1, workers)
    jobs, keys = [], []
    for n in plan.n_values:
        for p in plan.p_values:
            for rep in range(plan.replications):
                cfg = replace(
                    config_template, n=n, p=p,
                    seed=replication_seed(plan.master_seed, n, p, rep),
                )
                jobs.append((cfg, plan.train_fraction, forecast_config))
                keys.append((n, p))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_one_replication, jobs))
    else:
        outcomes = [_one_replication(job) for job in jobs]

    cells = {(n, p): McCell(n, p) for n in plan.n_values for p in plan.p_values}
    for key, (gx, gy) in zip(keys, outcomes):
        cell = cells[key]
        cell.replications += 1
        cell.gcgmc.append((gx, gy))
        if gx is None or gy is None:
            cell.undefined_count += 1
            continue
        cell.count_predictable += gy > gx
        cell.count_causal += gy > 0 and gx < 0
    return McResult(list(cells.values()))
