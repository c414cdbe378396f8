"""Expanding-window forecasts and the Granger-causality GMC for curve series.

Each direction compares two one-step-ahead forecasts of a target series:

* ``auto``: lag-one NW autoregression of the target on itself;
* ``cross``: NW regression of the target on the other series, evaluated at
  that series' own autoregressive forecast.

``GcGMC = 1 - sum(ISE cross) / sum(ISE auto)`` over the test steps.  Time
indices are zero-based throughout: forecasting index ``t`` uses curves
``0 .. t-1`` as the training window.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .fda import (
    Curve,
    CurveSeries,
    ROUNDOFF_ULPS,
    InputError,
    KernelSpec,
    SemiMetricSpec,
    derivative_values,
    pairwise_distances,
)
from .nw import BandwidthSearch, kernel_weights, loocv_select

_EPS = float(np.finfo(float).eps)

logger = logging.getLogger(__name__)


class Decision(enum.Enum):
    X_CAUSES_Y = "XCausesY"
    Y_CAUSES_X = "YCausesX"
    Y_MORE_PREDICTABLE = "YMorePredictable"
    X_MORE_PREDICTABLE = "XMorePredictable"
    INDETERMINATE = "Indeterminate"

    def swapped(self) -> "Decision":
        return _SWAP.get(self, self)

    def describe(self, x_label: str = "X", y_label: str = "Y") -> str:
        return {
            Decision.X_CAUSES_Y: f"{x_label} Granger-causes {y_label}",
            Decision.Y_CAUSES_X: f"{y_label} Granger-causes {x_label}",
            Decision.Y_MORE_PREDICTABLE: f"{y_label} is more predictable than {x_label}",
            Decision.X_MORE_PREDICTABLE: f"{x_label} is more predictable than {y_label}",
            Decision.INDETERMINATE: "indeterminate",
        }[self]


_SWAP = {
    Decision.X_CAUSES_Y: Decision.Y_CAUSES_X,
    Decision.Y_CAUSES_X: Decision.X_CAUSES_Y,
    Decision.Y_MORE_PREDICTABLE: Decision.X_MORE_PREDICTABLE,
    Decision.X_MORE_PREDICTABLE: Decision.Y_MORE_PREDICTABLE,
}


@dataclass(frozen=True)
class WindowPlan:
    n_total: int
    n_train_initial: int

    def __post_init__(self):
        if not 2 <= self.n_train_initial < self.n_total:
            raise InputError(
                f"need 2 <= n_train_initial < n_total, got "
                f"n_train_initial={self.n_train_initial}, n_total={self.n_total}"
            )

    @classmethod
    def from_fraction(cls, n_total: int, train_fraction: float) -> "WindowPlan":
        if not 0 < train_fraction < 1:
            raise InputError(f"train_fraction must lie in (0, 1), got {train_fraction}")
        return cls(n_total, math.floor(train_fraction * n_total + 0.5))

    @property
    def n_test(self) -> int:
        return self.n_total - self.n_train_initial

    @property
    def test_indices(self) -> range:
        return range(self.n_train_initial, self.n_total)


@dataclass(frozen=True)
class ForecastConfig:
    semimetric: SemiMetricSpec = SemiMetricSpec()
    kernel: KernelSpec = KernelSpec()
    search: BandwidthSearch = BandwidthSearch()
    refresh_bandwidths: bool = True


@dataclass(frozen=True)
class ForecastRecord:
    time_index: int
    realized: Curve
    auto_forecast: Curve
    cross_forecast: Curve
    ise_auto: float
    ise_cross: float
    bandwidth_auto: float
    bandwidth_cross: float


@dataclass(frozen=True)
class GcGmcReport:
    gcgmc_x: float | None
    gcgmc_y: float | None
    records_x: list[ForecastRecord] = field(repr=False)
    records_y: list[ForecastRecord] = field(repr=False)
    decision: Decision
    labels: tuple[str, str] = ("X", "Y")

    @property
    def summary(self) -> str:
        return self.decision.describe(*self.labels)


def ise(forecast: Curve, realized: Curve) -> float:
    """Trapezoid-integrated squared error between two curves on one grid."""
    if forecast.grid != realized.grid:
        raise InputError("forecast and realized curves are on different grids")
    err = forecast.values - realized.values
    return float((err * err) @ realized.grid.trapezoid_weights)


def gcgmc_value(
    ise_cross_total: float, ise_auto_total: float, zero_floor: float = 0.0
) -> float | None:
    """One minus the ratio of summed errors.

    ``None`` when the auto errors sum to at most ``zero_floor``.
    """
    if ise_auto_total <= zero_floor:
        return None
    return 1.0 - ise_cross_total / ise_auto_total


def decide(gcgmc_x: float | None, gcgmc_y: float | None) -> Decision:
    if gcgmc_x is None or gcgmc_y is None:
        return Decision.INDETERMINATE
    if gcgmc_y > 0 and gcgmc_x < 0:
        return Decision.X_CAUSES_Y
    if gcgmc_x > 0 and gcgmc_y < 0:
        return Decision.Y_CAUSES_X
    if gcgmc_y > gcgmc_x:
        return Decision.Y_MORE_PREDICTABLE
    if gcgmc_x > gcgmc_y:
        return Decision.X_MORE_PREDICTABLE
    return Decision.INDETERMINATE


class _SeriesState:
    """Per-series caches shared by every window: derivatives and distances."""

    def __init__(self, series: CurveSeries, config: ForecastConfig):
        self.series = series
        self.values = series.values
        self.grid = series.grid
        self.quad = series.grid.trapezoid_weights
        self.spec = config.semimetric
        self.deriv = derivative_values(self.values, self.grid, self.spec.derivative_order)
        self.dist = pairwise_distances(
            self.values, self.values, self.grid, self.spec,
            a_deriv=self.deriv, b_deriv=self.deriv,
        )

    def distances_to(self, values: np.ndarray, upto: int) -> np.ndarray:
        return pairwise_distances(
            values, self.values[:upto], self.grid, self.spec, b_deriv=self.deriv[:upto]
        )


class _Forecaster:
    def __init__(self, x: CurveSeries, y: CurveSeries, config: ForecastConfig):
        if len(x) != len(y):
            raise InputError(f"series lengths differ: X has {len(x)}, Y has {len(y)}")
        self.config = config
        self.x = _SeriesState(x, config)
        self.y = _SeriesState(y, config)
        self._frozen: dict[str, float] = {}

    def _bandwidth(self, key: str, dist: np.ndarray, responses: np.ndarray, quad) -> float:
        if not self.config.refresh_bandwidths and key in self._frozen:
            return self._frozen[key]
        sel = loocv_select(dist, responses, quad, self.config.search, self.config.kernel)
        self._frozen.setdefault(key, sel.bandwidth)
        return sel.bandwidth

    def _auto(self, key: str, s: _SeriesState, t: int) -> tuple[np.ndarray, float]:
        # pairs (curve j, curve j+1) for j = 0 .. t-2, evaluated at curve t-1
        dist = s.dist[: t - 1, : t - 1]
        b = self._bandwidth(key, dist, s.values[1:t], s.quad)
        w = kernel_weights(s.dist[t - 1, : t - 1], b, self.config.kernel)[0]
        return w @ s.values[1:t], b

    def _cross(self, key: str, pred: _SeriesState, resp: _SeriesState, t: int,
               pred_hat: np.ndarray) -> tuple[np.ndarray, float]:
        # contemporaneous pairs (pred_j, resp_j) for j = 0 .. t-1, evaluated at pred_hat
        dist = pred.dist[:t, :t]
        h = self._bandwidth(key, dist, resp.values[:t], resp.quad)
        w = kernel_weights(pred.distances_to(pred_hat, t), h, self.config.kernel)[0]
        return w @ resp.values[:t], h

    def step(self, t: int) -> tuple[ForecastRecord, ForecastRecord]:
        n = len(self.x.series)
        if not 2 <= t < n:
            raise InputError(f"forecast index must satisfy 2 <= t < {n}, got {t}")
        x_auto, b_x = self._auto("auto_x", self.x, t)
        y_auto, b_y = self._auto("auto_y", self.y, t)
        y_cross, h_y = self._cross("cross_y", self.x, self.y, t, x_auto)
        x_cross, h_x = self._cross("cross_x", self.y, self.x, t, y_auto)
        rec_y = _record(t, self.y.series, y_auto, y_cross, b_y, h_y)
        rec_x = _record(t, self.x.series, x_auto, x_cross, b_x, h_x)
        return rec_y, rec_x


def _record(t, series, auto, cross, b, h) -> ForecastRecord:
    realized = series[t]
    auto_c = Curve(series.grid, auto)
    cross_c = Curve(series.grid, cross)
    return ForecastRecord(
        time_index=t,
        realized=realized,
        auto_forecast=auto_c,
        cross_forecast=cross_c,
        ise_auto=ise(auto_c, realized),
        ise_cross=ise(cross_c, realized),
        bandwidth_auto=b,
        bandwidth_cross=h,
    )


def _summarize(records: list[ForecastRecord]) -> float | None:
    # auto errors at round-off level relative to the realized curves count as zero
    energy = sum(float(r.realized.values**2 @ r.realized.grid.trapezoid_weights)
                 for r in records)
    floor = (ROUNDOFF_ULPS * _EPS) ** 2 * energy
    return gcgmc_value(
        sum(r.ise_cross for r in records), sum(r.ise_auto for r in records), floor
    )


def forecast_step(
    x_series: CurveSeries,
    y_series: CurveSeries,
    t: int,
    config: ForecastConfig = ForecastConfig(),
) -> tuple[ForecastRecord, ForecastRecord]:
    """Forecast index ``t`` of both series from the window ``0 .. t-1``.

    Returns ``(record for Y, record for X)``.  Bandwidths are selected on
    the window by leave-one-out CV.
    """
    return _Forecaster(x_series, y_series, config).step(t)


def run_expanding_window(
    x_series: CurveSeries,
    y_series: CurveSeries,
    plan: WindowPlan | None = None,
    config: ForecastConfig = ForecastConfig(),
) -> GcGmcReport:
    """Forecast every test index with a growing window and summarize both directions."""
    if plan is None:
        plan = WindowPlan.from_fraction(len(x_series), 0.8)
    if len(x_series) != len(y_series):
        raise InputError(
            f"series lengths differ: X has {len(x_series)}, Y has {len(y_series)}"
        )
    if plan.n_total != len(x_series):
        raise InputError(
            f"window plan expects {plan.n_total} curves, series have {len(x_series)}"
        )
    fc = _Forecaster(x_series, y_series, config)
    records_x, records_y = [], []
    for t in plan.test_indices:
        rec_y, rec_x = fc.step(t)
        records_y.append(rec_y)
        records_x.append(rec_x)
    gx = _summarize(records_x)
    gy = _summarize(records_y)
    if gx is None or gy is None:
        logger.warning("zero auto-forecast error; GcGMC undefined for at least one direction")
    return GcGmcReport(
        gcgmc_x=gx,
        gcgmc_y=gy,
        records_x=records_x,
        records_y=records_y,
        decision=decide(gx, gy),
        labels=(x_series.label or "X", y_series.label or "Y"),
    )
