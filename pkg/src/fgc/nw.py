"""Functional Nadaraya-Watson regression and leave-one-out bandwidth choice."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .fda import (
    Curve,
    CurveSeries,
    InputError,
    KernelSpec,
    SemiMetricSpec,
    kernel_eval,
    pairwise_distances,
)

logger = logging.getLogger(__name__)

DEFAULT_QUANTILES = tuple(round(0.05 * k, 2) for k in range(1, 11))
DEGENERATE_BANDWIDTH = 1.0
FALLBACK_INFLATION = 1.001
# Relative slack under which two LOOCV scores count as tied.
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class BandwidthSearch:
    """Candidate bandwidths are quantiles of the positive pairwise predictor distances."""

    quantile_grid: tuple[float, ...] = DEFAULT_QUANTILES
    min_active_neighbors: int = 1

    def __post_init__(self):
        q = np.asarray(self.quantile_grid, dtype=float)
        if q.ndim != 1 or q.size == 0:
            raise InputError("quantile_grid must be a non-empty sequence")
        if np.any(q <= 0) or np.any(q > 1):
            raise InputError("quantile_grid probabilities must lie in (0, 1]")
        if np.any(np.diff(q) <= 0):
            raise InputError("quantile_grid must be strictly increasing")
        if self.min_active_neighbors < 1:
            raise InputError("min_active_neighbors must be a positive integer")
        object.__setattr__(self, "quantile_grid", tuple(float(v) for v in q))


@dataclass(frozen=True)
class NwModel:
    predictors: CurveSeries
    responses: CurveSeries
    bandwidth: float
    semimetric: SemiMetricSpec = SemiMetricSpec()
    kernel: KernelSpec = KernelSpec()
    degenerate: bool = False

    def __post_init__(self):
        if len(self.predictors) != len(self.responses):
            raise InputError(
                f"predictors ({len(self.predictors)}) and responses "
                f"({len(self.responses)}) differ in length"
            )
        if not self.bandwidth > 0:
            raise InputError(f"bandwidth must be positive, got {self.bandwidth}")


@dataclass(frozen=True)
class BandwidthSelection:
    bandwidth: float
    candidates: np.ndarray = field(repr=False)
    scores: np.ndarray = field(repr=False)
    degenerate: bool = False


def kernel_weights(dist, bandwidth: float, kernel: KernelSpec = KernelSpec()) -> np.ndarray:
    """Normalized NW weights for each row of a distance matrix.

    A row whose raw weights all vanish is recomputed with the bandwidth
    inflated to ``1.001`` times its nearest distance, so only the nearest
    neighbours contribute.  Entries equal to ``inf`` never get weight.
    """
    dist = np.atleast_2d(np.asarray(dist, dtype=float))
    raw = kernel_eval(dist / bandwidth, kernel)
    total = raw.sum(axis=1)
    empty = total <= 0
    if np.any(empty):
        nearest = dist[empty].min(axis=1, keepdims=True)
        raw[empty] = kernel_eval(dist[empty] / (FALLBACK_INFLATION * nearest), kernel)
        total[empty] = raw[empty].sum(axis=1)
    return raw / total[:, None]


def _as_series(curves, label="") -> CurveSeries:
    return curves if isinstance(curves, CurveSeries) else CurveSeries.from_curves(curves, label)


def nw_predict(model: NwModel, x_new: Curve) -> Curve:
    """Kernel-weighted average of the response curves at ``x_new``."""
    if x_new.grid != model.predictors.grid:
        raise InputError("x_new must lie on the predictors' grid")
    dist = pairwise_distances(
        x_new.values, model.predictors.values, x_new.grid, model.semimetric
    )
    w = kernel_weights(dist, model.bandwidth, model.kernel)[0]
    return Curve(model.responses.grid, w @ model.responses.values)


def _lagged_pair(series: CurveSeries) -> tuple[CurveSeries, CurveSeries]:
    if len(series) < 2:
        raise InputError("autoregression needs at least 2 curves")
    g = series.grid
    return (
        CurveSeries(g, series.values[:-1], series.label, min_length=1),
        CurveSeries(g, series.values[1:], series.label, min_length=1),
    )


def nw_autopredict(
    series: CurveSeries,
    bandwidth: float,
    semimetric: SemiMetricSpec = SemiMetricSpec(),
    kernel: KernelSpec = KernelSpec(),
    x_new: Curve | None = None,
) -> Curve:
    """Lag-one functional autoregression evaluated at ``x_new``.

    Regresses curve ``t + 1`` on curve ``t``.  ``x_new`` defaults to the last
    curve, which gives the one-step-ahead forecast.
    """
    if x_new is None:
        x_new = series[len(series) - 1]
    pred, resp = _lagged_pair(series)
    return nw_predict(NwModel(pred, resp, bandwidth, semimetric, kernel), x_new)


def candidate_bandwidths(dist: np.ndarray, quantile_grid, min_active_neighbors: int = 1) -> np.ndarray:
    """Quantiles of the positive off-diagonal entries of a square distance matrix.

    Candidates below the ``min_active_neighbors``-th smallest positive
    distance are dropped unless that would leave none.
    """
    iu = np.triu_indices(dist.shape[0], k=1)
    d = dist[iu]
    d = np.sort(d[d > 0])
    if d.size == 0:
        return np.empty(0)
    cands = np.quantile(d, quantile_grid)
    floor = d[min(min_active_neighbors, d.size) - 1]
    keep = cands >= floor
    return cands[keep] if keep.any() else cands[-1:]


def loocv_select(
    dist: np.ndarray,
    responses: np.ndarray,
    weights: np.ndarray,
    search: BandwidthSearch,
    kernel: KernelSpec = KernelSpec(),
) -> BandwidthSelection:
    """Array-level leave-one-out bandwidth search.

    ``dist`` is the ``(n, n)`` predictor distance matrix, ``responses`` the
    ``(n, p)`` response values and ``weights`` the trapezoid weights of the
    response grid.  Works for any ``n >= 1``; with ``n < 3`` the search is
    uninformative and falls to the smallest candidate.
    """
    n = dist.shape[0]
    cands = candidate_bandwidths(dist, search.quantile_grid, search.min_active_neighbors)
    if cands.size == 0:
        return BandwidthSelection(DEGENERATE_BANDWIDTH, cands, np.empty(0), True)
    if n < 2:
        return BandwidthSelection(float(cands[0]), cands, np.zeros(cands.size))
    loo = dist.copy()
    np.fill_diagonal(loo, np.inf)
    scores = np.empty(cands.size)
    for k, h in enumerate(cands):
        fit = kernel_weights(loo, h, kernel) @ responses
        resid = fit - responses
        scores[k] = np.sum((resid * resid) @ weights)
    best = scores.min()
    tied = scores <= best + TIE_RTOL * abs(best)
    k = int(np.flatnonzero(tied)[0])
    return BandwidthSelection(float(cands[k]), cands, scores)


def bandwidth_search(
    predictors: CurveSeries,
    responses: CurveSeries,
    search: BandwidthSearch = BandwidthSearch(),
    semimetric: SemiMetricSpec = SemiMetricSpec(),
    kernel: KernelSpec = KernelSpec(),
) -> BandwidthSelection:
    if len(predictors) != len(responses):
        raise InputError("predictors and responses differ in length")
    if len(predictors) < 3:
        raise InputError(f"bandwidth selection needs n >= 3 pairs, got {len(predictors)}")
    dist = pairwise_distances(
        predictors.values, predictors.values, predictors.grid, semimetric
    )
    sel = loocv_select(
        dist, responses.values, responses.grid.trapezoid_weights, search, kernel
    )
    if sel.degenerate:
        logger.warning("all pairwise predictor distances are zero; using h=%g", sel.bandwidth)
    return sel


def select_bandwidth(
    predictors: CurveSeries,
    responses: CurveSeries,
    search: BandwidthSearch = BandwidthSearch(),
    semimetric: SemiMetricSpec = SemiMetricSpec(),
    kernel: KernelSpec = KernelSpec(),
) -> float:
    """LOOCV-optimal bandwidth among the distance-quantile candidates.

    Ties go to the smaller bandwidth.  Degenerate data (every pairwise
    distance zero) yields ``DEGENERATE_BANDWIDTH``; use
    :func:`bandwidth_search` to see the flag and the full score table.
    """
    return bandwidth_search(predictors, responses, search, semimetric, kernel).bandwidth


def fit_model(
    predictors,
    responses,
    search: BandwidthSearch = BandwidthSearch(),
    semimetric: SemiMetricSpec = SemiMetricSpec(),
    kernel: KernelSpec = KernelSpec(),
) -> NwModel:
    """Select a bandwidth by LOOCV and return the fitted model."""
    predictors = _as_series(predictors)
    responses = _as_series(responses)
    sel = bandwidth_search(predictors, responses, search, semimetric, kernel)
    return NwModel(predictors, responses, sel.bandwidth, semimetric, kernel, sel.degenerate)


__all__ = [
    "BandwidthSearch",
    "BandwidthSelection",
    "DEFAULT_QUANTILES",
    "NwModel",
    "bandwidth_search",
    "candidate_bandwidths",
    "fit_model",
    "kernel_weights",
    "loocv_select",
    "nw_autopredict",
    "nw_predict",
    "select_bandwidth",
]
