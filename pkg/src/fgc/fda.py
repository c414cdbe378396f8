"""Discretized functional data and the numerical primitives built on it.

Curves are stored as plain numpy arrays sampled on a shared :class:`Grid`.
Everything here is a pure function of its inputs.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

_EPS = float(np.finfo(float).eps)

class InputError(ValueError):
    """Raised when caller-supplied data violates a documented precondition."""


class Grid:
    """Strictly increasing, finite sample locations of a function support."""

    __slots__ = ("points", "__dict__")

    def __init__(self, points: Sequence[float]):
        pts = np.array(points, dtype=float).ravel()
        if pts.size < 3:
            raise InputError(f"grid needs at least 3 points, got {pts.size}")
        if not np.all(np.isfinite(pts)):
            raise InputError("grid points must be finite")
        if np.any(np.diff(pts) <= 0):
            raise InputError("grid points must be strictly increasing")
        pts.setflags(write=False)
        self.points = pts

    @classmethod
    def uniform(cls, p: int, a: float = 0.0, b: float = 1.0) -> "Grid":
        return cls(np.linspace(a, b, p))

    def __len__(self) -> int:
        return self.points.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(
            np.array_equal(self.points, other.points)
        )

    def __hash__(self) -> int:
        return hash(self.points.tobytes())

    def __repr__(self) -> str:
        return f"Grid(p={len(self)}, [{self.points[0]:g}, {self.points[-1]:g}])"

    @cached_property
    def trapezoid_weights(self) -> np.ndarray:
        """Weights ``w`` such that ``w @ f`` is the trapezoid integral of ``f``."""
        dx = np.diff(self.points)
        w = np.zeros(len(self))
        w[:-1] += dx / 2
        w[1:] += dx / 2
        w.setflags(write=False)
        return w

    def roundoff_gain(self, order: int) -> float:
        """Bound on how much a derivative stencil amplifies input round-off."""
        return float(np.abs(self.derivative_matrix(order)).sum(axis=1).max())

    def derivative_matrix(self, order: int) -> np.ndarray:
        """Finite-difference matrix ``D`` with ``D @ f`` approximating ``f^(order)``."""
        if order == 0:
            return np.eye(len(self))
        cache = self.__dict__.setdefault("_dmats", {})
        if order not in cache:
            cache[order] = _build_derivative_matrix(self.points, order)
        return cache[order]


def _fd_weights(nodes: np.ndarray, x0: float, order: int) -> np.ndarray:
    # Solve the moment conditions sum_j c_j (x_j - x0)^k / k! = [k == order].
    n = nodes.size
    h = nodes - x0
    scale = np.max(np.abs(h))
    hs = h / scale
    vander = np.vander(hs, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    return np.linalg.solve(vander, rhs) / scale**order


def _build_derivative_matrix(points: np.ndarray, order: int) -> np.ndarray:
    p = points.size
    mat = np.zeros((p, p))
    # One-sided boundary stencils keep second-order accuracy: that needs
    # order + 2 nodes (4 for f'', 3 for f'), capped by the grid size.
    edge = min(p, order + 2)
    for i in range(p):
        if 0 < i < p - 1:
            idx = np.arange(i - 1, i + 2)
        elif i == 0:
            idx = np.arange(0, edge)
        else:
            idx = np.arange(p - edge, p)
        mat[i, idx] = _fd_weights(points[idx], points[i], order)
    mat.setflags(write=False)
    return mat


@dataclass(frozen=True)
class Curve:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).ravel()
        if vals.size != len(self.grid):
            raise InputError(
                f"curve has {vals.size} values but grid has {len(self.grid)} points"
            )
        if not np.all(np.isfinite(vals)):
            raise InputError("curve values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


class CurveSeries:
    """Time-ordered curves on one grid, held as an ``(n, p)`` array."""

    MIN_LENGTH = 4

    def __init__(self, grid: Grid, values, label: str = "", min_length: int = MIN_LENGTH):
        vals = np.array(values, dtype=float)
        if vals.ndim != 2 or vals.shape[1] != len(grid):
            raise InputError(
                f"series values must have shape (n, {len(grid)}), got {vals.shape}"
            )
        if vals.shape[0] < min_length:
            raise InputError(f"series needs at least {min_length} curves, got {vals.shape[0]}")
        if not np.all(np.isfinite(vals)):
            raise InputError("series values must be finite")
        vals.setflags(write=False)
        self.grid = grid
        self.values = vals
        self.label = label

    @classmethod
    def from_curves(cls, curves: Sequence[Curve], label: str = "", **kw) -> "CurveSeries":
        if not curves:
            raise InputError("no curves given")
        grid = curves[0].grid
        if any(c.grid != grid for c in curves):
            raise InputError("all curves in a series must share one grid")
        return cls(grid, np.stack([c.values for c in curves]), label, **kw)

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, t: int) -> Curve:
        return Curve(self.grid, self.values[t])

    def __iter__(self) -> Iterator[Curve]:
        for row in self.values:
            yield Curve(self.grid, row)

    @property
    def curves(self) -> list[Curve]:
        return list(self)

    def __repr__(self) -> str:
        return f"CurveSeries({self.label!r}, n={len(self)}, p={len(self.grid)})"


@dataclass(frozen=True)
class SemiMetricSpec:
    derivative_order: int = 2

    def __post_init__(self):
        if self.derivative_order not in (0, 1, 2):
            raise InputError(
                f"derivative_order must be 0, 1 or 2, got {self.derivative_order}"
            )


class KernelKind(enum.Enum):
    QUADRATIC = "quadratic"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind = KernelKind.QUADRATIC

    def __call__(self, t):
        return kernel_eval(t, self)


def trapezoid_integral(values, grid: Grid) -> float:
    """Trapezoidal-rule integral of ``values`` sampled on ``grid``."""
    vals = np.asarray(values, dtype=float)
    if vals.shape[-1:] != (len(grid),):
        raise InputError(
            f"values have {vals.shape[-1] if vals.ndim else 0} samples, grid has {len(grid)}"
        )
    return vals @ grid.trapezoid_weights


def derivative_values(values, grid: Grid, order: int) -> np.ndarray:
    """Derivative of order 0, 1 or 2 of one curve or a stack of curves (last axis)."""
    if len(grid) < 3:
        raise InputError("derivatives need a grid of at least 3 points")
    vals = np.asarray(values, dtype=float)
    return vals @ grid.derivative_matrix(order).T


# Results within this many ulps of the stencil's round-off bound are zero.
ROUNDOFF_ULPS = 16


def second_derivative(curve: Curve) -> Curve:
    """Pointwise f'' by finite differences.

    Interior points use the three-point central stencil (non-uniform spacing
    allowed); the two endpoints use four-point one-sided stencils, which are
    second-order accurate.  Both are exact for polynomials of degree two;
    values at round-off level are flushed to zero.
    """
    grid = curve.grid
    d = derivative_values(curve.values, grid, 2)
    floor = ROUNDOFF_ULPS * _EPS * grid.roundoff_gain(2) * np.max(np.abs(curve.values))
    d[np.abs(d) <= floor] = 0.0
    return Curve(grid, d)


def semi_metric(x1: Curve, x2: Curve, spec: SemiMetricSpec = SemiMetricSpec()) -> float:
    if x1.grid != x2.grid:
        raise InputError("curves compared under a semi-metric must share a grid")
    return float(pairwise_distances(x1.values, x2.values, x1.grid, spec)[0, 0])


def pairwise_distances(
    a, b, grid: Grid, spec: SemiMetricSpec, *, a_deriv=None, b_deriv=None
) -> np.ndarray:
    """Semi-metric between every row of ``a`` and every row of ``b``.

    ``a_deriv``/``b_deriv`` may carry precomputed derivatives of the rows.
    Differences are formed explicitly (no Gram-matrix shortcut) and distances
    below the round-off floor of the stencil are set to zero, so curves that
    differ by an element of the derivative's null space are at distance zero.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    order = spec.derivative_order
    da = derivative_values(a, grid, order) if a_deriv is None else np.atleast_2d(a_deriv)
    db = derivative_values(b, grid, order) if b_deriv is None else np.atleast_2d(b_deriv)
    floor = (
        ROUNDOFF_ULPS * _EPS * grid.roundoff_gain(order)
        * np.sqrt(grid.points[-1] - grid.points[0])
        * np.add.outer(np.abs(a).max(axis=1), np.abs(b).max(axis=1))
    )
    w = grid.trapezoid_weights
    out = np.empty((da.shape[0], db.shape[0]))
    step = max(1, 2_000_000 // max(1, db.shape[0] * db.shape[1]))
    for start in range(0, da.shape[0], step):
        diff = da[start:start + step, None, :] - db[None, :, :]
        np.square(diff, out=diff)
        out[start:start + step] = diff @ w
    np.maximum(out, 0.0, out=out)
    np.sqrt(out, out=out)
    out[out <= floor] = 0.0
    return out


def kernel_eval(t, spec: KernelSpec = KernelSpec()):
    """Quadratic kernel ``1.5 (1 - t^2)`` on ``[0, 1]``, zero elsewhere.

    Accepts a scalar or an array; the support is one-sided because the
    argument is a scaled distance.
    """
    if spec.kind is not KernelKind.QUADRATIC:
        raise InputError(f"unsupported kernel {spec.kind}")
    t = np.asarray(t, dtype=float)
    out = np.where((t >= 0) & (t <= 1), 1.5 * (1.0 - t * t), 0.0)
    return float(out) if out.ndim == 0 else out
