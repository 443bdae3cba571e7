"""Uniform one-dimensional grids, interpolation and quadrature.

Interpolation uses the clamped cubic spline (zero slope at both ends) and
returns zero outside the interval. Quadrature is the composite trapezoid
rule on the grid nodes.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .errors import AliasingWarning, InvalidIntervalError, TooFewPointsError

MIN_POINTS = 4


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
            raise InvalidIntervalError(f"invalid interval [{self.lo}, {self.hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def shifted(self, d: float) -> Interval:
        return Interval(self.lo + d, self.hi + d)

    def scaled(self, factor: float) -> Interval:
        a, b = self.lo * factor, self.hi * factor
        return Interval(min(a, b), max(a, b))

    def mirrored(self) -> Interval:
        return Interval(-self.hi, -self.lo)


@dataclass(frozen=True)
class Grid:
    interval: Interval
    n_points: int

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < MIN_POINTS:
            raise TooFewPointsError(
                f"need at least {MIN_POINTS} grid points, got {self.n_points}"
            )
        object.__setattr__(self, "n_points", int(self.n_points))

    @property
    def lo(self) -> float:
        return self.interval.lo

    @property
    def hi(self) -> float:
        return self.interval.hi

    @property
    def h(self) -> float:
        return self.interval.width / (self.n_points - 1)

    @property
    def sample_rate(self) -> float:
        return self.n_points / self.interval.width

    @cached_property
    def points(self) -> np.ndarray:
        pts = self.lo + self.h * np.arange(self.n_points)
        pts[-1] = self.hi
        pts.flags.writeable = False
        return pts

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights."""
        w = np.full(self.n_points, self.h)
        w[0] = w[-1] = 0.5 * self.h
        w.flags.writeable = False
        return w

    def with_interval(self, interval: Interval) -> Grid:
        return Grid(interval, self.n_points)


@dataclass(frozen=True)
class SampledFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != (self.grid.n_points,):
            raise ValueError(
                f"expected {self.grid.n_points} samples, got shape {vals.shape}"
            )
        object.__setattr__(self, "values", vals)

    def norm(self) -> float:
        return math.sqrt(integrate(SampledFunction(self.grid, np.abs(self.values) ** 2)).real)


def make_grid(interval: Interval | tuple[float, float], n_points: int) -> Grid:
    if not isinstance(interval, Interval):
        interval = Interval(*interval)
    return Grid(interval, n_points)


# ---------------------------------------------------------------------------
# spline evaluation on arrays whose first axis runs over the grid


def spline_slopes(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """``h * f'`` at the nodes of the clamped spline through ``values``."""
    return kernels.clamped_node_slopes(values, axis=axis)


def spline_eval(grid: Grid, values: np.ndarray, queries, deriv: bool = False,
                slopes: np.ndarray | None = None) -> np.ndarray:
    """Evaluate the clamped spline of ``values`` (shape ``(N, ...)``) at ``queries``.

    Returns an array of shape ``queries.shape + values.shape[1:]``. Queries
    outside the interval give zero.
    """
    q = np.asarray(queries, dtype=np.float64)
    vals = np.asarray(values, dtype=np.complex128)
    trailing = vals.shape[1:]
    flat = np.ascontiguousarray(vals.reshape(grid.n_points, -1))
    hm = spline_slopes(flat) if slopes is None else np.ascontiguousarray(
        np.asarray(slopes, dtype=np.complex128).reshape(grid.n_points, -1))
    i, u, inside = kernels.locate(q.ravel(), grid.lo, grid.h, grid.n_points)
    out = kernels.eval_1d(flat, hm, i, u, inside, deriv)
    if deriv:
        out = out / grid.h
    return out.reshape(q.shape + trailing)


def spline_interpolate(f: SampledFunction, queries) -> np.ndarray:
    """Clamped cubic spline through ``f``'s samples, zero outside the interval."""
    return spline_eval(f.grid, f.values, queries)


def spline_derivative(f: SampledFunction, queries) -> np.ndarray:
    """First derivative of the clamped spline, zero at and beyond the ends."""
    return spline_eval(f.grid, f.values, queries, deriv=True)


def sinc_interpolate(f: SampledFunction, queries) -> np.ndarray:
    """Whittaker-Shannon reconstruction from the samples of ``f``.

    The phase of each sinc term is split off as ``(-1)**(i-k) sin(pi u)`` so
    that on-node queries return the stored sample exactly.
    """
    g = f.grid
    q = np.asarray(queries, dtype=np.float64)
    t = kernels.snap((q.ravel() - g.lo) / g.h)
    i = np.floor(t)
    u = t - i
    k = np.arange(g.n_points)
    d = t[:, None] - k[None, :]
    sign = 1.0 - 2.0 * np.mod(i[:, None] - k[None, :], 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        kern = sign * np.sin(np.pi * u)[:, None] / (np.pi * d)
    kern[d == 0] = 1.0
    return (kern @ f.values).reshape(q.shape)


def integrate(f: SampledFunction) -> complex:
    """Composite trapezoid rule."""
    return complex(np.dot(f.grid.weights, f.values))


def nyquist_max_momentum_width(grid: Grid) -> float:
    """Largest momentum-space support width sampled without aliasing: ``2 pi r_q``."""
    return 2 * math.pi * grid.sample_rate


def momentum_width(f: SampledFunction, mass: float = 1 - 1e-6) -> float:
    """Width of the smallest interval around the spectral mean holding ``mass``.

    Estimated from the discrete Fourier transform of the samples.
    """
    g = f.grid
    spec = np.abs(np.fft.fft(f.values)) ** 2
    total = spec.sum()
    if total == 0:
        return 0.0
    p = 2 * np.pi * np.fft.fftfreq(g.n_points, d=g.h)
    order = np.argsort(p)
    p, spec = p[order], spec[order] / total
    mu = float(np.dot(p, spec))
    dist = np.abs(p - mu)
    by_dist = np.argsort(dist, kind="stable")
    cum = np.cumsum(spec[by_dist])
    idx = int(np.searchsorted(cum, mass))
    idx = min(idx, len(cum) - 1)
    return 2 * float(dist[by_dist[idx]])


def check_nyquist(f: SampledFunction, margin: float = 0.95) -> bool:
    """Warn with :class:`AliasingWarning` when the spectrum crowds the band edge.

    Returns True when the estimated momentum width stays below ``margin``
    times the Nyquist bound.
    """
    width = momentum_width(f)
    bound = nyquist_max_momentum_width(f.grid)
    ok = width <= margin * bound
    if not ok:
        warnings.warn(
            f"momentum width {width:.3g} close to Nyquist bound {bound:.3g}; "
            "increase n_points",
            AliasingWarning,
            stacklevel=2,
        )
    return ok
