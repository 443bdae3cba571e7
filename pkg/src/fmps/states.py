"""Input wavefunctions sampled on a grid.

Every constructor normalizes by quadrature on the grid it is given, so the
result has unit norm under :func:`fmps.grid.integrate` exactly (up to
round-off) rather than analytically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, SampledFunction

GKP_WEIGHT_CUTOFF = 1e-12


@dataclass(frozen=True)
class CatParams:
    alpha: complex
    theta: float = 0.0


@dataclass(frozen=True)
class GkpParams:
    theta: float = 0.0
    phi: float = 0.0
    kappa: float = 0.453
    delta: float = 0.453

    def __post_init__(self):
        if not (self.kappa > 0 and self.delta > 0):
            raise ValueError(f"kappa and delta must be positive, got {self.kappa}, {self.delta}")


def _normalized(grid: Grid, values: np.ndarray) -> SampledFunction:
    f = SampledFunction(grid, values)
    nrm = f.norm()
    if nrm == 0.0:
        raise ValueError("wavefunction vanishes on the grid; widen the interval")
    return SampledFunction(grid, f.values / nrm)


def hermite_values(n: int, q: np.ndarray) -> np.ndarray:
    """Hermite functions ``h_0..h_n`` at ``q``, shape ``(n+1, len(q))``.

    Uses the normalized three-term recurrence, which never forms factorials.
    """
    if n < 0:
        raise ValueError(f"Hermite index must be non-negative, got {n}")
    q = np.asarray(q, dtype=np.float64)
    out = np.empty((n + 1,) + q.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * q * q)
    if n >= 1:
        out[1] = math.sqrt(2.0) * q * out[0]
    for k in range(1, n):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * q * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def hermite_function(n: int, grid: Grid) -> SampledFunction:
    """The Fock state ``|n>`` in position representation (not renormalized)."""
    return SampledFunction(grid, hermite_values(n, grid.points)[n])


def vacuum(grid: Grid) -> SampledFunction:
    return hermite_function(0, grid)


def squeezed(s: float, grid: Grid) -> SampledFunction:
    q = grid.points
    return _normalized(grid, np.exp(-0.5 * (q / math.exp(s)) ** 2))


def displaced_vacuum_values(s1: float, s2: float, q: np.ndarray) -> np.ndarray:
    """``<q|D(s)|0>`` including its global phase."""
    return (np.pi ** -0.25 * np.exp(0.5j * s1 * s2)
            * np.exp(-0.5 * (q - s1) ** 2 + 1j * s2 * q))


def coherent(alpha: complex, grid: Grid) -> SampledFunction:
    """Coherent state with ``<q> = sqrt(2) Re(alpha)``, ``<p> = sqrt(2) Im(alpha)``."""
    alpha = complex(alpha)
    s1, s2 = math.sqrt(2) * alpha.real, math.sqrt(2) * alpha.imag
    return _normalized(grid, displaced_vacuum_values(s1, s2, grid.points))


def cat(params: CatParams, grid: Grid) -> SampledFunction:
    alpha = complex(params.alpha)
    s1, s2 = math.sqrt(2) * alpha.real, math.sqrt(2) * alpha.imag
    q = grid.points
    plus = displaced_vacuum_values(s1, s2, q)
    minus = displaced_vacuum_values(-s1, -s2, q)
    return _normalized(grid, plus + np.exp(1j * params.theta) * minus)


def _gkp_comb(offset: float, params: GkpParams, q: np.ndarray) -> np.ndarray:
    """Gaussian peaks at ``(2n + offset) sqrt(pi)`` under the envelope."""
    spacing = 2 * math.sqrt(math.pi)
    # keep peaks whose envelope weight exp(-(kappa c)^2) exceeds the cutoff
    c_max = math.sqrt(-math.log(GKP_WEIGHT_CUTOFF)) / params.kappa
    n_max = int(math.ceil(c_max / spacing)) + 1
    centers = (np.arange(-n_max, n_max + 1) * 2 + offset) * math.sqrt(math.pi)
    centers = centers[np.exp(-(params.kappa * centers) ** 2) > GKP_WEIGHT_CUTOFF]
    comb = np.exp(-((q[:, None] - centers[None, :]) ** 2) / (2 * params.delta ** 2)).sum(axis=1)
    return np.exp(-0.5 * (params.kappa * q) ** 2) * comb


def gkp(params: GkpParams, grid: Grid) -> SampledFunction:
    q = grid.points
    zero = _normalized(grid, _gkp_comb(0.0, params, q)).values
    one = _normalized(grid, _gkp_comb(1.0, params, q)).values
    vals = (math.cos(params.theta / 2) * zero
            + np.exp(-1j * params.phi) * math.sin(params.theta / 2) * one)
    return _normalized(grid, vals)
