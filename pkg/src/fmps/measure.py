"""Measurement distributions by contracting the state with its conjugate.

Every distribution for mode ``i`` is assembled from the left and right
environments of that mode, so the cost is linear in the number of modes and
never touches the full product grid. Ancilla modes (from photon loss) are
traced over like any other mode and cannot be measured.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ANCILLA, FmpsState, transfer, transfer_right
from .grid import Grid, spline_eval
from .states import displaced_vacuum_values, hermite_values

CLIP_TOL = 1e-10


@dataclass(frozen=True)
class Pmf:
    probabilities: np.ndarray

    @property
    def n_max(self) -> int:
        return len(self.probabilities) - 1

    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.probabilities)), self.probabilities))

    def to_record(self, mode: int) -> dict:
        return {"mode": mode, "kind": "photon_number",
                "outcomes": list(range(len(self.probabilities))),
                "values": [float(v) for v in self.probabilities]}


@dataclass(frozen=True)
class Pdf:
    grid: Grid
    densities: np.ndarray

    def integral(self) -> float:
        return float(np.dot(self.grid.weights, self.densities))

    def mean(self) -> float:
        return float(np.dot(self.grid.weights, self.grid.points * self.densities)) / self.integral()

    def variance(self) -> float:
        mu = self.mean()
        return float(np.dot(self.grid.weights, (self.grid.points - mu) ** 2 * self.densities)) / self.integral()

    def to_record(self, mode: int, kind: str = "homodyne") -> dict:
        return {"mode": mode, "kind": kind,
                "grid": {"lo": self.grid.lo, "hi": self.grid.hi, "n_points": self.grid.n_points},
                "values": [float(v) for v in self.densities]}


def _clip(values: np.ndarray) -> np.ndarray:
    vals = np.real(values)
    return np.where(vals < 0, np.where(vals < -CLIP_TOL, vals, 0.0), vals)


def _check_measurable(state: FmpsState, i: int) -> None:
    state.check_mode(i)
    if state.tags[i] == ANCILLA:
        raise ValueError(f"mode {i} is an ancilla and cannot be measured")


def left_environment(state: FmpsState, i: int) -> np.ndarray:
    env = np.ones((1, 1), dtype=np.complex128)
    for c in state.cores[:i]:
        env = transfer(env, c)
    return env


def right_environment(state: FmpsState, i: int) -> np.ndarray:
    env = np.ones((1, 1), dtype=np.complex128)
    for c in reversed(state.cores[i + 1:]):
        env = transfer_right(env, c)
    return env


def environments(state: FmpsState, i: int) -> tuple[np.ndarray, np.ndarray]:
    """Left/right environments ``L[a, a']``, ``R[b, b']`` of mode ``i``.

    Each is the bra-ket contraction of all modes on that side with their
    physical variables integrated by quadrature.
    """
    state.check_mode(i)
    return left_environment(state, i), right_environment(state, i)


class EnvironmentCache:
    """All left and right environments of a state from one sweep in each direction."""

    def __init__(self, state: FmpsState):
        one = np.ones((1, 1), dtype=np.complex128)
        self.lefts = [one]
        for c in state.cores[:-1]:
            self.lefts.append(transfer(self.lefts[-1], c))
        rights = [one]
        for c in reversed(state.cores[1:]):
            rights.append(transfer_right(rights[-1], c))
        self.rights = rights[::-1]

    def __call__(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        return self.lefts[i], self.rights[i]


def _envs(state: FmpsState, i: int, cache: EnvironmentCache | None):
    return cache(i) if cache is not None else environments(state, i)


def local_bilinear(left: np.ndarray, right: np.ndarray, ket: np.ndarray, bra: np.ndarray,
                   weights: np.ndarray | None = None) -> np.ndarray:
    """``sum L[a,a'] ket[a,...,b] conj(bra[a',...,b']) R[b,b']`` per middle index.

    ``ket`` and ``bra`` have shape ``(l, K, r)``. With ``weights`` the middle
    index is integrated; otherwise one value per middle index is returned.
    """
    x = np.tensordot(left, ket, axes=(0, 0))          # (a', K, b)
    x = np.tensordot(x, right, axes=(2, 0))           # (a', K, b')
    vals = np.einsum("akb,akb->k", x, bra.conj())
    if weights is None:
        return vals
    return np.dot(weights, vals)


def quadrature_pdf(state: FmpsState, i: int, cache: EnvironmentCache | None = None) -> Pdf:
    _check_measurable(state, i)
    left, right = _envs(state, i, cache)
    g = state.cores[i].data
    return Pdf(state.cores[i].grid, _clip(local_bilinear(left, right, g, g)))


def p_quadrature_pdf(state: FmpsState, i: int, n_sigmas: float = 5.0) -> Pdf:
    """Momentum distribution: rotate a copy by ``-pi/2`` and read off ``q``."""
    from .gates import phase_rotate

    work = state.copy()
    phase_rotate(work, i, -math.pi / 2, n_sigmas)
    return quadrature_pdf(work, i)


def _overlap_pmf(state: FmpsState, i: int, bras: np.ndarray,
                 cache: EnvironmentCache | None = None) -> np.ndarray:
    """``sum L O_k conj(O_k) R`` with ``O_k[a,b] = int conj(bras[k]) gamma``."""
    left, right = _envs(state, i, cache)
    core = state.cores[i]
    w = core.grid.weights
    ov = np.tensordot(bras.conj() * w[None, :], core.data, axes=(1, 1))  # (k, a, b)
    ov = ov.transpose(1, 0, 2)                                             # (a, k, b)
    return np.real(local_bilinear(left, right, ov, ov))


def photon_number_pmf(state: FmpsState, i: int, n_max: int,
                      cache: EnvironmentCache | None = None) -> Pmf:
    """Photon-number distribution up to ``n_max`` (not renormalized)."""
    if n_max < 0:
        raise ValueError(f"n_max must be non-negative, got {n_max}")
    _check_measurable(state, i)
    herm = hermite_values(n_max, state.cores[i].grid.points)
    return Pmf(_clip(_overlap_pmf(state, i, herm, cache)))


def heterodyne_pdf(state: FmpsState, i: int, s,
                   cache: EnvironmentCache | None = None) -> float | np.ndarray:
    """Husimi density at phase-space point(s) ``s = (s1, s2)``.

    Normalized so that the integral over ``ds1 ds2`` is one, i.e.
    ``|<s|psi>|^2 / (2 pi)``. Accepts a single pair or an array of shape
    ``(P, 2)``.
    """
    _check_measurable(state, i)
    pts = np.asarray(s, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    q = state.cores[i].grid.points
    bras = np.stack([displaced_vacuum_values(a, b, q) for a, b in pts])
    vals = _overlap_pmf(state, i, bras, cache) / (2 * math.pi)
    return float(vals[0]) if single else vals


def quadrature_distance(pdfs_a: Sequence[Pdf], pdfs_b: Sequence[Pdf]) -> float:
    """Sum over modes and grid points of ``|p_a - p_b|``.

    Distributions in ``pdfs_b`` on a different interval are resampled onto the
    grid of ``pdfs_a`` with the clamped spline.
    """
    if len(pdfs_a) != len(pdfs_b):
        raise ValueError(f"mode count mismatch: {len(pdfs_a)} vs {len(pdfs_b)}")
    total = 0.0
    for a, b in zip(pdfs_a, pdfs_b):
        if a.grid == b.grid:
            vb = b.densities
        else:
            vb = np.real(spline_eval(b.grid, b.densities, a.grid.points))
        total += float(np.sum(np.abs(a.densities - vb)))
    return total


def system_pdfs(state: FmpsState) -> list[Pdf]:
    cache = EnvironmentCache(state)
    return [quadrature_pdf(state, i, cache) for i in state.system_modes]


# ---------------------------------------------------------------------------
# sampling helpers


def sample_homodyne(pdf: Pdf, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Draw quadrature outcomes by inverting the piecewise-linear CDF."""
    x = pdf.grid.points
    d = np.clip(pdf.densities, 0, None)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * np.diff(x))])
    cdf /= cdf[-1]
    return np.interp(rng.random(size), cdf, x)


def sample_photon_number(pmf: Pmf, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    p = np.clip(pmf.probabilities, 0, None)
    return rng.choice(len(p), size=size, p=p / p.sum())
