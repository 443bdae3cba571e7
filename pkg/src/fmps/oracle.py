"""Reference implementations used to validate the FMPS simulator.

* :class:`DenseState` keeps the full amplitude tensor over the product grid
  and applies gates to it directly. The beam splitter here interpolates with
  ``scipy.ndimage`` rather than the package's Hermite kernels.
* :func:`analytic_photon_pmf` is the closed-form photon distribution of one
  output port of a beam splitter fed with a squeezed state and vacuum.
* :class:`GaussianMoments` propagates first and second moments through the
  symplectic representation of Gaussian gates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy import ndimage
from scipy.special import gammaln

from .core import ANCILLA, SYSTEM, FmpsState
from .errors import MemoryGuardError, NonGaussianGateError, NormLossError
from .gates import (BeamSplit, CubicPhase, Displace, GateParams, PhaseRotate, SIN_DEGENERATE,
                    Squeeze, _SPLIT_SIN, validate_gate)
from .grid import Grid, Interval, spline_slopes
from .measure import Pdf, Pmf
from .noise import LossSpec, ancilla_grid
from .states import hermite_values
from .tracker import DomainTracker

MAX_DENSE_MODES = 4
MAX_AMPLITUDES = 10**8
_EDGE = 1e-9


# ---------------------------------------------------------------------------
# dense full-grid simulator


@dataclass
class DenseState:
    grids: list
    amplitudes: np.ndarray
    tracker: DomainTracker
    tags: list | None = None

    def __post_init__(self):
        _guard([g.n_points for g in self.grids])
        if self.amplitudes.shape != tuple(g.n_points for g in self.grids):
            raise ValueError("amplitude shape does not match the grids")
        if self.tags is None:
            self.tags = [SYSTEM] * len(self.grids)

    @property
    def n_modes(self) -> int:
        return len(self.grids)

    def weights(self, skip: int | None = None) -> np.ndarray:
        """Product quadrature weights over all modes except ``skip``."""
        ws = [g.weights for i, g in enumerate(self.grids) if i != skip]
        return reduce(np.multiply.outer, ws) if ws else np.ones(())

    def norm(self) -> float:
        return math.sqrt(float(np.sum(self.weights() * np.abs(self.amplitudes) ** 2)))


def _guard(shape) -> None:
    if len(shape) > MAX_DENSE_MODES:
        raise MemoryGuardError(f"dense oracle limited to {MAX_DENSE_MODES} modes, got {len(shape)}")
    total = int(np.prod(shape, dtype=np.int64))
    if total > MAX_AMPLITUDES:
        raise MemoryGuardError(f"{total} amplitudes exceed the cap of {MAX_AMPLITUDES}")


def dense_from_product(wavefunctions) -> DenseState:
    fs = list(wavefunctions)
    _guard([f.grid.n_points for f in fs])
    amps = reduce(np.multiply.outer, [f.values / f.norm() for f in fs])
    return DenseState([f.grid for f in fs], np.asarray(amps, dtype=np.complex128),
                      DomainTracker([f.grid.interval for f in fs]))


def dense_from_fmps(state: FmpsState) -> DenseState:
    return DenseState(list(state.grids), state.to_dense(), state.tracker.copy(), list(state.tags))


def dense_insert_vacuum(state: DenseState, position: int, grid: Grid) -> DenseState:
    vac = hermite_values(0, grid.points)[0]
    vac = vac / math.sqrt(float(np.dot(grid.weights, vac * vac)))
    amps = np.multiply.outer(state.amplitudes, vac)
    amps = np.moveaxis(amps, -1, position)
    tracker = state.tracker.copy()
    tracker.insert(position, grid.interval)
    grids = list(state.grids)
    grids.insert(position, grid)
    tags = list(state.tags)
    tags.insert(position, ANCILLA)
    return DenseState(grids, amps, tracker, tags)


def dense_uniform_loss(state: DenseState, loss_fraction: float) -> DenseState:
    """Vacuum ancilla after every system mode, then a beam splitter per pair."""
    theta = LossSpec(loss_fraction).theta
    systems = dense_system_modes(state)
    for i in reversed(systems):
        state = dense_insert_vacuum(state, i + 1, ancilla_grid(state.grids[i]))
    for k, i in enumerate(systems):
        state = dense_apply_gate(state, BeamSplit(theta), (i + k, i + k + 1))
    return state


def dense_system_modes(state: DenseState) -> list[int]:
    return [i for i, t in enumerate(state.tags) if t == SYSTEM]


def _along(amps: np.ndarray, axis: int, vec: np.ndarray) -> np.ndarray:
    shape = [1] * amps.ndim
    shape[axis] = len(vec)
    return amps * vec.reshape(shape)


def dense_apply_gate(state: DenseState, gate: GateParams, modes) -> DenseState:
    """Apply ``gate`` to a copy of ``state``."""
    validate_gate(gate)
    modes = (modes,) if isinstance(modes, int) else tuple(modes)
    grids = list(state.grids)
    tracker = state.tracker.copy()
    amps = state.amplitudes
    if isinstance(gate, BeamSplit):
        j, k = modes
        return _dense_beam_split(state, j, k, gate.theta)
    (i,) = modes
    g = grids[i]
    if isinstance(gate, Displace):
        grids[i] = g.with_interval(g.interval.shifted(gate.d1))
        amps = _along(amps, i, np.exp(1j * gate.d2 * grids[i].points))
        tracker.shift(i, gate.d1)
    elif isinstance(gate, Squeeze):
        f = math.exp(gate.s)
        grids[i] = g.with_interval(g.interval.scaled(f))
        amps = amps * math.exp(-0.5 * gate.s)
        tracker.scale(i, f)
    elif isinstance(gate, CubicPhase):
        amps = _along(amps, i, np.exp(1j * gate.gamma * g.points ** 3 / 6))
    elif isinstance(gate, PhaseRotate):
        return _dense_phase_rotate(state, i, gate.phi, gate.n_sigmas)
    return DenseState(grids, np.array(amps, dtype=np.complex128), tracker, list(state.tags))


def _dense_phase_rotate(state: DenseState, i: int, phi: float, n_sigmas: float) -> DenseState:
    phi = math.remainder(phi, 2 * math.pi)
    s = math.sin(phi)
    if abs(s) < SIN_DEGENERATE:
        if math.cos(phi) > 0:
            return DenseState(list(state.grids), state.amplitudes.copy(), state.tracker.copy(),
                              list(state.tags))
        grids = list(state.grids)
        grids[i] = grids[i].with_interval(grids[i].interval.mirrored())
        tracker = state.tracker.copy()
        tracker.scale(i, -1.0)
        return DenseState(grids, np.flip(state.amplitudes, axis=i).copy(), tracker, list(state.tags))
    if abs(s) < _SPLIT_SIN:
        half = math.copysign(math.pi / 2, phi)
        return _dense_kernel(_dense_kernel(state, i, phi - half, n_sigmas), i, half, n_sigmas)
    return _dense_kernel(state, i, phi, n_sigmas)


def _dense_kernel(state: DenseState, i: int, phi: float, n_sigmas: float) -> DenseState:
    g = state.grids[i]
    psi = np.moveaxis(state.amplitudes, i, 0)
    dpsi = spline_slopes(psi, axis=0) / g.h
    w = np.multiply.outer(g.weights, state.weights(skip=i))
    q = g.points.reshape((-1,) + (1,) * (psi.ndim - 1))

    def ev(a, b):
        return complex(np.sum(w * a * np.conj(b)))

    n0 = ev(psi, psi).real
    mq = ev(q * psi, psi).real / n0
    mq2 = ev(q * q * psi, psi).real / n0
    mp = ev(-1j * dpsi, psi).real / n0
    mp2 = ev(dpsi, dpsi).real / n0
    mqp = 2 * ev(-1j * q * dpsi, psi).real / n0
    c, s = math.cos(phi), math.sin(phi)
    mean = c * mq - s * mp
    var = max(c * c * mq2 + s * s * mp2 - c * s * mqp - mean * mean, 0.0)
    sigma = math.sqrt(var)
    interval = Interval(mean - n_sigmas * sigma, mean + n_sigmas * sigma)
    new = g.with_interval(interval)
    qn, qo = new.points[:, None], g.points[None, :]
    kern = (np.exp(-1j / s * (0.5 * (qn ** 2 + qo ** 2) * c - qn * qo))
            * g.weights[None, :] / math.sqrt(2 * math.pi * abs(s)))
    out = np.tensordot(kern, psi, axes=(1, 0))
    grids = list(state.grids)
    grids[i] = new
    amps = np.moveaxis(out, 0, i)
    result = DenseState(grids, amps, state.tracker.copy(), list(state.tags))
    nrm = result.norm()
    if abs(nrm - 1) > 1e-3:
        raise NormLossError(f"dense phase rotation changed the norm to {nrm:.6g}")
    result.amplitudes = amps / nrm
    result.tracker.set_interval(i, interval)
    return result


def _dense_beam_split(state: DenseState, j: int, k: int, theta: float) -> DenseState:
    tracker = state.tracker.copy()
    tracker.rotate(j, k, theta)
    g1, g2 = state.grids[j], state.grids[k]
    n1 = g1.with_interval(tracker.interval(j))
    n2 = g2.with_interval(tracker.interval(k))
    c, s = math.cos(theta), math.sin(theta)
    x1, x2 = np.meshgrid(n1.points, n2.points, indexing="ij")
    # fractional indices of O^T x in the old grids
    t1 = (c * x1 + s * x2 - g1.lo) / g1.h
    t2 = (-s * x1 + c * x2 - g2.lo) / g2.h
    inside = ((t1 >= -_EDGE) & (t1 <= g1.n_points - 1 + _EDGE)
              & (t2 >= -_EDGE) & (t2 <= g2.n_points - 1 + _EDGE))
    coords = np.stack([np.clip(t1, 0, g1.n_points - 1), np.clip(t2, 0, g2.n_points - 1)])
    psi = np.moveaxis(state.amplitudes, (j, k), (0, 1))
    rest = psi.shape[2:]
    flat = psi.reshape(psi.shape[0], psi.shape[1], -1)
    out = np.zeros((n1.n_points, n2.n_points, flat.shape[2]), dtype=np.complex128)
    for part, unit in ((flat.real, 1.0), (flat.imag, 1j)):
        # mirror boundaries make the cubic B-spline the clamped interpolant
        coef = ndimage.spline_filter1d(part, order=3, axis=0, mode="mirror")
        coef = ndimage.spline_filter1d(coef, order=3, axis=1, mode="mirror")
        for sl in range(flat.shape[2]):
            vals = ndimage.map_coordinates(coef[:, :, sl], coords, order=3, mode="mirror",
                                           prefilter=False)
            out[:, :, sl] += unit * np.where(inside, vals, 0.0)
    out = out.reshape((n1.n_points, n2.n_points) + rest)
    grids = list(state.grids)
    grids[j], grids[k] = n1, n2
    result = DenseState(grids, np.moveaxis(out, (0, 1), (j, k)), tracker, list(state.tags))
    # interpolation is unitary only approximately; keep unit norm as the FMPS split does
    result.amplitudes = result.amplitudes / result.norm()
    return result


def dense_marginal_pdf(state: DenseState, mode: int) -> Pdf:
    dens = np.abs(np.moveaxis(state.amplitudes, mode, 0)) ** 2
    w = state.weights(skip=mode)
    vals = np.tensordot(dens, w, axes=(list(range(1, dens.ndim)), list(range(w.ndim))))
    return Pdf(state.grids[mode], np.asarray(vals, dtype=np.float64))


def dense_photon_pmf(state: DenseState, mode: int, n_max: int) -> Pmf:
    g = state.grids[mode]
    herm = hermite_values(n_max, g.points) * g.weights[None, :]
    psi = np.moveaxis(state.amplitudes, mode, 0)
    ov = np.tensordot(herm, psi, axes=(1, 0))
    dens = np.abs(ov) ** 2
    w = state.weights(skip=mode)
    vals = np.tensordot(dens, w, axes=(list(range(1, dens.ndim)), list(range(w.ndim))))
    return Pmf(np.asarray(vals, dtype=np.float64))


# ---------------------------------------------------------------------------
# closed-form photon statistics


def _xlog(exponent: float, base: float) -> float:
    """``exponent * log(base)`` with ``0 * log(0) = 0``."""
    if exponent == 0:
        return 0.0
    return exponent * math.log(base) if base > 0 else -math.inf


def analytic_photon_pmf(s: float, theta: float, n_max: int) -> Pmf:
    """Photon distribution of the second output when squeezed(s) and vacuum meet at ``theta``.

    Summed in log space so factorials never overflow.
    """
    if n_max < 0:
        raise ValueError(f"n_max must be non-negative, got {n_max}")
    t = abs(math.cos(theta))
    kap = abs(math.tanh(s))
    al = t * t * kap
    base = 0.5 * math.log((1 - kap * kap) / (1 - al * al))
    probs = np.zeros(n_max + 1)
    for n in range(n_max + 1):
        head = base + _xlog(n, 1 - t * t) - n * math.log(1 - al * al) + gammaln(n + 1)
        terms = []
        for k in range(n // 2 + 1):
            lt = (head + _xlog(2 * n - 4 * k, t) + _xlog(2 * n - 2 * k, kap)
                  - 2 * k * math.log(2) - gammaln(n - 2 * k + 1) - 2 * gammaln(k + 1))
            terms.append(lt)
        terms = np.array(terms)
        top = terms.max()
        probs[n] = 0.0 if top == -math.inf else math.exp(top) * np.exp(terms - top).sum()
    return Pmf(probs)


def epsilon_n(pmf_true: Pmf, pmf_test: Pmf) -> float:
    a, b = pmf_true.probabilities, pmf_test.probabilities
    if len(a) != len(b):
        raise ValueError(f"pmf lengths differ: {len(a)} vs {len(b)}")
    return float(np.sum(np.abs(a - b)))


# ---------------------------------------------------------------------------
# Gaussian moments


@dataclass(frozen=True)
class GaussianMoments:
    """Mean and covariance ordered ``(q_1..q_m, p_1..p_m)``."""

    mean: np.ndarray
    covariance: np.ndarray

    @property
    def n_modes(self) -> int:
        return len(self.mean) // 2

    @classmethod
    def vacuum(cls, m: int) -> GaussianMoments:
        return cls(np.zeros(2 * m), 0.5 * np.eye(2 * m))

    @classmethod
    def squeezed(cls, squeezings) -> GaussianMoments:
        s = np.asarray(squeezings, dtype=np.float64)
        return cls(np.zeros(2 * len(s)), 0.5 * np.diag(np.concatenate([np.exp(2 * s), np.exp(-2 * s)])))

    def check(self, tol: float = 1e-8) -> None:
        cov = self.covariance
        if not np.allclose(cov, cov.T, atol=tol):
            raise ValueError("covariance is not symmetric")
        nu = np.abs(np.linalg.eigvals(1j * symplectic_form(self.n_modes) @ cov))
        if nu.min() < 0.5 - tol:
            raise ValueError(f"symplectic eigenvalue {nu.min():.3g} violates the uncertainty bound")


def symplectic_form(m: int) -> np.ndarray:
    z, e = np.zeros((m, m)), np.eye(m)
    return np.block([[z, e], [-e, z]])


def symplectic_matrix(gate: GateParams, modes, m: int) -> np.ndarray:
    modes = (modes,) if isinstance(modes, int) else tuple(modes)
    S = np.eye(2 * m)
    if isinstance(gate, Displace):
        return S
    if isinstance(gate, Squeeze):
        (i,) = modes
        S[i, i] = math.exp(gate.s)
        S[m + i, m + i] = math.exp(-gate.s)
    elif isinstance(gate, PhaseRotate):
        (i,) = modes
        c, s = math.cos(gate.phi), math.sin(gate.phi)
        S[np.ix_([i, m + i], [i, m + i])] = [[c, -s], [s, c]]
    elif isinstance(gate, BeamSplit):
        j, k = modes
        c, s = math.cos(gate.theta), math.sin(gate.theta)
        rot = np.array([[c, -s], [s, c]])
        S[np.ix_([j, k], [j, k])] = rot
        S[np.ix_([m + j, m + k], [m + j, m + k])] = rot
    else:
        raise NonGaussianGateError(f"{type(gate).__name__} has no symplectic representation")
    return S


def gaussian_evolve(moments: GaussianMoments, gate: GateParams, modes) -> GaussianMoments:
    m = moments.n_modes
    S = symplectic_matrix(gate, modes, m)
    mean = S @ moments.mean
    if isinstance(gate, Displace):
        (i,) = (modes,) if isinstance(modes, int) else tuple(modes)
        mean = mean.copy()
        mean[i] += gate.d1
        mean[m + i] += gate.d2
    return GaussianMoments(mean, S @ moments.covariance @ S.T)
