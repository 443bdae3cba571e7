"""Gate application with bounding-box bookkeeping.

Single-mode gates act on one core in place and never change a bond
dimension. The beam splitter rotates a merged two-site block by bicubic
interpolation and splits it again under a :class:`TruncationPolicy`.

Conventions: ``P(phi)`` sends ``q -> cos(phi) q - sin(phi) p``; the beam
splitter sends ``(q_j, q_k) -> O (q_j, q_k)`` with
``O = [[cos, -sin], [sin, cos]]`` so the wavefunction becomes ``psi(O^T x)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields
from typing import Union

import numpy as np

from . import kernels
from .core import (Core, FmpsState, TruncationPolicy, TwoSiteBlock, apply_block,
                   canonicalize, merge, swap_modes)
from .errors import AliasingWarning, DiscretizationError, NormLossError
from .grid import Grid, Interval, spline_slopes
from .measure import environments, local_bilinear

DEFAULT_N_SIGMAS = 5.0
SIN_DEGENERATE = 1e-8
NORM_TOL = 1e-3
NEG_VARIANCE_TOL = 1e-8
# rotations closer to 0 or pi than this are split in two steps to keep the
# kernel chirp resolvable
_SPLIT_SIN = 1 / math.sqrt(2)


# ---------------------------------------------------------------------------
# parameter records


@dataclass(frozen=True)
class Displace:
    d1: float
    d2: float = 0.0


@dataclass(frozen=True)
class Squeeze:
    s: float


@dataclass(frozen=True)
class PhaseRotate:
    phi: float
    n_sigmas: float = DEFAULT_N_SIGMAS


@dataclass(frozen=True)
class BeamSplit:
    theta: float


@dataclass(frozen=True)
class CubicPhase:
    gamma: float


GateParams = Union[Displace, Squeeze, PhaseRotate, BeamSplit, CubicPhase]
GATE_TYPES = {"displace": Displace, "squeeze": Squeeze, "phase_rotate": PhaseRotate,
              "beam_split": BeamSplit, "cubic_phase": CubicPhase}
GATE_NAMES = {v: k for k, v in GATE_TYPES.items()}


def gate_arity(gate: GateParams) -> int:
    return 2 if isinstance(gate, BeamSplit) else 1


def validate_gate(gate: GateParams) -> None:
    for f in fields(gate):
        v = getattr(gate, f.name)
        if not math.isfinite(v):
            raise ValueError(f"{type(gate).__name__}.{f.name} must be finite, got {v}")
    if isinstance(gate, PhaseRotate) and gate.n_sigmas <= 0:
        raise ValueError(f"n_sigmas must be positive, got {gate.n_sigmas}")


# ---------------------------------------------------------------------------
# single-mode gates


def displace(state: FmpsState, mode: int, d1: float, d2: float = 0.0) -> None:
    state.check_mode(mode)
    if d1 == 0.0 and d2 == 0.0:
        return
    core = state.cores[mode]
    grid = core.grid.with_interval(core.grid.interval.shifted(d1))
    data = core.data
    if d2 != 0.0:
        data = data * np.exp(1j * d2 * grid.points)[None, :, None]
    state.cores[mode] = Core(data, grid)
    state.tracker.shift(mode, d1)


def squeeze(state: FmpsState, mode: int, s: float) -> None:
    state.check_mode(mode)
    if s == 0.0:
        return
    core = state.cores[mode]
    factor = math.exp(s)
    grid = core.grid.with_interval(core.grid.interval.scaled(factor))
    state.cores[mode] = Core(core.data * math.exp(-0.5 * s), grid)
    state.tracker.scale(mode, factor)


def cubic_phase(state: FmpsState, mode: int, gamma: float) -> None:
    state.check_mode(mode)
    if gamma == 0.0:
        return
    core = state.cores[mode]
    g = core.grid
    edge = max(abs(g.lo), abs(g.hi))
    if abs(gamma) * edge * edge / 2 > math.pi / g.h:
        warnings.warn(
            f"cubic phase gradient {abs(gamma) * edge * edge / 2:.3g} at the box edge exceeds "
            f"the grid band limit {math.pi / g.h:.3g}; increase n_points",
            AliasingWarning, stacklevel=2)
    phase = np.exp(1j * gamma * g.points ** 3 / 6)
    state.cores[mode] = Core(core.data * phase[None, :, None], g)


def _parity(state: FmpsState, mode: int) -> None:
    core = state.cores[mode]
    grid = core.grid.with_interval(core.grid.interval.mirrored())
    state.cores[mode] = Core(core.data[:, ::-1, :].copy(), grid)
    state.tracker.scale(mode, -1.0)


def _local_moments(state: FmpsState, mode: int) -> dict:
    """Normalized local expectations of q, q^2, p, p^2 and qp + pq."""
    left, right = environments(state, mode)
    core = state.cores[mode]
    g = core.grid
    w = g.weights
    q = g.points[None, :, None]
    gam = core.data
    dgam = spline_slopes(gam, axis=1) / g.h

    def ev(ket, bra):
        return local_bilinear(left, right, ket, bra, w)

    n0 = ev(gam, gam).real
    if n0 <= 0:
        raise DiscretizationError(f"mode {mode} has vanishing norm")
    return {
        "q": ev(q * gam, gam).real / n0,
        "q2": ev(q * q * gam, gam).real / n0,
        "p": ev(-1j * dgam, gam).real / n0,
        # <p^2> = int |psi'|^2, integrating by parts with vanishing boundary terms
        "p2": ev(dgam, dgam).real / n0,
        "qp_sym": 2 * ev(-1j * q * dgam, gam).real / n0,
    }


def rotated_moments(state: FmpsState, mode: int, phi: float) -> tuple[float, float]:
    """Mean and variance of ``q`` after a phase rotation by ``phi``.

    Computed from the unrotated state with
    ``q' = cos(phi) q - sin(phi) p``.
    """
    state.check_mode(mode)
    m = _local_moments(state, mode)
    c, s = math.cos(phi), math.sin(phi)
    mean = c * m["q"] - s * m["p"]
    second = c * c * m["q2"] + s * s * m["p2"] - c * s * m["qp_sym"]
    var = second - mean * mean
    if var < -NEG_VARIANCE_TOL:
        raise DiscretizationError(f"negative rotated variance {var:.3g} on mode {mode}")
    return mean, max(var, 0.0)


def _reduce_angle(phi: float) -> float:
    return math.remainder(phi, 2 * math.pi)


def phase_rotate(state: FmpsState, mode: int, phi: float,
                 n_sigmas: float = DEFAULT_N_SIGMAS) -> None:
    """Apply ``P(phi)`` through the oscillator propagator.

    The new interval is ``mean +/- n_sigmas * std`` of the rotated quadrature.
    Angles within ``1e-8`` (in ``|sin|``) of 0 or pi are handled exactly as
    identity or parity. Angles near those points are done as two steps, one
    of which is ``pi/2``.
    """
    state.check_mode(mode)
    if not n_sigmas > 0:
        raise ValueError(f"n_sigmas must be positive, got {n_sigmas}")
    phi = _reduce_angle(phi)
    if abs(math.sin(phi)) < SIN_DEGENERATE:
        if math.cos(phi) < 0:
            _parity(state, mode)
        return
    if abs(math.sin(phi)) < _SPLIT_SIN:
        half = math.copysign(math.pi / 2, phi)
        _rotate_kernel(state, mode, phi - half, n_sigmas)
        _rotate_kernel(state, mode, half, n_sigmas)
        return
    _rotate_kernel(state, mode, phi, n_sigmas)


def _rotate_kernel(state: FmpsState, mode: int, phi: float, n_sigmas: float) -> None:
    canonicalize(state, mode)
    mean, var = rotated_moments(state, mode, phi)
    sigma = math.sqrt(var)
    if sigma == 0.0:
        raise DiscretizationError(f"rotated width vanished on mode {mode}")
    old = state.cores[mode]
    interval = Interval(mean - n_sigmas * sigma, mean + n_sigmas * sigma)
    grid = old.grid.with_interval(interval)
    kern = kernels.propagator(grid.points, old.grid.points, old.grid.weights, phi)
    data = np.einsum("kl,alb->akb", kern, old.data)
    # the state is canonical around ``mode`` so its norm is local
    nrm = math.sqrt(float(np.einsum("k,akb->", grid.weights, np.abs(data) ** 2)))
    if abs(nrm - 1.0) > NORM_TOL:
        raise NormLossError(
            f"phase rotation on mode {mode} changed the norm to {nrm:.6g}; "
            "raise n_sigmas or n_points")
    state.cores[mode] = Core(data / nrm, grid)
    state.tracker.set_interval(mode, interval)


# ---------------------------------------------------------------------------
# beam splitter


def hermite_table_2d(values: np.ndarray) -> np.ndarray:
    """Bicubic Hermite table ``[f, h1 f_x, h2 f_y, h1 h2 f_xy]`` for ``(N1, N2, S)`` input."""
    values = np.ascontiguousarray(values, dtype=np.complex128)
    table = np.empty((4,) + values.shape, dtype=np.complex128)
    table[0] = values
    kernels.clamped_node_slopes(values, 0, out=table[1])
    kernels.clamped_node_slopes(values, 1, out=table[2])
    kernels.clamped_node_slopes(table[1], 1, out=table[3])
    return table


def rotate_block(block: TwoSiteBlock, grid_left: Grid, grid_right: Grid,
                 theta: float) -> TwoSiteBlock:
    """Evaluate ``block`` at ``O^T x`` on the new product grid."""
    l, n1, n2, r = block.data.shape
    g1, g2 = block.grid_left, block.grid_right
    vals = block.data.transpose(1, 2, 0, 3).reshape(n1, n2, l * r)
    table = hermite_table_2d(vals)
    c, s = math.cos(theta), math.sin(theta)
    x1, x2 = np.meshgrid(grid_left.points, grid_right.points, indexing="ij")
    u_q = c * x1 + s * x2
    v_q = -s * x1 + c * x2
    i, u, in1 = kernels.locate(u_q.ravel(), g1.lo, g1.h, g1.n_points)
    j, v, in2 = kernels.locate(v_q.ravel(), g2.lo, g2.h, g2.n_points)
    out = kernels.eval_2d(table, i, u, j, v, in1 & in2)
    m1, m2 = grid_left.n_points, grid_right.n_points
    data = out.reshape(m1, m2, l, r).transpose(2, 0, 1, 3)
    return TwoSiteBlock(np.ascontiguousarray(data), grid_left, grid_right)


def _resolution_points(old: Grid, new: Interval) -> int:
    return max(old.n_points, int(math.ceil((new.width / old.interval.width) * (old.n_points - 1))) + 1)


def beam_split(state: FmpsState, modes: tuple[int, int], theta: float,
               policy: TruncationPolicy, absorb: str = "right") -> float:
    """Apply the beam splitter to adjacent ``modes`` and return the split fidelity."""
    j, k = modes
    state.check_mode(j)
    state.check_mode(k)
    if k != j + 1:
        raise ValueError(f"beam splitter needs adjacent modes (j, j+1), got {modes}")
    if not math.isfinite(theta):
        raise ValueError(f"theta must be finite, got {theta}")
    if state.center not in (j, k):
        canonicalize(state, j)
    blk = merge(state, j)
    state.tracker.rotate(j, k, theta)
    iv1, iv2 = state.tracker.interval(j), state.tracker.interval(k)
    g1, g2 = blk.grid_left, blk.grid_right
    if policy.preserve_resolution:
        new1 = Grid(iv1, _resolution_points(g1, iv1))
        new2 = Grid(iv2, _resolution_points(g2, iv2))
    else:
        new1, new2 = g1.with_interval(iv1), g2.with_interval(iv2)
    rotated = rotate_block(blk, new1, new2, theta)
    fid, _ = apply_block(state, j, rotated, policy, absorb)
    return fid


# ---------------------------------------------------------------------------
# dispatch


def route_adjacent(state: FmpsState, j: int, k: int) -> tuple[int, int, list[int]]:
    """Swap mode ``k`` next to ``j``; returns the new pair and the swaps made.

    Swaps are exact (no truncation). Undo with :func:`unroute`.
    """
    if j == k:
        raise ValueError("beam splitter needs two distinct modes")
    swaps = []
    pos = k
    target = j + 1 if k > j else j - 1
    while pos != target:
        step = pos - 1 if pos > target else pos
        swap_modes(state, step)
        swaps.append(step)
        pos = step if pos > target else pos + 1
    if k > j:
        return j, pos, swaps
    return pos, j, swaps


def unroute(state: FmpsState, swaps: list[int]) -> None:
    for step in reversed(swaps):
        swap_modes(state, step)


def apply_gate(state: FmpsState, gate: GateParams, modes, policy: TruncationPolicy) -> float:
    """Apply ``gate`` to ``modes``; returns the truncation fidelity (1 for local gates)."""
    validate_gate(gate)
    modes = (modes,) if isinstance(modes, int) else tuple(modes)
    if len(modes) != gate_arity(gate):
        raise ValueError(f"{type(gate).__name__} acts on {gate_arity(gate)} mode(s), got {modes}")
    if isinstance(gate, BeamSplit):
        a, b = modes
        if abs(a - b) == 1:
            pair = (a, b) if b > a else (b, a)
            theta = gate.theta if b > a else -gate.theta
            return beam_split(state, pair, theta, policy)
        lo, hi, swaps = route_adjacent(state, a, b)
        theta = gate.theta if b > a else -gate.theta
        fid = beam_split(state, (lo, hi), theta, policy)
        unroute(state, swaps)
        return fid
    (m,) = modes
    if isinstance(gate, Displace):
        displace(state, m, gate.d1, gate.d2)
    elif isinstance(gate, Squeeze):
        squeeze(state, m, gate.s)
    elif isinstance(gate, PhaseRotate):
        phase_rotate(state, m, gate.phi, gate.n_sigmas)
    elif isinstance(gate, CubicPhase):
        cubic_phase(state, m, gate.gamma)
    else:  # pragma: no cover
        raise TypeError(f"unknown gate {gate!r}")
    return 1.0
