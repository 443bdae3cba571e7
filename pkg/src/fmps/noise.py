"""Photon loss by dilation: each lossy mode meets a vacuum ancilla on a beam splitter.

With loss fraction ``eta`` the coupling angle is ``asin(sqrt(eta))`` so the
transmitted amplitude is ``cos(theta) = sqrt(1 - eta)``. Ancillas stay in the
chain and are traced out by every measurement.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import (ANCILLA, Core, FmpsState, TruncationPolicy, TwoSiteBlock, canonicalize,
                   merge, schmidt_split)
from .grid import Grid, Interval
from .states import hermite_values
from .gates import beam_split, rotate_block

MIN_ANCILLA_HALFWIDTH = 6.0


@dataclass(frozen=True)
class LossSpec:
    loss_fraction: float
    placement: str = "end_of_circuit"

    def __post_init__(self):
        if not 0.0 <= self.loss_fraction < 1.0:
            raise ValueError(f"loss_fraction must lie in [0, 1), got {self.loss_fraction}")
        if self.placement != "end_of_circuit":
            raise ValueError(f"unsupported loss placement {self.placement!r}")

    @property
    def theta(self) -> float:
        return math.asin(math.sqrt(self.loss_fraction))


def ancilla_grid(system: Grid) -> Grid:
    """Vacuum grid with the system's resolution, centred on zero."""
    hw = max(0.5 * system.interval.width, MIN_ANCILLA_HALFWIDTH)
    n = max(system.n_points, int(round(2 * hw / system.h)) + 1)
    return Grid(Interval(-hw, hw), n)


def insert_vacuum_mode(state: FmpsState, position: int, grid: Grid) -> None:
    """Insert a vacuum ancilla at chain index ``position`` (0..n_modes).

    The new core is ``delta_ab h_0(q)``, which is both left- and
    right-orthonormal, so any canonical form is preserved.
    """
    if not 0 <= position <= state.n_modes:
        raise IndexError(f"cannot insert at {position} for {state.n_modes} modes")
    vac = hermite_values(0, grid.points)[0]
    vac = vac / math.sqrt(float(np.dot(grid.weights, vac * vac)))
    dim = 1 if position in (0, state.n_modes) else state.cores[position].left_dim
    data = np.eye(dim)[:, None, :] * vac[None, :, None]
    state.cores.insert(position, Core(data, grid))
    state.tags.insert(position, ANCILLA)
    state.tracker.insert(position, grid.interval)
    if state.center is not None and state.center >= position:
        state.center += 1


def _threads() -> int:
    env = os.environ.get("FMPS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def apply_uniform_loss(state: FmpsState, spec: LossSpec, policy: TruncationPolicy,
                       parallel: bool = False) -> list[float]:
    """Apply the same loss to every system mode; returns per-split fidelities.

    Each system mode gets a vacuum ancilla inserted directly to its right and
    the pair is coupled by a beam splitter. With ``parallel`` the interpolation
    of all pairs runs in a thread pool and the splits are done in one sweep.
    """
    systems = list(state.system_modes)
    theta = spec.theta
    # insert right to left so earlier positions stay valid
    for i in reversed(systems):
        insert_vacuum_mode(state, i + 1, ancilla_grid(state.cores[i].grid))
    pairs = [i + k for k, i in enumerate(systems)]
    if not parallel:
        return [beam_split(state, (j, j + 1), theta, policy) for j in pairs]
    return _parallel_pairs(state, pairs, theta, policy)


def _parallel_pairs(state: FmpsState, pairs: list[int], theta: float,
                    policy: TruncationPolicy) -> list[float]:
    canonicalize(state, 0)
    blocks = []
    for j in pairs:
        blk = merge(state, j)
        state.tracker.rotate(j, j + 1, theta)
        g1 = blk.grid_left.with_interval(state.tracker.interval(j))
        g2 = blk.grid_right.with_interval(state.tracker.interval(j + 1))
        blocks.append((j, blk, g1, g2))
    with ThreadPoolExecutor(max_workers=min(_threads(), len(blocks))) as pool:
        rotated = list(pool.map(lambda b: rotate_block(b[1], b[2], b[3], theta), blocks))
    # left-to-right sweep: all cores right of the current pair are still
    # right-orthonormal, so each split sees the exact global spectrum
    fids = []
    carry = None
    pos = 0
    for (j, _, _, _), blk in zip(blocks, rotated):
        while pos < j:
            carry = _orthonormalize(state, pos, carry)
            pos += 1
        data = blk.data if carry is None else np.tensordot(carry, blk.data, axes=(1, 0))
        left, right, fid, _ = schmidt_split(TwoSiteBlock(data, blk.grid_left, blk.grid_right),
                                            policy, absorb="right")
        state.cores[j], state.cores[j + 1] = left, right
        state.ledger.record(fid)
        fids.append(fid)
        carry = None
        pos = j + 1
    state.center = pos
    return fids


def _orthonormalize(state: FmpsState, pos: int, carry) -> np.ndarray:
    """Absorb ``carry`` into core ``pos``, make it left-orthonormal, return the remainder."""
    c = state.cores[pos]
    data = c.data if carry is None else np.tensordot(carry, c.data, axes=(1, 0))
    sw = np.sqrt(c.grid.weights)
    l, n, r = data.shape
    q, rr = scipy.linalg.qr((data * sw[None, :, None]).reshape(l * n, r), mode="economic")
    state.cores[pos] = Core(q.reshape(l, n, q.shape[1]) / sw[None, :, None], c.grid)
    return rr
