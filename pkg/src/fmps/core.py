"""Functional matrix product states on discretized grids.

A state over ``m`` modes is a chain of cores ``gamma_j(a, q_j, b)`` stored as
complex arrays of shape ``(left_dim, N_j, right_dim)``, each carrying its own
:class:`~fmps.grid.Grid`. All inner products use the trapezoid weights of the
grids, so orthogonality and Schmidt weights refer to the L2 norm of the
underlying functions rather than to raw sample vectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import NormalizationError, SvdFailure
from .grid import Grid, SampledFunction
from .tracker import DomainTracker

SYSTEM = "system"
ANCILLA = "ancilla"

# Discarded Schmidt weight below this is treated as exact zero (round-off).
WEIGHT_FLOOR = 1e-28
# Relative tolerance for treating neighbouring Schmidt weights as degenerate.
TIE_RTOL = 1e-12


@dataclass
class Core:
    data: np.ndarray
    grid: Grid

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.ndim != 3 or self.data.shape[1] != self.grid.n_points:
            raise ValueError(
                f"core shape {self.data.shape} inconsistent with grid of "
                f"{self.grid.n_points} points"
            )

    @property
    def left_dim(self) -> int:
        return self.data.shape[0]

    @property
    def right_dim(self) -> int:
        return self.data.shape[2]

    def copy(self) -> Core:
        return Core(self.data.copy(), self.grid)


@dataclass(frozen=True)
class TruncationPolicy:
    """Per-split truncation target.

    ``preserve_resolution`` makes beam splitters grow ``N`` so the sample
    density along each axis is kept when the box expands.
    """

    gate_fidelity: float = 0.99
    max_bond: int = 50
    preserve_resolution: bool = False

    def __post_init__(self):
        if not 0.0 < self.gate_fidelity <= 1.0:
            raise ValueError(f"gate_fidelity must lie in (0, 1], got {self.gate_fidelity}")
        if self.max_bond < 1:
            raise ValueError(f"max_bond must be >= 1, got {self.max_bond}")


EXACT = TruncationPolicy(gate_fidelity=1.0, max_bond=10**9)


@dataclass
class FidelityLedger:
    per_gate_fidelities: list = field(default_factory=list)

    @property
    def gate_count(self) -> int:
        return len(self.per_gate_fidelities)

    def record(self, fidelity: float) -> None:
        if not 0.0 < fidelity <= 1.0 + 1e-12:
            raise ValueError(f"fidelity out of range: {fidelity}")
        self.per_gate_fidelities.append(min(float(fidelity), 1.0))

    def copy(self) -> FidelityLedger:
        return FidelityLedger(list(self.per_gate_fidelities))


@dataclass(frozen=True)
class SchmidtSpectrum:
    weights: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.weights)


@dataclass
class TwoSiteBlock:
    """Contraction of two neighbouring cores, shape ``(l, N1, N2, r)``."""

    data: np.ndarray
    grid_left: Grid
    grid_right: Grid


class FmpsState:
    """Chain of cores with per-mode grids, box tracker and fidelity ledger.

    ``center`` is the orthogonality centre when the chain is known to be in
    mixed-canonical form, otherwise ``None``.
    """

    def __init__(self, cores: list[Core], tracker: DomainTracker | None = None,
                 ledger: FidelityLedger | None = None, tags: list[str] | None = None):
        self.cores = list(cores)
        self.tracker = tracker or DomainTracker([c.grid.interval for c in self.cores])
        self.ledger = ledger or FidelityLedger()
        self.tags = list(tags) if tags is not None else [SYSTEM] * len(self.cores)
        self.center: int | None = None
        self.check_bonds()

    @property
    def n_modes(self) -> int:
        return len(self.cores)

    @property
    def grids(self) -> list[Grid]:
        return [c.grid for c in self.cores]

    @property
    def bond_dims(self) -> list[int]:
        return [c.right_dim for c in self.cores[:-1]]

    @property
    def system_modes(self) -> list[int]:
        return [i for i, t in enumerate(self.tags) if t == SYSTEM]

    def copy(self) -> FmpsState:
        out = FmpsState([c.copy() for c in self.cores], self.tracker.copy(),
                        self.ledger.copy(), self.tags)
        out.center = self.center
        return out

    def check_bonds(self) -> None:
        if not self.cores:
            raise ValueError("state needs at least one mode")
        if self.cores[0].left_dim != 1 or self.cores[-1].right_dim != 1:
            raise ValueError("boundary cores must have outer bond dimension 1")
        for a, b in zip(self.cores[:-1], self.cores[1:]):
            if a.right_dim != b.left_dim:
                raise ValueError(f"bond mismatch {a.right_dim} != {b.left_dim}")

    def scale(self, factor: complex) -> None:
        """Multiply the wavefunction by ``factor`` (test hook; breaks normalization)."""
        self.cores[0].data = self.cores[0].data * factor

    def check_mode(self, i: int) -> None:
        if not 0 <= i < self.n_modes:
            raise IndexError(f"mode {i} out of range for {self.n_modes} modes")

    def to_dense(self) -> np.ndarray:
        """Full amplitude tensor over the product grid (small states only)."""
        out = self.cores[0].data[0]
        for c in self.cores[1:]:
            out = np.tensordot(out, c.data, axes=(out.ndim - 1, 0))
        return out[..., 0]

    def __repr__(self) -> str:
        return f"FmpsState(modes={self.n_modes}, bonds={self.bond_dims})"


def _sqrt_w(grid: Grid) -> np.ndarray:
    return np.sqrt(grid.weights)


# ---------------------------------------------------------------------------
# construction


def from_product(wavefunctions: Sequence[SampledFunction], tol: float = 1e-4) -> FmpsState:
    cores = []
    for k, f in enumerate(wavefunctions):
        nrm = f.norm()
        if abs(nrm - 1.0) > tol:
            raise NormalizationError(f"input {k} has norm {nrm:.6g}, expected 1")
        cores.append(Core((f.values / nrm)[None, :, None], f.grid))
    state = FmpsState(cores)
    state.center = 0
    return state


# ---------------------------------------------------------------------------
# contractions


def transfer(env: np.ndarray, core: Core) -> np.ndarray:
    """Push a left environment ``E[a, a']`` (ket, bra) through ``core``."""
    g = core.data
    x = np.tensordot(env, g, axes=(0, 0))  # (a', q, b)
    xw = x * core.grid.weights[None, :, None]
    l, n, r = g.shape
    return xw.reshape(l * n, r).T @ g.conj().reshape(l * n, r)


def transfer_right(env: np.ndarray, core: Core) -> np.ndarray:
    """Push a right environment ``E[b, b']`` (ket, bra) through ``core``."""
    g = core.data
    x = np.tensordot(g, env, axes=(2, 0))  # (a, q, b')
    xw = x * core.grid.weights[None, :, None]
    l, n, r = g.shape
    return xw.reshape(l, n * r) @ g.conj().reshape(l, n * r).T


def norm(state: FmpsState) -> float:
    env = np.ones((1, 1), dtype=np.complex128)
    for c in state.cores:
        env = transfer(env, c)
    return math.sqrt(max(env[0, 0].real, 0.0))


def merge(state: FmpsState, j: int) -> TwoSiteBlock:
    if not 0 <= j < state.n_modes - 1:
        raise IndexError(f"cannot merge at {j} for {state.n_modes} modes")
    a, b = state.cores[j], state.cores[j + 1]
    theta = np.tensordot(a.data, b.data, axes=(2, 0))
    return TwoSiteBlock(theta, a.grid, b.grid)


# ---------------------------------------------------------------------------
# canonical form


def _move_right(state: FmpsState, j: int) -> None:
    c, nxt = state.cores[j], state.cores[j + 1]
    sw = _sqrt_w(c.grid)
    l, n, r = c.data.shape
    q, rr = scipy.linalg.qr((c.data * sw[None, :, None]).reshape(l * n, r), mode="economic")
    k = q.shape[1]
    c.data = q.reshape(l, n, k) / sw[None, :, None]
    nxt.data = np.tensordot(rr, nxt.data, axes=(1, 0))


def _move_left(state: FmpsState, j: int) -> None:
    c, prv = state.cores[j], state.cores[j - 1]
    sw = _sqrt_w(c.grid)
    l, n, r = c.data.shape
    q, rr = scipy.linalg.qr((c.data * sw[None, :, None]).reshape(l, n * r).conj().T,
                            mode="economic")
    k = q.shape[1]
    c.data = q.conj().T.reshape(k, n, r) / sw[None, :, None]
    prv.data = np.tensordot(prv.data, rr.conj().T, axes=(2, 0))


def canonicalize(state: FmpsState, center: int) -> FmpsState:
    """Bring ``state`` into mixed-canonical form around ``center`` (in place).

    Cores left of the centre become left-orthonormal and cores right of it
    right-orthonormal under the quadrature inner product. The represented
    wavefunction is unchanged. Returns ``state`` for chaining.
    """
    state.check_mode(center)
    if state.center is None:
        lo, hi = 0, state.n_modes - 1
    else:
        lo = hi = state.center
    for j in range(lo, center):
        _move_right(state, j)
    for j in range(hi, center, -1):
        _move_left(state, j)
    state.center = center
    return state


# ---------------------------------------------------------------------------
# truncation


def choose_rank(weights: np.ndarray, policy: TruncationPolicy) -> int:
    """Smallest rank whose retained weight reaches the policy target."""
    n = len(weights)
    # tail[k] = weight discarded when keeping k values
    tail = np.concatenate([np.cumsum(weights[::-1])[::-1], [0.0]])
    allowed = max(1.0 - policy.gate_fidelity, 0.0) + WEIGHT_FLOOR
    r = int(np.argmax(tail <= allowed))
    r = max(r, 1)
    while r < n and r < policy.max_bond and weights[r] >= weights[r - 1] * (1 - TIE_RTOL):
        r += 1
    return min(r, policy.max_bond, n)


def _svd(mat: np.ndarray):
    if not np.all(np.isfinite(mat)):
        raise SvdFailure("non-finite entries in block")
    try:
        return scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesdd",
                                check_finite=False)
    except np.linalg.LinAlgError:
        try:
            return scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesvd",
                                    check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise SvdFailure(str(exc)) from exc


def schmidt_split(block: TwoSiteBlock, policy: TruncationPolicy, absorb: str = "right"):
    """Split a two-site block by truncated SVD.

    Returns ``(left_core, right_core, truncation_fidelity, spectrum)``. The
    retained part is renormalized to unit weight and the singular values are
    absorbed into the core named by ``absorb``. The spectrum holds the full
    (untruncated) normalized squared singular values.
    """
    theta = block.data
    l, n1, n2, r = theta.shape
    sw1, sw2 = _sqrt_w(block.grid_left), _sqrt_w(block.grid_right)
    mat = (theta * sw1[None, :, None, None] * sw2[None, None, :, None]).reshape(l * n1, n2 * r)
    u, s, vh = _svd(mat)
    total = float(np.sum(s * s))
    if total <= 0.0:
        raise SvdFailure("block has zero norm")
    weights = s * s / total
    k = choose_rank(weights, policy)
    fidelity = float(np.sum(weights[:k]))
    sk = s[:k] / math.sqrt(float(np.sum(s[:k] ** 2)))
    uk, vk = u[:, :k], vh[:k]
    if absorb == "right":
        vk = sk[:, None] * vk
    elif absorb == "left":
        uk = uk * sk[None, :]
    else:
        raise ValueError(f"absorb must be 'left' or 'right', got {absorb!r}")
    left = Core(uk.reshape(l, n1, k) / sw1[None, :, None], block.grid_left)
    right = Core(vk.reshape(k, n2, r) / sw2[None, :, None], block.grid_right)
    return left, right, fidelity, SchmidtSpectrum(weights)


def apply_block(state: FmpsState, j: int, block: TwoSiteBlock, policy: TruncationPolicy,
                absorb: str = "right") -> tuple[float, SchmidtSpectrum]:
    """Split ``block`` back into sites ``j, j+1`` and record the fidelity.

    ``state`` must be canonical around ``j`` or ``j+1`` before the block was
    formed so the local truncation is globally optimal.
    """
    left, right, fid, spec = schmidt_split(block, policy, absorb)
    state.cores[j], state.cores[j + 1] = left, right
    state.center = j + 1 if absorb == "right" else j
    state.ledger.record(fid)
    return fid, spec


def total_fidelity(ledger: FidelityLedger) -> float:
    """Product of the per-gate fidelities (1 for an empty ledger)."""
    return float(np.prod(ledger.per_gate_fidelities)) if ledger.per_gate_fidelities else 1.0


def max_bond(state: FmpsState) -> int:
    return max(state.bond_dims, default=1)


def bond_spectrum(state: FmpsState, j: int) -> SchmidtSpectrum:
    """Schmidt weights across the cut between modes ``j`` and ``j+1``."""
    if not 0 <= j < state.n_modes - 1:
        raise IndexError(f"no bond {j} for {state.n_modes} modes")
    work = canonicalize(state.copy(), j)
    c = work.cores[j]
    l, n, r = c.data.shape
    mat = (c.data * _sqrt_w(c.grid)[None, :, None]).reshape(l * n, r)
    s = scipy.linalg.svd(mat, compute_uv=False, check_finite=False)
    w = s * s
    return SchmidtSpectrum(w / w.sum())


def swap_modes(state: FmpsState, j: int, policy: TruncationPolicy = EXACT) -> FmpsState:
    """Exchange modes ``j`` and ``j+1`` including grids, tags and tracker rows."""
    if not 0 <= j < state.n_modes - 1:
        raise IndexError(f"cannot swap at {j} for {state.n_modes} modes")
    canonicalize(state, j)
    blk = merge(state, j)
    swapped = TwoSiteBlock(blk.data.transpose(0, 2, 1, 3), blk.grid_right, blk.grid_left)
    apply_block(state, j, swapped, policy)
    state.tags[j], state.tags[j + 1] = state.tags[j + 1], state.tags[j]
    state.tracker.swap(j)
    return state
