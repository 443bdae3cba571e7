"""Bounding-box bookkeeping across gates.

The box is stored as an axis-aligned *base* box plus an accumulated
orthogonal matrix ``rotation``; the support of the state is assumed to lie
inside ``rotation @ base``. The per-mode intervals handed to the grids are
the axis-aligned hull of that oriented box, always recomputed from the base
so repeated beam splitters do not inflate it.
"""
from __future__ import annotations

import numpy as np

from .grid import Interval

_UNIT_TOL = 1e-12


class DomainTracker:
    def __init__(self, intervals):
        intervals = list(intervals)
        self.centers = np.array([iv.center for iv in intervals], dtype=np.float64)
        self.halfwidths = np.array([0.5 * iv.width for iv in intervals], dtype=np.float64)
        self.rotation = np.eye(len(intervals))

    @property
    def n_modes(self) -> int:
        return len(self.centers)

    def copy(self) -> DomainTracker:
        out = DomainTracker.__new__(DomainTracker)
        out.centers = self.centers.copy()
        out.halfwidths = self.halfwidths.copy()
        out.rotation = self.rotation.copy()
        return out

    @property
    def base_intervals(self) -> list[Interval]:
        return [Interval(c - w, c + w) for c, w in zip(self.centers, self.halfwidths)]

    def interval(self, i: int) -> Interval:
        row = self.rotation[i]
        c = float(row @ self.centers)
        w = float(np.abs(row) @ self.halfwidths)
        return Interval(c - w, c + w)

    def intervals(self) -> list[Interval]:
        return [self.interval(i) for i in range(self.n_modes)]

    # -- updates -----------------------------------------------------------

    def rotate(self, j: int, k: int, theta: float) -> None:
        """Compose the beam-splitter rotation ``q_j, q_k -> O (q_j, q_k)``."""
        c, s = np.cos(theta), np.sin(theta)
        rj = self.rotation[j].copy()
        rk = self.rotation[k].copy()
        self.rotation[j] = c * rj - s * rk
        self.rotation[k] = s * rj + c * rk

    def shift(self, i: int, d: float) -> None:
        # translating q_i by d moves the base centre by rotation.T @ (d e_i)
        self.centers += d * self.rotation[i]

    def scale(self, i: int, factor: float) -> None:
        k, _ = self._unit_row(i)
        self.centers[k] *= factor
        self.halfwidths[k] *= abs(factor)

    def set_interval(self, i: int, interval: Interval) -> None:
        k, sign = self._unit_row(i)
        self.centers[k] = sign * interval.center
        self.halfwidths[k] = 0.5 * interval.width

    def insert(self, position: int, interval: Interval) -> None:
        m = self.n_modes
        rot = np.eye(m + 1)
        keep = [i for i in range(m + 1) if i != position]
        rot[np.ix_(keep, keep)] = self.rotation
        self.rotation = rot
        self.centers = np.insert(self.centers, position, interval.center)
        self.halfwidths = np.insert(self.halfwidths, position, 0.5 * interval.width)

    def swap(self, j: int) -> None:
        self.rotation[[j, j + 1]] = self.rotation[[j + 1, j]]

    def rebase(self) -> None:
        """Replace the oriented box by its axis-aligned hull."""
        current = self.intervals()
        self.centers = np.array([iv.center for iv in current])
        self.halfwidths = np.array([0.5 * iv.width for iv in current])
        self.rotation = np.eye(self.n_modes)

    def _unit_row(self, i: int) -> tuple[int, float]:
        """Base axis that mode ``i`` maps to one-to-one, rebasing if it is mixed."""
        row = self.rotation[i]
        k = int(np.argmax(np.abs(row)))
        col = self.rotation[:, k]
        if abs(abs(row[k]) - 1.0) > _UNIT_TOL or abs(abs(col[i]) - 1.0) > _UNIT_TOL:
            self.rebase()
            return i, 1.0
        sign = float(np.sign(row[k]))
        # clean accumulated round-off so the axis stays exactly decoupled
        self.rotation[i] = 0.0
        self.rotation[:, k] = 0.0
        self.rotation[i, k] = sign
        return k, sign
