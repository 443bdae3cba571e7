"""Binary checkpoints of an :class:`FmpsState`.

Layout (all little-endian)::

    magic    8 bytes  b"FMPSSNAP"
    version  u32
    n_modes  u32
    center   i32      (-1 when not canonical)
    per mode: lo f64, hi f64, n_points u32, left u32, right u32, tag u8
    tracker: centers f64[m], halfwidths f64[m], rotation f64[m*m]
    ledger:  count u32, fidelities f64[count]
    per mode: core data complex64[left * n_points * right] (C order)

Core data is stored in single precision, so a round trip is exact only to
about 1e-7 relative.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import ANCILLA, SYSTEM, Core, FidelityLedger, FmpsState
from .grid import Grid, Interval
from .tracker import DomainTracker

MAGIC = b"FMPSSNAP"
VERSION = 1
_TAGS = {SYSTEM: 0, ANCILLA: 1}
_TAG_NAMES = {v: k for k, v in _TAGS.items()}
_MODE = struct.Struct("<ddIIIB")


def dumps(state: FmpsState) -> bytes:
    m = state.n_modes
    parts = [MAGIC, struct.pack("<IIi", VERSION, m, -1 if state.center is None else state.center)]
    for core, tag in zip(state.cores, state.tags):
        g = core.grid
        parts.append(_MODE.pack(g.lo, g.hi, g.n_points, core.left_dim, core.right_dim, _TAGS[tag]))
    tr = state.tracker
    for arr in (tr.centers, tr.halfwidths, tr.rotation):
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    fids = state.ledger.per_gate_fidelities
    parts.append(struct.pack("<I", len(fids)))
    parts.append(np.asarray(fids, dtype="<f8").tobytes())
    for core in state.cores:
        parts.append(np.ascontiguousarray(core.data, dtype="<c8").tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = memoryview(buf)
        self.pos = 0

    def take(self, n: int) -> memoryview:
        if self.pos + n > len(self.buf):
            raise ValueError("truncated snapshot")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str | struct.Struct):
        st = fmt if isinstance(fmt, struct.Struct) else struct.Struct(fmt)
        return st.unpack(self.take(st.size))

    def array(self, dtype: str, count: int) -> np.ndarray:
        size = np.dtype(dtype).itemsize * count
        return np.frombuffer(self.take(size), dtype=dtype).copy()


def loads(buf: bytes) -> FmpsState:
    rd = _Reader(buf)
    if bytes(rd.take(len(MAGIC))) != MAGIC:
        raise ValueError("not an FMPS snapshot")
    version, m, center = rd.unpack("<IIi")
    if version != VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    headers = [rd.unpack(_MODE) for _ in range(m)]
    tracker = DomainTracker.__new__(DomainTracker)
    tracker.centers = rd.array("<f8", m).astype(np.float64)
    tracker.halfwidths = rd.array("<f8", m).astype(np.float64)
    tracker.rotation = rd.array("<f8", m * m).astype(np.float64).reshape(m, m)
    (count,) = rd.unpack("<I")
    ledger = FidelityLedger(list(map(float, rd.array("<f8", count))))
    cores, tags = [], []
    for lo, hi, n, left, right, tag in headers:
        data = rd.array("<c8", left * n * right).astype(np.complex128).reshape(left, n, right)
        cores.append(Core(data, Grid(Interval(lo, hi), n)))
        tags.append(_TAG_NAMES[tag])
    if rd.pos != len(rd.buf):
        raise ValueError("trailing bytes in snapshot")
    state = FmpsState(cores, tracker, ledger, tags)
    state.center = None if center < 0 else center
    return state


def save(state: FmpsState, path) -> None:
    Path(path).write_bytes(dumps(state))


def load(path) -> FmpsState:
    return loads(Path(path).read_bytes())
