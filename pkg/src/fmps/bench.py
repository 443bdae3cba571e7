"""Circuit execution with per-phase timing, and report export.

A run has four timed phases: ``prep`` (input states), ``evolve`` (gates),
``noise`` (loss) and ``measure``. Numerical outputs depend only on the
resolved circuit, never on timing or thread count.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import measure as ms
from .circuit import (CircuitSpec, effective_policy_values, input_wavefunctions, resolve)
from .core import FmpsState, TruncationPolicy, from_product, max_bond, total_fidelity
from .errors import FmpsError, SimulationError
from .gates import apply_gate
from .noise import LossSpec, apply_uniform_loss

PHASES = ("prep", "evolve", "noise", "measure")
CSV_COLUMNS = ("m", "seed", "phase", "wall_ms", "max_bond", "total_fidelity", "epsilon")
TIMING_FLOOR_MS = 1.0


@dataclass
class RunReport:
    m: int
    seed: int
    wall_ms: dict
    bond_trajectory: list
    total_fidelity: float
    measurements: list
    settings: dict
    epsilon: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def max_bond(self) -> int:
        return max(self.bond_trajectory, default=1)

    @property
    def total_ms(self) -> float:
        return float(sum(self.wall_ms.values()))

    def to_dict(self) -> dict:
        return {"m": self.m, "seed": self.seed, "wall_ms": dict(self.wall_ms),
                "bond_trajectory": list(self.bond_trajectory),
                "total_fidelity": self.total_fidelity, "measurements": self.measurements,
                "settings": self.settings, "epsilon": self.epsilon, "extra": self.extra}

    @classmethod
    def from_dict(cls, d: dict) -> RunReport:
        return cls(d["m"], d["seed"], dict(d["wall_ms"]), list(d["bond_trajectory"]),
                   d["total_fidelity"], d["measurements"], d["settings"], d.get("epsilon"),
                   d.get("extra", {}))

    def numerical_outputs(self) -> dict:
        """Everything except timings; equal for repeated runs of one circuit."""
        d = self.to_dict()
        d.pop("wall_ms")
        return d


@dataclass
class RunResult:
    report: RunReport
    state: FmpsState
    spec: CircuitSpec


class _Timer:
    def __init__(self, floor_ms: float):
        self.floor = floor_ms
        self.times = {}

    @contextmanager
    def phase(self, name: str):
        t0 = time.perf_counter_ns()
        try:
            yield
        finally:
            self.times[name] = max((time.perf_counter_ns() - t0) / 1e6, self.floor)


def _measure(state: FmpsState, spec: CircuitSpec) -> list:
    systems = state.system_modes
    cache = ms.EnvironmentCache(state)
    out = []
    for k, m in enumerate(spec.measurements):
        i = systems[m.mode]
        try:
            if m.kind == "homodyne":
                rec = ms.quadrature_pdf(state, i, cache).to_record(m.mode, "homodyne")
            elif m.kind == "p_homodyne":
                rec = ms.p_quadrature_pdf(state, i, spec.settings.n_sigmas).to_record(
                    m.mode, "p_homodyne")
            elif m.kind == "photon_number":
                rec = ms.photon_number_pmf(state, i, int(m.params.get("n_max", 20)),
                                           cache).to_record(m.mode)
            else:
                pts = np.asarray(m.params.get("points", [[0.0, 0.0]]), dtype=np.float64)
                vals = ms.heterodyne_pdf(state, i, pts, cache)
                rec = {"mode": m.mode, "kind": "heterodyne", "outcomes": pts.tolist(),
                       "values": [float(v) for v in vals]}
        except FmpsError as exc:
            raise SimulationError(f"measurement {k} ({m.kind} on mode {m.mode}): {exc}") from exc
        out.append(rec)
    return out


def execute(spec: CircuitSpec, ms_floor: bool = False, parallel_loss: bool = False) -> RunResult:
    """Run ``spec`` (resolving random entries first) and keep the final state."""
    spec = resolve(spec)
    fid, mb = effective_policy_values(spec)
    policy = TruncationPolicy(fid, mb, spec.settings.preserve_resolution)
    timer = _Timer(TIMING_FLOOR_MS if ms_floor else 0.0)
    with timer.phase("prep"):
        state = from_product(input_wavefunctions(spec))
    trajectory = []
    with timer.phase("evolve"):
        for k, g in enumerate(spec.gates):
            try:
                apply_gate(state, g.build(), g.modes, policy)
            except FmpsError as exc:
                raise SimulationError(f"gate {k} ({g.gate} on {g.modes}): {exc}") from exc
            trajectory.append(max_bond(state))
    with timer.phase("noise"):
        if spec.loss is not None:
            apply_uniform_loss(state, LossSpec(spec.loss), policy, parallel=parallel_loss)
    with timer.phase("measure"):
        results = _measure(state, spec)
    settings = spec.settings.to_dict()
    settings.update(gate_fidelity=fid, max_bond=mb, loss=spec.loss)
    report = RunReport(spec.modes, spec.settings.seed, {p: timer.times[p] for p in PHASES},
                       trajectory, total_fidelity(state.ledger), results, settings)
    return RunResult(report, state, spec)


def run(spec: CircuitSpec, ms_floor: bool = False, parallel_loss: bool = False) -> RunReport:
    return execute(spec, ms_floor, parallel_loss).report


# ---------------------------------------------------------------------------
# export


def emit_json(reports: list[RunReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2)


def parse_json(text: str) -> list[RunReport]:
    return [RunReport.from_dict(d) for d in json.loads(text)]


@dataclass(frozen=True)
class CsvRow:
    m: int
    seed: int
    phase: str
    wall_ms: float
    max_bond: int
    total_fidelity: float
    epsilon: float | None


def csv_rows(report: RunReport) -> list[CsvRow]:
    return [CsvRow(report.m, report.seed, p, float(report.wall_ms[p]), report.max_bond,
                   float(report.total_fidelity), report.epsilon) for p in PHASES]


def emit_csv(reports: list[RunReport]) -> str:
    """One row per phase; floats written with ``repr`` so they parse back exactly."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        for row in csv_rows(r):
            w.writerow([row.m, row.seed, row.phase, repr(row.wall_ms), row.max_bond,
                        repr(row.total_fidelity), "" if row.epsilon is None else repr(row.epsilon)])
    return buf.getvalue()


def parse_csv(text: str) -> list[CsvRow]:
    rows = []
    for d in csv.DictReader(io.StringIO(text)):
        rows.append(CsvRow(int(d["m"]), int(d["seed"]), d["phase"], float(d["wall_ms"]),
                           int(d["max_bond"]), float(d["total_fidelity"]),
                           None if d["epsilon"] == "" else float(d["epsilon"])))
    return rows


def timing_ratios(times: dict) -> dict:
    """``t(2m) / t(m)`` for every doubling present in ``times`` (keyed by m)."""
    return {m: times[2 * m] / times[m] for m in sorted(times) if 2 * m in times and times[m] > 0}


def log_linear_r2(values) -> float:
    """Coefficient of determination of a straight-line fit to ``log(values)``."""
    y = np.log(np.asarray(values, dtype=np.float64))
    x = np.arange(len(y))
    coef = np.polyfit(x, y, 1)
    resid = y - np.polyval(coef, x)
    ss = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - float(np.sum(resid ** 2)) / ss if ss > 0 else 1.0


def geometric_doubling_ok(times: dict, factor: float = 4.0, last: int = 2) -> bool:
    ratios = timing_ratios(times)
    tail = [ratios[m] for m in sorted(ratios)][-last:]
    return all(math.isfinite(r) and r <= factor for r in tail)
