import math

import numpy as np
import pytest

from fmps.bench import (PHASES, TIMING_FLOOR_MS, RunReport, emit_csv, emit_json,
                        geometric_doubling_ok, log_linear_r2, parse_csv, parse_json, run,
                        timing_ratios)
from fmps.circuit import CircuitSpec, InputSpec, MeasurementSpec, Settings, build_cascaded


@pytest.fixture(scope="module")
def report():
    spec = build_cascaded(3, "squeezed", seed=2, n_grid=48)
    spec.measurements.append(MeasurementSpec("photon_number", 2, {"n_max": 6}))
    spec.measurements.append(MeasurementSpec("heterodyne", 0, {"points": [[0.0, 0.0], [1.0, -1.0]]}))
    return run(spec)


def test_report_contents(report):
    assert set(report.wall_ms) == set(PHASES)
    assert len(report.bond_trajectory) == 2
    assert 0 < report.total_fidelity <= 1
    kinds = [m["kind"] for m in report.measurements]
    assert kinds == ["homodyne"] * 3 + ["photon_number", "heterodyne"]
    assert report.settings["gate_fidelity"] == 0.99


def test_json_round_trip(report):
    back = parse_json(emit_json([report, report]))
    assert [r.to_dict() for r in back] == [report.to_dict()] * 2


def test_csv_round_trip(report):
    report = RunReport.from_dict({**report.to_dict(), "epsilon": 1.25e-7})
    rows = parse_csv(emit_csv([report]))
    assert [r.phase for r in rows] == list(PHASES)
    for row in rows:
        assert row.wall_ms == report.wall_ms[row.phase]
        assert row.total_fidelity == report.total_fidelity
        assert row.max_bond == report.max_bond and row.epsilon == 1.25e-7


def test_repeated_runs_match(report):
    spec = build_cascaded(3, "squeezed", seed=2, n_grid=48)
    spec.measurements.append(MeasurementSpec("photon_number", 2, {"n_max": 6}))
    spec.measurements.append(MeasurementSpec("heterodyne", 0, {"points": [[0.0, 0.0], [1.0, -1.0]]}))
    assert run(spec).numerical_outputs() == report.numerical_outputs()


def test_empty_circuit_and_timing_floor():
    spec = CircuitSpec(1, [InputSpec("vacuum", {})], settings=Settings(n_grid=16))
    r = run(spec, ms_floor=True)
    assert r.bond_trajectory == [] and r.max_bond == 1 and r.total_fidelity == 1.0
    assert all(t >= TIMING_FLOOR_MS for t in r.wall_ms.values())
    assert r.measurements == []


def test_lossy_run_keeps_system_indices():
    spec = build_cascaded(2, "coherent", seed=0, n_grid=40)
    spec.loss = 0.2
    r = run(spec)
    assert [m["mode"] for m in r.measurements] == [0, 1]


def test_timing_helpers():
    times = {4: 1.0, 8: 2.0, 16: 4.5, 32: 9.0}
    assert timing_ratios(times) == {4: 2.0, 8: 2.25, 16: 2.0}
    assert geometric_doubling_ok(times)
    assert not geometric_doubling_ok({1: 1.0, 2: 5.0, 4: 30.0})
    assert log_linear_r2(np.exp(0.3 * np.arange(6))) == pytest.approx(1.0)
    assert log_linear_r2([1.0, 1.0, 1.0]) == 1.0
    assert log_linear_r2([1, 100, 1, 100]) < 0.5
    assert math.isclose(RunReport(1, 0, {"a": 1.0, "b": 2.0}, [], 1.0, [], {}).total_ms, 3.0)
