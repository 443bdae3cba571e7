"""Declarative circuit descriptions (JSON schema ``fmps-circuit/1``).

A circuit lists per-mode inputs, an ordered gate list, optional uniform loss,
and measurements. Any input or gate may give ``"random"`` instead of
parameters; :func:`sample_random_params` resolves those from a counter-based
generator keyed by ``(seed, kind, index)``, so the value drawn for gate ``k``
does not depend on how many gates or modes the circuit has.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import CircuitError
from .gates import GATE_TYPES, BeamSplit, GateParams
from .grid import Grid, Interval, SampledFunction
from .states import CatParams, GkpParams, cat, coherent, gkp, squeezed, vacuum

SCHEMA = "fmps-circuit/1"
RANDOM = "random"
DEFAULT_N_GRID = 200

FAMILIES = ("vacuum", "coherent", "squeezed", "cat", "gkp")
MEASUREMENT_KINDS = ("homodyne", "p_homodyne", "photon_number", "heterodyne")


@dataclass(frozen=True)
class FamilyDefaults:
    q_range: tuple[float, float]
    gate_fidelity: float
    max_bond: int


# per-family settings used by the benchmark circuits
FAMILY_DEFAULTS = {
    "squeezed": FamilyDefaults((-5.0, 5.0), 0.99, 50),
    "cat": FamilyDefaults((-8.0, 8.0), 0.99, 50),
    "gkp": FamilyDefaults((-10.0, 10.0), 0.99, 40),
    "coherent": FamilyDefaults((-8.0, 8.0), 0.99, 50),
    "vacuum": FamilyDefaults((-5.0, 5.0), 0.99, 50),
}
DEFAULT_BOUNDS = {"squeeze": 0.5, "alpha": 2.0}
GKP_DEFAULT = 0.453

# stream identifiers for the counter-based generator
_INPUT_STREAM = 1
_GATE_STREAM = 2


@dataclass
class InputSpec:
    family: str
    params: dict | None = None  # None means "random"

    def to_dict(self) -> dict:
        return {"family": self.family, "params": RANDOM if self.params is None else self.params}


@dataclass
class GateSpec:
    gate: str
    modes: tuple
    params: dict | None = None

    def to_dict(self) -> dict:
        return {"gate": self.gate, "modes": list(self.modes),
                "params": RANDOM if self.params is None else self.params}

    def build(self) -> GateParams:
        if self.params is None:
            raise CircuitError(f"gate {self.gate} on {self.modes} is unresolved")
        try:
            return GATE_TYPES[self.gate](**self.params)
        except TypeError as exc:
            raise CircuitError(f"bad parameters for {self.gate}: {self.params}") from exc


@dataclass
class MeasurementSpec:
    kind: str
    mode: int
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "mode": self.mode, "params": self.params}


@dataclass
class Settings:
    n_grid: int = DEFAULT_N_GRID
    q_range: tuple | None = None
    gate_fidelity: float | None = None
    max_bond: int | None = None
    n_sigmas: float = 5.0
    seed: int = 0
    preserve_resolution: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["q_range"] is not None:
            d["q_range"] = list(d["q_range"])
        return d


@dataclass
class CircuitSpec:
    modes: int
    inputs: list
    gates: list = field(default_factory=list)
    loss: float | None = None
    measurements: list = field(default_factory=list)
    settings: Settings = field(default_factory=Settings)
    bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))

    def __post_init__(self):
        validate(self)

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "modes": self.modes,
            "inputs": [i.to_dict() for i in self.inputs],
            "gates": [g.to_dict() for g in self.gates],
            "loss": self.loss,
            "measurements": [m.to_dict() for m in self.measurements],
            "bounds": dict(self.bounds),
            "settings": self.settings.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> CircuitSpec:
        if d.get("schema", SCHEMA) != SCHEMA:
            raise CircuitError(f"unsupported schema {d.get('schema')!r}")
        try:
            def params(p):
                return None if p == RANDOM else dict(p or {})

            inputs = [InputSpec(i["family"], params(i.get("params"))) for i in d["inputs"]]
            gates = [GateSpec(g["gate"], tuple(g["modes"]), params(g.get("params")))
                     for g in d.get("gates", [])]
            meas = [MeasurementSpec(m["kind"], int(m["mode"]), dict(m.get("params") or {}))
                    for m in d.get("measurements", [])]
            st = dict(d.get("settings") or {})
            if st.get("q_range") is not None:
                st["q_range"] = tuple(float(x) for x in st["q_range"])
            settings = Settings(**st)
            bounds = dict(DEFAULT_BOUNDS)
            bounds.update(d.get("bounds") or {})
            return cls(int(d["modes"]), inputs, gates, d.get("loss"), meas, settings, bounds)
        except (KeyError, TypeError) as exc:
            raise CircuitError(f"malformed circuit description: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> CircuitSpec:
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise CircuitError(f"invalid JSON: {exc}") from exc

    def with_settings(self, **changes) -> CircuitSpec:
        out = copy.deepcopy(self)
        out.settings = replace(out.settings, **changes)
        return out

    @property
    def is_resolved(self) -> bool:
        return all(i.params is not None for i in self.inputs) and all(
            g.params is not None for g in self.gates)


def load_circuit(path) -> CircuitSpec:
    return CircuitSpec.from_json(Path(path).read_text())


def save_circuit(spec: CircuitSpec, path) -> None:
    Path(path).write_text(spec.to_json() + "\n")


def validate(spec: CircuitSpec) -> None:
    if spec.modes < 1:
        raise CircuitError(f"need at least one mode, got {spec.modes}")
    if len(spec.inputs) != spec.modes:
        raise CircuitError(f"{len(spec.inputs)} inputs for {spec.modes} modes")
    for inp in spec.inputs:
        if inp.family not in FAMILIES:
            raise CircuitError(f"unknown input family {inp.family!r}")
    for k, g in enumerate(spec.gates):
        if g.gate not in GATE_TYPES:
            raise CircuitError(f"gate {k}: unknown gate {g.gate!r}")
        want = 2 if GATE_TYPES[g.gate] is BeamSplit else 1
        if len(g.modes) != want or len(set(g.modes)) != want:
            raise CircuitError(f"gate {k}: {g.gate} needs {want} distinct mode(s), got {g.modes}")
        if any(not 0 <= int(m) < spec.modes for m in g.modes):
            raise CircuitError(f"gate {k}: mode out of range in {g.modes}")
    for m in spec.measurements:
        if m.kind not in MEASUREMENT_KINDS:
            raise CircuitError(f"unknown measurement kind {m.kind!r}")
        if not 0 <= m.mode < spec.modes:
            raise CircuitError(f"measurement mode {m.mode} out of range")
    if spec.loss is not None and not 0.0 <= spec.loss < 1.0:
        raise CircuitError(f"loss must lie in [0, 1), got {spec.loss}")


# ---------------------------------------------------------------------------
# settings resolution


def mode_interval(spec: CircuitSpec, mode: int) -> Interval:
    if spec.settings.q_range is not None:
        return Interval(*spec.settings.q_range)
    return Interval(*FAMILY_DEFAULTS[spec.inputs[mode].family].q_range)


def effective_policy_values(spec: CircuitSpec) -> tuple[float, int]:
    fams = [FAMILY_DEFAULTS[i.family] for i in spec.inputs]
    fid = spec.settings.gate_fidelity
    if fid is None:
        fid = max(f.gate_fidelity for f in fams)
    mb = spec.settings.max_bond
    if mb is None:
        mb = min(f.max_bond for f in fams)
    return fid, mb


# ---------------------------------------------------------------------------
# random parameters


def stream(seed: int, kind: int, index: int) -> np.random.Generator:
    """Generator keyed by the seed whose counter encodes ``(kind, index)``."""
    bitgen = np.random.Philox(key=int(seed) & (2**64 - 1), counter=[0, 0, kind, index])
    return np.random.Generator(bitgen)


def _bound(spec: CircuitSpec, name: str, what: str) -> float:
    if name not in spec.bounds or spec.bounds[name] is None:
        raise CircuitError(f"random {what} needs bounds[{name!r}]")
    return float(spec.bounds[name])


def _random_input(spec: CircuitSpec, family: str, rng: np.random.Generator) -> dict:
    two_pi = 2 * math.pi
    if family == "vacuum":
        return {}
    if family == "squeezed":
        b = _bound(spec, "squeeze", "squeezing")
        return {"s": float(rng.uniform(-b, b))}
    if family in ("coherent", "cat"):
        b = _bound(spec, "alpha", "amplitude")
        r, ph = float(rng.uniform(0, b)), float(rng.uniform(0, two_pi))
        out = {"alpha": [r * math.cos(ph), r * math.sin(ph)]}
        if family == "cat":
            out["theta"] = float(rng.uniform(0, two_pi))
        return out
    if family == "gkp":
        return {"theta": float(rng.uniform(0, two_pi)), "phi": float(rng.uniform(0, two_pi)),
                "kappa": GKP_DEFAULT, "delta": GKP_DEFAULT}
    raise CircuitError(f"unknown input family {family!r}")


def _random_gate(spec: CircuitSpec, gate: str, rng: np.random.Generator) -> dict:
    two_pi = 2 * math.pi
    if gate == "beam_split":
        return {"theta": float(rng.uniform(0, two_pi))}
    if gate == "phase_rotate":
        return {"phi": float(rng.uniform(0, two_pi)), "n_sigmas": spec.settings.n_sigmas}
    if gate == "squeeze":
        b = _bound(spec, "squeeze", "squeezing")
        return {"s": float(rng.uniform(-b, b))}
    if gate == "displace":
        b = _bound(spec, "displacement", "displacement")
        return {"d1": float(rng.uniform(-b, b)), "d2": float(rng.uniform(-b, b))}
    if gate == "cubic_phase":
        b = _bound(spec, "cubic", "cubic phase")
        return {"gamma": float(rng.uniform(-b, b))}
    raise CircuitError(f"unknown gate {gate!r}")


def sample_random_params(seed: int, spec: CircuitSpec) -> CircuitSpec:
    """Copy of ``spec`` with every ``"random"`` entry drawn from ``seed``."""
    out = copy.deepcopy(spec)
    out.settings = replace(out.settings, seed=int(seed))
    for k, inp in enumerate(out.inputs):
        if inp.params is None:
            inp.params = _random_input(out, inp.family, stream(seed, _INPUT_STREAM, k))
    for k, g in enumerate(out.gates):
        if g.params is None:
            g.params = _random_gate(out, g.gate, stream(seed, _GATE_STREAM, k))
    return out


def resolve(spec: CircuitSpec) -> CircuitSpec:
    return spec if spec.is_resolved else sample_random_params(spec.settings.seed, spec)


# ---------------------------------------------------------------------------
# inputs


def build_input(inp: InputSpec, grid: Grid) -> SampledFunction:
    p = inp.params
    if p is None:
        raise CircuitError(f"{inp.family} input is unresolved")
    if inp.family == "vacuum":
        return vacuum(grid)
    if inp.family == "squeezed":
        return squeezed(float(p["s"]), grid)
    if inp.family == "coherent":
        return coherent(complex(*p["alpha"]), grid)
    if inp.family == "cat":
        return cat(CatParams(complex(*p["alpha"]), float(p.get("theta", 0.0))), grid)
    if inp.family == "gkp":
        return gkp(GkpParams(float(p.get("theta", 0.0)), float(p.get("phi", 0.0)),
                             float(p.get("kappa", GKP_DEFAULT)), float(p.get("delta", GKP_DEFAULT))),
                   grid)
    raise CircuitError(f"unknown input family {inp.family!r}")


def input_wavefunctions(spec: CircuitSpec) -> list[SampledFunction]:
    return [build_input(inp, Grid(mode_interval(spec, k), spec.settings.n_grid))
            for k, inp in enumerate(spec.inputs)]


# ---------------------------------------------------------------------------
# standard circuits


def _settings(seed: int, **overrides) -> Settings:
    return Settings(seed=seed, **overrides)


def _all_homodyne(m: int) -> list:
    return [MeasurementSpec("homodyne", k) for k in range(m)]


def build_cascaded(m: int, family: str = "squeezed", seed: int = 0, measure: bool = True,
                   **settings) -> CircuitSpec:
    """Beam splitters on (0,1), (1,2), ..., (m-2, m-1) with random angles."""
    if m < 2:
        raise CircuitError(f"cascaded circuit needs m >= 2, got {m}")
    gates = [GateSpec("beam_split", (j, j + 1)) for j in range(m - 1)]
    return CircuitSpec(m, [InputSpec(family) for _ in range(m)], gates, None,
                       _all_homodyne(m) if measure else [], _settings(seed, **settings))


def brickwall_pairs(m: int, layers: int) -> list[tuple[int, int]]:
    """Odd layers couple (0,1), (2,3), ...; even layers couple (1,2), (3,4), ..."""
    pairs = []
    for layer in range(layers):
        start = layer % 2
        pairs.extend((j, j + 1) for j in range(start, m - 1, 2))
    return pairs


def build_brickwall(m: int, layers: int, family: str = "squeezed", seed: int = 0,
                    measure: bool = True, **settings) -> CircuitSpec:
    if m < 2 or layers < 1:
        raise CircuitError(f"brick wall needs m >= 2 and layers >= 1, got {m}, {layers}")
    gates = [GateSpec("beam_split", p) for p in brickwall_pairs(m, layers)]
    return CircuitSpec(m, [InputSpec(family) for _ in range(m)], gates, None,
                       _all_homodyne(m) if measure else [], _settings(seed, **settings))


def squeezed_pair_spec(theta: float, s: float = 1.0, box: float = 10.0,
                       gate_fidelity: float = 0.999, n_grid: int = DEFAULT_N_GRID) -> CircuitSpec:
    """Two oppositely squeezed modes meeting on one beam splitter."""
    return CircuitSpec(
        2, [InputSpec("squeezed", {"s": s}), InputSpec("squeezed", {"s": -s})],
        [GateSpec("beam_split", (0, 1), {"theta": theta})], None, [],
        Settings(n_grid=n_grid, q_range=(-box, box), gate_fidelity=gate_fidelity, max_bond=n_grid))


def squeezed_vacuum_spec(s: float = 0.4, theta: float = math.pi / 4, n_max: int = 50,
                         box_width: float = 10.0, gate_fidelity: float = 0.999,
                         n_grid: int = DEFAULT_N_GRID, max_bond: int = 50) -> CircuitSpec:
    """Squeezed light and vacuum on a beam splitter; photon counting on the second port."""
    half = box_width / 2
    return CircuitSpec(
        2, [InputSpec("squeezed", {"s": s}), InputSpec("vacuum", {})],
        [GateSpec("beam_split", (0, 1), {"theta": theta})], None,
        [MeasurementSpec("photon_number", 1, {"n_max": n_max})],
        Settings(n_grid=n_grid, q_range=(-half, half), gate_fidelity=gate_fidelity,
                 max_bond=max_bond))
