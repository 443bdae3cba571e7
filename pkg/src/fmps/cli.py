"""Command-line entry point: ``fmps {run,sweep,oracle-check,bench}``.

Exit codes: 0 success, 1 usage or input error, 2 simulation error,
3 oracle check above tolerance.
"""
from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

from . import measure as ms
from . import oracle
from .bench import RunReport, emit_csv, emit_json, execute, run
from .circuit import (CircuitSpec, build_brickwall, build_cascaded, input_wavefunctions,
                      load_circuit, resolve)
from .errors import CircuitError, FmpsError

EXIT_OK, EXIT_USAGE, EXIT_SIM, EXIT_ORACLE = 0, 1, 2, 3
SWEEPABLE = ("n_grid", "gate_fidelity", "max_bond", "n_sigmas", "seed", "loss", "theta")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int)
    p.add_argument("--n-grid", type=int)
    p.add_argument("--gate-fidelity", type=float)
    p.add_argument("--max-bond", type=int)
    p.add_argument("--loss", type=float)
    p.add_argument("--n-sigmas", type=float)
    p.add_argument("--output", type=Path)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--ms-floor", action="store_true",
                   help="floor every phase timing at 1 ms")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fmps", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="execute a circuit file")
    p.add_argument("--circuit", type=Path, required=True)
    _add_overrides(p)

    p = sub.add_parser("sweep", help="vary one setting and emit one report per value")
    p.add_argument("--circuit", type=Path, required=True)
    p.add_argument("--vary", choices=SWEEPABLE, required=True)
    p.add_argument("--values", required=True, help="comma-separated list")
    _add_overrides(p)

    p = sub.add_parser("oracle-check", help="compare FMPS with an independent oracle")
    p.add_argument("--circuit", type=Path, required=True)
    p.add_argument("--tolerance", type=float)
    _add_overrides(p)

    p = sub.add_parser("bench", help="scaling runs over a list of mode counts")
    p.add_argument("--layout", choices=("cascaded", "brickwall"), default="cascaded")
    p.add_argument("--family", choices=("squeezed", "cat", "gkp"), default="squeezed")
    p.add_argument("--modes", default="4,8,16")
    p.add_argument("--layers", type=int, default=3)
    _add_overrides(p)
    return parser


def _apply_overrides(spec: CircuitSpec, args) -> CircuitSpec:
    changes = {}
    for name in ("seed", "n_grid", "gate_fidelity", "max_bond", "n_sigmas"):
        v = getattr(args, name, None)
        if v is not None:
            changes[name] = v
    out = spec.with_settings(**changes) if changes else copy.deepcopy(spec)
    if getattr(args, "loss", None) is not None:
        out.loss = args.loss
    return out


def _vary(spec: CircuitSpec, key: str, raw: str) -> CircuitSpec:
    if key == "theta":
        out = copy.deepcopy(spec)
        for g in out.gates:
            if g.gate == "beam_split":
                g.params = {"theta": float(raw)}
        return out
    if key == "loss":
        out = copy.deepcopy(spec)
        out.loss = float(raw)
        return out
    conv = int if key in ("n_grid", "max_bond", "seed") else float
    return spec.with_settings(**{key: conv(raw)})


def _write(reports: list[RunReport], args) -> None:
    text = emit_csv(reports) if args.format == "csv" else emit_json(reports)
    if args.output:
        args.output.write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _load(args) -> CircuitSpec:
    try:
        return _apply_overrides(load_circuit(args.circuit), args)
    except FileNotFoundError as exc:
        raise UsageError(f"circuit file not found: {args.circuit}") from exc
    except CircuitError as exc:
        raise UsageError(str(exc)) from exc


def _oracle_check(spec: CircuitSpec, tolerance: float | None) -> tuple[RunReport, bool]:
    spec = resolve(spec)
    res = execute(spec)
    photon = [m for m in spec.measurements if m.kind == "photon_number"]
    fams = [i.family for i in spec.inputs]
    if (photon and spec.modes == 2 and fams == ["squeezed", "vacuum"] and len(spec.gates) == 1
            and spec.gates[0].gate == "beam_split" and spec.loss is None):
        n_max = int(photon[0].params.get("n_max", 50))
        exact = oracle.analytic_photon_pmf(spec.inputs[0].params["s"],
                                           spec.gates[0].params["theta"], n_max)
        got = ms.photon_number_pmf(res.state, res.state.system_modes[photon[0].mode], n_max)
        eps = oracle.epsilon_n(exact, got)
        kind, tol = "epsilon_n", 1e-4 if tolerance is None else tolerance
    else:
        dense = oracle.dense_from_product(input_wavefunctions(spec))
        for g in spec.gates:
            dense = oracle.dense_apply_gate(dense, g.build(), g.modes)
        if spec.loss is not None:
            dense = oracle.dense_uniform_loss(dense, spec.loss)
        sys_dense = oracle.dense_system_modes(dense)
        pa = ms.system_pdfs(res.state)
        pb = [oracle.dense_marginal_pdf(dense, i) for i in sys_dense]
        eps = ms.quadrature_distance(pa, pb)
        kind, tol = "quadrature_distance", 1e-6 if tolerance is None else tolerance
    report = res.report
    report.epsilon = eps
    report.extra["oracle"] = {"measure": kind, "tolerance": tol}
    return report, eps <= tol


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            _write([run(_load(args), ms_floor=args.ms_floor)], args)
        elif args.command == "sweep":
            spec = _load(args)
            values = [v.strip() for v in args.values.split(",") if v.strip()]
            if not values:
                raise UsageError("--values is empty")
            reports = []
            for v in values:
                try:
                    varied = _vary(spec, args.vary, v)
                except (ValueError, CircuitError) as exc:
                    raise UsageError(f"bad value {v!r} for {args.vary}: {exc}") from exc
                reports.append(run(varied, ms_floor=args.ms_floor))
            _write(reports, args)
        elif args.command == "oracle-check":
            report, ok = _oracle_check(_load(args), args.tolerance)
            _write([report], args)
            print(f"{report.extra['oracle']['measure']} = {report.epsilon:.3e} "
                  f"(tolerance {report.extra['oracle']['tolerance']:.1e}): "
                  f"{'pass' if ok else 'FAIL'}", file=sys.stderr)
            return EXIT_OK if ok else EXIT_ORACLE
        elif args.command == "bench":
            try:
                modes = [int(m) for m in args.modes.split(",")]
            except ValueError as exc:
                raise UsageError(f"bad --modes list {args.modes!r}") from exc
            reports = []
            for m in modes:
                if args.layout == "cascaded":
                    spec = build_cascaded(m, args.family, args.seed or 0)
                else:
                    spec = build_brickwall(m, args.layers, args.family, args.seed or 0)
                reports.append(run(_apply_overrides(spec, args), ms_floor=args.ms_floor))
            _write(reports, args)
        return EXIT_OK
    except UsageError as exc:
        print(f"fmps: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CircuitError, json.JSONDecodeError) as exc:
        print(f"fmps: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FmpsError, ArithmeticError, MemoryError) as exc:
        print(f"fmps: simulation failed: {exc}", file=sys.stderr)
        return EXIT_SIM


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
