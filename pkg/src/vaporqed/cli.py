"""Command-line front end: ``vaporqed <subcommand> [flags]``.

Every run that writes to ``--out`` leaves a ``manifest.json`` next to its
artifacts.  Without ``--out`` the main result is printed as JSON.
Exit status is 0 on success, 1 when a reproduced cell misses a hard
tolerance (or a computation fails), and 2 for usage errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from .core import TWO_PI, Detunings, ModeShape
from .dynamics import DriveSpec, integrate_absorption, integrate_retrieval, norm_balance, photon_input, retrieval_metrics
from .error_models import CASE2_ENERGY_OVER_G, DesignedPulse, sweep_dg, sweep_doppler
from .exceptions import ParameterDomainError, VaporQEDError
from .io import dumps_json, render_svg, write_csv, write_json, write_rows_csv, write_svg
from .multiplexing import plan
from .presets import get_preset, preset_names
from .protocols import (
    build_cluster_1d,
    build_ghz,
    build_ring,
    chain_edges,
    ghz_target,
    graph_stabilizers,
    photon_labels,
    photon_photon_cz,
    qkd_truth_table,
    qnd_detect,
    ring_edges,
)
from .reproduce import TARGETS
from .scattering import gate_sequence_measured, gate_sequence_unmeasured, gate_W, transmission
from .synthesis import case2_point, eta_finite_power, eta_max, synthesize_adiabatic, synthesize_exact, time_reverse


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _common(parser: argparse.ArgumentParser, preset_default: Optional[str] = "cavity1a") -> None:
    parser.add_argument("--preset", default=preset_default, help="preset name (see `vaporqed presets`)")
    parser.add_argument("--out", type=Path, help="directory for artifacts; prints JSON when omitted")
    parser.add_argument("--format", choices=("csv", "json", "svg"), action="append",
                        help="artifact formats to write (repeatable; default all)")
    parser.add_argument("--reproducible", action="store_true", help="leave timestamps out of every artifact")


def _pulse_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--T", type=float, dest="T", help="pulse duration in ns (default: preset)")
    parser.add_argument("--mode", choices=("sine2", "gauss"), default="sine2")
    parser.add_argument("--case", type=int, choices=(1, 2), help="1: resonant photon, 2: photon at -x0 g")
    parser.add_argument("--eta-r", type=float, help="target retrieval efficiency")
    parser.add_argument("--grid", type=int, default=4096, help="time samples")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vaporqed", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("presets", help="list preset names")

    p = sub.add_parser("synthesize", help="control pulse for a target efficiency")
    _common(p)
    _pulse_flags(p)
    p.add_argument("--method", choices=("exact", "adiabatic"), default="exact")

    for name, text in (("retrieve", "integrate retrieval with the synthesised pulse"),
                       ("absorb", "integrate absorption with the time-reversed pulse")):
        p = sub.add_parser(name, help=text)
        _common(p)
        _pulse_flags(p)

    p = sub.add_parser("transmission", help="amplitude transmission of the resonator")
    _common(p)
    coupling = p.add_mutually_exclusive_group()
    coupling.add_argument("--coupled", dest="coupled", action="store_true", default=True)
    coupling.add_argument("--empty", dest="coupled", action="store_false")
    p.add_argument("--delta-ap", type=float, default=0.0, help="atom-photon detuning in GHz")
    p.add_argument("--delta-cp", type=float, default=0.0, help="cavity-photon detuning in GHz")
    p.add_argument("--span", type=float, default=0.0, help="half-width in GHz of a common-detuning scan")
    p.add_argument("--grid", type=int, default=801)

    p = sub.add_parser("gate", help="two-qubit gate built from cavity reflections")
    _common(p)
    p.add_argument("--kind", choices=("measured", "unmeasured", "W"), default="measured")
    p.add_argument("--phi", type=float, default=0.0, help="coupling phase in rad")

    for name, default_span, text in (("sweep-dg", 0.1, "infidelity versus coupling drift dg/g"),
                                     ("sweep-doppler", 0.25, "infidelity versus Doppler shift dd/g")):
        p = sub.add_parser(name, help=text)
        _common(p)
        _pulse_flags(p)
        p.set_defaults(grid=21)
        p.add_argument("--span", type=float, default=default_span, help="half-width of the abscissa")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--absorb", action="store_true", help="sweep absorption instead of retrieval")

    p = sub.add_parser("multiplex", help="optimal number of probabilistically loaded cavities")
    _common(p, preset_default=None)
    p.add_argument("--p", type=float, required=True, help="probability a cavity holds an atom")

    p = sub.add_parser("protocol", help="state-vector protocols by branch enumeration")
    _common(p, preset_default=None)
    p.add_argument("kind", choices=("qkd", "ghz", "cluster", "ring", "cz", "qnd"))
    p.add_argument("--encoding", default="fock", help="fock/polarization for qkd; single_rail/dual_rail otherwise")
    p.add_argument("--basis", choices=("x", "y"), default="x")
    p.add_argument("--n", type=int, default=3, help="number of photons")

    p = sub.add_parser("reproduce", help="computed-versus-reference tables and figures")
    _common(p, preset_default=None)
    p.add_argument("target", choices=sorted(TARGETS))
    p.add_argument("--jobs", type=int, default=1)
    return parser


# ---------------------------------------------------------------- helpers


def _design(args) -> tuple[DesignedPulse, dict]:
    preset = get_preset(args.preset)
    overrides = {}
    if args.T is not None:
        preset = dataclasses.replace(preset, T=args.T)
        overrides["T"] = args.T
    case = args.case or preset.case
    if args.case is not None:
        overrides["case"] = args.case
    params = preset.params
    mode = ModeShape.gaussian(preset.T) if args.mode == "gauss" else ModeShape.sine_squared(preset.T)
    overrides["mode"] = args.mode
    delta_p = -case2_point(params).x0 * params.g if case == 2 else 0.0
    if args.eta_r is not None:
        eta = args.eta_r
        overrides["eta_r"] = eta
    elif case == 2:
        eta = float(eta_finite_power(params, CASE2_ENERGY_OVER_G * params.g, delta_p))
    elif preset.ref("infidelity") is not None:
        eta = 1.0 - preset.ref("infidelity")
    else:
        eta = 0.95 * eta_max(params, 0.0)
    det = Detunings.for_photon(delta_p)
    method = getattr(args, "method", "exact")
    synth = synthesize_adiabatic if method == "adiabatic" else synthesize_exact
    res = synth(params, mode, det, eta, args.grid)
    return DesignedPulse(preset, params, mode, det, res.pulse, eta), overrides


class Emitter:
    """Collects artifacts for one run and writes the manifest last."""

    def __init__(self, args, operation: str):
        self.args = args
        self.operation = operation
        self.formats = set(args.format or ("csv", "json", "svg"))
        self.out: Optional[Path] = args.out
        self.paths: list[str] = []
        self.started = time.perf_counter()

    def wants(self, fmt: str) -> bool:
        return self.out is not None and fmt in self.formats

    def json(self, name: str, payload: dict) -> None:
        if self.wants("json"):
            payload = dict(payload, manifest="manifest.json")
            self.paths.append(str(write_json(self.out / f"{name}.json", payload).name))

    def csv(self, name: str, columns: dict) -> None:
        if self.wants("csv"):
            self.paths.append(str(write_csv(self.out / f"{name}.csv", columns).name))

    def rows(self, name: str, header: Sequence[str], rows) -> None:
        if self.wants("csv"):
            self.paths.append(str(write_rows_csv(self.out / f"{name}.csv", header, rows).name))

    def svg(self, name: str, series, **labels) -> None:
        if self.wants("svg"):
            stamp = None if self.args.reproducible else time.strftime("%Y-%m-%dT%H:%M:%S")
            svg = render_svg(series, timestamp=stamp, **labels)
            svg = svg.replace("</svg>\n", "<!-- manifest: manifest.json -->\n</svg>\n")
            self.paths.append(str(write_svg(self.out / f"{name}.svg", svg).name))

    def finish(self, result: dict, overrides: Optional[dict] = None, tolerances: Optional[dict] = None,
               assumptions: Sequence[str] = (), grid: Optional[dict] = None) -> None:
        if self.out is None:
            print(dumps_json(result))
            return
        manifest: dict[str, Any] = {
            "operation": self.operation,
            "preset": getattr(self.args, "preset", None),
            "overrides": overrides or {},
            "grid": grid or {},
            "tolerances": tolerances or {},
            "assumptions": list(assumptions),
            "outputs": sorted(self.paths),
            "library_version": __version__,
        }
        if not self.args.reproducible:
            manifest["wall_clock_s"] = round(time.perf_counter() - self.started, 3)
        write_json(self.out / "manifest.json", manifest)
        print(dumps_json(result))


def _complex(z: complex) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


# ------------------------------------------------------------- subcommands


def cmd_synthesize(args) -> int:
    design, overrides = _design(args)
    pulse = design.pulse
    emit = Emitter(args, "synthesize")
    summary = {
        "eta_r": design.eta_r,
        "delta_p_ghz": design.detunings.delta_p / TWO_PI,
        "peak_omega0_ghz": float(np.max(pulse.omega0)) / TWO_PI,
        "energy_rad2_per_ns": pulse.energy,
        "truncated": pulse.truncated,
        "T_ns": design.mode.duration_T,
    }
    emit.csv("pulse", {"t_ns": pulse.grid, "omega0_ghz": pulse.omega0 / TWO_PI, "phi0_rad": pulse.phi0})
    emit.json("pulse", summary)
    emit.svg("pulse", [("Omega0 / 2pi", pulse.grid, pulse.omega0 / TWO_PI)],
             title="control pulse", xlabel="t (ns)", ylabel="GHz")
    emit.finish(summary, overrides, grid={"samples": args.grid})
    return 0


def cmd_retrieve(args, absorb: bool = False) -> int:
    design, overrides = _design(args)
    dp = design.detunings.delta_p
    if absorb:
        drive = DriveSpec(time_reverse(design.pulse), design.detunings, photon_input(design.mode, dp))
        traj = integrate_absorption(design.params, drive)
    else:
        traj = integrate_retrieval(design.params, DriveSpec(design.pulse, design.detunings))
    metrics = retrieval_metrics(traj, design.mode, dp)
    balance = norm_balance(design.params, traj)
    summary = {"eta_target": design.eta_r, "norm_residual": balance.residual}
    if absorb:
        summary["eta_abs"] = metrics.eta_abs
    else:
        summary.update(eta_r=metrics.eta_r, fidelity_F=metrics.fidelity_F, overlap=_complex(metrics.overlap))
    name = "absorb" if absorb else "retrieve"
    emit = Emitter(args, name)
    emit.csv("trajectory", {"t_ns": traj.grid, "c_s": traj.c_s, "c_e": traj.c_e, "c_g": traj.c_g,
                            "a_in": traj.a_in, "a_out": traj.a_out})
    emit.json(name, summary)
    emit.svg("populations", [("|c_s|^2", traj.grid, np.abs(traj.c_s) ** 2),
                             ("|c_e|^2", traj.grid, np.abs(traj.c_e) ** 2),
                             ("|c_g|^2", traj.grid, np.abs(traj.c_g) ** 2)],
             title=name, xlabel="t (ns)", ylabel="population")
    emit.finish(summary, overrides, tolerances={"rtol": 1e-9, "atol": 1e-12}, grid={"samples": args.grid})
    return 0


def cmd_transmission(args) -> int:
    params = get_preset(args.preset).params
    t0 = complex(transmission(params, TWO_PI * args.delta_ap, TWO_PI * args.delta_cp, args.coupled))
    summary = {"t": _complex(t0), "abs_t": abs(t0), "coupled": args.coupled,
               "cooperativity": params.cooperativity}
    emit = Emitter(args, "transmission")
    if args.span > 0:
        shift = np.linspace(-args.span, args.span, args.grid)
        t = transmission(params, TWO_PI * (args.delta_ap + shift), TWO_PI * (args.delta_cp + shift), args.coupled)
        emit.csv("transmission", {"detuning_ghz": shift, "t": t})
        emit.svg("transmission", [("|t|^2", shift, np.abs(t) ** 2)],
                 title="transmission", xlabel="common detuning (GHz)", ylabel="|t|^2")
    emit.json("transmission", summary)
    emit.finish(summary, {"delta_ap": args.delta_ap, "delta_cp": args.delta_cp, "coupled": args.coupled},
                grid={"points": args.grid if args.span > 0 else 1})
    return 0


def cmd_gate(args) -> int:
    if args.kind == "W":
        if args.preset is None:
            raise UsageError("--kind W needs --preset")
        gate, phi_w = gate_W(get_preset(args.preset).params)
        summary = dict(gate.to_json(), phi_W=phi_w)
    else:
        build = gate_sequence_measured if args.kind == "measured" else gate_sequence_unmeasured
        summary = build(args.phi).to_json()
    emit = Emitter(args, "gate")
    emit.json("gate", summary)
    emit.finish(summary, {"kind": args.kind, "phi": args.phi})
    return 0


def cmd_sweep(args, doppler: bool) -> int:
    design, overrides = _design(args)
    xs = np.linspace(-args.span, args.span, args.grid)
    sweep = sweep_doppler if doppler else sweep_dg
    result = sweep(design.preset, xs, absorb=args.absorb, jobs=args.jobs, design=design)
    summary = {"fit": {"linear": result.fit[0], "quadratic": result.fit[1]},
               "baseline_fidelity": result.baseline_fidelity, "max_fit_residual": result.residual,
               "warnings": list(result.warnings)}
    name = "sweep_doppler" if doppler else "sweep_dg"
    emit = Emitter(args, name)
    fit = result.fit[0] * xs + result.fit[1] * xs**2
    emit.csv(name, {"x": xs, "infidelity": result.infidelity, "fit": fit})
    emit.json(name, summary)
    emit.svg(name, [("computed", xs, result.infidelity), ("fit", xs, fit)], dashed=("fit",),
             title=name, xlabel="dd/g" if doppler else "dg/g", ylabel="1 - F")
    emit.finish(summary, dict(overrides, span=args.span, absorb=args.absorb), grid={"points": args.grid})
    return 0


def cmd_multiplex(args) -> int:
    params = get_preset(args.preset).params if args.preset else None
    result = plan(args.p, params)
    summary = {"p": result.p, "n_real": result.n_real, "n_opt": result.n_opt, "p_tilde": result.p_tilde}
    if result.passive_loss is not None:
        summary["passive_loss"] = {"linear": result.passive_loss[0], "exact": result.passive_loss[1]}
    emit = Emitter(args, "multiplex")
    emit.json("multiplex", summary)
    emit.finish(summary, {"p": args.p})
    return 0


def cmd_protocol(args) -> int:
    kind = args.kind
    if kind == "qkd":
        table = qkd_truth_table(args.encoding, args.basis)
        rows = [list(outcome) + [bit] for outcome, bit in table]
        width = len(table[0][0])
        header = [f"m{i + 1}" for i in range(width)] + ["parity_bit"]
        summary = {"encoding": args.encoding, "basis": args.basis, "rows": rows, "header": header}
    elif kind in ("ghz", "cluster"):
        encoding = "dual_rail" if args.encoding in ("dual_rail", "polarization") else "single_rail"
        outcome = (build_ghz if kind == "ghz" else build_cluster_1d)(args.n, encoding)
        labels = photon_labels(args.n)
        rows, header = [], ["branch", "probability", "check"]
        for branch in outcome.branches:
            if kind == "ghz":
                check = branch.post_state.fidelity(ghz_target(args.n, hadamard_frame=encoding == "dual_rail"))
            else:
                check = min(graph_stabilizers(branch.post_state, labels, chain_edges(labels)))
            outcome_text = " ".join(f"{k}={v:+d}" for k, v in sorted(branch.outcomes.items()))
            rows.append([outcome_text, branch.probability, check])
        summary = {"kind": kind, "encoding": encoding, "n": args.n, "rows": rows, "header": header}
    elif kind == "ring":
        state = build_ring(args.n)
        labels = photon_labels(args.n) + ["a"]
        stabs = graph_stabilizers(state, labels, ring_edges(args.n))
        header, rows = ["vertex", "stabilizer"], [[v, s] for v, s in zip(labels, stabs)]
        summary = {"kind": kind, "n": args.n, "rows": rows, "header": header}
    elif kind == "cz":
        checks = photon_photon_cz()
        header = ["input", "max_error", "passed"]
        rows = [[c.label, c.max_error, c.passed] for c in checks]
        summary = {"kind": kind, "rows": rows, "header": header}
    else:
        results = qnd_detect()
        header = ["photon", "atom_outcome", "probability"]
        rows = [[r.photon, b.outcomes["a"], b.probability] for r in results for b in r.branches]
        summary = {"kind": kind, "rows": rows, "header": header}
    emit = Emitter(args, f"protocol-{kind}")
    emit.rows(f"protocol_{kind}", header, rows)
    emit.json(f"protocol_{kind}", summary)
    emit.finish(summary, {"kind": kind, "encoding": args.encoding, "basis": args.basis, "n": args.n})
    return 0


def cmd_reproduce(args) -> int:
    runner = TARGETS[args.target]
    report = runner(jobs=args.jobs) if args.target in ("fig9", "fig10") else runner()
    emit = Emitter(args, f"reproduce-{args.target}")
    header = ["row", "column", "computed", "reference", "tolerance", "kind", "status"]
    rows = [c.as_row() for c in report.cells]
    emit.rows(args.target, header, rows)
    for name, series in report.series.items():
        xkey = next(iter(series))
        emit.csv(f"{args.target}_{name}", series)
        curves = [(k, series[xkey], v) for k, v in series.items() if k != xkey]
        if curves:
            emit.svg(f"{args.target}_{name}", curves, title=f"{args.target} {name}", xlabel=xkey,
                     dashed=tuple(k for k, _, _ in curves if "x0" in k or k == "fit" or k == "target"))
    failures = [f"{c.row}/{c.column}" for c in report.hard_failures]
    summary = {"target": args.target, "cells": [dict(zip(header, r)) for r in rows], "hard_failures": failures}
    emit.json(args.target, summary)
    tolerances = {f"{c.row}/{c.column}": c.as_row()[4] for c in report.cells if c.tolerance is not None}
    emit.finish(summary, tolerances=tolerances, assumptions=report.assumptions)
    if failures:
        print("hard failures: " + ", ".join(failures), file=sys.stderr)
        return 1
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "presets":
            print("\n".join(preset_names()))
            return 0
        if getattr(args, "preset", None) is not None and args.preset not in preset_names():
            raise UsageError(f"unknown preset {args.preset!r}")
        if getattr(args, "grid", 2) < 2:
            raise UsageError("--grid must be at least 2")
        handlers = {
            "synthesize": cmd_synthesize,
            "retrieve": cmd_retrieve,
            "absorb": lambda a: cmd_retrieve(a, absorb=True),
            "transmission": cmd_transmission,
            "gate": cmd_gate,
            "sweep-dg": lambda a: cmd_sweep(a, doppler=False),
            "sweep-doppler": lambda a: cmd_sweep(a, doppler=True),
            "multiplex": cmd_multiplex,
            "protocol": cmd_protocol,
            "reproduce": cmd_reproduce,
        }
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"vaporqed: error: {exc}", file=sys.stderr)
        return 2
    except ParameterDomainError as exc:
        print(f"vaporqed: invalid parameters: {exc}", file=sys.stderr)
        return 2
    except VaporQEDError as exc:
        print(f"vaporqed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
