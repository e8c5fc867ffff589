"""Computed-versus-reference comparisons for the bundled tables and figures.

Each target returns a :class:`Report` whose cells carry their own tolerance
and a flag saying whether a miss is a hard failure or only a diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .core import TWO_PI, Detunings
from .dynamics import DriveSpec, integrate_absorption, integrate_retrieval, photon_input, retrieval_metrics
from .exceptions import SynthesisDivergenceError
from .error_models import CASE2_ENERGY_OVER_G, design_pulse, sweep_dg, sweep_doppler
from .presets import COOLING_ROWS, TABLE1_ROWS, TABLE2_ROWS, Preset, get_preset
from .scattering import photonic_overlaps
from .synthesis import (
    case2_optimize_x,
    case2_point,
    eta_finite_power,
    eta_max,
    synthesize_exact,
    time_reverse,
)

# Reference numbers for the figure targets (GHz-normalised or dimensionless).
FIG6_X0 = 0.916
FIG6_XSTAR = 0.894
FIG6_ENERGY_RATIO_G = 1.53
FIG6_ENERGY_RATIO_KAPPA = 8.84
FIG6_ETA_CASE1 = 0.979
FIG7_INFIDELITY = 0.021
FIG9_FITS = {"cavity1a": (0.014, 0.024), "cavity5": (-0.0024, 0.22)}
FIG9_TOLS = {"cavity1a": (0.01, 0.01), "cavity5": (0.01, 0.05)}
FIG10_FITS = {"cavity1a": (0.0, 2.5), "cavity5": (0.055, 1.16)}
FIG10_TOLS = {"cavity1a": (0.1, 0.5), "cavity5": (0.05, 0.3)}


@dataclass(frozen=True)
class Cell:
    row: str
    column: str
    computed: float
    reference: Optional[float]
    tolerance: Optional[float]
    relative: bool = False
    hard: bool = True

    @property
    def passed(self) -> bool:
        if self.reference is None or self.tolerance is None:
            return True
        bound = self.tolerance * abs(self.reference) if self.relative else self.tolerance
        return abs(self.computed - self.reference) <= bound

    def as_row(self) -> list:
        tol = "" if self.tolerance is None else (f"{self.tolerance:.0%} rel" if self.relative else f"{self.tolerance:g}")
        return [
            self.row,
            self.column,
            self.computed,
            "" if self.reference is None else self.reference,
            tol,
            "hard" if self.hard else "diagnostic",
            "pass" if self.passed else "FAIL",
        ]


@dataclass
class Report:
    target: str
    cells: list[Cell] = field(default_factory=list)
    series: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    assumptions: list[str] = field(default_factory=list)

    def add(self, *args, **kwargs) -> Cell:
        cell = Cell(*args, **kwargs)
        self.cells.append(cell)
        return cell

    @property
    def hard_failures(self) -> list[Cell]:
        return [c for c in self.cells if c.hard and not c.passed]

    def cell(self, row: str, column: str) -> Cell:
        for c in self.cells:
            if c.row == row and c.column == column:
                return c
        raise KeyError((row, column))


def _absorption_loss(design) -> float:
    drive = DriveSpec(time_reverse(design.pulse), design.detunings, photon_input(design.mode, design.detunings.delta_p))
    traj = integrate_absorption(design.params, drive)
    return 1.0 - retrieval_metrics(traj, design.mode, design.detunings.delta_p).eta_abs


def _retrieval(design):
    traj = integrate_retrieval(design.params, DriveSpec(design.pulse, design.detunings))
    return traj, retrieval_metrics(traj, design.mode, design.detunings.delta_p)


def eta_from_peak(preset: Preset, peak_ghz: float, delta_p: float = 0.0) -> Optional[float]:
    """Efficiency whose exact pulse peaks at ``2 pi * peak_ghz``; None if unreachable."""
    params, mode = preset.params, preset.mode()
    det = Detunings.for_photon(delta_p)
    emax = eta_max(params, delta_p)

    def excess(eta):
        return synthesize_exact(params, mode, det, eta).peak_omega0 / TWO_PI - peak_ghz

    lo = 0.3 * emax
    # Close to eta_max the storage population crosses the truncation floor,
    # so back off until the upper bracket synthesises cleanly.
    for gap in (1e-6, 1e-5, 1e-4, 1e-3, 1e-2):
        try:
            upper = excess(emax * (1 - gap))
        except SynthesisDivergenceError:
            continue
        break
    else:
        return None
    if excess(lo) > 0 or upper < 0:
        return None
    return brentq(excess, lo, emax * (1 - gap), xtol=1e-10)


def _case1_row(report: Report, preset: Preset, with_inversion: bool = True) -> None:
    name = preset.name
    design = design_pulse(preset)
    _, metrics = _retrieval(design)
    report.add(name, "1-F", 1 - metrics.fidelity_F, preset.ref("infidelity"), 0.30, relative=True)
    report.add(name, "1-eta_abs", _absorption_loss(design), preset.ref("abs_loss"), 0.30, relative=True)
    peak = float(np.max(design.pulse.omega0)) / TWO_PI
    if preset.ref("omega0") is not None:
        report.add(name, "peak Omega0", peak, preset.ref("omega0"), 0.25, relative=True)
    if preset.ref("omega0_doubled") is not None:
        report.add(name, "sqrt2 * peak Omega0", math.sqrt(2) * peak, preset.ref("omega0_doubled"), 0.25,
                   relative=True, hard=False)
    overlaps = photonic_overlaps(design.params, design.mode)
    f_en = abs((2 + overlaps.o_g - overlaps.o_s) / 4) ** 2
    report.add(name, "1-F_en", 1 - f_en, preset.ref("infidelity_en"), 0.5, relative=True, hard=False)
    report.add(name, "1-eta_d", 1 - overlaps.eta_d, preset.ref("detection_loss"), 0.5, relative=True, hard=False)
    if with_inversion and preset.ref("omega0") is not None:
        eta = eta_from_peak(preset, preset.ref("omega0"))
        if eta is not None:
            report.add(name, "1-eta_r from peak Omega0", 1 - eta, preset.ref("infidelity"), 0.30,
                       relative=True, hard=False)


def table1() -> Report:
    report = Report("table1")
    report.assumptions += [
        "sine-squared mode with the row's T, photon resonant with the bare cavity",
        "retrieval target eta_r = 1 - (row's 1-F); peak Omega0 is an independent output",
        "absorption uses the time-reversed retrieval pulse and input h(t)",
        "1-F_en and 1-eta_d are diagnostics (v rail ideal, photonic filter only)",
    ]
    for name in TABLE1_ROWS:
        _case1_row(report, get_preset(name))
    return report


def table2() -> Report:
    report = Report("table2")
    report.assumptions += [
        "photon offset delta_p = -x0 g",
        "eta_r chosen so the exact pulse's peak equals the row's Omega0 column",
        "absorption uses the time-reversed retrieval pulse and input h(t) exp(-i delta_p t)",
    ]
    tolerances = {"cavity5": 0.005, "cavity6": 0.01, "cavity7": 0.01}
    for name in TABLE2_ROWS:
        preset = get_preset(name)
        params, mode = preset.params, preset.mode()
        delta_p = -case2_point(params).x0 * params.g
        eta = eta_from_peak(preset, preset.ref("omega0"), delta_p)
        if eta is None:
            report.add(name, "1-eta_abs", float("nan"), preset.ref("abs_loss"), tolerances[name])
            continue
        design = design_pulse(preset, eta_r=eta)
        _, metrics = _retrieval(design)
        report.add(name, "1-F", 1 - metrics.fidelity_F, preset.ref("infidelity"), tolerances[name])
        report.add(name, "1-eta_abs", _absorption_loss(design), preset.ref("abs_loss"), tolerances[name])
        report.add(name, "1-eta_max2", 1 - case2_point(params).eta_max2, preset.ref("abs_loss"), 0.01, hard=False)
        case1 = synthesize_exact(params, mode, Detunings(), eta)
        report.add(name, "case-1 peak at same eta", case1.peak_omega0 / TWO_PI, preset.ref("omega0_case1"), 0.5,
                   relative=True, hard=False)
    return report


def table3() -> Report:
    report = Report("table3")
    report.assumptions += [
        "tau/T computed from the stored transit time and pulse duration",
        "retrieval target eta_r = 1 - (row's 1-F)",
        "the doubled-amplitude column is compared with sqrt(2) times the peak",
    ]
    for name in COOLING_ROWS:
        preset = get_preset(name)
        report.add(name, "tau/T", preset.tau / preset.T, preset.ref("tau_over_T"), 0.10, relative=True)
        _case1_row(report, preset, with_inversion=False)
    return report


def fig6(n_samples: int = 4096) -> Report:
    report = Report("fig6")
    preset = get_preset("cavity5")
    params, mode = preset.params, preset.mode()
    g = params.g
    point = case2_point(params)
    energy = CASE2_ENERGY_OVER_G * g
    x_star = case2_optimize_x(params, energy)
    report.add("case2", "x0", point.x0, FIG6_X0, 0.001)
    report.add("case2", "x*", x_star, FIG6_XSTAR, 0.01)
    curves = {
        "case 1": (0.0, FIG6_ETA_CASE1),
        "case 2, x*": (-x_star * g, float(eta_finite_power(params, energy, -x_star * g))),
        "case 2, x0": (-point.x0 * g, float(eta_finite_power(params, energy, -point.x0 * g))),
    }
    peaks = {}
    t = None
    for label, (delta_p, eta) in curves.items():
        res = synthesize_exact(params, mode, Detunings.for_photon(delta_p), eta, n_samples)
        t = res.pulse.grid
        report.series.setdefault("omega0", {"t_ns": t})[label] = res.pulse.omega0 / TWO_PI
        peaks[label] = res.peak_omega0
    report.add("case 2", "f/(g^2/2kappa)", energy / (g**2 / (2 * params.kappa)), FIG6_ENERGY_RATIO_G, 0.05)
    ratio_kappa = energy / ((params.kappa + params.gamma) ** 2 / (2 * params.kappa_ex))
    report.add("case 2", "f/((kappa+gamma)^2/2kappa_ex)", ratio_kappa, FIG6_ENERGY_RATIO_KAPPA, 0.05, hard=False)
    report.add("ordering", "peak(case1)/peak(case2,x*)", peaks["case 1"] / peaks["case 2, x*"], None, None)
    report.add("ordering", "peak(case2,x*)/peak(case2,x0)", peaks["case 2, x*"] / peaks["case 2, x0"], 1.0, 0.1)
    report.add("ordering", "case1 peak exceeds case2", float(peaks["case 1"] > peaks["case 2, x*"]), 1.0, 0.0)
    return report


def fig7(n_samples: int = 4096) -> Report:
    report = Report("fig7")
    report.assumptions.append("eta_r from the finite-power expression with f(0,T) = 1.34 g at delta_p = -x0 g")
    preset = get_preset("cavity5")
    design = design_pulse(preset)
    traj, metrics = _retrieval(design)
    report.add("cavity5", "1-eta_r", 1 - metrics.eta_r, FIG7_INFIDELITY, 0.005)
    report.add("cavity5", "normalised overlap", metrics.fidelity_F / metrics.eta_r, 1.0, 0.001)
    t = traj.grid
    rotated = traj.a_out * np.exp(1j * design.detunings.delta_p * t)
    report.series["pulse"] = {"t_ns": t, "omega0_ghz": design.pulse.omega0 / TWO_PI, "phi0_rad": design.pulse.phi0}
    report.series["output"] = {
        "t_ns": t,
        "re_aout_rot": rotated.real,
        "im_aout_rot": rotated.imag,
        "target": math.sqrt(design.eta_r) * design.mode.h(t),
    }
    return report


def _fit_report(target: str, sweep: Callable, grid: np.ndarray, fits: dict, tols: dict, jobs: int) -> Report:
    report = Report(target)
    for name in ("cavity1a", "cavity5"):
        result = sweep(get_preset(name), grid(name), jobs=jobs)
        (ref1, ref2), (tol1, tol2) = fits[name], tols[name]
        report.add(name, "linear coefficient", result.fit[0], ref1, tol1)
        report.add(name, "quadratic coefficient", result.fit[1], ref2, tol2)
        report.series[name] = {"x": result.xs, "infidelity": result.infidelity,
                               "fit": result.fit[0] * result.xs + result.fit[1] * result.xs**2}
    return report


def fig9(jobs: int = 1) -> Report:
    report = _fit_report("fig9", sweep_dg, lambda _: np.linspace(-0.1, 0.1, 21), FIG9_FITS, FIG9_TOLS, jobs)
    report.assumptions.append("coupling decreases across the pulse for positive dg/g")
    return report


def fig10(jobs: int = 1) -> Report:
    report = _fit_report("fig10", sweep_doppler, lambda _: np.linspace(-0.25, 0.25, 21), FIG10_FITS, FIG10_TOLS, jobs)
    report.assumptions.append("a positive shift lowers both one-photon detunings; two-photon detuning fixed")
    return report


TARGETS: dict[str, Callable[..., Report]] = {
    "table1": table1,
    "table2": table2,
    "table3": table3,
    "fig6": fig6,
    "fig7": fig7,
    "fig9": fig9,
    "fig10": fig10,
}
