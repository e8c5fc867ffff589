"""Coupling drift and Doppler error channels with quadratic fits.

Each sweep designs a pulse for the unperturbed preset, then replays it with
one perturbation switched on and records ``F0 - F``.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import CavityParams, ControlPulse, Detunings, ModeShape
from .dynamics import DriveSpec, integrate_absorption, integrate_retrieval, photon_input, retrieval_metrics
from .exceptions import FitError, ParameterDomainError
from .presets import Preset
from .synthesis import case2_point, eta_finite_power, synthesize_exact, time_reverse

# Pulse energy (in units of g) that sets the shifted-eigenstate target efficiency.
CASE2_ENERGY_OVER_G = 1.34


@dataclass(frozen=True)
class SweepResult:
    xs: np.ndarray
    infidelity: np.ndarray
    fit: tuple[float, float]
    residual: float
    baseline_fidelity: float
    warnings: tuple[str, ...] = field(default=())


def g_drift_profile(g: float, dg: float, T: float) -> Callable[[float], float]:
    """Linear coupling profile ``g + dg (t - T/2)/T``."""
    if g <= 0 or abs(dg / g) >= 0.5:
        raise ParameterDomainError("need g > 0 and |dg/g| < 0.5")
    if dg == 0:
        return lambda t: g
    return lambda t: g + dg * (t - T / 2) / T


def estimate_dg_ratio(v_perp: float, T: float, lambda_ev: float) -> float:
    """Fractional coupling change ``v_perp T / lambda_ev`` over one pulse (consistent units)."""
    if v_perp < 0 or T <= 0 or lambda_ev <= 0:
        raise ParameterDomainError("need v_perp >= 0 and positive T, lambda_ev")
    return v_perp * T / lambda_ev


def polyfit(xs: Sequence[float], ys: Sequence[float], degree: int = 2) -> tuple[float, ...]:
    """Least-squares ``c1 x + ... + c_d x^d`` with no constant term.

    Columns are scaled to unit norm before solving the normal equations.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if degree < 1 or degree > 2:
        raise ParameterDomainError("degree must be 1 or 2")
    if xs.shape != ys.shape:
        raise ParameterDomainError("xs and ys differ in length")
    if np.unique(xs).size != xs.size:
        raise FitError("abscissae must be distinct")
    design = np.column_stack([xs**k for k in range(1, degree + 1)])
    if np.linalg.matrix_rank(design) < degree:
        raise FitError("design matrix is rank deficient")
    scale = np.linalg.norm(design, axis=0)
    scaled = design / scale
    coeffs = np.linalg.solve(scaled.T @ scaled, scaled.T @ ys) / scale
    return tuple(float(c) for c in coeffs)


@dataclass(frozen=True)
class DesignedPulse:
    preset: Preset
    params: CavityParams
    mode: ModeShape
    detunings: Detunings
    pulse: ControlPulse
    eta_r: float


def design_pulse(preset: Preset, eta_r: Optional[float] = None) -> DesignedPulse:
    """Ideal retrieval pulse for a preset.

    Resonant presets target the preset's reference infidelity.  Shifted
    presets use ``delta_p = -x0 g`` and the efficiency reachable with pulse
    energy ``1.34 g``.
    """
    params = preset.params
    mode = preset.mode()
    if preset.case == 2:
        delta_p = -case2_point(params).x0 * params.g
        target = eta_finite_power(params, CASE2_ENERGY_OVER_G * params.g, delta_p) if eta_r is None else eta_r
    else:
        delta_p = 0.0
        target = 1.0 - preset.ref("infidelity") if eta_r is None else eta_r
    detunings = Detunings.for_photon(delta_p)
    res = synthesize_exact(params, mode, detunings, float(target))
    return DesignedPulse(preset, params, mode, detunings, res.pulse, float(target))


def _fidelity(design: DesignedPulse, detunings: Detunings, g_of_t=None, absorb: bool = False) -> float:
    if absorb:
        drive = DriveSpec(time_reverse(design.pulse), detunings, photon_input(design.mode, design.detunings.delta_p), g_of_t)
        traj = integrate_absorption(design.params, drive)
        return float(abs(traj.c_s[-1]) ** 2)
    traj = integrate_retrieval(design.params, DriveSpec(design.pulse, detunings, None, g_of_t))
    return retrieval_metrics(traj, design.mode, design.detunings.delta_p).fidelity_F


def _run_sweep(points: Sequence[float], evaluate: Callable[[float], float], jobs: int) -> np.ndarray:
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return np.array(list(pool.map(evaluate, points)))
    return np.array([evaluate(x) for x in points])


def _finish(xs: np.ndarray, fids: np.ndarray, f0: float, notes: list[str]) -> SweepResult:
    infid = f0 - fids
    if xs.size >= 2 and np.any(xs != 0):
        fit = polyfit(xs[xs != 0], infid[xs != 0], 2) if np.count_nonzero(xs) >= 2 else (0.0, 0.0)
    else:
        fit = (0.0, 0.0)
    resid = float(np.max(np.abs(infid - fit[0] * xs - fit[1] * xs**2))) if xs.size else 0.0
    return SweepResult(xs, infid, (float(fit[0]), float(fit[1])), resid, f0, tuple(notes))


def sweep_dg(
    preset: Preset,
    dg_over_g_grid: Sequence[float],
    absorb: bool = False,
    jobs: int = 1,
    design: Optional[DesignedPulse] = None,
) -> SweepResult:
    """Infidelity caused by a coupling that decreases by ``dg`` across the pulse.

    The atom drifts away from the resonator during the pulse, so a positive
    abscissa ``dg/g`` means ``g(t) = g - dg (t - T/2)/T``.
    """
    design = design or design_pulse(preset)
    xs = np.asarray(dg_over_g_grid, dtype=float)
    notes = []
    if preset.case == 2:
        width = case2_point(design.params).delta_x
        if np.any(np.abs(xs) > width):
            notes.append(f"|dg/g| exceeds the resonance width {width:.3g}")
            warnings.warn(notes[-1], stacklevel=2)
    elif np.any(np.abs(xs) > 0.1 + 1e-12):
        notes.append("|dg/g| beyond 0.1")
    g = design.params.g
    T = design.mode.duration_T
    f0 = _fidelity(design, design.detunings, absorb=absorb)

    def evaluate(x):
        if x == 0:
            return f0
        return _fidelity(design, design.detunings, g_drift_profile(g, -x * g, T), absorb)

    return _finish(xs, _run_sweep(xs, evaluate, jobs), f0, notes)


def sweep_doppler(
    preset: Preset,
    dd_over_g_grid: Sequence[float],
    absorb: bool = False,
    jobs: int = 1,
    design: Optional[DesignedPulse] = None,
) -> SweepResult:
    """Infidelity caused by a common Doppler shift of the control and cavity fields.

    A shift ``dd`` raises both field frequencies seen by the atom, lowering
    both one-photon detunings by ``dd`` while the two-photon detuning stays fixed.
    """
    design = design or design_pulse(preset)
    xs = np.asarray(dd_over_g_grid, dtype=float)
    notes = []
    if np.any(np.abs(xs) > 0.25 + 1e-12):
        notes.append("|dd/g| beyond 0.25")
        warnings.warn(notes[-1], stacklevel=2)
    g = design.params.g
    f0 = _fidelity(design, design.detunings, absorb=absorb)

    def evaluate(x):
        return _fidelity(design, design.detunings.shifted(-x * g), absorb=absorb)

    return _finish(xs, _run_sweep(xs, evaluate, jobs), f0, notes)


def doppler_ratio(doppler_ghz: float, g_ghz: float) -> float:
    """Doppler shift over coupling, both in the same (2 pi) GHz units."""
    return doppler_ghz / g_ghz
