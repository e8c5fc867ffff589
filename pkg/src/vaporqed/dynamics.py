"""Integration of the driven three-level amplitude equations.

Uses the same sign conventions as :mod:`vaporqed.synthesis`; absorption adds
the waveguide drive ``-sqrt(2 kappa_ex) a_in(t)`` to the cavity amplitude and
the output obeys ``a_out = a_in + sqrt(2 kappa_ex) c_g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp, trapezoid
from scipy.interpolate import CubicSpline

from .core import CavityParams, ControlPulse, Detunings, ModeShape, Trajectory
from .exceptions import GridMismatchError, IntegrationError, ParameterDomainError

RTOL = 1e-9
ATOL = 1e-12


@dataclass(frozen=True)
class DriveSpec:
    """Everything that drives the atom-cavity system besides its parameters.

    ``input_field`` and ``g_of_t`` are callables of time in ns.
    """

    pulse: ControlPulse
    detunings: Detunings = Detunings()
    input_field: Optional[Callable[[np.ndarray], np.ndarray]] = None
    g_of_t: Optional[Callable[[float], float]] = None


@dataclass(frozen=True)
class RetrievalMetrics:
    eta_r: float
    overlap: complex
    fidelity_F: float
    eta_abs: Optional[float] = None


def _integrate(params: CavityParams, drive: DriveSpec, y0, rtol: float, atol: float) -> Trajectory:
    pulse = drive.pulse
    t = pulse.grid
    omega_spline = CubicSpline(t, pulse.complex_field())
    d = drive.detunings
    two_photon = d.delta1 - d.delta2
    atom_rate = 1j * d.delta2 - params.gamma
    kappa = params.kappa
    g = params.g
    gfun = drive.g_of_t
    coupling_in = math.sqrt(2.0 * params.kappa_ex)
    a_in_fn = drive.input_field

    def rhs(time, y):
        c_s, c_e, c_g = y
        omega = omega_spline(time)
        gg = g if gfun is None else gfun(time)
        dc_s = -1j * two_photon * c_s - np.conj(omega) * c_e
        dc_e = omega * c_s + atom_rate * c_e + gg * c_g
        dc_g = -gg * c_e - kappa * c_g
        if a_in_fn is not None:
            dc_g = dc_g - coupling_in * a_in_fn(time)
        return np.array([dc_s, dc_e, dc_g])

    sol = solve_ivp(
        rhs, (t[0], t[-1]), np.asarray(y0, dtype=complex), method="RK45", t_eval=t, rtol=rtol, atol=atol
    )
    if not sol.success or sol.y.shape[1] != t.size:
        raise IntegrationError(f"integration failed at t = {sol.t[-1] if sol.t.size else t[0]:.4g} ns: {sol.message}")
    c_s, c_e, c_g = sol.y
    a_in = np.zeros_like(c_g) if a_in_fn is None else np.asarray(a_in_fn(t), dtype=complex) * np.ones_like(c_g)
    a_out = a_in + coupling_in * c_g
    return Trajectory(t, c_s, c_e, c_g, a_in, a_out)


def integrate_retrieval(params: CavityParams, drive: DriveSpec, rtol: float = RTOL, atol: float = ATOL) -> Trajectory:
    """Emit from ``|s,0>``: initial amplitudes ``(1, 0, 0)``, no input field."""
    if drive.input_field is not None:
        raise ParameterDomainError("retrieval runs take no input field")
    return _integrate(params, drive, (1.0, 0.0, 0.0), rtol, atol)


def integrate_absorption(params: CavityParams, drive: DriveSpec, rtol: float = RTOL, atol: float = ATOL) -> Trajectory:
    """Absorb an incoming photon starting from ``|g,0>`` with no stored excitation."""
    if drive.input_field is None:
        raise ParameterDomainError("absorption runs need an input field")
    t = drive.pulse.grid
    photon_number = trapezoid(np.abs(drive.input_field(t)) ** 2, t)
    if photon_number > 1.0 + 1e-6:
        raise ParameterDomainError(f"input field carries {photon_number:.6g} photons; at most one allowed")
    return _integrate(params, drive, (0.0, 0.0, 0.0), rtol, atol)


def photon_input(mode: ModeShape, delta_p: float = 0.0) -> Callable[[np.ndarray], np.ndarray]:
    """Default absorption input ``h(t) exp(-i delta_p t)``."""

    def field(t):
        return mode.h(t) * np.exp(-1j * delta_p * np.asarray(t, dtype=float))

    return field


def retrieval_metrics(traj: Trajectory, mode: ModeShape, delta_p: float) -> RetrievalMetrics:
    t = traj.grid
    if abs(t[-1] - t[0] - mode.duration_T) > 1e-9 * max(1.0, mode.duration_T):
        raise GridMismatchError(f"trajectory spans {t[-1] - t[0]:.6g} ns but mode lasts {mode.duration_T:.6g} ns")
    absorbing = bool(np.any(traj.a_in != 0))
    eta = float(trapezoid(np.abs(traj.a_out) ** 2, t))
    overlap = complex(trapezoid(mode.h(t) * np.exp(1j * delta_p * t) * traj.a_out, t))
    eta_abs = float(abs(traj.c_s[-1]) ** 2) if absorbing else None
    return RetrievalMetrics(eta, overlap, float(abs(overlap) ** 2), eta_abs)


@dataclass(frozen=True)
class NormBalance:
    initial: float
    final: float
    atomic_loss: float
    intrinsic_loss: float
    emitted: float
    injected: float

    @property
    def residual(self) -> float:
        return self.initial - (self.final + self.atomic_loss + self.intrinsic_loss + self.emitted - self.injected)


def norm_balance(params: CavityParams, traj: Trajectory) -> NormBalance:
    """Probability bookkeeping of a trajectory by trapezoid quadrature."""
    t = traj.grid
    norm = traj.norm
    return NormBalance(
        initial=float(norm[0]),
        final=float(norm[-1]),
        atomic_loss=float(2 * params.gamma * trapezoid(np.abs(traj.c_e) ** 2, t)),
        intrinsic_loss=float(2 * params.kappa_i * trapezoid(np.abs(traj.c_g) ** 2, t)),
        emitted=float(trapezoid(np.abs(traj.a_out) ** 2, t)),
        injected=float(trapezoid(np.abs(traj.a_in) ** 2, t)),
    )
