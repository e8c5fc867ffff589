"""Control-pulse synthesis and closed-form efficiency expressions.

Equations of motion (with the ``|e> -> i|e>`` phase convention) that the
synthesised pulse must satisfy::

    dc_s/dt = -i (d1 - d2) c_s - conj(Omega) c_e
    dc_e/dt = Omega c_s + (i d2 - gamma) c_e + g c_g
    dc_g/dt = -g c_e - kappa c_g

Prescribing ``c_g`` from the target output mode fixes ``c_e`` and then
``z = Omega c_s``; the storage population follows from norm bookkeeping, and
``Omega`` is recovered by dividing by ``c_s``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import minimize_scalar

from .core import (
    DEFAULT_SAMPLES,
    CavityParams,
    ControlPulse,
    Detunings,
    ModeShape,
    PulseCase,
    cooperativity,
    uniform_grid,
)
from .exceptions import (
    Case2InfeasibleError,
    InfeasibleEfficiencyError,
    ParameterDomainError,
    SynthesisDivergenceError,
)

RHO_FLOOR = 1e-6
TRUNCATION_WINDOW = 0.05


@dataclass(frozen=True)
class SynthesisResult:
    pulse: ControlPulse
    eta_max: float
    eta_r: float
    rho_ss_final: float
    xi_x: float
    xi_y: float
    rho_ss: Optional[np.ndarray] = None

    @property
    def peak_omega0(self) -> float:
        return float(np.max(self.pulse.omega0))


@dataclass(frozen=True)
class Case2Point:
    x0: float
    delta_x: float
    eta_max2: float


def eta_max(params: CavityParams, delta_p: float, delta2: float = 0.0) -> float:
    """Largest retrieval efficiency for a photon at offset ``delta_p``.

    ``delta2`` is accepted for signature symmetry; the loss ratio that sets the
    bound does not depend on it.
    """
    del delta2
    if params.g == 0:
        return 0.0
    C = cooperativity(params)
    return (params.kappa_ex / params.kappa) / (
        1.0 + 1.0 / C + (params.gamma / params.kappa) * (delta_p / params.g) ** 2
    )


def xi_components(params: CavityParams, delta_p: float, delta2: float = 0.0) -> tuple[float, float]:
    """Real and imaginary parts of the adiabatic coupling factor xi (rad^2/ns^2)."""
    g, kappa, gamma = params.g, params.kappa, params.gamma
    xi_x = g**2 - delta_p**2 - delta2 * delta_p + kappa * gamma
    xi_y = -gamma * delta_p - kappa * (delta_p + delta2)
    return xi_x, xi_y


def r_function(params: CavityParams, x) -> np.ndarray:
    """``R(x) = (1 - x^2)^2 + x^2 (kappa^2 + gamma^2)/g^2 + 2/C`` with ``x = delta_p/g``."""
    x = np.asarray(x, dtype=float)
    g, kappa, gamma = params.g, params.kappa, params.gamma
    return (1 - x**2) ** 2 + x**2 * (kappa**2 + gamma**2) / g**2 + 2.0 / cooperativity(params)


def eta_finite_power(params: CavityParams, f0T, delta_p, delta2: float = 0.0) -> np.ndarray:
    """Retrieval efficiency reachable with control-pulse energy ``f0T`` (rad^2/ns).

    Vectorised over ``f0T`` and ``delta_p``.
    """
    f0T = np.asarray(f0T, dtype=float)
    if np.any(f0T < 0):
        raise ParameterDomainError("pulse energy must be non-negative")
    delta_p = np.asarray(delta_p, dtype=float)
    emax = eta_max(params, delta_p, delta2)
    xi_x, xi_y = xi_components(params, delta_p, delta2)
    xi_sq = xi_x**2 + xi_y**2
    with np.errstate(over="ignore"):
        exponent = 2.0 * params.kappa_ex * params.g**2 * f0T / (emax * xi_sq)
    result = emax * -np.expm1(-exponent)
    return result if result.ndim else float(result)


def case2_point(params: CavityParams) -> Case2Point:
    g, kappa, gamma = params.g, params.kappa, params.gamma
    if kappa**2 + gamma**2 >= 2 * g**2:
        raise Case2InfeasibleError(
            f"kappa^2 + gamma^2 = {kappa**2 + gamma**2:.4g} is not below 2 g^2 = {2 * g**2:.4g}"
        )
    x0 = math.sqrt(1.0 - (kappa**2 + gamma**2) / (2 * g**2))
    delta_x = 2 * kappa / math.sqrt(4 * g**2 - kappa**2)
    eta_max2 = (params.kappa_ex / kappa) / (1.0 + 1.0 / cooperativity(params) + x0**2 * gamma / kappa)
    return Case2Point(x0=x0, delta_x=delta_x, eta_max2=eta_max2)


def case2_optimize_x(params: CavityParams, f0T: float, step: float = 1e-3, tol: float = 1e-5) -> float:
    """Non-negative ``x = delta_p/g`` maximising :func:`eta_finite_power`.

    A grid scan with spacing ``step`` locates the basin and golden-section
    search refines it.
    """
    if f0T <= 0:
        raise ParameterDomainError("pulse energy must be positive")
    grid = np.arange(0.0, 1.0, step)

    def objective(x):
        return -eta_finite_power(params, f0T, x * params.g)

    values = -eta_finite_power(params, f0T, grid * params.g)
    k = int(np.argmin(values))
    if k == 0 or k == grid.size - 1:
        return float(grid[k])
    res = minimize_scalar(
        objective, bracket=(grid[k - 1], grid[k], grid[k + 1]), method="golden", tol=tol * 1e-3
    )
    return float(res.x)


def _check_request(params: CavityParams, detunings: Detunings, eta_r: float) -> float:
    if abs(detunings.two_photon_mismatch) > 1e-9 * max(1.0, abs(detunings.delta1)):
        raise ParameterDomainError("synthesis requires delta1 = delta2 + delta_p")
    if not (0.0 <= eta_r):
        raise ParameterDomainError("eta_r must be non-negative")
    emax = eta_max(params, detunings.delta_p, detunings.delta2)
    if eta_r >= emax:
        raise InfeasibleEfficiencyError(f"eta_r = {eta_r:.6g} is not below eta_max = {emax:.6g}")
    return emax


def synthesize_exact(
    params: CavityParams,
    mode: ModeShape,
    detunings: Detunings,
    eta_r: float,
    n_samples: int = DEFAULT_SAMPLES,
    rho_floor: float = RHO_FLOOR,
    truncation_window: float = TRUNCATION_WINDOW,
) -> SynthesisResult:
    """Exact control pulse that emits ``sqrt(eta_r) h(t) exp(-i delta_p t)``."""
    emax = _check_request(params, detunings, eta_r)
    xi_x, xi_y = xi_components(params, detunings.delta_p, detunings.delta2)
    t = uniform_grid(mode.duration_T, n_samples)
    if eta_r == 0.0:
        return SynthesisResult(ControlPulse.zero(t), emax, 0.0, 1.0, xi_x, xi_y, np.ones_like(t))

    g, kappa, gamma = params.g, params.kappa, params.gamma
    dp, d2, d1 = detunings.delta_p, detunings.delta2, detunings.delta1
    amp = math.sqrt(eta_r / (2.0 * params.kappa_ex))
    h, hd, hdd = mode.h(t), mode.h_dot(t), mode.h_ddot(t)
    rot = np.exp(-1j * dp * t)
    c_g = amp * h * rot
    c_g_dot = amp * (hd - 1j * dp * h) * rot
    c_g_ddot = amp * (hdd - 2j * dp * hd - dp**2 * h) * rot
    c_e = -(c_g_dot + kappa * c_g) / g
    c_e_dot = -(c_g_ddot + kappa * c_g_dot) / g
    z = c_e_dot + (gamma - 1j * d2) * c_e - g * c_g

    rho = 1.0 - cumulative_trapezoid(2.0 * np.real(z * np.conj(c_e)), t, initial=0.0)
    below = np.flatnonzero(rho < rho_floor)
    truncated = below.size > 0
    valid = np.ones_like(t, dtype=bool)
    if truncated:
        first = int(below[0])
        if t[first] < (1.0 - truncation_window) * t[-1] or first == 0:
            raise SynthesisDivergenceError(
                f"storage population fell below {rho_floor:g} at t = {t[first]:.4g} ns", float(t[first])
            )
        valid[first:] = False
    rho_safe = np.where(valid, rho, 1.0)

    drift = np.imag(np.conj(z) * c_e) / rho_safe
    drift[~valid] = 0.0
    arg_z = np.angle(z)
    nonzero = np.abs(z) > 0
    if not np.any(nonzero & valid):
        raise SynthesisDivergenceError("control field vanishes on the whole grid", float(t[0]))
    first_nz = int(np.flatnonzero(nonzero)[0])
    arg_z[:first_nz] = arg_z[first_nz]
    phase = (d1 - d2) * t + np.unwrap(arg_z) + cumulative_trapezoid(drift, t, initial=0.0)
    omega0 = np.abs(z) / np.sqrt(rho_safe)
    if truncated:
        last = int(below[0]) - 1
        omega0[~valid] = omega0[last]
        phase[~valid] = phase[last]
    phase = phase - 2 * math.pi * math.ceil((phase[0] - math.pi) / (2 * math.pi))

    pulse = ControlPulse(t, omega0, phase, PulseCase.EXACT, eta_r, truncated)
    return SynthesisResult(pulse, emax, eta_r, float(max(rho[-1], 0.0)), xi_x, xi_y, rho)


def synthesize_adiabatic(
    params: CavityParams,
    mode: ModeShape,
    detunings: Detunings,
    eta_r: float,
    n_samples: int = DEFAULT_SAMPLES,
) -> SynthesisResult:
    """Closed-form pulse valid when ``kappa_ex T`` is large."""
    kex_T = params.kappa_ex * mode.duration_T
    if kex_T < 10:
        raise ParameterDomainError(f"adiabatic synthesis needs kappa_ex T >= 10, got {kex_T:.3g}")
    if kex_T < 50:
        warnings.warn(f"kappa_ex T = {kex_T:.3g} < 50: adiabatic pulse may be inaccurate", stacklevel=2)
    emax = _check_request(params, detunings, eta_r)
    xi_x, xi_y = xi_components(params, detunings.delta_p, detunings.delta2)
    case = PulseCase.ADIABATIC_CASE1 if detunings.delta_p == 0 else PulseCase.ADIABATIC_CASE2
    t = uniform_grid(mode.duration_T, n_samples)
    if eta_r == 0.0:
        return SynthesisResult(ControlPulse.zero(t, case), emax, 0.0, 1.0, xi_x, xi_y, np.ones_like(t))

    g, kappa = params.g, params.kappa
    dp = detunings.delta_p
    h = mode.h(t)
    cumulative = cumulative_trapezoid(h**2, t, initial=0.0)
    remaining = 1.0 - (eta_r / emax) * cumulative
    omega0 = (math.hypot(xi_x, xi_y) / g) * math.sqrt(eta_r / (2 * params.kappa_ex)) * h / np.sqrt(remaining)
    log_coeff = emax * (kappa * xi_y + dp * xi_x) / (2 * g**2 * params.kappa_ex)
    phase = (
        math.pi
        + math.atan2(xi_y, xi_x)
        + log_coeff * np.log(remaining)
        + detunings.two_photon_mismatch * t
    )
    phase = phase - 2 * math.pi * math.ceil((phase[0] - math.pi) / (2 * math.pi))
    pulse = ControlPulse(t, omega0, phase, case, eta_r, False)
    return SynthesisResult(pulse, emax, eta_r, float(1.0 - eta_r * cumulative[-1] / emax), xi_x, xi_y, remaining)


def time_reverse(pulse: ControlPulse) -> ControlPulse:
    """Absorption pulse: ``Omega_0(T - t)`` with phase ``pi - phi_0(T - t)``."""
    return replace(
        pulse,
        omega0=pulse.omega0[::-1].copy(),
        phi0=(math.pi - pulse.phi0[::-1]).copy(),
        time_reversed=not pulse.time_reversed,
    )


@dataclass(frozen=True)
class ScalingReport:
    durations: tuple[float, ...]
    peaks: tuple[float, ...]
    exponent: float

    @property
    def exponent_vs_inverse_sqrt_T(self) -> float:
        """Power of ``1/sqrt(T)`` that the peak amplitude follows (1 for ``T^-1/2``)."""
        return -2.0 * self.exponent


def scaling_checks(
    params: CavityParams,
    mode: ModeShape,
    eta_r: float,
    delta_p: float = 0.0,
    factors: Sequence[float] = (1.0, 2.0, 4.0),
    n_samples: int = DEFAULT_SAMPLES,
) -> ScalingReport:
    """Peak control amplitude across durations ``T * factors`` and its power-law fit."""
    durations = tuple(mode.duration_T * f for f in factors)
    detunings = Detunings.for_photon(delta_p)
    peaks = []
    for T in durations:
        res = synthesize_exact(params, mode.with_duration(T), detunings, eta_r, n_samples)
        peaks.append(res.peak_omega0)
    slope = np.polyfit(np.log(durations), np.log(peaks), 1)[0]
    return ScalingReport(durations, tuple(peaks), float(slope))
