"""Waveguide transmission, pulse filtering, gate fidelities and gate matrices.

Transmission convention: a Fourier component ``exp(-i w t)`` of the input
(relative to the bare cavity frequency) sees ``t`` evaluated at
``delta_ap = delta_cp = -w``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp, trapezoid
from scipy.interpolate import CubicSpline

from .core import DEFAULT_SAMPLES, CavityParams, ModeShape, cooperativity, uniform_grid
from .exceptions import BandwidthError, GridMismatchError, ParameterDomainError

MIN_PAD = 4


def transmission(params: CavityParams, delta_ap, delta_cp, atom_coupled: bool = True):
    """Chiral transmission coefficient ``a_out / a_in``; vectorised over detunings."""
    delta_ap = np.asarray(delta_ap, dtype=float)
    delta_cp = np.asarray(delta_cp, dtype=float)
    g_sq = params.g**2 if atom_coupled else 0.0
    load = params.kappa_i + 1j * delta_cp + g_sq / (1j * delta_ap + params.gamma)
    result = (load - params.kappa_ex) / (load + params.kappa_ex)
    return result if result.ndim else complex(result)


@dataclass(frozen=True)
class FilterSpectrum:
    omega: np.ndarray
    t: np.ndarray


def filter_spectrum(params: CavityParams, T: float, atom_coupled: bool = True, n_points: int = 2**16) -> FilterSpectrum:
    """Transmission on ``n_points`` frequencies spanning ``+-64 pi / T``."""
    omega = np.linspace(-64 * math.pi / T, 64 * math.pi / T, n_points)
    return FilterSpectrum(omega, transmission(params, -omega, -omega, atom_coupled))


@dataclass(frozen=True)
class FilteredPulse:
    grid: np.ndarray
    a_in: np.ndarray
    a_out: np.ndarray


def _padded(t: np.ndarray, a_in: np.ndarray, pad: int) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(t, dtype=float)
    a_in = np.asarray(a_in, dtype=complex)
    if t.shape != a_in.shape or t.ndim != 1:
        raise GridMismatchError("t and a_in must be matching 1-D arrays")
    steps = np.diff(t)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise GridMismatchError("filtering needs a uniform grid")
    if pad < MIN_PAD:
        raise BandwidthError(f"zero-padding factor {pad} is below the minimum of {MIN_PAD}")
    n = t.size * pad
    grid = t[0] + steps[0] * np.arange(n)
    padded = np.zeros(n, dtype=complex)
    padded[: t.size] = a_in
    return grid, padded


def _check_bandwidth(spectrum: np.ndarray, margin: int = 8, tolerance: float = 1e-8) -> None:
    power = np.abs(spectrum) ** 2
    total = power.sum()
    if total == 0:
        return
    freq_index = np.abs(np.fft.fftfreq(spectrum.size))
    outside = power[freq_index > 0.5 / margin].sum()
    if outside > tolerance * total:
        raise BandwidthError(
            f"{outside / total:.2e} of the pulse power lies beyond 1/{margin} of the Nyquist band; refine the grid"
        )


def filter_pulse(
    params: CavityParams,
    t: np.ndarray,
    a_in: np.ndarray,
    atom_coupled: bool = True,
    pad: int = 8,
    method: str = "fft",
) -> FilteredPulse:
    """Reflect a sampled input pulse off the cavity.

    The input is zero-padded to ``pad`` times its length; the output is
    returned on that extended grid.  ``method="fft"`` multiplies the discrete
    spectrum by the transmission, ``method="ode"`` integrates the linear
    cavity-atom equations directly.
    """
    grid, padded = _padded(t, a_in, pad)
    if method == "fft":
        spectrum = np.fft.fft(padded)
        _check_bandwidth(spectrum)
        # numpy's component exp(+i w t) corresponds to detuning +w
        omega = 2 * math.pi * np.fft.fftfreq(grid.size, d=grid[1] - grid[0])
        out = np.fft.ifft(spectrum * transmission(params, omega, omega, atom_coupled))
    elif method == "ode":
        out = _filter_ode(params, grid, padded, atom_coupled)
    else:
        raise ParameterDomainError(f"unknown method {method!r}")
    return FilteredPulse(grid, padded, out)


def _filter_ode(params: CavityParams, grid: np.ndarray, a_in: np.ndarray, atom_coupled: bool) -> np.ndarray:
    spline = CubicSpline(grid, a_in)
    g = params.g if atom_coupled else 0.0
    root = math.sqrt(2 * params.kappa_ex)
    kappa, gamma = params.kappa, params.gamma

    def rhs(time, y):
        c_g, c_e = y
        return np.array([-kappa * c_g - g * c_e - root * spline(time), -gamma * c_e + g * c_g])

    sol = solve_ivp(rhs, (grid[0], grid[-1]), np.zeros(2, dtype=complex), method="RK45",
                    t_eval=grid, rtol=1e-11, atol=1e-13)
    return a_in + root * sol.y[0]


def analytic_pulse_fidelities(params: CavityParams, T: float) -> tuple[float, float]:
    """Leading-order fidelities ``(F1, F2)`` for a sine-squared pulse (uncoupled, coupled)."""
    kappa, g = params.kappa, params.g
    sqrt_f1 = 1 - (2 * params.kappa_i / kappa + (8 * math.pi**2 / 3) * (1 - params.kappa_i / kappa) / (kappa * T) ** 2)
    sqrt_f2 = 1 - (params.kappa_ex / kappa) * (
        1 / cooperativity(params) + (8 * math.pi**2 / 3) * (kappa / g) ** 2 / (g * T) ** 2
    )
    return sqrt_f1**2, sqrt_f2**2


def analytic_error_terms(params: CavityParams, T: float) -> tuple[float, float]:
    """``(1 - sqrt(F1), 1 - sqrt(F2))``; the expansion is trusted when both are below 0.05."""
    f1, f2 = analytic_pulse_fidelities(params, T)
    return 1 - math.sqrt(f1), 1 - math.sqrt(f2)


@dataclass(frozen=True)
class PhotonicOverlaps:
    """Filtered-mode overlaps with the atom in ``|g>`` (coupled) and ``|s>`` (uncoupled)."""

    o_g: complex
    o_s: complex
    eta_d: float


def photonic_overlaps(params: CavityParams, mode: ModeShape, n_samples: int = DEFAULT_SAMPLES, pad: int = 8) -> PhotonicOverlaps:
    t = uniform_grid(mode.duration_T, n_samples)
    h = mode.h(t)
    coupled = filter_pulse(params, t, h, True, pad)
    empty = filter_pulse(params, t, h, False, pad)
    grid = coupled.grid
    reference = coupled.a_in
    o_g = complex(trapezoid(np.conj(reference) * coupled.a_out, grid))
    o_s = complex(trapezoid(np.conj(reference) * empty.a_out, grid))
    eta_d = float(trapezoid(np.abs(coupled.a_out - empty.a_out) ** 2, grid) / 4)
    return PhotonicOverlaps(o_g, o_s, eta_d)


def entangling_fidelity(params: CavityParams, mode: ModeShape, n_samples: int = DEFAULT_SAMPLES) -> float:
    """Overlap of the atom-photon state after the filtered gate with the ideal Bell state."""
    ov = photonic_overlaps(params, mode, n_samples)
    return abs((2 + ov.o_g - ov.o_s) / 4) ** 2


def detection_efficiency(params: CavityParams, mode: ModeShape, n_samples: int = DEFAULT_SAMPLES) -> float:
    """Probability the atom reads ``|1>`` in the non-destructive detection circuit."""
    return photonic_overlaps(params, mode, n_samples).eta_d


def nonchiral_outputs(params: CavityParams, phi: float, a_in: complex, b_in: complex) -> tuple[complex, complex]:
    """Steady-state, resonant outputs of a cavity whose atom couples to both modes.

    Closed form for zero backscatter; with backscatter the two-mode equations
    are integrated numerically to steady state instead.
    """
    if params.backscatter_h != 0:
        return nonchiral_outputs_ode(params, phi, a_in, b_in)
    kappa = params.kappa
    root = math.sqrt(2 * params.kappa_ex)
    C = cooperativity(params)
    c_ga = -(root / kappa) * ((1 + C) * a_in - C * np.exp(-2j * phi) * b_in) / (1 + 2 * C)
    c_gb = -(root / kappa) * ((1 + C) * b_in - C * np.exp(2j * phi) * a_in) / (1 + 2 * C)
    return complex(a_in + root * c_ga), complex(b_in + root * c_gb)


def nonchiral_outputs_ode(
    params: CavityParams, phi: float, a_in: complex, b_in: complex, delta_ap: float = 0.0, delta_cp: float = 0.0
) -> tuple[complex, complex]:
    """Drive both modes with a constant field from rest and read out once transients decay."""
    kappa, gamma, g, hb = params.kappa, params.gamma, params.g, params.backscatter_h
    root = math.sqrt(2 * params.kappa_ex)
    cav = kappa + 1j * delta_cp
    atom = gamma + 1j * delta_ap
    up, down = np.exp(1j * phi), np.exp(-1j * phi)
    matrix = np.array(
        [
            [-cav, -1j * hb, -1j * g * down],
            [-1j * hb, -cav, -1j * g * up],
            [-1j * g * up, -1j * g * down, -atom],
        ]
    )
    drive = np.array([-root * a_in, -root * b_in, 0.0], dtype=complex)
    slowest = np.min(-np.linalg.eigvals(matrix).real)
    t_end = 40.0 / slowest

    def rhs(_, y):
        return matrix @ y + drive

    sol = solve_ivp(rhs, (0.0, t_end), np.zeros(3, dtype=complex), method="RK45", rtol=1e-12, atol=1e-14)
    c_ga, c_gb, _ = sol.y[:, -1]
    return complex(a_in + root * c_ga), complex(b_in + root * c_gb)


# ---------------------------------------------------------------------------
# Gate matrices


@dataclass(frozen=True)
class GateMatrix:
    basis: tuple[str, ...]
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.basis)

    def restricted(self, labels: Sequence[str]) -> np.ndarray:
        idx = [self.basis.index(lbl) for lbl in labels]
        return self.entries[np.ix_(idx, idx)]

    def to_json(self) -> dict:
        return {
            "basis": list(self.basis),
            "re": self.entries.real.tolist(),
            "im": self.entries.imag.tolist(),
        }


def _ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


# Atom states ordered (g, s); photon direction (R, L).
MEASURED_BASIS = ("gR", "gL", "sR", "sL")
_G = np.diag([1.0, 0.0]).astype(complex)
_S = np.diag([0.0, 1.0]).astype(complex)
_I2 = np.eye(2, dtype=complex)


def zt_ap(phi: float) -> np.ndarray:
    """Non-chiral reflection gate on (atom) x (R, L)."""
    swap = np.array([[0, np.exp(-2j * phi)], [np.exp(2j * phi), 0]])
    return np.kron(_G, swap) - np.kron(_S, _I2)


def v_gate(phi: float) -> np.ndarray:
    return np.diag([1.0, np.exp(-2j * phi)])


HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def gate_sequence_measured(phi: float) -> GateMatrix:
    """``H_p V Zt V^dag H_p`` over basis (gR, gL, sR, sL)."""
    hp = np.kron(_I2, HADAMARD)
    v = np.kron(_I2, v_gate(phi))
    return GateMatrix(MEASURED_BASIS, hp @ v @ zt_ap(phi) @ v.conj().T @ hp)


# Photon modes ordered (R_v, R_h, L_v, L_h).
UNMEASURED_BASIS = tuple(f"{a}{p}" for a in ("g", "s") for p in ("R_v", "R_h", "L_v", "L_h"))


def zt_prime_ap(phi: float) -> np.ndarray:
    coupled = np.zeros((4, 4), dtype=complex)
    coupled[0, 0] = coupled[2, 2] = 1.0  # v rails pass untouched
    coupled[1, 3] = np.exp(-2j * phi)  # |R_h><L_h|
    coupled[3, 1] = np.exp(2j * phi)  # |L_h><R_h|
    empty = np.diag([1.0, -1.0, 1.0, -1.0]).astype(complex)
    return np.kron(_G, coupled) + np.kron(_S, empty)


U_P = np.diag([1.0, -1.0, 1.0, 1.0]).astype(complex)


def gate_sequence_unmeasured(phi: float) -> GateMatrix:
    """``Zt' U_p Zt'`` over (g, s) x (R_v, R_h, L_v, L_h)."""
    up = np.kron(_I2, U_P)
    z = zt_prime_ap(phi)
    return GateMatrix(UNMEASURED_BASIS, z @ up @ z)


CP_BASIS = ("g0", "g1", "s0", "s1")


def controlled_phase(phi: float) -> np.ndarray:
    return np.diag([1.0, 1.0, 1.0, np.exp(1j * phi)])


def gate_W(params: CavityParams) -> tuple[GateMatrix, float]:
    """Atom-photon gate of the shifted-eigenstate scheme and its phase ``phi_W``."""
    if params.kappa_i > 0.1 * params.kappa_ex or params.g < 10 * params.gamma:
        warnings.warn("gate_W assumes kappa_i << kappa_ex and g >> gamma", stacklevel=2)
    phi_w = 2 * math.pi - 2 * math.atan(params.g / params.kappa_ex)
    z_p = np.kron(_I2, np.diag([1.0, -1.0]))
    return GateMatrix(CP_BASIS, z_p @ controlled_phase(phi_w)), phi_w
