"""Shared parameter, mode, pulse and trajectory types.

Internal units: angular frequencies in rad/ns, times in ns. Values typed in
the customary ``(2 pi) GHz`` convention go through :func:`from_paper_units`,
which multiplies every rate by 2 pi.  The atomic decay is entered as the
population decay ``2 gamma`` and stored as the coherence decay ``gamma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad, trapezoid
from scipy.interpolate import CubicSpline

from .exceptions import GridMismatchError, ParameterDomainError

TWO_PI = 2.0 * math.pi
DEFAULT_SAMPLES = 4096

ArrayFn = Callable[[np.ndarray], np.ndarray]


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ParameterDomainError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class CavityParams:
    """Atom-cavity-waveguide rates in rad/ns.

    ``gamma`` is the coherence decay of the excited state (half its
    population decay).  ``backscatter_h`` couples the two counter-propagating
    resonator modes and only matters for the non-chiral model.
    """

    g: float
    kappa_ex: float
    kappa_i: float
    gamma: float
    backscatter_h: float = 0.0

    def __post_init__(self):
        for name in ("g", "kappa_ex", "kappa_i", "gamma", "backscatter_h"):
            object.__setattr__(self, name, _check_finite(name, getattr(self, name)))
        if self.g < 0 or self.kappa_ex <= 0 or self.kappa_i < 0 or self.gamma <= 0:
            raise ParameterDomainError(
                "require g >= 0, kappa_ex > 0, kappa_i >= 0, gamma > 0; got "
                f"g={self.g}, kappa_ex={self.kappa_ex}, kappa_i={self.kappa_i}, gamma={self.gamma}"
            )
        if self.backscatter_h < 0:
            raise ParameterDomainError("backscatter_h must be non-negative")

    @property
    def kappa(self) -> float:
        """Total cavity field decay rate."""
        return self.kappa_ex + self.kappa_i

    @property
    def cooperativity(self) -> float:
        return cooperativity(self)

    def with_g(self, g: float) -> "CavityParams":
        return replace(self, g=g)

    def to_paper_units(self) -> tuple[float, float, float, float]:
        """Inverse of :func:`from_paper_units`: ``(g, kappa_ex, kappa_i, 2 gamma)`` in GHz."""
        return (
            self.g / TWO_PI,
            self.kappa_ex / TWO_PI,
            self.kappa_i / TWO_PI,
            2.0 * self.gamma / TWO_PI,
        )


def from_paper_units(
    g_ghz: float, kex_ghz: float, ki_ghz: float, two_gamma_ghz: float, backscatter_ghz: float = 0.0
) -> CavityParams:
    """Build :class:`CavityParams` from rates quoted in ``(2 pi) GHz``."""
    values = {
        "g_ghz": g_ghz,
        "kex_ghz": kex_ghz,
        "ki_ghz": ki_ghz,
        "two_gamma_ghz": two_gamma_ghz,
        "backscatter_ghz": backscatter_ghz,
    }
    for name, value in values.items():
        value = _check_finite(name, value)
        if value < 0:
            raise ParameterDomainError(f"{name} must be non-negative, got {value}")
    if g_ghz <= 0 or kex_ghz <= 0 or two_gamma_ghz <= 0:
        raise ParameterDomainError("g, kappa_ex and 2 gamma must be strictly positive")
    return CavityParams(
        g=TWO_PI * g_ghz,
        kappa_ex=TWO_PI * kex_ghz,
        kappa_i=TWO_PI * ki_ghz,
        gamma=TWO_PI * two_gamma_ghz / 2.0,
        backscatter_h=TWO_PI * backscatter_ghz,
    )


def cooperativity(params: CavityParams) -> float:
    """Return ``C = g^2 / (kappa gamma)``."""
    return params.g**2 / (params.kappa * params.gamma)


@dataclass(frozen=True)
class Detunings:
    """Control-laser detuning, cavity detuning and photon offset, all in rad/ns."""

    delta1: float = 0.0
    delta2: float = 0.0
    delta_p: float = 0.0

    @classmethod
    def for_photon(cls, delta_p: float, delta2: float = 0.0) -> "Detunings":
        """Detunings obeying the two-photon resonance ``delta1 = delta2 + delta_p``."""
        return cls(delta1=delta2 + delta_p, delta2=delta2, delta_p=delta_p)

    @property
    def two_photon_mismatch(self) -> float:
        return self.delta1 - self.delta2 - self.delta_p

    def shifted(self, common: float) -> "Detunings":
        """Shift both one-photon detunings by ``common``, keeping delta_p."""
        return Detunings(self.delta1 + common, self.delta2 + common, self.delta_p)


class ModeKind(str, Enum):
    SINE_SQUARED = "sine_squared"
    GAUSSIAN = "gaussian"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class ModeShape:
    """Real, non-negative photon mode ``h(t)`` on ``[0, T]`` normalised to unit energy.

    Use the constructors :meth:`sine_squared`, :meth:`gaussian` and
    :meth:`sampled` rather than calling the class directly.
    """

    kind: ModeKind
    duration_T: float
    h: ArrayFn = field(repr=False, compare=False)
    h_dot: ArrayFn = field(repr=False, compare=False)
    h_ddot: ArrayFn = field(repr=False, compare=False)

    @classmethod
    def sine_squared(cls, T: float) -> "ModeShape":
        T = _positive_duration(T)
        amp = math.sqrt(8.0 / (3.0 * T))
        w = math.pi / T

        def h(t):
            return amp * np.sin(w * np.asarray(t, dtype=float)) ** 2

        def h_dot(t):
            return amp * w * np.sin(2.0 * w * np.asarray(t, dtype=float))

        def h_ddot(t):
            return 2.0 * amp * w * w * np.cos(2.0 * w * np.asarray(t, dtype=float))

        return cls(ModeKind.SINE_SQUARED, T, h, h_dot, h_ddot)

    @classmethod
    def gaussian(cls, T: float) -> "ModeShape":
        """Gaussian of width ``T/8`` centred at ``T/2``, cut at four sigma.

        The value at the cut is subtracted before renormalising so that the
        mode starts and ends at exactly zero.
        """
        T = _positive_duration(T)
        sigma = T / 8.0
        centre = T / 2.0
        floor = math.exp(-8.0)

        def raw(t):
            return np.exp(-((t - centre) ** 2) / (2.0 * sigma**2))

        energy, _ = quad(lambda s: (raw(s) - floor) ** 2, 0.0, T, epsabs=1e-14, epsrel=1e-13, limit=200)
        amp = 1.0 / math.sqrt(energy)

        def h(t):
            t = np.asarray(t, dtype=float)
            return amp * (raw(t) - floor)

        def h_dot(t):
            t = np.asarray(t, dtype=float)
            return -amp * (t - centre) / sigma**2 * raw(t)

        def h_ddot(t):
            t = np.asarray(t, dtype=float)
            return amp * (((t - centre) / sigma**2) ** 2 - 1.0 / sigma**2) * raw(t)

        return cls(ModeKind.GAUSSIAN, T, h, h_dot, h_ddot)

    @classmethod
    def sampled(cls, t: np.ndarray, values: np.ndarray) -> "ModeShape":
        """Mode from samples on a grid starting at 0; interpolated by a cubic spline."""
        t = np.asarray(t, dtype=float)
        values = np.asarray(values, dtype=float)
        if t.ndim != 1 or t.shape != values.shape or t.size < 4:
            raise GridMismatchError("sampled mode needs matching 1-D arrays with at least 4 points")
        if abs(t[0]) > 1e-12:
            raise GridMismatchError("sampled mode grid must start at t = 0")
        if np.any(values < 0):
            raise ParameterDomainError("mode samples must be non-negative")
        peak = values.max()
        if peak <= 0:
            raise ParameterDomainError("mode samples are identically zero")
        if max(values[0], values[-1]) > 1e-6 * peak:
            raise ParameterDomainError("sampled mode must vanish at both ends (<= 1e-6 of peak)")
        spline = CubicSpline(t, values)
        T = float(t[-1])
        energy, _ = quad(lambda s: float(spline(s)) ** 2, 0.0, T, limit=500, epsrel=1e-12, epsabs=1e-14)
        scale = 1.0 / math.sqrt(energy)
        first = spline.derivative(1)
        second = spline.derivative(2)
        return cls(
            ModeKind.SAMPLED,
            T,
            lambda s: scale * spline(np.asarray(s, dtype=float)),
            lambda s: scale * first(np.asarray(s, dtype=float)),
            lambda s: scale * second(np.asarray(s, dtype=float)),
        )

    def grid(self, n_samples: int = DEFAULT_SAMPLES) -> np.ndarray:
        return uniform_grid(self.duration_T, n_samples)

    def energy(self) -> float:
        """``int_0^T h^2 dt`` by adaptive quadrature (should be 1)."""
        value, _ = quad(lambda s: float(self.h(s)) ** 2, 0.0, self.duration_T, limit=500, epsrel=1e-13, epsabs=1e-15)
        return value

    def with_duration(self, T: float) -> "ModeShape":
        """Same family at a different duration (not available for sampled modes)."""
        if self.kind is ModeKind.SINE_SQUARED:
            return ModeShape.sine_squared(T)
        if self.kind is ModeKind.GAUSSIAN:
            return ModeShape.gaussian(T)
        raise ParameterDomainError("cannot rescale a sampled mode")


def _positive_duration(T: float) -> float:
    T = _check_finite("T", T)
    if T <= 0:
        raise ParameterDomainError(f"duration must be positive, got {T}")
    return T


def uniform_grid(T: float, n_samples: int = DEFAULT_SAMPLES) -> np.ndarray:
    """``n_samples`` equally spaced points on ``[0, T]`` inclusive."""
    if n_samples < 2:
        raise ParameterDomainError("grid needs at least two samples")
    return np.linspace(0.0, float(T), int(n_samples))


class PulseCase(str, Enum):
    EXACT = "exact"
    ADIABATIC_CASE1 = "adiabatic_case1"
    ADIABATIC_CASE2 = "adiabatic_case2"


@dataclass(frozen=True)
class ControlPulse:
    """Sampled control field ``Omega_0(t) exp(i phi_0(t))`` on a uniform grid."""

    grid: np.ndarray
    omega0: np.ndarray
    phi0: np.ndarray
    case: PulseCase = PulseCase.EXACT
    eta_r: float = 0.0
    truncated: bool = False
    time_reversed: bool = False

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        omega0 = np.asarray(self.omega0, dtype=float)
        phi0 = np.asarray(self.phi0, dtype=float)
        if not (grid.shape == omega0.shape == phi0.shape) or grid.ndim != 1:
            raise GridMismatchError("grid, omega0 and phi0 must be 1-D arrays of equal length")
        if np.any(omega0 < 0):
            raise ParameterDomainError("omega0 must be non-negative")
        for name, arr in (("grid", grid), ("omega0", omega0), ("phi0", phi0)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def duration(self) -> float:
        return float(self.grid[-1] - self.grid[0])

    @property
    def energy(self) -> float:
        """Pulse energy ``f(0, T) = int Omega_0^2 dt`` in rad^2/ns."""
        return float(trapezoid(self.omega0**2, self.grid))

    def complex_field(self) -> np.ndarray:
        return self.omega0 * np.exp(1j * self.phi0)

    @classmethod
    def zero(cls, grid: np.ndarray, case: PulseCase = PulseCase.EXACT) -> "ControlPulse":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.zeros_like(grid), np.zeros_like(grid), case=case)


@dataclass(frozen=True)
class Trajectory:
    """Amplitudes of ``|s,0>``, ``|e,0>``, ``|g,1>`` and the waveguide fields."""

    grid: np.ndarray
    c_s: np.ndarray
    c_e: np.ndarray
    c_g: np.ndarray
    a_in: np.ndarray
    a_out: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.grid).shape
        for name in ("c_s", "c_e", "c_g", "a_in", "a_out"):
            arr = np.asarray(getattr(self, name), dtype=complex)
            if arr.shape != n:
                raise GridMismatchError(f"{name} has shape {arr.shape}, grid has {n}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        grid = np.asarray(self.grid, dtype=float)
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)

    @property
    def norm(self) -> np.ndarray:
        return np.abs(self.c_s) ** 2 + np.abs(self.c_e) ** 2 + np.abs(self.c_g) ** 2
