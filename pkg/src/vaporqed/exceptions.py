"""Error types raised across the package."""

from __future__ import annotations


class VaporQEDError(Exception):
    """Base class for all package errors."""


class ParameterDomainError(VaporQEDError, ValueError):
    """An input lies outside the physical domain of an operation."""


class SynthesisDivergenceError(VaporQEDError):
    """The storage population dropped below the floor before the truncation window.

    Attributes
    ----------
    time : float
        Time in ns at which the floor was first crossed.
    """

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class InfeasibleEfficiencyError(VaporQEDError, ValueError):
    """Requested efficiency is not below the maximum achievable efficiency."""


class Case2InfeasibleError(VaporQEDError, ValueError):
    """The shifted-eigenstate operating point does not exist (kappa^2 + gamma^2 >= 2 g^2)."""


class IntegrationError(VaporQEDError, RuntimeError):
    """The ODE integrator failed to reach the end of the grid."""


class GridMismatchError(VaporQEDError, ValueError):
    """Two sampled objects do not share a time grid or duration."""


class BandwidthError(VaporQEDError, ValueError):
    """A sampled pulse is not resolved well enough for spectral filtering."""


class FitError(VaporQEDError, ValueError):
    """A least-squares fit is rank deficient."""


class RegisterError(VaporQEDError, ValueError):
    """Bad register label or target list in the state-vector engine."""


class ProtocolError(VaporQEDError):
    """A protocol step was applied outside its valid subspace."""
