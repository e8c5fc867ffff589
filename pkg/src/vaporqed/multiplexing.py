"""Active and passive multiplexing of probabilistically loaded cavities."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import CavityParams
from .exceptions import ParameterDomainError
from .scattering import transmission


@dataclass(frozen=True)
class MultiplexPlan:
    p: float
    n_real: float
    n_opt: int
    p_tilde: float
    passive_loss: tuple[float, float] | None = None


def _check_p(p: float) -> float:
    p = float(p)
    if not (0.0 < p < 1.0):
        raise ParameterDomainError(f"occupation probability must lie in (0, 1), got {p}")
    return p


def exactly_one_prob(N: int, p: float) -> float:
    """Probability that exactly one of ``N`` independent cavities holds an atom."""
    p = _check_p(p)
    if int(N) != N or N < 1:
        raise ParameterDomainError("N must be a positive integer")
    return N * p * (1.0 - p) ** (N - 1)


def optimal_count(p: float) -> tuple[float, int]:
    """Real maximiser ``-1/ln(1-p)`` and the best integer count next to it."""
    p = _check_p(p)
    n_real = -1.0 / math.log1p(-p)
    candidates = {1, max(1, math.floor(n_real)), max(1, math.ceil(n_real))}
    n_int = max(sorted(candidates), key=lambda n: exactly_one_prob(n, p))
    return n_real, n_int


def passive_chain_loss(N: int, params: CavityParams) -> tuple[float, float]:
    """Photon loss through ``N`` empty cavities: ``(N kappa_i/kappa_ex, 1 - |t|^(2N))``."""
    if int(N) != N or N < 1:
        raise ParameterDomainError("N must be a positive integer")
    approx = N * params.kappa_i / params.kappa_ex
    t_empty = transmission(params, 0.0, 0.0, atom_coupled=False)
    exact = 1.0 - abs(t_empty) ** (2 * N)
    return approx, exact


def plan(p: float, params: CavityParams | None = None) -> MultiplexPlan:
    n_real, n_opt = optimal_count(p)
    loss = passive_chain_loss(n_opt, params) if params is not None else None
    return MultiplexPlan(p, n_real, n_opt, exactly_one_prob(n_opt, p), loss)
