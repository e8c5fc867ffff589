from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vaporqed.exceptions import ParameterDomainError
from vaporqed.multiplexing import exactly_one_prob, optimal_count, passive_chain_loss, plan
from vaporqed.presets import get_preset

P_GRID = np.geomspace(0.001, 0.5, 50)


def test_real_optimum_for_p_one_tenth():
    assert optimal_count(0.1)[0] == pytest.approx(9.49, abs=0.01)


@pytest.mark.parametrize("p", P_GRID)
def test_integer_optimum_matches_exhaustive_scan(p):
    counts = np.arange(1, 2001)
    best = int(counts[np.argmax([exactly_one_prob(int(n), p) for n in counts])])
    assert optimal_count(p)[1] == best


@pytest.mark.parametrize("p", [0.01, 0.05])
def test_series_for_real_optimum(p):
    n_real = optimal_count(p)[0]
    assert abs(n_real - (1 / p - 0.5 - p / 12)) < 2 * p**2


def test_success_probability_series():
    p = 0.01
    result = plan(p)
    assert abs(result.p_tilde - math.exp(-1) * (1 + p / 2)) < 10 * p**2


@given(st.floats(min_value=0.005, max_value=0.9))
def test_success_probability_is_unimodal(p):
    values = np.array([exactly_one_prob(n, p) for n in range(1, int(10 / p) + 2)])
    signs = np.sign(np.diff(values))
    signs = signs[signs != 0]
    assert np.count_nonzero(np.diff(signs)) <= 1


def test_single_passive_cavity_loss_for_cavity1a():
    p = get_preset("cavity1a").params
    approx, exact = passive_chain_loss(1, p)
    expected = 1 - ((p.kappa_ex - p.kappa_i) / (p.kappa_ex + p.kappa_i)) ** 2
    assert exact == pytest.approx(expected, rel=1e-12)
    assert exact == pytest.approx(0.008, abs=0.0005)


@pytest.mark.parametrize("name", ["cavity1a", "cavity1b", "cavity2a", "cavity3"])
@pytest.mark.parametrize("n", [1, 5, 20])
def test_linear_loss_estimate_brackets_exact(name, n):
    p = get_preset(name).params
    assert p.kappa_i / p.kappa_ex <= 0.05
    approx, exact = passive_chain_loss(n, p)
    assert approx <= 4 * exact and exact <= 4 * approx


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_probability_domain(p):
    with pytest.raises(ParameterDomainError):
        optimal_count(p)
