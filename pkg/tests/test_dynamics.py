from __future__ import annotations

import numpy as np
import pytest
from scipy.optimize import brentq

from vaporqed.core import Detunings, ModeShape
from vaporqed.dynamics import (
    DriveSpec,
    integrate_absorption,
    integrate_retrieval,
    norm_balance,
    photon_input,
    retrieval_metrics,
)
from vaporqed.exceptions import GridMismatchError, ParameterDomainError, SynthesisDivergenceError
from vaporqed.presets import TABLE1_ROWS, TABLE2_ROWS, get_preset
from vaporqed.synthesis import eta_max, synthesize_exact, time_reverse

ALL_ROWS = TABLE1_ROWS + TABLE2_ROWS


def _retrieve(d, **kwargs):
    return integrate_retrieval(d.params, DriveSpec(d.pulse, d.detunings), **kwargs)


def _absorb(d):
    drive = DriveSpec(time_reverse(d.pulse), d.detunings, photon_input(d.mode, d.detunings.delta_p))
    return integrate_absorption(d.params, drive)


@pytest.mark.parametrize("name", ALL_ROWS)
def test_norm_balance_closes(name, design):
    d = design(name)
    for traj in (_retrieve(d), _absorb(d)):
        assert abs(norm_balance(d.params, traj).residual) < 1e-6


@pytest.mark.parametrize("name", ALL_ROWS)
def test_time_reversal_duality(name, design):
    d = design(name)
    eta_r = retrieval_metrics(_retrieve(d), d.mode, d.detunings.delta_p).eta_r
    eta_abs = retrieval_metrics(_absorb(d), d.mode, d.detunings.delta_p).eta_abs
    assert abs(eta_abs - eta_r) <= 0.01


def test_tolerance_halving_converged(design):
    d = design("cavity1a")
    a = retrieval_metrics(_retrieve(d), d.mode, 0.0).eta_r
    b = retrieval_metrics(_retrieve(d, rtol=5e-10, atol=5e-13), d.mode, 0.0).eta_r
    assert abs(a - b) < 1e-8


def test_constant_coupling_profile_is_bit_identical(design):
    d = design("cavity5")
    plain = _retrieve(d)
    profiled = integrate_retrieval(d.params, DriveSpec(d.pulse, d.detunings, None, lambda t: d.params.g))
    assert np.array_equal(plain.a_out, profiled.a_out)


def test_fig7_output_matches_target_mode(design):
    d = design("cavity5")
    m = retrieval_metrics(_retrieve(d), d.mode, d.detunings.delta_p)
    assert 1 - m.eta_r == pytest.approx(0.021, abs=0.005)
    assert m.fidelity_F == pytest.approx(m.eta_r, rel=1e-3)


def test_fig7_real_part_tracks_mode(design):
    d = design("cavity5")
    traj = _retrieve(d)
    rotated = traj.a_out * np.exp(1j * d.detunings.delta_p * traj.grid)
    target = np.sqrt(d.eta_r) * d.mode.h(traj.grid)
    assert np.max(np.abs(rotated.real - target)) < 1e-3 * target.max()


def test_cavity5_absorption(design):
    d = design("cavity5")
    assert 1 - retrieval_metrics(_absorb(d), d.mode, d.detunings.delta_p).eta_abs == pytest.approx(0.021, abs=0.005)


def test_cavity1a_absorption(design):
    d = design("cavity1a")
    assert 1 - retrieval_metrics(_absorb(d), d.mode, 0.0).eta_abs == pytest.approx(0.024, abs=0.008)


def _closed_loop(eta):
    p = get_preset("cavity1a").params
    mode = ModeShape.sine_squared(2.22)
    pulse = synthesize_exact(p, mode, Detunings(), eta).pulse
    traj = integrate_retrieval(p, DriveSpec(pulse, Detunings()))
    return retrieval_metrics(traj, mode, 0.0).eta_r


def test_closed_loop_near_the_efficiency_bound():
    eta = eta_max(get_preset("cavity1a").params, 0.0) - 1e-3
    assert _closed_loop(eta) == pytest.approx(eta, abs=1e-2)


def test_closed_loop_near_the_finite_duration_bound():
    p = get_preset("cavity1a").params
    mode = ModeShape.sine_squared(2.22)

    def feasible(eta):
        try:
            synthesize_exact(p, mode, Detunings(), eta)
            return 1.0
        except SynthesisDivergenceError:
            return -1.0

    lo, hi = 0.9, eta_max(p, 0.0) * (1 - 1e-9)
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if feasible(mid) > 0 else (lo, mid)
    eta = lo - 1e-3
    assert _closed_loop(eta) == pytest.approx(eta, abs=1e-2)


def test_grid_mismatch_is_rejected(design):
    d = design("cavity1a")
    with pytest.raises(GridMismatchError):
        retrieval_metrics(_retrieve(d), d.mode.with_duration(3.0), 0.0)


def test_overfull_input_is_rejected(design):
    d = design("cavity1a")
    drive = DriveSpec(time_reverse(d.pulse), d.detunings, lambda t: 2.0 * d.mode.h(t))
    with pytest.raises(ParameterDomainError):
        integrate_absorption(d.params, drive)
