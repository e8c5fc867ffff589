from __future__ import annotations

import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vaporqed.exceptions import ProtocolError, RegisterError
from vaporqed.protocols import (
    BASIS_PHASES,
    FOCK_TRUTH,
    MAX_REGISTERS,
    POLARIZATION_TRUTH,
    StateVector,
    apply_gate,
    apply_P,
    build_cluster_1d,
    build_ghz,
    build_ring,
    chain_edges,
    ghz_target,
    graph_stabilizers,
    measure_enumerate,
    pauli_expectation,
    photon_labels,
    photon_photon_cz,
    qkd_run,
    qkd_truth_table,
    qnd_detect,
    ring_edges,
)

TRUTH = {"fock": FOCK_TRUTH, "polarization": POLARIZATION_TRUTH}
ENCODINGS = ["single_rail", "dual_rail"]


def test_retrieval_moves_excitation_into_photon():
    state = StateVector.from_product({"a": [1, 1], "p1": [1, 0]})
    out = apply_P(state, "a", "p1")
    expected = StateVector.from_product({"a": [1, 0], "p1": [1, 1]})
    assert out.fidelity(expected) == pytest.approx(1.0, abs=1e-12)


def test_retrieval_refuses_to_overwrite_a_photon():
    state = StateVector.from_product({"a": [1, 1], "p1": [1, 1]})
    with pytest.raises(ProtocolError):
        apply_P(state, "a", "p1")


def test_register_cap():
    with pytest.raises(RegisterError):
        StateVector.zeros([f"q{i}" for i in range(MAX_REGISTERS + 1)])


def test_two_photon_ghz_is_bell_pair():
    state = build_ghz(2, "single_rail").branches[0].post_state
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    assert np.allclose(state.vector(("p1", "p2")), bell, atol=1e-12)


def test_atom_returns_to_ground_after_ghz():
    outcome = build_ghz(2, "single_rail")
    assert len(outcome.branches) == 1
    assert outcome.branches[0].outcomes["a"] == 1
    assert outcome.branches[0].probability == pytest.approx(1.0)


def test_three_photon_ghz_stabilizers():
    state = build_ghz(3, "single_rail").branches[0].post_state
    for paulis in ({"p1": "X", "p2": "X", "p3": "X"}, {"p1": "Z", "p2": "Z"}, {"p2": "Z", "p3": "Z"}):
        assert pauli_expectation(state, paulis).real == pytest.approx(1.0, abs=1e-10)


def test_two_photon_cluster_is_cz_plus_plus():
    state = build_cluster_1d(2, "single_rail").branches[0].post_state
    expected = StateVector.from_product({"p1": [1, 1], "p2": [1, 1]})
    expected = apply_gate(expected, "CZ", ("p1", "p2"))
    assert state.fidelity(expected) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("encoding", ENCODINGS)
@pytest.mark.parametrize("n", range(2, 7))
def test_cluster_stabilizers(n, encoding):
    labels = photon_labels(n)
    outcome = build_cluster_1d(n, encoding)
    assert outcome.total_probability == pytest.approx(1.0, abs=1e-10)
    for b in outcome.branches:
        assert np.allclose(graph_stabilizers(b.post_state, labels, chain_edges(labels)), 1.0, atol=1e-10)
        # negative control: a lone X on an inner vertex is not in the group
        assert abs(pauli_expectation(b.post_state, {labels[0]: "X"})) < 1e-10


@pytest.mark.parametrize("encoding", ENCODINGS)
@pytest.mark.parametrize("n", range(2, 7))
def test_ghz_fidelity(n, encoding):
    outcome = build_ghz(n, encoding)
    target = ghz_target(n, hadamard_frame=encoding == "dual_rail")
    assert outcome.total_probability == pytest.approx(1.0, abs=1e-10)
    for b in outcome.branches:
        assert b.post_state.fidelity(target) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_ring_stabilizers(n):
    state = build_ring(n)
    labels = photon_labels(n) + ["a"]
    assert np.allclose(graph_stabilizers(state, labels, ring_edges(n)), 1.0, atol=1e-10)


def test_photon_photon_cz_on_all_branches():
    checks = photon_photon_cz()
    assert len(checks) == 8
    for c in checks:
        assert c.max_error < 1e-12
        assert c.branch_probabilities == pytest.approx((0.5, 0.5), abs=1e-12)


def test_nondestructive_detection():
    results = {r.photon: r.branches for r in qnd_detect()}
    assert [b.outcomes["a"] for b in results["1"]] == [-1]
    assert [b.outcomes["a"] for b in results["0"]] == [1]
    plus = results["+"]
    assert [b.probability for b in plus] == pytest.approx([0.5, 0.5])
    for b, photon in zip(plus, (0, 1)):
        assert abs(b.post_state.drop("a", 0 if photon == 0 else 1).vector()[photon]) == pytest.approx(1.0)


@pytest.mark.parametrize("encoding", ["fock", "polarization"])
@pytest.mark.parametrize("basis", ["x", "y"])
def test_truth_tables_reproduced(encoding, basis):
    observed = dict(qkd_truth_table(encoding, basis))
    assert observed == TRUTH[encoding][basis]


@pytest.mark.parametrize("encoding", ["fock", "polarization"])
@pytest.mark.parametrize("basis", ["x", "y"])
def test_outcomes_depend_only_on_phase_sum(encoding, basis):
    phases = BASIS_PHASES[basis]
    by_sum: dict[bool, list[dict]] = {}
    for phi1, phi2 in product(phases, repeat=2):
        rnd = qkd_run(encoding, phi1, phi2)
        assert all(row.correct for row in rnd.rows)
        assert sum(r.probability for r in rnd.rows) == pytest.approx(1.0, abs=1e-10)
        key = abs(math.remainder(phi1 + phi2 - math.pi, 2 * math.pi)) < 1e-9
        by_sum.setdefault(key, []).append(rnd.distribution())
    for dists in by_sum.values():
        first = dists[0]
        for other in dists[1:]:
            assert set(other) == set(first)
            for k in first:
                assert other[k] == pytest.approx(first[k], abs=1e-10)


def test_spot_rows():
    assert FOCK_TRUTH["x"][(1, -1)] == 1
    assert FOCK_TRUTH["y"][(-1, -1)] == 0
    assert POLARIZATION_TRUTH["x"][(-1, 1, -1)] == 0


def test_mismatched_bases_are_rejected():
    assert qkd_run("fock", 0.0, math.pi / 2).rejected


@settings(max_examples=40, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=1, allow_nan=False, allow_infinity=False), min_size=8, max_size=8))
def test_measurement_conserves_probability(amps):
    vec = np.array(amps, dtype=complex)
    if np.linalg.norm(vec) < 1e-3:
        return
    state = StateVector(("a", "b", "c"), (vec / np.linalg.norm(vec)).reshape(2, 2, 2))
    state = apply_gate(apply_gate(state, "H", "a"), "CZ", ("a", "c"))
    branches = measure_enumerate(state, "b")
    assert sum(b.probability for b in branches) == pytest.approx(1.0, abs=1e-10)
    if len(branches) == 2:
        assert branches[0].outcomes["b"] == 1
