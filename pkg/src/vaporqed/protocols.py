"""Dense state-vector engine and the atom-photon protocol circuits.

Registers are named two-level systems.  Basis state ``|0>`` has Z eigenvalue
``+1``; measurement outcomes are reported as ``+1``/``-1``.  Circuits that
contain measurements are evaluated by enumerating every outcome branch with
its exact probability, and classically controlled corrections are applied
inside each branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .exceptions import ProtocolError, RegisterError

MAX_REGISTERS = 20
TOL = 1e-10

_SQ2 = 1.0 / math.sqrt(2.0)
PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}
H_GATE = np.array([[1, 1], [1, -1]], dtype=complex) * _SQ2


def rotation(theta: float) -> np.ndarray:
    """``R(theta)|0> = cos(theta/2)|0> + sin(theta/2)|1>``."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def controlled_phase(phi: float) -> np.ndarray:
    return np.diag([1.0, 1.0, 1.0, np.exp(1j * phi)])


CZ_GATE = controlled_phase(math.pi).real.astype(complex)


@dataclass(frozen=True)
class StateVector:
    labels: tuple[str, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(labels) > MAX_REGISTERS:
            raise RegisterError(f"at most {MAX_REGISTERS} registers supported")
        if len(set(labels)) != len(labels):
            raise RegisterError("register labels must be unique")
        amps = np.asarray(self.amplitudes, dtype=complex).reshape((2,) * len(labels))
        amps.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_product(cls, factors: Mapping[str, Sequence[complex]]) -> "StateVector":
        """Tensor product of single-register states (normalised individually)."""
        labels = tuple(factors)
        amps = np.ones((), dtype=complex)
        for label in labels:
            v = np.asarray(factors[label], dtype=complex)
            v = v / np.linalg.norm(v)
            amps = np.multiply.outer(amps, v)
        return cls(labels, amps)

    @classmethod
    def zeros(cls, labels: Sequence[str]) -> "StateVector":
        amps = np.zeros((2,) * len(labels), dtype=complex)
        amps[(0,) * len(labels)] = 1.0
        return cls(tuple(labels), amps)

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise RegisterError(f"unknown register {label!r}; have {self.labels}") from None

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def vector(self, order: Optional[Sequence[str]] = None) -> np.ndarray:
        """Flattened amplitudes with registers in ``order`` (first label is most significant)."""
        amps = self.amplitudes
        if order is not None:
            amps = np.transpose(amps, [self.axis(lbl) for lbl in order])
        return amps.reshape(-1)

    def drop(self, label: str, value: int = 0) -> "StateVector":
        """Remove a register known to be in ``|value>``; raises if it is not."""
        ax = self.axis(label)
        other = np.take(self.amplitudes, 1 - value, axis=ax)
        if np.linalg.norm(other) > TOL:
            raise ProtocolError(f"register {label!r} is not in |{value}>")
        labels = tuple(lbl for lbl in self.labels if lbl != label)
        return StateVector(labels, np.take(self.amplitudes, value, axis=ax))

    def fidelity(self, other: "StateVector") -> float:
        if set(self.labels) != set(other.labels):
            raise RegisterError("states act on different registers")
        return float(abs(np.vdot(other.vector(self.labels), self.vector())) ** 2)


def apply_unitary(state: StateVector, matrix: np.ndarray, targets: Sequence[str]) -> StateVector:
    targets = tuple(targets)
    if len(set(targets)) != len(targets):
        raise RegisterError("gate targets must be distinct")
    axes = [state.axis(t) for t in targets]
    k = len(targets)
    matrix = np.asarray(matrix, dtype=complex).reshape((2,) * (2 * k))
    moved = np.moveaxis(state.amplitudes, axes, range(k))
    out = np.tensordot(matrix, moved, axes=(list(range(k, 2 * k)), list(range(k))))
    return StateVector(state.labels, np.moveaxis(out, range(k), axes))


_SINGLE = {"H": H_GATE, "X": PAULI["X"], "Z": PAULI["Z"], "Z_p": PAULI["Z"], "Y": PAULI["Y"]}


def apply_gate(state: StateVector, gate: str, targets: Sequence[str] | str, angle: Optional[float] = None) -> StateVector:
    """Apply a named gate: ``H, X, Y, Z, Z_p, R`` (one target) or ``CZ, CP`` (two targets)."""
    if isinstance(targets, str):
        targets = (targets,)
    if gate in _SINGLE:
        if len(targets) != 1:
            raise RegisterError(f"{gate} acts on one register")
        return apply_unitary(state, _SINGLE[gate], targets)
    if gate == "R":
        if angle is None or len(targets) != 1:
            raise RegisterError("R needs one target and an angle")
        return apply_unitary(state, rotation(angle), targets)
    if gate in ("CZ", "CP"):
        if len(targets) != 2:
            raise RegisterError(f"{gate} acts on two registers")
        matrix = CZ_GATE if gate == "CZ" else controlled_phase(angle if angle is not None else math.pi)
        return apply_unitary(state, matrix, targets)
    raise RegisterError(f"unknown gate {gate!r}")


def apply_P(state: StateVector, atom: str, slot: str, inverse: bool = False) -> StateVector:
    """Photon retrieval ``|1>_a|0>_i -> |0>_a|1>_i`` (or storage with ``inverse=True``).

    Retrieval requires the slot to be empty wherever the atom holds an
    excitation and must not collide with an existing photon; storage requires
    the atom to be in ``|0>``.
    """
    a, i = state.axis(atom), state.axis(slot)
    amps = np.moveaxis(state.amplitudes, [a, i], [0, 1])
    out = np.zeros_like(amps)
    if not inverse:
        if np.linalg.norm(amps[1, 1]) > TOL:
            raise ProtocolError(f"slot {slot!r} is occupied while atom {atom!r} is excited")
        if np.linalg.norm(amps[1, 0]) > TOL and np.linalg.norm(amps[0, 1]) > TOL:
            raise ProtocolError(f"slot {slot!r} already holds a photon; retrieval would overwrite it")
        out[0, 0] = amps[0, 0]
        out[0, 1] = amps[0, 1] + amps[1, 0]
    else:
        if np.linalg.norm(amps[1]) > TOL:
            raise ProtocolError(f"atom {atom!r} must be in |0> to store the photon in slot {slot!r}")
        out[0, 0] = amps[0, 0]
        out[1, 0] = amps[0, 1]
    return StateVector(state.labels, np.moveaxis(out, [0, 1], [a, i]))


@dataclass(frozen=True)
class Branch:
    outcomes: Mapping[str, int]
    post_state: StateVector
    probability: float


def measure_enumerate(state: StateVector, register: str) -> list[Branch]:
    """Z-measurement of ``register``: normalised post-states, ``+1`` branch first."""
    ax = state.axis(register)
    total = state.norm**2
    branches = []
    for bit, outcome in ((0, +1), (1, -1)):
        proj = np.zeros_like(state.amplitudes)
        idx = [slice(None)] * len(state.labels)
        idx[ax] = bit
        proj[tuple(idx)] = state.amplitudes[tuple(idx)]
        prob = float(np.linalg.norm(proj) ** 2 / total)
        if prob > TOL**2:
            branches.append(Branch({register: outcome}, StateVector(state.labels, proj / np.linalg.norm(proj)), prob))
    return branches


def pauli_expectation(state: StateVector, paulis: Mapping[str, str]) -> complex:
    out = state
    for label, p in paulis.items():
        out = apply_unitary(out, PAULI[p], (label,))
    return complex(np.vdot(state.vector(), out.vector()))


def graph_stabilizers(state: StateVector, vertices: Sequence[str], edges: Iterable[tuple[str, str]]) -> list[float]:
    """Expectation of ``K_v = X_v prod_{u ~ v} Z_u`` for each vertex."""
    neighbours = {v: set() for v in vertices}
    for u, v in edges:
        neighbours[u].add(v)
        neighbours[v].add(u)
    values = []
    for v in vertices:
        ops = {v: "X"}
        ops.update({u: "Z" for u in neighbours[v]})
        values.append(pauli_expectation(state, ops).real)
    return values


def chain_edges(labels: Sequence[str]) -> list[tuple[str, str]]:
    return list(zip(labels[:-1], labels[1:]))


def photon_labels(n: int) -> list[str]:
    return [f"p{k}" for k in range(1, n + 1)]


@dataclass(frozen=True)
class ProtocolOutcome:
    """Photonic output of every measurement branch of a circuit."""

    branches: tuple[Branch, ...]

    @property
    def total_probability(self) -> float:
        return float(sum(b.probability for b in self.branches))


def _check_n(n: int) -> None:
    if n < 2:
        raise RegisterError("need at least two photons")
    if n + 1 > MAX_REGISTERS:
        raise RegisterError(f"at most {MAX_REGISTERS - 1} photons supported")


def build_ghz_single_rail(n: int) -> ProtocolOutcome:
    """GHZ state of ``n`` Fock-encoded photons from repeated retrieval and CNOTs."""
    _check_n(n)
    photons = photon_labels(n)
    state = StateVector.from_product({"a": [1, 1], **{p: [1, 0] for p in photons}})
    state = apply_P(state, "a", photons[0])
    for prev, nxt in zip(photons[:-1], photons[1:]):
        state = apply_gate(state, "H", "a")
        state = apply_gate(state, "CZ", ("a", prev))
        state = apply_gate(state, "H", "a")
        state = apply_P(state, "a", nxt)
    branches = measure_enumerate(state, "a")
    if len(branches) != 1 or branches[0].outcomes["a"] != 1:
        raise ProtocolError("atom did not return to |0>")
    b = branches[0]
    return ProtocolOutcome((Branch(b.outcomes, b.post_state.drop("a", 0), b.probability),))


def build_ghz_dual_rail(n: int) -> ProtocolOutcome:
    """``H^n |GHZ>`` of polarization photons: star graph around the atom, then an X-measurement."""
    _check_n(n)
    photons = photon_labels(n)
    state = StateVector.zeros(["a", *photons])
    state = apply_gate(state, "H", "a")
    for p in photons:
        state = apply_gate(state, "H", p)
        state = apply_gate(state, "CZ", ("a", p))
    state = apply_gate(state, "H", "a")
    out = []
    for b in measure_enumerate(state, "a"):
        post = b.post_state
        if b.outcomes["a"] == -1:
            post = apply_gate(post, "X", photons[0])
        out.append(Branch(b.outcomes, post.drop("a", 0 if b.outcomes["a"] == 1 else 1), b.probability))
    return ProtocolOutcome(tuple(out))


def ghz_target(n: int, hadamard_frame: bool = False) -> StateVector:
    photons = photon_labels(n)
    amps = np.zeros((2,) * n, dtype=complex)
    amps[(0,) * n] = amps[(1,) * n] = _SQ2
    state = StateVector(tuple(photons), amps)
    if hadamard_frame:
        for p in photons:
            state = apply_gate(state, "H", p)
    return state


def build_ghz(n: int, encoding: str = "single_rail") -> ProtocolOutcome:
    if encoding == "single_rail":
        return build_ghz_single_rail(n)
    if encoding == "dual_rail":
        return build_ghz_dual_rail(n)
    raise RegisterError(f"unknown encoding {encoding!r}")


def build_cluster_1d(n: int, encoding: str = "single_rail") -> ProtocolOutcome:
    """Linear cluster state on photons ``p1 - p2 - ... - pn``.

    Single rail uses ``P_{a,k+1} Z_{a,k} H_a`` per added photon; dual rail
    repeats (CNOT atom -> photon, H on atom) and then disconnects the atom by
    a Z-measurement whose outcome is corrected on the last photon.
    """
    _check_n(n)
    photons = photon_labels(n)
    if encoding == "single_rail":
        state = StateVector.zeros(["a", *photons])
        state = apply_gate(state, "H", "a")
        state = apply_P(state, "a", photons[0])
        for prev, nxt in zip(photons[:-1], photons[1:]):
            state = apply_gate(state, "H", "a")
            state = apply_gate(state, "CZ", ("a", prev))
            state = apply_P(state, "a", nxt)
        b = measure_enumerate(state, "a")
        if len(b) != 1 or b[0].outcomes["a"] != 1:
            raise ProtocolError("atom did not return to |0>")
        return ProtocolOutcome((Branch(b[0].outcomes, b[0].post_state.drop("a", 0), 1.0),))
    if encoding == "dual_rail":
        state = _dual_rail_chain(photons)
        out = []
        for b in measure_enumerate(state, "a"):
            post = b.post_state
            bit = 0 if b.outcomes["a"] == 1 else 1
            if bit:
                post = apply_gate(post, "Z", photons[-1])
            out.append(Branch(b.outcomes, post.drop("a", bit), b.probability))
        return ProtocolOutcome(tuple(out))
    raise RegisterError(f"unknown encoding {encoding!r}")


def _dual_rail_chain(photons: Sequence[str]) -> StateVector:
    """Chain ``p1 - ... - pn - a`` with the atom still attached at the end."""
    state = StateVector.zeros(["a", *photons])
    state = apply_gate(state, "H", "a")
    for p in photons:
        state = apply_gate(state, "H", p)
        state = apply_gate(state, "CZ", ("a", p))
        state = apply_gate(state, "H", p)
        state = apply_gate(state, "H", "a")
    return state


def build_ring(n: int) -> StateVector:
    """Ring graph on ``n`` photons plus the atom: chain, then a second pass of photon 1."""
    _check_n(n)
    photons = photon_labels(n)
    state = _dual_rail_chain(photons)
    return apply_gate(state, "CZ", ("a", photons[0]))


def ring_edges(n: int) -> list[tuple[str, str]]:
    cycle = [*photon_labels(n), "a"]
    return list(zip(cycle, cycle[1:] + cycle[:1]))


# ---------------------------------------------------------------------------
# Photon-photon gate and non-destructive detection


@dataclass(frozen=True)
class CircuitCheck:
    label: str
    branch_probabilities: tuple[float, ...]
    max_error: float

    @property
    def passed(self) -> bool:
        return self.max_error <= 1e-12


def _two_photon_inputs() -> dict[str, np.ndarray]:
    zero, one = np.array([1, 0], complex), np.array([0, 1], complex)
    plus, minus = (zero + one) * _SQ2, (zero - one) * _SQ2
    basis = {"0": zero, "1": one, "+": plus, "-": minus}
    inputs = {}
    for a, b in ["00", "01", "10", "11", "++", "+-", "-+", "--"]:
        inputs[a + b] = np.kron(basis[a], basis[b])
    return inputs


def photon_photon_cz() -> list[CircuitCheck]:
    """Run the atom-mediated photon-photon CZ on 8 inputs, checking every branch."""
    checks = []
    for name, vec in _two_photon_inputs().items():
        atom = np.array([1, 0], complex)
        state = StateVector(("a", "p1", "p2"), np.kron(atom, vec))
        state = apply_gate(state, "H", "a")
        state = apply_gate(state, "CZ", ("a", "p1"))
        state = apply_gate(state, "R", "a", math.pi / 2)
        state = apply_gate(state, "CZ", ("a", "p2"))
        state = apply_gate(state, "R", "a", -math.pi / 2)
        target = CZ_GATE @ vec
        probs, err = [], 0.0
        for b in measure_enumerate(state, "a"):
            k = 0 if b.outcomes["a"] == 1 else 1
            post = b.post_state
            if k:
                post = apply_gate(post, "Z", "p1")
            post = apply_gate(post, "Z", "p2")
            photonic = post.drop("a", k).vector(("p1", "p2"))
            err = max(err, float(np.max(np.abs(photonic - target))))
            probs.append(b.probability)
        checks.append(CircuitCheck(name, tuple(probs), err))
    return checks


@dataclass(frozen=True)
class QNDResult:
    photon: str
    branches: tuple[Branch, ...]


def qnd_detect(photon: Optional[Sequence[complex]] = None) -> list[QNDResult]:
    """Non-destructive photon detection: H, CZ, H on the atom, then measure it."""
    inputs = {"0": [1, 0], "1": [0, 1], "+": [1, 1]} if photon is None else {"custom": photon}
    results = []
    for name, vec in inputs.items():
        state = StateVector.from_product({"a": [1, 0], "p": vec})
        state = apply_gate(state, "H", "a")
        state = apply_gate(state, "CZ", ("a", "p"))
        state = apply_gate(state, "H", "a")
        results.append(QNDResult(name, tuple(measure_enumerate(state, "a"))))
    return results


# ---------------------------------------------------------------------------
# Key distribution through a central atom

FOCK_TRUTH = {
    "x": {(1, 1): 0, (1, -1): 1, (-1, 1): 0, (-1, -1): 1},
    "y": {(1, 1): 0, (1, -1): 1, (-1, 1): 1, (-1, -1): 0},
}
POLARIZATION_TRUTH = {
    "x": {
        (1, 1, 1): 0, (1, -1, 1): 0, (-1, 1, -1): 0, (-1, -1, -1): 0,
        (1, 1, -1): 1, (1, -1, -1): 1, (-1, 1, 1): 1, (-1, -1, 1): 1,
    },
    "y": {
        (1, 1, 1): 0, (1, -1, -1): 0, (-1, 1, -1): 0, (-1, -1, 1): 0,
        (1, 1, -1): 1, (1, -1, 1): 1, (-1, 1, 1): 1, (-1, -1, -1): 1,
    },
}
BASIS_PHASES = {"x": (0.0, math.pi), "y": (math.pi / 2, -math.pi / 2)}


def phase_basis(phi: float) -> str:
    """``'x'`` for phases 0 or pi (mod 2 pi), ``'y'`` for +-pi/2."""
    wrapped = math.remainder(phi, 2 * math.pi)
    for basis, phases in BASIS_PHASES.items():
        for ref in phases:
            if abs(math.remainder(wrapped - ref, 2 * math.pi)) < 1e-12:
                return basis
    raise ProtocolError(f"phase {phi} is not a key-distribution input")


@dataclass(frozen=True)
class QKDRow:
    outcomes: tuple[int, ...]
    probability: float
    inferred_sum_is_pi: bool
    true_sum_is_pi: bool

    @property
    def correct(self) -> bool:
        return self.inferred_sum_is_pi == self.true_sum_is_pi


@dataclass(frozen=True)
class QKDRound:
    encoding: str
    basis: Optional[str]
    rows: tuple[QKDRow, ...]
    rejected: bool = False

    def distribution(self) -> dict[tuple[int, ...], float]:
        return {r.outcomes: r.probability for r in self.rows}


def _qubit(phi: float) -> np.ndarray:
    return np.array([1.0, np.exp(1j * phi)]) * _SQ2


def _branches(states: list[tuple[tuple[int, ...], float, StateVector]], register: str):
    out = []
    for outcomes, prob, state in states:
        for b in measure_enumerate(state, register):
            out.append((outcomes + (b.outcomes[register],), prob * b.probability, b.post_state))
    return out


def _fock_round(phi1: float, phi2: float):
    state = StateVector.from_product({"a": [1, 0], "p1": _qubit(phi1), "p2": _qubit(phi2)})
    state = apply_P(state, "a", "p1", inverse=True)
    state = apply_gate(state, "H", "a")
    state = apply_gate(state, "CZ", ("a", "p2"))
    state = apply_gate(state, "H", "a")
    stage = []
    for outcomes, prob, post in _branches([((), 1.0, state)], "a"):
        if outcomes[-1] == -1:
            post = apply_gate(post, "X", "a")
        post = apply_P(post, "a", "p2", inverse=True)
        post = apply_gate(post, "H", "a")
        stage.append((outcomes, prob, post))
    return _branches(stage, "a")


def _polarization_round(phi1: float, phi2: float):
    state = StateVector.from_product({"a": [1, 1], "p1": _qubit(phi1), "p2": _qubit(phi2)})
    state = apply_gate(state, "CZ", ("a", "p1"))
    state = apply_gate(state, "H", "a")
    state = apply_gate(state, "H", "p1")
    stage = []
    for outcomes, prob, post in _branches([((), 1.0, state)], "p1"):
        post = apply_gate(post, "H", "p2")
        post = apply_gate(post, "CZ", ("a", "p2"))
        post = apply_gate(post, "H", "p2")
        stage.append((outcomes, prob, post))
    stage = [(o, p, apply_gate(s, "H", "a")) for o, p, s in _branches(stage, "p2")]
    return _branches(stage, "a")


def qkd_run(encoding: str, phi1: float, phi2: float) -> QKDRound:
    """Enumerate every outcome string for Alice's and Bob's phases and decode it."""
    if encoding not in ("fock", "polarization"):
        raise ProtocolError(f"unknown encoding {encoding!r}")
    basis1, basis2 = phase_basis(phi1), phase_basis(phi2)
    if basis1 != basis2:
        return QKDRound(encoding, None, (), rejected=True)
    truth_sum_pi = abs(math.remainder(phi1 + phi2 - math.pi, 2 * math.pi)) < 1e-9
    table = (FOCK_TRUTH if encoding == "fock" else POLARIZATION_TRUTH)[basis1]
    raw = _fock_round(phi1, phi2) if encoding == "fock" else _polarization_round(phi1, phi2)
    rows = []
    for outcomes, prob, _ in raw:
        if prob < 1e-14:
            continue
        rows.append(QKDRow(outcomes, prob, bool(table[outcomes]), truth_sum_pi))
    return QKDRound(encoding, basis1, tuple(rows))


def qkd_truth_table(encoding: str, basis: str) -> list[tuple[tuple[int, ...], int]]:
    """Observed (outcomes, sum-is-pi) rows collected over all inputs in one basis."""
    seen: dict[tuple[int, ...], int] = {}
    for phi1, phi2 in product(BASIS_PHASES[basis], repeat=2):
        rnd = qkd_run(encoding, phi1, phi2)
        for row in rnd.rows:
            seen.setdefault(row.outcomes, int(row.true_sum_is_pi))
            if seen[row.outcomes] != int(row.true_sum_is_pi):
                raise ProtocolError(f"outcome {row.outcomes} occurs for both phase sums")
    return sorted(seen.items(), key=lambda item: (item[1], [-v for v in item[0]]))
