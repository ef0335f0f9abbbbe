"""Ancilla-coupled QND circuits for concurrence, visibility and predictability.

Register layout: system qubits are 0 and 1, ancillas follow.  Two builders are
provided:

* ``build_fig1`` - a single parity ancilla: R_x(pi/2) on both system qubits,
  CNOT from each system qubit onto the ancilla, R_x(-pi/2) on both, measure.
* ``build_fig2`` - the universal two-ancilla circuit parametrised by three
  rotation vectors; ``CircuitMode`` holds the presets.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .observables import BellCoefficients, PHI_MINUS, PHI_PLUS, PSI_MINUS, PSI_PLUS
from .statevector import (
    ZERO_PROB,
    DomainError,
    OutcomeDistribution,
    StateVector,
    apply_cnot,
    apply_pauli_string,
    apply_single,
    basis_state,
    expectation,
    measure,
    rotation_gate,
)

N_SYSTEM = 2
HALF_PI = np.pi / 2


@dataclass(frozen=True)
class Rotation:
    target: int
    theta: tuple[float, float, float]

    def __post_init__(self):
        theta = tuple(float(t) for t in self.theta)
        if len(theta) != 3 or not all(np.isfinite(theta)):
            raise DomainError(f"rotation vector must be three finite numbers, got {self.theta!r}")
        object.__setattr__(self, "theta", theta)

    @property
    def is_identity(self) -> bool:
        return not any(self.theta)

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.target,)


@dataclass(frozen=True)
class Cnot:
    control: int
    target: int

    def __post_init__(self):
        if self.control == self.target:
            raise DomainError("CNOT control and target must differ")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.control, self.target)


CircuitOp = Union[Rotation, Cnot]


@dataclass(frozen=True)
class Circuit:
    n_ancilla: int
    ops: tuple[CircuitOp, ...]
    measured: tuple[int, ...]
    name: str = "custom"
    n_system: int = N_SYSTEM

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        object.__setattr__(self, "measured", tuple(int(q) for q in self.measured))
        if self.n_system != N_SYSTEM:
            raise DomainError("circuits act on a two-qubit system")
        if self.n_ancilla not in (1, 2):
            raise DomainError("circuits carry one or two ancillas")
        for op in self.ops:
            for q in op.qubits:
                if not 0 <= q < self.n_qubits:
                    raise DomainError(f"{op!r} references qubit {q} outside the register")
        # the system factor is only well defined once every ancilla is projected
        if sorted(self.measured) != list(self.ancillas):
            raise DomainError("every ancilla must be measured, and only ancillas")

    @property
    def n_qubits(self) -> int:
        return self.n_system + self.n_ancilla

    @property
    def ancillas(self) -> tuple[int, ...]:
        return tuple(range(self.n_system, self.n_qubits))


@dataclass(frozen=True)
class CircuitMode:
    """Rotation vectors for the universal circuit.

    ``theta1`` is applied to both system qubits before the coupling,
    ``theta2`` after it, ``theta3`` prepares the first ancilla.
    """

    name: str
    theta1: tuple[float, float, float] = (0.0, 0.0, 0.0)
    theta2: tuple[float, float, float] = (0.0, 0.0, 0.0)
    theta3: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @classmethod
    def custom(cls, theta1, theta2, theta3) -> CircuitMode:
        return cls("custom", tuple(theta1), tuple(theta2), tuple(theta3))


CONCURRENCE = CircuitMode(
    "concurrence", theta1=(HALF_PI, 0.0, 0.0), theta2=(-HALF_PI, 0.0, 0.0), theta3=(0.0, HALF_PI, 0.0)
)
PREDICTABILITY = CircuitMode("predictability")
# rotating by -pi/2 about y first and undoing it afterwards leaves ancilla 0
# paired with |+> = (|1> + |0>)/sqrt(2); the opposite sign complements every readout bit
VISIBILITY = CircuitMode("visibility", theta1=(0.0, -HALF_PI, 0.0), theta2=(0.0, HALF_PI, 0.0))

PRESETS = {m.name: m for m in (CONCURRENCE, PREDICTABILITY, VISIBILITY)}


def build_fig1() -> Circuit:
    rx = (HALF_PI, 0.0, 0.0)
    rx_inv = (-HALF_PI, 0.0, 0.0)
    ops = (
        Rotation(0, rx),
        Rotation(1, rx),
        Cnot(0, 2),
        Cnot(1, 2),
        Rotation(0, rx_inv),
        Rotation(1, rx_inv),
    )
    return Circuit(n_ancilla=1, ops=ops, measured=(2,), name="fig1")


def build_fig2(mode: CircuitMode) -> Circuit:
    ops = (
        Rotation(0, mode.theta1),
        Rotation(1, mode.theta1),
        Rotation(2, mode.theta3),
        Cnot(2, 3),
        Cnot(0, 2),
        Cnot(1, 3),
        Rotation(0, mode.theta2),
        Rotation(1, mode.theta2),
    )
    return Circuit(n_ancilla=2, ops=ops, measured=(2, 3), name=mode.name)


def circuit_for(mode: str | CircuitMode) -> Circuit:
    """Circuit by preset name ("fig1", "concurrence", ...) or explicit mode."""
    if isinstance(mode, CircuitMode):
        return build_fig2(mode)
    if mode == "fig1":
        return build_fig1()
    try:
        return build_fig2(PRESETS[mode])
    except KeyError:
        raise DomainError(f"unknown circuit mode {mode!r}") from None


@dataclass(frozen=True)
class RunResult:
    circuit: Circuit
    final_state: StateVector
    distribution: OutcomeDistribution
    system_states: dict[str, StateVector] = field(default_factory=dict)

    def probabilities(self) -> dict[str, float]:
        return self.distribution.probabilities()

    def probability(self, bitstring: str) -> float:
        return self.probabilities().get(bitstring, 0.0)


def evolve(circuit: Circuit, state: StateVector) -> StateVector:
    """Apply every op of ``circuit`` to the full register state."""
    if state.n_qubits != circuit.n_qubits:
        raise DomainError(f"circuit expects {circuit.n_qubits} qubits, state has {state.n_qubits}")
    for op in circuit.ops:
        if isinstance(op, Rotation):
            if not op.is_identity:
                state = apply_single(state, rotation_gate(op.theta), op.target)
        else:
            state = apply_cnot(state, op.control, op.target)
    return state


def _system_factor(post: StateVector, circuit: Circuit, bits: str) -> StateVector:
    # measured ancillas sit in a definite basis state, so slicing them out is exact
    amps = post.amplitudes.reshape(2**circuit.n_system, 2**circuit.n_ancilla)
    index = [0] * circuit.n_ancilla
    for qubit, b in zip(circuit.measured, bits):
        index[qubit - circuit.n_system] = int(b)
    column = int("".join(map(str, index)), 2)
    return StateVector.normalized(amps[:, column])


def run_exact(circuit: Circuit, input_state: StateVector) -> RunResult:
    if input_state.n_qubits != circuit.n_system:
        raise DomainError("input must be a two-qubit system state")
    register = input_state.tensor(basis_state(circuit.n_ancilla, 0))
    final = evolve(circuit, register)
    dist = measure(final, circuit.measured)
    systems = {e.bitstring: _system_factor(e.post_state, circuit, e.bitstring) for e in dist}
    return RunResult(circuit, final, dist, systems)


def conditional_states_fig1(c: BellCoefficients) -> tuple[StateVector | None, StateVector | None]:
    """Post-measurement system states of the single-ancilla circuit.

    Returns (state if the ancilla reads 1, state if it reads 0); a branch with
    vanishing weight is returned as None.
    """
    a, b, g, e = c
    one = a * PSI_MINUS.amplitudes + e * PHI_PLUS.amplitudes
    zero = g * PHI_MINUS.amplitudes + b * PSI_PLUS.amplitudes
    w1, w0 = a * a + e * e, b * b + g * g
    return (
        StateVector(one / np.sqrt(w1)) if w1 > ZERO_PROB else None,
        StateVector(zero / np.sqrt(w0)) if w0 > ZERO_PROB else None,
    )


def parity_class(bits: str) -> str:
    """phi-class for even ancilla parity (00, 11), psi-class for odd (01, 10)."""
    return "psi" if bits.count("1") % 2 else "phi"


def outcome_class(mode: str | CircuitMode) -> Callable[[str], str]:
    name = mode.name if isinstance(mode, CircuitMode) else mode
    if name == "concurrence":
        return parity_class
    return lambda bits: bits


def repeatability(circuit: Circuit, state: StateVector, classify: Callable[[str], str] = lambda b: b) -> float:
    """Worst-case probability that re-running ``circuit`` on a post-measurement
    state reproduces the eigenvalue class of the first outcome."""
    first = run_exact(circuit, state)
    worst = 1.0
    for bits, post in first.system_states.items():
        again = run_exact(circuit, post)
        target = classify(bits)
        p_same = sum(p for b, p in again.probabilities().items() if classify(b) == target)
        worst = min(worst, p_same)
    return worst


def qnd_repeatability(mode: str | CircuitMode, state: StateVector) -> float:
    return repeatability(circuit_for(mode), state, outcome_class(mode))


def eigenstate_check(observable, state: StateVector) -> float:
    """Norm of O|psi> - <O>|psi>; zero exactly when psi is an eigenvector of O."""
    mean = expectation(state, observable)
    residual = apply_pauli_string(state, observable) - mean * state.amplitudes
    return float(np.linalg.norm(residual))
