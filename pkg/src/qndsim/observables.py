"""Concurrence, visibility and predictability of two-qubit pure states.

Particles are numbered 1 and 2 and map to register qubits 0 and 1.  The Bell
basis used throughout is

    |psi-/+> = (|10> -/+ |01>) / sqrt(2),   |phi-/+> = (|11> -/+ |00>) / sqrt(2),

and a real state is written alpha|psi-> + beta|psi+> + gamma|phi-> + eta|phi+>.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .statevector import (
    NORM_TOL,
    SIGMA_PLUS,
    SIGMA_Z,
    DomainError,
    StateVector,
    apply_pauli_string,
    expectation,
    local_expectation,
)

REBIT_TOL = 1e-9

_S = 1 / np.sqrt(2)
# rows are <psi-|, <psi+|, <phi-|, <phi+| in the computational basis |00>,|01>,|10>,|11>
BELL_MATRIX = np.array(
    [
        [0, -_S, _S, 0],
        [0, _S, _S, 0],
        [-_S, 0, 0, _S],
        [_S, 0, 0, _S],
    ]
)
BELL_MATRIX.setflags(write=False)
BELL_LABELS = ("psi-", "psi+", "phi-", "phi+")

PSI_MINUS = StateVector(BELL_MATRIX[0])
PSI_PLUS = StateVector(BELL_MATRIX[1])
PHI_MINUS = StateVector(BELL_MATRIX[2])
PHI_PLUS = StateVector(BELL_MATRIX[3])
BELL_STATES = {"psi-": PSI_MINUS, "psi+": PSI_PLUS, "phi-": PHI_MINUS, "phi+": PHI_PLUS}


class RebitViolation(ValueError):
    """State has amplitudes that stay complex after removing the global phase."""


@dataclass(frozen=True)
class BellCoefficients:
    alpha: float
    beta: float
    gamma: float
    eta: float

    def __post_init__(self):
        vals = [float(v) for v in (self.alpha, self.beta, self.gamma, self.eta)]
        if not all(np.isfinite(vals)):
            raise DomainError("Bell coefficients must be finite reals")
        norm2 = sum(v * v for v in vals)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise DomainError(f"Bell coefficients are not normalized (sum of squares {norm2!r})")
        for name, v in zip(("alpha", "beta", "gamma", "eta"), vals):
            object.__setattr__(self, name, v)

    @classmethod
    def normalized(cls, alpha, beta, gamma, eta) -> BellCoefficients:
        v = np.array([alpha, beta, gamma, eta], dtype=float)
        norm = np.linalg.norm(v)
        if norm == 0 or not np.isfinite(norm):
            raise DomainError("cannot normalize zero Bell coefficients")
        return cls(*(v / norm))

    @classmethod
    def random(cls, rng: np.random.Generator) -> BellCoefficients:
        return cls.normalized(*rng.standard_normal(4))

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma, self.eta])

    def __iter__(self):
        return iter((self.alpha, self.beta, self.gamma, self.eta))


def _require_two_qubits(state: StateVector) -> None:
    if state.n_qubits != 2:
        raise DomainError(f"expected a two-qubit state, got {state.n_qubits} qubits")


def _qubit(k: int) -> int:
    if k not in (1, 2):
        raise DomainError(f"particle index must be 1 or 2, got {k!r}")
    return k - 1


def remove_global_phase(state: StateVector) -> np.ndarray:
    """Amplitudes rotated so the largest-magnitude amplitude is real and positive."""
    amps = state.amplitudes
    lead = amps[np.argmax(np.abs(amps))]
    return amps * (abs(lead) / lead)


def is_rebit(state: StateVector, tol: float = REBIT_TOL) -> bool:
    return state.n_qubits == 2 and bool(np.all(np.abs(remove_global_phase(state).imag) <= tol))


def bell_from_computational(state: StateVector) -> BellCoefficients:
    _require_two_qubits(state)
    amps = state.amplitudes
    # already-real input keeps its sign; only a genuine complex phase is removed
    if np.max(np.abs(amps.imag)) > REBIT_TOL:
        amps = remove_global_phase(state)
    coeffs = BELL_MATRIX @ amps
    worst = float(np.max(np.abs(coeffs.imag)))
    if worst > REBIT_TOL:
        raise RebitViolation(f"state is not real up to a global phase (imaginary residue {worst:.3g})")
    return BellCoefficients.normalized(*coeffs.real)


def computational_from_bell(c: BellCoefficients) -> StateVector:
    return StateVector(BELL_MATRIX.T @ c.as_array())


def visibility(state: StateVector, k: int) -> float:
    """2 |<sigma+>| of particle k."""
    _require_two_qubits(state)
    return 2 * abs(local_expectation(state, SIGMA_PLUS, _qubit(k)))


def predictability(state: StateVector, k: int) -> float:
    _require_two_qubits(state)
    return abs(local_expectation(state, SIGMA_Z, _qubit(k)).real)


def concurrence_pure(state: StateVector) -> float:
    """|<chi*| sigma_y x sigma_y |chi>|, which equals 2 |a00 a11 - a01 a10|."""
    _require_two_qubits(state)
    flipped = apply_pauli_string(state, [(0, "Y"), (1, "Y")])
    # the bra of chi* has components chi_i, so no conjugation here
    return float(abs(np.dot(state.amplitudes, flipped)))


def single_partitedness(state: StateVector, k: int) -> float:
    return visibility(state, k) ** 2 + predictability(state, k) ** 2


def triality_residual(state: StateVector, k: int) -> float:
    """1 - (C^2 + V_k^2 + P_k^2); zero for every two-qubit pure state."""
    return 1.0 - (concurrence_pure(state) ** 2 + single_partitedness(state, k))


def variance_sum(state: StateVector) -> float:
    """Sum of variances of sigma_x x 1, sigma_z x 1 and sigma_y x sigma_y.

    Each operator squares to the identity, so each variance is 1 - <O>^2.
    """
    _require_two_qubits(state)
    total = 0.0
    for op in ([(0, "X")], [(0, "Z")], [(0, "Y"), (1, "Y")]):
        total += 1.0 - expectation(state, op) ** 2
    return total


@dataclass
class ComplementarityReport:
    concurrence: float
    visibility_1: float
    predictability_1: float
    visibility_2: float
    predictability_2: float
    single_partitedness_1: float = field(init=False)
    single_partitedness_2: float = field(init=False)
    triality_residual_1: float = field(init=False)
    triality_residual_2: float = field(init=False)
    standard_errors: dict[str, float] | None = None

    def __post_init__(self):
        self.single_partitedness_1 = self.visibility_1**2 + self.predictability_1**2
        self.single_partitedness_2 = self.visibility_2**2 + self.predictability_2**2
        c2 = self.concurrence**2
        self.triality_residual_1 = 1.0 - (c2 + self.single_partitedness_1)
        self.triality_residual_2 = 1.0 - (c2 + self.single_partitedness_2)

    def as_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "standard_errors"}
        if self.standard_errors is not None:
            out["standard_errors"] = dict(self.standard_errors)
        return out


def observables_from_bell(c: BellCoefficients) -> ComplementarityReport:
    """Closed-form observables of a real state from its Bell coefficients.

    Particle 1 takes the upper sign of the stacked expressions:
    V1 = 2|alpha gamma - eta beta|, V2 = 2|alpha gamma + eta beta|,
    P1 = 2|alpha beta + eta gamma|, P2 = 2|alpha beta - eta gamma|.
    """
    a, b, g, e = c
    return ComplementarityReport(
        concurrence=abs(a * a - b * b - g * g + e * e),
        visibility_1=2 * abs(a * g - e * b),
        predictability_1=2 * abs(a * b + e * g),
        visibility_2=2 * abs(a * g + e * b),
        predictability_2=2 * abs(a * b - e * g),
    )


def observables_from_state(state: StateVector) -> ComplementarityReport:
    """Same report computed from operator averages on an arbitrary complex state."""
    return ComplementarityReport(
        concurrence=concurrence_pure(state),
        visibility_1=visibility(state, 1),
        predictability_1=predictability(state, 1),
        visibility_2=visibility(state, 2),
        predictability_2=predictability(state, 2),
    )
