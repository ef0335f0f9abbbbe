"""Dense statevector simulation for small qubit registers.

Qubit 0 is the leftmost ket label and the most significant bit of a basis
index, so |q0 q1 ... q(n-1)> sits at index sum(q_i * 2**(n-1-i)).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 8

UNITARY_TOL = 1e-12
PROB_TOL = 1e-12
NORM_TOL = 1e-10
# outcomes below this probability are dropped instead of carrying an undefined post-state
ZERO_PROB = 1e-14

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# raising operator; not unitary, only used inside observable formulas
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)

PAULIS = {"I": IDENTITY, "X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}

for _m in (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z, SIGMA_PLUS):
    _m.setflags(write=False)


class DomainError(ValueError):
    """Invalid argument: bad index, non-normalized input, non-finite angle."""


class ConsistencyError(RuntimeError):
    """A numerical result violated an internal invariant."""


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        n = int(round(np.log2(amps.size))) if amps.size else 0
        if amps.size != 2**n or not 1 <= n <= MAX_QUBITS:
            raise DomainError(f"amplitude vector of length {amps.size} is not a 1..{MAX_QUBITS} qubit register")
        if not np.all(np.isfinite(amps)):
            raise DomainError("amplitudes must be finite")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise DomainError(f"state is not normalized (norm={norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, amplitudes) -> StateVector:
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0 or not np.isfinite(norm):
            raise DomainError("cannot normalize a zero or non-finite vector")
        return cls(amps / norm)

    @property
    def n_qubits(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def tensor(self, other: StateVector) -> StateVector:
        return StateVector(np.kron(self.amplitudes, other.amplitudes))

    def __len__(self):
        return self.amplitudes.size

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits}, amplitudes={np.array2string(self.amplitudes, precision=6)})"


def basis_state(n_qubits: int, index: int) -> StateVector:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise DomainError(f"n_qubits must be in 1..{MAX_QUBITS}, got {n_qubits}")
    if not 0 <= index < 2**n_qubits:
        raise DomainError(f"basis index {index} out of range for {n_qubits} qubits")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[index] = 1.0
    return StateVector(amps)


def ket(label: str) -> StateVector:
    """Computational basis state from a bit label, e.g. ``ket("10")``."""
    if not label or set(label) - {"0", "1"}:
        raise DomainError(f"not a bit label: {label!r}")
    return basis_state(len(label), int(label, 2))


def rotation_gate(theta: Sequence[float]) -> np.ndarray:
    """Return exp(-i sigma.theta / 2) for a rotation vector ``theta``.

    Uses the closed form cos(|t|/2) I - i sin(|t|/2) (n.sigma) with n = t/|t|.
    Rotating |0> by (0, pi/2, 0) gives (|0> + |1>)/sqrt(2).
    """
    t = np.asarray(theta, dtype=float).reshape(-1)
    if t.shape != (3,):
        raise DomainError("rotation vector must have three components")
    if not np.all(np.isfinite(t)):
        raise DomainError("rotation vector must be finite")
    angle = float(np.linalg.norm(t))
    if angle == 0.0:
        return IDENTITY.copy()
    nx, ny, nz = t / angle
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array(
        [[c - 1j * s * nz, -1j * s * nx - s * ny],
         [-1j * s * nx + s * ny, c + 1j * s * nz]],
        dtype=complex,
    )


def is_unitary(matrix: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    m = np.asarray(matrix)
    return m.shape[0] == m.shape[1] and np.allclose(m.conj().T @ m, np.eye(m.shape[0]), rtol=0, atol=tol)


def _check_qubit(q: int, n: int, what: str = "qubit") -> None:
    if not isinstance(q, (int, np.integer)) or not 0 <= q < n:
        raise DomainError(f"{what} index {q!r} out of range for {n} qubits")


def _apply_matrix(amps: np.ndarray, matrix: np.ndarray, target: int, n: int) -> np.ndarray:
    psi = amps.reshape((2,) * n)
    psi = np.tensordot(matrix, psi, axes=([1], [target]))
    return np.moveaxis(psi, 0, target).reshape(-1)


def apply_single(state: StateVector, gate: np.ndarray, target: int) -> StateVector:
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (2, 2) or not is_unitary(gate):
        raise DomainError("single-qubit gate must be a 2x2 unitary")
    _check_qubit(target, state.n_qubits, "target")
    return StateVector(_apply_matrix(state.amplitudes, gate, target, state.n_qubits))


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    n = state.n_qubits
    _check_qubit(control, n, "control")
    _check_qubit(target, n, "target")
    if control == target:
        raise DomainError("control and target must differ")
    psi = state.amplitudes.reshape((2,) * n).copy()
    sel = [slice(None)] * n
    sel[control] = 1
    sub = psi[tuple(sel)]
    # target axis shifts down by one once the control axis is removed
    axis = target - 1 if target > control else target
    psi[tuple(sel)] = np.flip(sub, axis=axis)
    return StateVector(psi.reshape(-1))


def _parse_pauli_string(pauli_string: Iterable[tuple[int, str]], n: int) -> list[tuple[int, np.ndarray]]:
    factors = []
    seen = set()
    for qubit, label in pauli_string:
        _check_qubit(qubit, n)
        key = str(label).upper().removeprefix("SIGMA_").removeprefix("SIGMA")
        if key not in PAULIS:
            raise DomainError(f"unknown Pauli label {label!r}")
        if qubit in seen:
            raise DomainError(f"qubit {qubit} appears twice in the Pauli string")
        seen.add(qubit)
        factors.append((qubit, PAULIS[key]))
    return factors


def apply_pauli_string(state: StateVector, pauli_string) -> np.ndarray:
    """Raw amplitudes of O|psi> for a Pauli string O = [(qubit, "X"|"Y"|"Z"|"I"), ...]."""
    n = state.n_qubits
    amps = state.amplitudes
    for qubit, m in _parse_pauli_string(pauli_string, n):
        amps = _apply_matrix(amps, m, qubit, n)
    return amps


def expectation(state: StateVector, pauli_string) -> float:
    value = np.vdot(state.amplitudes, apply_pauli_string(state, pauli_string))
    if abs(value.imag) > PROB_TOL:
        raise ConsistencyError(f"Pauli expectation has imaginary part {value.imag!r}")
    return float(value.real)


def local_expectation(state: StateVector, operator: np.ndarray, target: int) -> complex:
    """<psi| operator_target |psi> for any 2x2 operator, Hermitian or not."""
    _check_qubit(target, state.n_qubits, "target")
    out = _apply_matrix(state.amplitudes, np.asarray(operator, dtype=complex), target, state.n_qubits)
    return complex(np.vdot(state.amplitudes, out))


def overlap(a: StateVector, b: StateVector) -> complex:
    if a.dim != b.dim:
        raise DomainError("states live on registers of different size")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def equal_up_to_phase(a: StateVector, b: StateVector, tol: float = NORM_TOL) -> bool:
    return a.dim == b.dim and abs(abs(overlap(a, b)) - 1.0) <= tol


def bits_to_str(bits: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in bits)


@dataclass(frozen=True)
class Outcome:
    bitstring: str
    probability: float
    post_state: StateVector


@dataclass(frozen=True)
class OutcomeDistribution:
    measured_qubits: tuple[int, ...]
    entries: tuple[Outcome, ...]

    def probabilities(self) -> dict[str, float]:
        return {e.bitstring: e.probability for e in self.entries}

    def post_states(self) -> dict[str, StateVector]:
        return {e.bitstring: e.post_state for e in self.entries}

    def __getitem__(self, bitstring: str) -> Outcome:
        for e in self.entries:
            if e.bitstring == bitstring:
                return e
        raise KeyError(bitstring)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)


def measure(state: StateVector, targets: Sequence[int]) -> OutcomeDistribution:
    """Projective computational-basis measurement of ``targets`` (Born rule).

    Outcomes with probability below ``ZERO_PROB`` are omitted; the rest are
    ordered by bitstring value, bit i of the string being ``targets[i]``.
    """
    n = state.n_qubits
    targets = tuple(int(t) for t in targets)
    for t in targets:
        _check_qubit(t, n, "target")
    if len(set(targets)) != len(targets):
        raise DomainError("measured qubits must be distinct")
    if not targets:
        raise DomainError("nothing to measure")

    rest = [q for q in range(n) if q not in targets]
    psi = np.transpose(state.amplitudes.reshape((2,) * n), list(targets) + rest)
    psi = psi.reshape(2 ** len(targets), -1)
    probs = np.sum(np.abs(psi) ** 2, axis=1)
    if abs(probs.sum() - 1.0) > PROB_TOL:
        raise ConsistencyError(f"outcome probabilities sum to {probs.sum()!r}")

    entries = []
    for value, p in enumerate(probs):
        if p < ZERO_PROB:
            continue
        projected = np.zeros_like(psi)
        projected[value] = psi[value] / np.sqrt(p)
        projected = projected.reshape((2,) * n)
        # undo the transpose so the post-state uses the original qubit order
        projected = np.transpose(projected, np.argsort(list(targets) + rest)).reshape(-1)
        bits = format(value, f"0{len(targets)}b")
        entries.append(Outcome(bits, float(p), StateVector(projected)))
    return OutcomeDistribution(targets, tuple(entries))


def random_state(rng: np.random.Generator, n_qubits: int = 2, real: bool = False) -> StateVector:
    """Normalized Gaussian vector: Haar-distributed for complex, uniform on the sphere for real."""
    dim = 2**n_qubits
    v = rng.standard_normal(dim).astype(complex)
    if not real:
        v = v + 1j * rng.standard_normal(dim)
    return StateVector.normalized(v)


def random_unitary(rng: np.random.Generator) -> np.ndarray:
    """Haar-random 2x2 unitary via QR of a complex Gaussian matrix."""
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
