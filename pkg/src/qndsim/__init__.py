"""Exact simulation of ancilla-based QND measurements of two-qubit
concurrence, visibility and predictability."""

__version__ = "0.1.0"

from .statevector import (
    ConsistencyError,
    DomainError,
    OutcomeDistribution,
    StateVector,
    apply_cnot,
    apply_single,
    basis_state,
    expectation,
    ket,
    measure,
    rotation_gate,
)
from .observables import (
    BellCoefficients,
    ComplementarityReport,
    RebitViolation,
    bell_from_computational,
    computational_from_bell,
    concurrence_pure,
    observables_from_bell,
    observables_from_state,
    predictability,
    single_partitedness,
    triality_residual,
    variance_sum,
    visibility,
)
from .circuits import (
    CONCURRENCE,
    PREDICTABILITY,
    VISIBILITY,
    Circuit,
    CircuitMode,
    Cnot,
    Rotation,
    RunResult,
    build_fig1,
    build_fig2,
    conditional_states_fig1,
    eigenstate_check,
    qnd_repeatability,
    run_exact,
)
from .harness import (
    CountsRecord,
    EstimateWithError,
    estimate_concurrence_fig1,
    estimate_concurrence_fig2,
    estimate_predictabilities,
    estimate_visibilities,
    reconstruct_complementarity,
    sample,
)
