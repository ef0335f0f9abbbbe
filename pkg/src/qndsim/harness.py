"""Finite-shot sampling of ancilla readouts and the estimators built on them.

Randomness contract
-------------------
Shot ``i`` draws one uniform double from a Philox4x64 stream keyed by the
64-bit seed.  Shots are grouped in blocks of ``BLOCK_SHOTS``; block ``j`` of
stream ``s`` starts at counter ``(s << 192) | (j << 128)`` so blocks never
overlap.  Separate experiments sharing a seed use separate streams.  The
uniform for a shot depends only on ``(seed, stream, i)``, so any split of the
shot range into shards aggregates to the same counts.  The outcome is chosen by inverse
CDF over the exact outcome distribution ordered by bitstring.

Standard errors are 1-sigma: each cell frequency f gets sqrt(f (1 - f) / N),
summed linearly over the cells entering an estimate.  Estimates are absolute
values of differences and so are biased upward near zero; no correction is
applied.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .circuits import Circuit, RunResult, run_exact
from .observables import ComplementarityReport
from .statevector import DomainError, StateVector

BLOCK_SHOTS = 4096
SEED_MAX = 2**64 - 1


def all_bitstrings(n_bits: int) -> list[str]:
    return ["".join(b) for b in itertools.product("01", repeat=n_bits)]


@dataclass(frozen=True)
class CountsRecord:
    mode: str
    shots: int
    counts: Mapping[str, int]
    seed: int | None = None
    stream: int = 0
    n_bits: int = field(default=0)

    def __post_init__(self):
        counts = {str(k): int(v) for k, v in self.counts.items()}
        if self.shots < 1:
            raise DomainError("shots must be positive")
        if any(v < 0 for v in counts.values()):
            raise DomainError("counts must be nonnegative")
        lengths = {len(k) for k in counts}
        if len(lengths) > 1 or any(set(k) - {"0", "1"} for k in counts):
            raise DomainError(f"inconsistent outcome labels {sorted(counts)}")
        n_bits = self.n_bits or (lengths.pop() if lengths else 0)
        if n_bits not in (1, 2) or any(len(k) != n_bits for k in counts):
            raise DomainError("outcome bitstrings must all have length 1 or 2")
        if sum(counts.values()) != self.shots:
            raise DomainError(f"counts sum to {sum(counts.values())}, expected {self.shots}")
        full = {b: counts.get(b, 0) for b in all_bitstrings(n_bits)}
        object.__setattr__(self, "counts", full)
        object.__setattr__(self, "n_bits", n_bits)

    def frequencies(self) -> dict[str, float]:
        return {b: c / self.shots for b, c in self.counts.items()}

    def __add__(self, other: CountsRecord) -> CountsRecord:
        if (self.mode, self.n_bits) != (other.mode, other.n_bits):
            raise DomainError("can only merge counts of the same experiment")
        merged = {b: self.counts[b] + other.counts[b] for b in self.counts}
        return CountsRecord(self.mode, self.shots + other.shots, merged, self.seed, self.stream, self.n_bits)

    def as_dict(self) -> dict:
        return {"mode": self.mode, "shots": self.shots, "seed": self.seed, "stream": self.stream,
                "counts": dict(self.counts)}

    @classmethod
    def from_dict(cls, d: Mapping) -> CountsRecord:
        return cls(d["mode"], int(d["shots"]), d["counts"], d.get("seed"), int(d.get("stream", 0)))


@dataclass(frozen=True)
class EstimateWithError:
    value: float
    std_error: float

    def __post_init__(self):
        if self.std_error < 0:
            raise DomainError("standard error must be nonnegative")

    def __iter__(self):
        return iter((self.value, self.std_error))


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def shot_uniforms(seed: int, start: int, stop: int, stream: int = 0) -> np.ndarray:
    """Uniform doubles for shots ``start..stop-1``; independent of how the range is split."""
    seed = _check_seed(seed)
    if not 0 <= stream < 2**64:
        raise DomainError("stream index must fit in 64 bits")
    out = np.empty(max(stop - start, 0))
    pos = 0
    for block in range(start // BLOCK_SHOTS, (stop - 1) // BLOCK_SHOTS + 1 if stop > start else 0):
        gen = np.random.Generator(np.random.Philox(key=seed, counter=(stream << 192) | (block << 128)))
        values = gen.random(BLOCK_SHOTS)
        lo = max(start, block * BLOCK_SHOTS) - block * BLOCK_SHOTS
        hi = min(stop, (block + 1) * BLOCK_SHOTS) - block * BLOCK_SHOTS
        out[pos:pos + hi - lo] = values[lo:hi]
        pos += hi - lo
    return out


def _draw(labels: list[str], probs: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs)
    idx = np.searchsorted(cdf, uniforms * cdf[-1], side="right")
    return np.bincount(np.minimum(idx, len(labels) - 1), minlength=len(labels))


def _shard_bounds(shots: int, shards: int) -> list[tuple[int, int]]:
    edges = np.linspace(0, shots, shards + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def sample_result(result: RunResult, shots: int, seed: int, shards: int = 1, workers: int | None = None,
                  stream: int = 0) -> CountsRecord:
    """Sample ``shots`` readouts from an already computed exact run."""
    if shots < 1:
        raise DomainError("shots must be positive")
    if shards < 1:
        raise DomainError("shards must be positive")
    seed = _check_seed(seed)
    probs = result.probabilities()
    labels = sorted(probs)
    p = np.array([probs[b] for b in labels])

    def run_shard(bounds):
        return _draw(labels, p, shot_uniforms(seed, *bounds, stream=stream))

    bounds = _shard_bounds(shots, shards)
    if workers and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_shard, bounds))
    else:
        parts = [run_shard(b) for b in bounds]
    totals = np.sum(parts, axis=0)
    counts = {b: int(n) for b, n in zip(labels, totals)}
    return CountsRecord(result.circuit.name, shots, counts, seed, stream, len(result.circuit.measured))


def sample(circuit: Circuit, input_state: StateVector, shots: int, seed: int, shards: int = 1,
           workers: int | None = None, stream: int = 0) -> CountsRecord:
    return sample_result(run_exact(circuit, input_state), shots, seed, shards, workers, stream)


def _signed_estimate(freqs: Mapping[str, float], plus: tuple[str, ...], minus: tuple[str, ...],
                     shots: int | None) -> EstimateWithError:
    value = abs(sum(freqs.get(b, 0.0) for b in plus) - sum(freqs.get(b, 0.0) for b in minus))
    if shots is None:
        return EstimateWithError(value, 0.0)
    err = sum(math.sqrt(max(freqs.get(b, 0.0) * (1 - freqs.get(b, 0.0)), 0.0) / shots) for b in plus + minus)
    return EstimateWithError(value, err)


def _require(counts: CountsRecord, n_bits: int, modes: tuple[str, ...]) -> None:
    if counts.n_bits != n_bits:
        raise DomainError(f"expected {n_bits}-bit outcomes, got {counts.n_bits}-bit")
    if counts.mode not in modes:
        raise DomainError(f"counts from mode {counts.mode!r}, expected one of {modes}")


# The *_from_frequencies forms take exact probabilities (shots=None -> zero error)
# and back the CountsRecord estimators below.

def concurrence_fig1_from_frequencies(freqs, shots=None) -> EstimateWithError:
    return _signed_estimate(freqs, ("1",), ("0",), shots)


def concurrence_fig2_from_frequencies(freqs, shots=None) -> EstimateWithError:
    return _signed_estimate(freqs, ("01", "10"), ("00", "11"), shots)


def first_ancilla_bias(freqs, shots=None) -> EstimateWithError:
    return _signed_estimate(freqs, ("00", "01"), ("10", "11"), shots)


def second_ancilla_bias(freqs, shots=None) -> EstimateWithError:
    return _signed_estimate(freqs, ("00", "10"), ("01", "11"), shots)


def estimate_concurrence_fig1(counts: CountsRecord) -> EstimateWithError:
    _require(counts, 1, ("fig1",))
    return concurrence_fig1_from_frequencies(counts.frequencies(), counts.shots)


def estimate_concurrence_fig2(counts: CountsRecord) -> EstimateWithError:
    _require(counts, 2, ("concurrence",))
    return concurrence_fig2_from_frequencies(counts.frequencies(), counts.shots)


def estimate_concurrence(counts: CountsRecord) -> EstimateWithError:
    if counts.n_bits == 1:
        return estimate_concurrence_fig1(counts)
    return estimate_concurrence_fig2(counts)


def estimate_predictabilities(counts: CountsRecord) -> tuple[EstimateWithError, EstimateWithError]:
    _require(counts, 2, ("predictability",))
    f = counts.frequencies()
    return first_ancilla_bias(f, counts.shots), second_ancilla_bias(f, counts.shots)


def estimate_visibilities(counts: CountsRecord) -> tuple[EstimateWithError, EstimateWithError]:
    _require(counts, 2, ("visibility",))
    f = counts.frequencies()
    return first_ancilla_bias(f, counts.shots), second_ancilla_bias(f, counts.shots)


def reconstruct_complementarity(c_counts: CountsRecord, p_counts: CountsRecord,
                                v_counts: CountsRecord) -> ComplementarityReport:
    """Assemble C, V_k, P_k from the three experiments, with propagated errors.

    ``c_counts`` may come from either the single-ancilla circuit or the
    concurrence preset of the universal one.
    """
    if c_counts.mode not in ("fig1", "concurrence"):
        raise DomainError(f"first argument must hold concurrence counts, got mode {c_counts.mode!r}")
    if p_counts.mode != "predictability":
        raise DomainError(f"second argument must hold predictability counts, got mode {p_counts.mode!r}")
    if v_counts.mode != "visibility":
        raise DomainError(f"third argument must hold visibility counts, got mode {v_counts.mode!r}")
    c = estimate_concurrence(c_counts)
    p1, p2 = estimate_predictabilities(p_counts)
    v1, v2 = estimate_visibilities(v_counts)
    report = ComplementarityReport(c.value, v1.value, p1.value, v2.value, p2.value)
    errors = {
        "concurrence": c.std_error,
        "visibility_1": v1.std_error,
        "predictability_1": p1.std_error,
        "visibility_2": v2.std_error,
        "predictability_2": p2.std_error,
    }
    for k, v, p in ((1, v1, p1), (2, v2, p2)):
        s_err = 2 * v.value * v.std_error + 2 * p.value * p.std_error
        errors[f"single_partitedness_{k}"] = s_err
        errors[f"triality_residual_{k}"] = 2 * c.value * c.std_error + s_err
    report.standard_errors = errors
    return report
