"""Command-line front end: ``qndsim simulate | verify | sweep``.

Exit codes: 0 success, 1 a verification check failed, 2 bad arguments or
input, 3 a rebit-only estimator was requested for a state with complex
amplitudes.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .circuits import (
    PRESETS,
    build_fig1,
    build_fig2,
    circuit_for,
    conditional_states_fig1,
    eigenstate_check,
    qnd_repeatability,
    run_exact,
)
from .harness import (
    CountsRecord,
    concurrence_fig1_from_frequencies,
    concurrence_fig2_from_frequencies,
    estimate_concurrence,
    estimate_predictabilities,
    estimate_visibilities,
    first_ancilla_bias,
    reconstruct_complementarity,
    sample_result,
    second_ancilla_bias,
)
from .observables import (
    BellCoefficients,
    ComplementarityReport,
    RebitViolation,
    bell_from_computational,
    computational_from_bell,
    concurrence_pure,
    is_rebit,
    observables_from_bell,
    observables_from_state,
    variance_sum,
)
from .statevector import DomainError, StateVector, random_state

SCHEMA_VERSION = 1
INPUT_NORM_TOL = 1e-6
EXPERIMENTS = ("fig1", "concurrence", "predictability", "visibility")
# each experiment draws from its own RNG stream under a shared seed
STREAMS = {name: i for i, name in enumerate(EXPERIMENTS)}

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_REBIT = 0, 1, 2, 3

IDENTITY_TOL = 1e-12
EIGEN_TOL = 1e-10


class UsageError(Exception):
    pass


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _check_norm(norm: float, what: str) -> None:
    if abs(norm - 1.0) > INPUT_NORM_TOL:
        raise UsageError(f"{what} is not normalized (norm {norm:.9g}); deviations above {INPUT_NORM_TOL:g} are rejected")


def parse_bell(text: str) -> BellCoefficients:
    vals = _floats(text, "--bell")
    if len(vals) != 4 or not np.all(np.isfinite(vals)):
        raise UsageError("--bell takes four finite reals alpha,beta,gamma,eta")
    _check_norm(float(np.linalg.norm(vals)), "--bell")
    return BellCoefficients.normalized(*vals)


def parse_computational(text: str) -> StateVector:
    """Four amplitudes as eight numbers (re,im pairs) or as four complex literals like ``0.6j``."""
    tokens = [t.strip() for t in text.split(",")]
    try:
        if len(tokens) == 8:
            vals = [float(t) for t in tokens]
            amps = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
        elif len(tokens) == 4:
            amps = np.array([complex(t.replace("i", "j")) for t in tokens])
        else:
            raise ValueError
    except ValueError:
        raise UsageError("--computational takes 8 numbers (re,im for |00>,|01>,|10>,|11>) or 4 complex literals") from None
    if not np.all(np.isfinite(amps)):
        raise UsageError("--computational amplitudes must be finite")
    _check_norm(float(np.linalg.norm(amps)), "--computational")
    return StateVector.normalized(amps)


def _state_from_args(args) -> tuple[StateVector, dict]:
    if args.bell is not None:
        c = parse_bell(args.bell)
        return computational_from_bell(c), {"bell": list(c)}
    if args.computational is not None:
        s = parse_computational(args.computational)
        return s, {"computational": _amplitudes_json(s)}
    raise UsageError("give a state with --bell or --computational")


def _amplitudes_json(state: StateVector) -> list[list[float]]:
    return [[float(a.real), float(a.imag)] for a in state.amplitudes]


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("QND_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"QND_SEED must be an integer, got {env!r}") from None


def _estimates(name: str, freqs, shots) -> dict:
    if name == "fig1":
        est = {"concurrence": concurrence_fig1_from_frequencies(freqs, shots)}
    elif name == "concurrence":
        est = {"concurrence": concurrence_fig2_from_frequencies(freqs, shots)}
    elif name == "predictability":
        est = {"predictability_1": first_ancilla_bias(freqs, shots), "predictability_2": second_ancilla_bias(freqs, shots)}
    else:
        est = {"visibility_1": first_ancilla_bias(freqs, shots), "visibility_2": second_ancilla_bias(freqs, shots)}
    return {k: {"value": e.value, "std_error": e.std_error} for k, e in est.items()}


def estimates_from_counts(counts: CountsRecord) -> dict:
    """Re-estimate from a counts record; used to round-trip emitted reports."""
    if counts.mode in ("fig1", "concurrence"):
        est = {"concurrence": estimate_concurrence(counts)}
    elif counts.mode == "predictability":
        p1, p2 = estimate_predictabilities(counts)
        est = {"predictability_1": p1, "predictability_2": p2}
    else:
        v1, v2 = estimate_visibilities(counts)
        est = {"visibility_1": v1, "visibility_2": v2}
    return {k: {"value": e.value, "std_error": e.std_error} for k, e in est.items()}


def simulate(state: StateVector, mode: str, shots: int, seed: int, shards: int = 1) -> dict:
    rebit = is_rebit(state)
    if mode == "all" and not rebit:
        raise RebitViolation("mode 'all' reconstructs the complementarity relation with rebit-only estimators")
    names = EXPERIMENTS[1:] if mode == "all" else (mode,)
    results: dict = {
        "rebit": rebit,
        "exact_observables": observables_from_state(state).as_dict(),
        "experiments": {},
    }
    if rebit:
        results["bell_coefficients"] = list(bell_from_computational(state))
    records = {}
    for name in names:
        run = run_exact(circuit_for(name), state)
        exp: dict = {
            "probabilities": run.probabilities(),
            "post_states": {b: _amplitudes_json(s) for b, s in run.system_states.items()},
        }
        if shots > 0:
            rec = sample_result(run, shots, seed, shards=shards, stream=STREAMS[name])
            records[name] = rec
            exp.update(rec.as_dict())
            freqs, n = rec.frequencies(), rec.shots
        else:
            freqs, n = run.probabilities(), None
        if rebit:
            exp["estimates"] = _estimates(name, freqs, n)
        results["experiments"][name] = exp
    if mode == "all":
        if shots > 0:
            report = reconstruct_complementarity(records["concurrence"], records["predictability"],
                                                 records["visibility"])
        else:
            est = {k: v["value"] for exp in results["experiments"].values() for k, v in exp["estimates"].items()}
            report = ComplementarityReport(est["concurrence"], est["visibility_1"], est["predictability_1"],
                                           est["visibility_2"], est["predictability_2"])
        results["reconstruction"] = report.as_dict()
    return results


def verify_state(state: StateVector) -> dict[str, float]:
    """Worst deviation of each identity on one rebit; every value should be ~0."""
    c = bell_from_computational(state)
    exact = observables_from_state(state)
    closed = observables_from_bell(c)
    checks = {
        "triality_residual_1": abs(exact.triality_residual_1),
        "triality_residual_2": abs(exact.triality_residual_2),
        "closed_form_agreement": max(
            abs(getattr(exact, k) - getattr(closed, k))
            for k in ("concurrence", "visibility_1", "predictability_1", "visibility_2", "predictability_2")
        ),
        "variance_sum": abs(variance_sum(state) - 2.0),
    }
    for name in EXPERIMENTS:
        checks[f"repeatability_{name}"] = abs(1.0 - qnd_repeatability(name, state))

    fig1 = run_exact(build_fig1(), state)
    checks["fig1_concurrence_estimator"] = abs(
        concurrence_fig1_from_frequencies(fig1.probabilities()).value - closed.concurrence)
    eig, conc = 0.0, 0.0
    for post in fig1.system_states.values():
        eig = max(eig, eigenstate_check([(0, "Y"), (1, "Y")], post))
        conc = max(conc, abs(1.0 - concurrence_pure(post)))
    checks["fig1_branch_eigenstate"] = eig
    checks["fig1_branch_concurrence"] = conc
    for branch in conditional_states_fig1(c):
        if branch is not None:
            checks["fig1_branch_concurrence"] = max(checks["fig1_branch_concurrence"],
                                                    abs(1.0 - concurrence_pure(branch)))

    p = run_exact(build_fig2(PRESETS["predictability"]), state).probabilities()
    v = run_exact(build_fig2(PRESETS["visibility"]), state).probabilities()
    k = run_exact(build_fig2(PRESETS["concurrence"]), state).probabilities()
    checks["fig2_estimators"] = max(
        abs(concurrence_fig2_from_frequencies(k).value - closed.concurrence),
        abs(first_ancilla_bias(p).value - closed.predictability_1),
        abs(second_ancilla_bias(p).value - closed.predictability_2),
        abs(first_ancilla_bias(v).value - closed.visibility_1),
        abs(second_ancilla_bias(v).value - closed.visibility_2),
    )
    return checks


VERIFY_TOLERANCES = {"fig1_branch_eigenstate": EIGEN_TOL}


def verify(states: Sequence[StateVector]) -> tuple[dict, list[dict]]:
    worst: dict[str, float] = {}
    failures = []
    for i, s in enumerate(states):
        if not is_rebit(s):
            raise RebitViolation(f"state {i} has complex amplitudes; the verification suite uses rebit-only estimators")
        for name, value in verify_state(s).items():
            worst[name] = max(worst.get(name, 0.0), value)
            tol = VERIFY_TOLERANCES.get(name, IDENTITY_TOL)
            if not value <= tol:
                failures.append({"state": i, "check": name, "deviation": value, "tolerance": tol})
    return worst, failures


def parse_range(text: str) -> np.ndarray:
    """``start:stop:num`` (inclusive linspace) or a single value."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) == 3:
            num = int(parts[2])
            if num < 1:
                raise ValueError
            return np.linspace(float(parts[0]), float(parts[1]), num)
    except ValueError:
        pass
    raise UsageError(f"expected start:stop:num or a number, got {text!r}")


def sweep_points(points: Sequence[str], theta1: str | None, theta2: str | None, theta3: str | None) -> list[BellCoefficients]:
    """Explicit points plus a hyperspherical grid
    (cos t1, sin t1 cos t2, sin t1 sin t2 cos t3, sin t1 sin t2 sin t3)."""
    out = [parse_bell(p) for p in points]
    if theta1 is None and theta2 is None and theta3 is None:
        return out
    for t1 in parse_range(theta1 or "0"):
        for t2 in parse_range(theta2 or "0"):
            for t3 in parse_range(theta3 or "0"):
                s1, s2 = np.sin(t1), np.sin(t2)
                out.append(BellCoefficients.normalized(
                    np.cos(t1), s1 * np.cos(t2), s1 * s2 * np.cos(t3), s1 * s2 * np.sin(t3)))
    return out


SWEEP_COLUMNS = ["alpha", "beta", "gamma", "eta", "C", "V1", "P1", "V2", "P2", "residual1", "residual2"]
SWEEP_EST_COLUMNS = ["C_est", "V1_est", "P1_est", "V2_est", "P2_est", "residual1_est", "residual2_est"]


def _report_row(r) -> list[float]:
    return [r.concurrence, r.visibility_1, r.predictability_1, r.visibility_2, r.predictability_2,
            r.triality_residual_1, r.triality_residual_2]


def sweep(points: Sequence[BellCoefficients], shots: int, seed: int) -> tuple[list[str], list[list[float]]]:
    header = SWEEP_COLUMNS + (SWEEP_EST_COLUMNS if shots > 0 else [])
    rows = []
    for i, c in enumerate(points):
        row = list(c) + _report_row(observables_from_bell(c))
        if shots > 0:
            state = computational_from_bell(c)
            recs = {
                name: sample_result(run_exact(circuit_for(name), state), shots, seed,
                                    stream=len(EXPERIMENTS) * i + STREAMS[name])
                for name in EXPERIMENTS[1:]
            }
            row += _report_row(reconstruct_complementarity(recs["concurrence"], recs["predictability"],
                                                           recs["visibility"]))
        rows.append(row)
    return header, rows


def format_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format(v, ".17g") if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _simulate_csv(results: dict) -> str:
    rows = []
    for name, exp in results["experiments"].items():
        counts = exp.get("counts", {})
        for bits, p in exp["probabilities"].items():
            rows.append([name, bits, float(p), counts.get(bits, "")])
    return format_csv(["experiment", "outcome", "probability", "count"], rows)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _envelope(command: str, config: dict, results: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "command": command, "config_echo": config, "results": results}
    return json.dumps(doc, indent=2) + "\n"


def cmd_simulate(args) -> int:
    state, state_echo = _state_from_args(args)
    if args.shots < 0:
        raise UsageError("--shots must be >= 0 (0 selects exact probabilities)")
    seed = _seed(args)
    results = simulate(state, args.mode, args.shots, seed, shards=args.shards)
    config = {"state": state_echo, "mode": args.mode, "shots": args.shots, "seed": seed, "shards": args.shards}
    if args.format == "csv":
        _emit(_simulate_csv(results), args.out)
    else:
        _emit(_envelope("simulate", config, results), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    seed = _seed(args)
    if args.random_real is not None:
        if args.random_real < 1:
            raise UsageError("--random-real must be positive")
        rng = np.random.default_rng(seed)
        states = [random_state(rng, 2, real=True) for _ in range(args.random_real)]
        config = {"random_real": args.random_real, "seed": seed}
    else:
        state, echo = _state_from_args(args)
        states = [state]
        config = {"state": echo}
    worst, failures = verify(states)
    results = {"n_states": len(states), "worst_deviation": worst, "failures": failures, "passed": not failures}
    sys.stdout.write(_envelope("verify", config, results))
    return EXIT_OK if not failures else EXIT_FAILED


def cmd_sweep(args) -> int:
    if args.shots < 0:
        raise UsageError("--shots must be >= 0")
    points = sweep_points(args.point or [], args.theta1, args.theta2, args.theta3)
    if not points:
        raise UsageError("give at least one --point or a --theta1/--theta2/--theta3 grid")
    header, rows = sweep(points, args.shots, _seed(args))
    _emit(format_csv(header, rows), args.out)
    return EXIT_OK


def _add_state_args(p: argparse.ArgumentParser, required: bool) -> None:
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--bell", metavar="A,B,G,E", help="Bell coefficients of psi-, psi+, phi-, phi+")
    g.add_argument("--computational", metavar="AMPS",
                   help="amplitudes of |00>,|01>,|10>,|11> as re,im pairs or complex literals")
    return g


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qndsim", description="QND measurement of two-qubit complementarity")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one or all QND experiments on a state")
    _add_state_args(p, required=True)
    p.add_argument("--mode", default="all", choices=["fig1", "concurrence", "predictability", "visibility", "all"])
    p.add_argument("--shots", type=int, default=0, help="0 reports exact probabilities only")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (falls back to $QND_SEED, then 0)")
    p.add_argument("--shards", type=int, default=1)
    p.add_argument("--format", default="json", choices=["json", "csv"])
    p.add_argument("--out", default=None, help="write to this path instead of stdout")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="check the complementarity and QND identities")
    g = _add_state_args(p, required=True)
    g.add_argument("--random-real", type=int, metavar="N", help="check N random real states")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="tabulate observables over Bell coefficients as CSV")
    p.add_argument("--point", action="append", metavar="A,B,G,E")
    p.add_argument("--theta1", metavar="START:STOP:NUM")
    p.add_argument("--theta2", metavar="START:STOP:NUM")
    p.add_argument("--theta3", metavar="START:STOP:NUM")
    p.add_argument("--shots", type=int, default=0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RebitViolation as exc:
        print(f"qndsim: {exc}", file=sys.stderr)
        return EXIT_REBIT
    except (UsageError, DomainError) as exc:
        print(f"qndsim: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
