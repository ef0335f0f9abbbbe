import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from qndsim.cli import estimates_from_counts, main
from qndsim.harness import CountsRecord
from qndsim.statevector import StateVector, equal_up_to_phase

PSI_MINUS = np.array([0, -1, 1, 0]) / np.sqrt(2)


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def post_state(amps):
    return StateVector([complex(re, im) for re, im in amps])


class TestSimulate:
    def test_psi_minus_fig1(self, capsys):
        code, out, _ = run_cli(capsys, "simulate", "--bell", "1,0,0,0", "--mode", "fig1", "--shots", "0")
        assert code == 0
        doc = json.loads(out)
        assert doc["schema_version"] == 1
        assert set(doc) == {"schema_version", "command", "config_echo", "results"}
        fig1 = doc["results"]["experiments"]["fig1"]
        assert fig1["probabilities"] == pytest.approx({"1": 1.0}, abs=1e-12)
        assert equal_up_to_phase(post_state(fig1["post_states"]["1"]), StateVector(PSI_MINUS))
        assert doc["results"]["bell_coefficients"] == pytest.approx([1, 0, 0, 0], abs=1e-12)

    def test_zero_zero_fig1(self, capsys):
        code, out, _ = run_cli(capsys, "simulate", "--computational", "1,0,0,0,0,0,0,0", "--mode", "fig1")
        assert code == 0
        probs = json.loads(out)["results"]["experiments"]["fig1"]["probabilities"]
        assert probs == pytest.approx({"0": 0.5, "1": 0.5}, abs=1e-15)

    def test_all_modes_with_shots(self, capsys):
        code, out, _ = run_cli(capsys, "simulate", "--bell", "0.8,0.6,0,0", "--mode", "all",
                               "--shots", "100000", "--seed", "7")
        assert code == 0
        res = json.loads(out)["results"]
        assert set(res["experiments"]) == {"concurrence", "predictability", "visibility"}
        for exp in res["experiments"].values():
            assert sum(exp["counts"].values()) == 100000
        rec = res["reconstruction"]
        assert rec["concurrence"] == pytest.approx(0.28, abs=0.02)
        assert rec["predictability_1"] == pytest.approx(0.96, abs=0.02)
        assert rec["visibility_1"] == pytest.approx(0, abs=0.02)
        assert "standard_errors" in rec

    def test_report_round_trip(self, capsys):
        _, out, _ = run_cli(capsys, "simulate", "--bell", "0.1,-0.5,0.7,0.5", "--mode", "all",
                            "--shots", "5000", "--seed", "3")
        for exp in json.loads(out)["results"]["experiments"].values():
            counts = CountsRecord.from_dict(exp)
            assert estimates_from_counts(counts) == exp["estimates"]

    def test_exact_mode_all(self, capsys):
        code, out, _ = run_cli(capsys, "simulate", "--bell", "0.8,0.6,0,0")
        assert code == 0
        rec = json.loads(out)["results"]["reconstruction"]
        assert rec["concurrence"] == pytest.approx(0.28, abs=1e-12)
        assert rec["triality_residual_1"] == pytest.approx(0, abs=1e-12)

    def test_seed_from_environment(self, capsys, monkeypatch):
        monkeypatch.setenv("QND_SEED", "123")
        _, out, _ = run_cli(capsys, "simulate", "--bell", "0.8,0.6,0,0", "--mode", "fig1", "--shots", "100")
        doc = json.loads(out)
        assert doc["config_echo"]["seed"] == 123
        assert doc["results"]["experiments"]["fig1"]["seed"] == 123

    def test_shards_do_not_change_output(self, capsys):
        args = ["simulate", "--bell", "0.1,-0.5,0.7,0.5", "--shots", "20000", "--seed", "9"]
        _, a, _ = run_cli(capsys, *args)
        _, b, _ = run_cli(capsys, *args, "--shards", "5")
        ra, rb = json.loads(a)["results"], json.loads(b)["results"]
        assert ra == rb

    def test_csv_output(self, capsys, tmp_path):
        path = tmp_path / "out.csv"
        code, out, _ = run_cli(capsys, "simulate", "--bell", "0.8,0.6,0,0", "--mode", "fig1",
                               "--shots", "10", "--format", "csv", "--out", str(path))
        assert code == 0 and out == ""
        rows = list(csv.DictReader(path.open()))
        assert [r["outcome"] for r in rows] == ["0", "1"]
        assert sum(int(r["count"]) for r in rows) == 10

    def test_complex_state_single_mode(self, capsys):
        code, out, _ = run_cli(capsys, "simulate", "--computational", "0.6,0,0,0,0,0,0,0.8", "--mode", "fig1")
        assert code == 0
        res = json.loads(out)["results"]
        assert res["rebit"] is False
        assert "estimates" not in res["experiments"]["fig1"]

    def test_complex_state_rebit_estimators(self, capsys):
        code, _, err = run_cli(capsys, "simulate", "--computational", "0.6,0,0,0.8j", "--mode", "all")
        assert code == 3
        assert "rebit" in err

    @pytest.mark.parametrize("argv", [
        ["simulate", "--bell", "1,1,0,0"],
        ["simulate", "--bell", "1,0,0"],
        ["simulate", "--bell", "a,b,c,d"],
        ["simulate", "--computational", "1,0,0"],
        ["simulate", "--bell", "1,0,0,0", "--shots", "-1"],
    ])
    def test_validation_errors(self, capsys, argv):
        code, _, err = run_cli(capsys, *argv)
        assert code == 2
        assert err

    def test_missing_state_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["simulate"])
        assert exc.value.code == 2

    def test_hand_typed_decimals_renormalized(self, capsys):
        code, out, _ = run_cli(capsys, "simulate", "--bell", "0.8000001,0.6,0,0", "--mode", "fig1")
        assert code == 0
        bell = json.loads(out)["config_echo"]["state"]["bell"]
        assert sum(v * v for v in bell) == pytest.approx(1, abs=1e-15)


class TestVerify:
    def test_example_state(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--bell", "0.8,0.6,0,0")
        assert code == 0
        res = json.loads(out)["results"]
        assert res["passed"] and not res["failures"]

    def test_random_real(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--random-real", "100", "--seed", "1")
        assert code == 0
        assert json.loads(out)["results"]["n_states"] == 100

    def test_complex_state(self, capsys):
        code, _, err = run_cli(capsys, "verify", "--computational", "0.6,0,0,0,0,0,0,0.8")
        assert code == 3

    def test_failure_exit_code(self, capsys, monkeypatch):
        from qndsim import cli

        monkeypatch.setattr(cli, "variance_sum", lambda s: 2.5)
        code, out, _ = run_cli(capsys, "verify", "--bell", "1,0,0,0")
        assert code == 1
        failures = json.loads(out)["results"]["failures"]
        assert [f["check"] for f in failures] == ["variance_sum"]


class TestSweep:
    def test_one_parameter_family(self, capsys):
        code, out, _ = run_cli(capsys, "sweep", "--theta1", f"0:{np.pi}:13")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 13
        for r in rows:
            t = np.arctan2(float(r["beta"]), float(r["alpha"]))
            assert float(r["C"]) == pytest.approx(abs(np.cos(2 * t)), abs=1e-12)
            assert abs(float(r["residual1"])) < 1e-12 and abs(float(r["residual2"])) < 1e-12

    def test_single_point(self, capsys):
        code, out, _ = run_cli(capsys, "sweep", "--point", "1,0,0,0")
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ["alpha", "beta", "gamma", "eta", "C", "V1", "P1", "V2", "P2", "residual1", "residual2"]
        assert float(rows[1][4]) == 1

    def test_numbers_round_trip(self, capsys):
        _, out, _ = run_cli(capsys, "sweep", "--theta1", "0.1:1.3:4", "--theta2", "0.2:0.9:3", "--theta3", "0.5")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 12
        for r in rows:
            coeffs = [float(r[k]) for k in ("alpha", "beta", "gamma", "eta")]
            assert sum(c * c for c in coeffs) == pytest.approx(1, abs=1e-15)

    def test_with_shots(self, capsys, tmp_path):
        path = tmp_path / "sweep.csv"
        code, _, _ = run_cli(capsys, "sweep", "--point", "0.8,0.6,0,0", "--shots", "100000", "--seed", "2",
                             "--out", str(path))
        assert code == 0
        (row,) = list(csv.DictReader(path.open()))
        assert float(row["C_est"]) == pytest.approx(0.28, abs=0.02)
        assert float(row["P1_est"]) == pytest.approx(0.96, abs=0.02)

    def test_empty_grid(self, capsys):
        code, _, _ = run_cli(capsys, "sweep")
        assert code == 2

    def test_bad_range(self, capsys):
        code, _, _ = run_cli(capsys, "sweep", "--theta1", "0:1")
        assert code == 2


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qndsim.cli", "simulate", "--bell", "1,0,0,0", "--mode", "fig1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "simulate"
