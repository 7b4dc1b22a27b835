import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from ghzpurify import direct, verify
from ghzpurify.cli import main
from ghzpurify.direct import GhzDiagonal


def run(capsys, *argv):
    try:
        code = main(list(argv))
    except SystemExit as exc:  # argparse usage errors
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def write_state(tmp_path, d, p):
    path = tmp_path / "state.json"
    path.write_text(json.dumps({"d": d, "p": list(p)}))
    return str(path)


def test_thresholds_single_direct(capsys):
    code, out, _ = run(capsys, "thresholds", "--d", "2", "--protocol", "direct")
    assert code == 0
    (row,) = rows(out)
    assert float(row["f_dir"]) == pytest.approx(0.4073, abs=1e-3)
    assert row["f_ind"] == ""
    assert len(row["f_dir"].split(".")[1]) == 6


def test_thresholds_json_and_file(capsys, tmp_path):
    target = tmp_path / "t.json"
    code, out, _ = run(capsys, "thresholds", "--d", "3", "--protocol", "indirect", "--output", "json",
                       "--out", str(target))
    assert code == 0 and out == ""
    (row,) = json.loads(target.read_text())
    assert float(row["f_ind"]) == pytest.approx(0.3000, abs=1e-3)


@pytest.mark.parametrize("dims", ["", "1", "9", "2,x"])
def test_thresholds_bad_dims(capsys, dims):
    code, _, err = run(capsys, "thresholds", "--d", dims)
    assert code == 4
    assert "error" in err


def test_thresholds_bracket_failure_row(capsys, monkeypatch):
    def broken(d, *args):
        if d == 3:
            raise direct.BracketError("pure state does not converge")
        return 0.5

    monkeypatch.setattr(direct, "threshold_fidelity_direct", broken)
    code, out, _ = run(capsys, "thresholds", "--d", "2,3,4", "--protocol", "direct")
    assert code == 0
    assert [r["f_dir"] for r in rows(out)] == ["0.500000", "bracket_failure", "0.500000"]


def test_output_is_deterministic(capsys):
    first = run(capsys, "copies", "--d", "4", "--fidelity", "0.6")
    second = run(capsys, "copies", "--d", "4", "--fidelity", "0.6")
    assert first == second


def test_purify_d6_converges(capsys):
    code, out, _ = run(capsys, "purify", "--d", "6", "--fidelity", "0.5", "--target", "0.99")
    assert code == 0
    report = json.loads(out)
    assert report["status"] == "converged"
    assert report["final_fidelity"] >= 0.99
    assert report["copies_per_survivor"] == pytest.approx(48, rel=0.25)
    assert list(report)[:5] == ["d", "protocol", "schedule", "target_fidelity", "status"]


def test_purify_pure_single_round(capsys):
    code, out, _ = run(capsys, "purify", "--d", "3", "--x", "1", "--rounds", "1")
    report = json.loads(out)
    assert code == 0 and report["status"] == "completed"
    assert [r["fidelity_after"] for r in report["rounds"]] == [1.0]
    assert report["copies_per_survivor"] == 2.0


def test_purify_below_threshold(capsys):
    code, out, err = run(capsys, "purify", "--d", "3", "--fidelity", "0.2")
    assert code == 2
    report = json.loads(out)
    assert report["status"] == "nonconverged"
    assert report["final_fidelity"] < 0.99
    assert "below target" in err


def test_purify_indirect_and_schedule(capsys):
    code, out, _ = run(capsys, "purify", "--d", "3", "--fidelity", "0.6", "--protocol", "indirect")
    report = json.loads(out)
    assert code == 0 and report["schedule"] == "P1,P2"
    assert "bell_fidelity_ab" in report["rounds"][0]
    code, out, _ = run(capsys, "purify", "--d", "3", "--fidelity", "0.6", "--schedule", "P1,P1,P2",
                       "--output", "csv")
    assert code == 0
    assert [r["token"] for r in rows(out)][:3] == ["P1", "P1", "P2"]


def test_purify_bad_schedule(capsys):
    code, _, err = run(capsys, "purify", "--d", "3", "--x", "0.5", "--schedule", "P1,P4")
    assert code == 4
    assert "P4" in err


def test_purify_degenerate_state(capsys, tmp_path):
    p = np.zeros(27)
    p[9] = 1.0  # label (1, 0, 0)
    code, _, err = run(capsys, "purify", "--state-file", write_state(tmp_path, 3, p))
    assert code == 3
    assert "degenerate" in err


def test_state_file_roundtrip(capsys, tmp_path):
    s = direct.IsotropicFamily(2, 0.7).state()
    path = write_state(tmp_path, 2, s.p.reshape(-1))
    code, out, _ = run(capsys, "purify", "--state-file", path, "--rounds", "2")
    assert code == 0
    assert json.loads(out)["initial_fidelity"] == pytest.approx(s.fidelity, abs=1e-6)


@pytest.mark.parametrize("payload", [
    {"d": 2, "p": [0.2] * 8},
    {"d": 2, "p": [0.125] * 7},
    {"p": [1.0]},
    {"d": 2, "p": [0.5, 0.5, -0.25, 0.25, 0, 0, 0, 0]},
])
def test_state_file_rejected(capsys, tmp_path, payload):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(payload))
    code, _, _ = run(capsys, "purify", "--state-file", str(path))
    assert code == 4


def test_state_file_dimension_conflict(capsys, tmp_path):
    path = write_state(tmp_path, 2, GhzDiagonal.point_mass(2).p.reshape(-1))
    assert run(capsys, "purify", "--d", "3", "--state-file", path)[0] == 4


def test_copies_d6(capsys):
    code, out, _ = run(capsys, "copies", "--d", "6", "--fidelity", "0.5")
    assert code == 0
    (row,) = rows(out)
    assert float(row["direct_copies"]) == pytest.approx(48, rel=0.25)
    assert float(row["indirect_copies"]) == pytest.approx(192, rel=0.25)
    assert 3.2 <= float(row["ratio"]) <= 4.8


def test_copies_pure_direct(capsys):
    code, out, _ = run(capsys, "copies", "--d", "4", "--x", "1", "--protocol", "direct")
    (row,) = rows(out)
    assert code == 0
    assert row["direct_copies"] == "1.000000" and row["direct_rounds"] == "0"


def test_copies_sweep_monotone(capsys):
    code, out, _ = run(capsys, "copies", "--d", "3", "--sweep", "0.5,0.6,0.7,0.8,0.9")
    assert code == 0
    table = rows(out)
    assert len(table) == 5
    for key in ("direct_copies", "indirect_copies"):
        values = [float(r[key]) for r in table]
        assert all(a >= b for a, b in zip(values, values[1:]))


def test_copies_below_threshold(capsys):
    code, out, err = run(capsys, "copies", "--d", "3", "--fidelity", "0.25")
    assert code == 2
    (row,) = rows(out)
    # between the two d=3 thresholds: only the indirect protocol fails
    assert float(row["direct_copies"]) > 1
    assert row["indirect_copies"] == "nonconverged" and row["ratio"] == ""
    assert "below the purification threshold" in err


def test_copies_needs_input(capsys):
    assert run(capsys, "copies", "--d", "3")[0] == 4
    assert run(capsys, "copies", "--d", "3", "--x", "0.5", "--fidelity", "0.5")[0] == 4
    assert run(capsys, "copies", "--d", "3", "--x", "0.5", "--target", "1")[0] == 4


def test_verify_default_passes(capsys):
    code, out, _ = run(capsys, "verify", "--trials", "3")
    assert code == 0
    assert "FAIL" not in out
    assert out.strip().splitlines()[-1].endswith("checks passed")


def test_verify_refuses_large_d(capsys):
    code, _, err = run(capsys, "verify", "--d-max", "5")
    assert code == 4
    assert "d_max <= 4" in err


def _tampered_p1(state):
    out, success = direct.p1_map(state)
    p = np.array(out.p)
    p[0, 0, 0] += 1e-3
    return GhzDiagonal(p / p.sum()), success


def test_verify_detects_tampered_map(capsys, monkeypatch):
    results = verify.run_checks(d_max=2, trials=2, maps={"p1": _tampered_p1})
    failed = {r.name for r in results if not r.passed}
    assert "d=2 p1_map vs circuit" in failed
    monkeypatch.setitem(verify.DEFAULT_MAPS, "p1", _tampered_p1)
    code, out, _ = run(capsys, "verify", "--d-max", "2", "--trials", "2")
    assert code == 1
    assert "FAIL" in out


def test_correlations_examples(capsys):
    code, out, _ = run(capsys, "correlations", "--d", "5", "--label", "1,2,3", "--output", "json")
    assert code == 0
    report = json.loads(out)
    assert [r["exponent"] for r in report["eigenvalues"]] == [1, 2, 3]
    assert all(float(r["dense_residual"]) <= 1e-10 for r in report["eigenvalues"])
    first = report["conditioned_outcomes"][0]
    assert first == {"measurement": "xAxBxC", "conditioning": "0 0", "outcome_p": 1}
    code, out, _ = run(capsys, "correlations", "--d", "3")
    assert code == 0 and "XXX,0," in out


def test_correlations_bad_label(capsys):
    assert run(capsys, "correlations", "--d", "3", "--label", "1,2")[0] == 4
    assert run(capsys, "correlations", "--label", "0,0,0")[0] == 4


def test_unknown_command_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["plot"])
    assert info.value.code == 4


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ghzpurify.cli", "correlations", "--d", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("operator,exponent,dense_residual")
