"""Command line interface: output formats, exit codes, reproducibility.

Most cases drive ``main(argv)`` in-process and parse what it printed; the
console script and thread invariance get real subprocess checks.
"""

import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from markov_rank import escape_rate, estimate_survival, SimConfig, survival_curve
from markov_rank.cli import main

from helpers import cycle3_lazy, example1, rotation3

DATA = Path(__file__).resolve().parent.parent / "data"
EX1 = str(DATA / "example1.json")
EX2 = str(DATA / "example2.json")
EX3 = str(DATA / "example3.json")

UNIFORM3 = np.full(3, 1 / 3)


def write_chain(tmp_path, rows, name="chain.json"):
    path = tmp_path / name
    path.write_text(json.dumps([[float(x) for x in row] for row in rows]))
    return str(path)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_validate_human(capsys):
    code, out, err = run_cli(capsys, "validate", "--input", EX1)
    assert code == 0
    assert "irreducible: yes" in out
    assert "hole {1}: punched matrix irreducible" in out
    assert err == ""


def test_validate_json(capsys):
    code, out, _ = run_cli(capsys, "validate", "--input", EX1, "--json")
    payload = json.loads(out)
    assert code == 0
    assert payload["irreducible"] is True
    assert payload["punched_irreducible"] == [True, True, True]
    assert payload["components"] == [[1, 2, 3]]
    assert payload["manifest"]["command"] == "validate"


def test_validate_reducible_exits_2(capsys, tmp_path):
    path = write_chain(tmp_path, np.eye(3))
    code, out, err = run_cli(capsys, "validate", "--input", path)
    assert code == 2
    assert "irreducible: no" in out
    assert "components" in out
    assert "reducible" in err


def test_validate_periodic_warns(capsys, tmp_path):
    path = write_chain(tmp_path, [[0.0, 1.0], [1.0, 0.0]])
    code, out, _ = run_cli(capsys, "validate", "--input", path)
    assert code == 0
    assert "period 2" in out


def test_sinks_json(capsys):
    code, out, _ = run_cli(capsys, "sinks", "--input", EX1, "--json")
    payload = json.loads(out)
    assert code == 0
    assert payload["ranking"] == [3, 1, 2]
    assert payload["ties"] == [[3], [1], [2]]
    want = [er.mu for er in (escape_rate(example1(), k) for k in range(3))]
    assert payload["mu"] == pytest.approx(want, abs=1e-12)


def test_sinks_mass_note(capsys):
    # state 3 wins the escape race even though state 1 is heavier
    code, out, _ = run_cli(capsys, "sinks", "--input", EX2)
    assert code == 0
    assert "note: state 3 escapes fastest" in out
    assert "state 1 carries more stationary mass" in out


def test_sinks_tie_group(capsys, tmp_path):
    path = write_chain(tmp_path, cycle3_lazy())
    code, out, _ = run_cli(capsys, "sinks", "--input", path)
    assert code == 0
    assert "tie group: states [1, 2, 3]" in out


def test_sources_human_order(capsys):
    code, out, _ = run_cli(capsys, "sources", "--input", EX3)
    assert code == 0
    assert "order (best source first): 1 > 3 > 2" in out


def test_sources_json(capsys):
    code, out, _ = run_cli(capsys, "sources", "--input", EX3, "--json")
    payload = json.loads(out)
    assert code == 0
    assert payload["sigma"] == [1, 3, 2]
    assert payload["q"] == pytest.approx([11 / 15, 17 / 15, 1.0], abs=1e-8)
    assert payload["degenerate"] is False


def test_sources_degenerate_exits_3(capsys, tmp_path):
    path = write_chain(tmp_path, rotation3())
    code, out, err = run_cli(capsys, "sources", "--input", path)
    assert code == 3
    assert json.loads(out)["degenerate"] is True
    assert "not one-dimensional" in err


def test_survival_csv_matches_library(capsys):
    code, out, _ = run_cli(capsys, "survival", "--input", EX1, "--hole", "1",
                           "--steps", "12")
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0].startswith("# manifest: ")
    manifest = json.loads(lines[0][len("# manifest: "):])
    assert manifest["command"] == "survival"
    assert lines[1] == "n,M"
    got = [float(line.split(",")[1]) for line in lines[2:]]
    want = survival_curve(example1(), 0, UNIFORM3, 12).values
    assert got == pytest.approx(list(want), rel=1e-15)


def test_survival_point_mass_in_hole_exits_3(capsys):
    code, _, err = run_cli(capsys, "survival", "--input", EX1, "--hole", "1",
                           "--init", "e:1")
    assert code == 3
    assert "no mass outside the hole" in err


def test_qsd_json(capsys):
    code, out, _ = run_cli(capsys, "qsd", "--input", EX1, "--hole", "1")
    payload = json.loads(out)
    assert code == 0
    assert payload["survivors"] == [2, 3]
    assert payload["mu"] == pytest.approx(2 / 3, abs=1e-12)
    assert payload["qsd"] == pytest.approx([5 / 8, 3 / 8], abs=1e-10)
    assert payload["degenerate"] is False


def test_qsd_nilpotent_exits_3(capsys, tmp_path):
    path = write_chain(tmp_path, [[0.0, 1.0, 0.0], [0.5, 0.0, 0.5], [0.0, 1.0, 0.0]])
    code, out, err = run_cli(capsys, "qsd", "--input", path, "--hole", "2")
    assert code == 3
    payload = json.loads(out)
    assert payload["degenerate"] is True
    assert payload["qsd"] is None
    assert payload["lam"] == float("inf")
    assert "nilpotent" in err


def test_qsd_unreachable_tol_exits_4(capsys, tmp_path):
    path = write_chain(tmp_path, [[0.3, 0.4, 0.3], [0.5, 0.1, 0.4],
                                  [1 / 3, 1 / 3, 1 / 3]])
    code, _, err = run_cli(capsys, "qsd", "--input", path, "--hole", "3",
                           "--tol", "1e-30")
    assert code == 4
    assert "stalled" in err


def test_crossing_json(capsys):
    code, out, _ = run_cli(capsys, "crossing", "--input", EX1,
                           "--fast", "3", "--slow", "2")
    payload = json.loads(out)
    assert code == 0
    assert payload["lam_fast"] > payload["lam_slow"]
    assert payload["n_star_certified"] >= payload["n0_empirical"]
    assert payload["fast_hole"] == [3]
    assert payload["c1_fast"] <= payload["c2_fast"]


def test_crossing_unseparated_exits_3(capsys, tmp_path):
    path = write_chain(tmp_path, cycle3_lazy())
    code, _, err = run_cli(capsys, "crossing", "--input", path,
                           "--fast", "1", "--slow", "2")
    assert code == 3
    assert "not separated" in err


def test_tv_csv_exact_decay(capsys):
    code, out, _ = run_cli(capsys, "tv", "--input", EX3, "--start", "e:3",
                           "--norm", "linf", "--steps", "20")
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[1] == "n,D"
    got = np.array([float(line.split(",")[1]) for line in lines[2:]])
    np.testing.assert_allclose(got, 0.5 * 0.75 ** np.arange(21), rtol=1e-9)


def test_simulate_matches_library(capsys):
    from helpers import example2

    code, out, _ = run_cli(capsys, "simulate", "--input", EX2, "--hole", "3",
                           "--steps", "0,2,5", "--trials", "4000", "--seed", "17")
    payload = json.loads(out)
    assert code == 0
    cfg = SimConfig(trials=4000, seed=17, horizon=500)
    want = estimate_survival(example2(), UNIFORM3, 2, [0, 2, 5], cfg)
    got = payload["estimates"]
    assert [e["p_hat"] for e in got] == [e.p_hat for e in want]
    assert payload["manifest"]["seed"] == 17


def test_simulate_reproducible_bytes(capsys, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    argv = ("simulate", "--input", EX1, "--hole", "2", "--trials", "1000",
            "--seed", "5", "--steps", "0,1,4")
    _, out1, _ = run_cli(capsys, *argv)
    _, out2, _ = run_cli(capsys, *argv)
    assert out1 == out2
    assert "1970" not in out1  # the epoch override is honored
    assert json.loads(out1)["manifest"]["timestamp"] == "2023-11-14T22:13:20Z"


def test_simulate_seed_changes_output(capsys):
    argv = ["simulate", "--input", EX1, "--hole", "2", "--trials", "1000",
            "--steps", "3"]
    _, out1, _ = run_cli(capsys, *argv, "--seed", "1")
    _, out2, _ = run_cli(capsys, *argv, "--seed", "2")
    assert json.loads(out1)["estimates"] != json.loads(out2)["estimates"]


def test_out_file_round_trip(capsys, tmp_path):
    target = tmp_path / "curve.csv"
    code, out, _ = run_cli(capsys, "survival", "--input", EX1, "--hole", "1",
                           "--steps", "5", "--out", str(target))
    assert code == 0
    assert out == ""
    body = target.read_text()
    assert body.startswith("# manifest: ")
    assert body.splitlines()[1] == "n,M"


def test_missing_input_exits_1(capsys):
    code, _, err = run_cli(capsys, "validate", "--input", "/nonexistent/m.json")
    assert code == 1
    assert "error" in err


def test_bad_state_label_exits_1(capsys):
    code, _, err = run_cli(capsys, "qsd", "--input", EX1, "--hole", "9")
    assert code == 1
    assert "outside 1..3" in err


def test_bad_init_exits_1(capsys):
    code, _, err = run_cli(capsys, "survival", "--input", EX1, "--hole", "1",
                           "--init", "garbage")
    assert code == 1
    assert "initial distribution" in err


def test_bad_flag_usage_exits_1(capsys):
    with pytest.raises(SystemExit) as info:
        main(["tv", "--input", EX3, "--norm", "l7"])
    assert info.value.code == 1


def test_console_script_version():
    proc = subprocess.run([sys.executable, "-m", "markov_rank", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("markov-rank ")


def test_thread_count_does_not_change_bytes():
    argv = [sys.executable, "-m", "markov_rank", "simulate", "--input", EX2,
            "--hole", "1", "--trials", "5003", "--steps", "0,1,2,5,10",
            "--seed", "123"]
    outs = []
    for workers in ("1", "8"):
        env = dict(os.environ,
                   MARKOV_RANK_THREADS=workers,
                   SOURCE_DATE_EPOCH="1700000000")
        proc = subprocess.run(argv, capture_output=True, env=env)
        assert proc.returncode == 0
        outs.append(proc.stdout)
    assert outs[0] == outs[1]
