import json

import pytest

from ruingame.cli import main
from ruingame.equilibrium import k3_analytic_ne
from ruingame.game import GameParams
from ruingame.io import payoffs_from_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def body(text):
    return "".join(line + "\n" for line in text.splitlines() if not line.startswith("# generated"))


def test_solve_closed_form(capsys):
    code, out, _ = run(capsys, "solve", "--p", "0.3", "0.6", "0.8", "--K", "3", "--closed-form")
    assert code == 0
    doc = json.loads(out)
    assert doc["closed_form_max_abs_diff"] <= 1e-10
    assert doc["max_sum_error"] <= 1e-9
    assert doc["payoffs"]["3,0,0"] == [1.0, 0.0, 0.0]


def test_solve_csv_file(tmp_path, capsys):
    out = tmp_path / "v.csv"
    code, _, _ = run(capsys, "solve", "--p", "0.3", "0.6", "0.8", "--K", "4", "--out", str(out))
    assert code == 0
    states, vals = payoffs_from_csv(out.read_text())
    assert len(states) == 15
    assert abs(vals.sum(axis=0) - 1).max() < 1e-9
    assert b"\r\n" not in out.read_bytes()


def test_verify_flipped_k3_ne(tmp_path, capsys):
    params = GameParams(0.3, 0.6, 0.8, 3)
    prof, _ = k3_analytic_ne(params)
    x = list(prof.x[0])
    game = {"p": list(params.p), "K": 3, "x": {"1,1,1": x}}
    path = tmp_path / "g.json"
    path.write_text(json.dumps(game))
    code, out, _ = run(capsys, "verify", "--game", str(path))
    assert code == 0 and json.loads(out)["certified"]

    x[1] = 1 - x[1]
    game["x"] = {"1,1,1": x}
    path.write_text(json.dumps(game))
    _, out, _ = run(capsys, "verify", "--game", str(path))
    cert = json.loads(out)
    assert not cert["certified"]
    assert cert["gains"][1] > 1e-6


def test_mvi_and_best_response(capsys):
    code, out, _ = run(capsys, "mvi", "--p", "0.3", "0.6", "0.8", "--K", "4")
    doc = json.loads(out)
    assert code == 0 and doc["success"] and doc["certificate"]["certified"]
    code, out, _ = run(capsys, "best-response", "--p", "0.3", "0.6", "0.8", "--K", "4",
                       "--player", "2")
    doc = json.loads(out)
    assert code == 0 and set(doc["strategy"].values()) <= {0.0, 1.0}


def test_enumerate_count(capsys):
    code, out, _ = run(capsys, "enumerate", "--p", "0.3", "0.6", "0.8", "--K", "4")
    doc = json.loads(out)
    assert code == 0 and doc["evaluated"] == 512 == doc["expected"]


def test_enumerate_refuses_large_k(capsys):
    code, _, err = run(capsys, "enumerate", "--p", "0.3", "0.6", "0.8", "--K", "7")
    assert code != 0
    assert json.loads(err)["error"] == "InvalidParameterError"


def test_simulate_reproducible(capsys):
    args = ("simulate", "--p", "0.3", "0.6", "0.8", "--K", "5", "--games", "3000", "--seed", "9")
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a.startswith("# generated")
    assert body(a) == body(b)
    assert "5,0.3,0.6,0.8,\"2,2,1\",3000,9" in a


def test_sweep_reproducible(capsys):
    args = ("sweep-convergence", "--reps", "3", "--k-max", "4", "--seed", "2")
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert body(a) == body(b)
    lines = [l for l in a.splitlines() if not l.startswith("#")]
    assert lines[0] == "K,runs,successes,proportion"
    assert lines[1].startswith("3,3,3,1.0")


def test_delta_v_header(capsys):
    code, out, _ = run(capsys, "delta-v", "--p", "0.5", "0.5", "0.5", "--K", "6")
    assert code == 0
    assert "# K=6 start=2,2,2" in out


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"p": [0.2, 0.4, 0.6], "K": 5, "seed": 1, "games": 10}))
    code, out, _ = run(capsys, "simulate", "--config", str(cfg), "--seed", "7", "--emit-config")
    doc = json.loads(out)
    assert code == 0
    assert doc["seed"] == 7 and doc["games"] == 10 and doc["kind"] == "simulate"


@pytest.mark.parametrize(
    "content, field",
    [
        ('{"p": [0.1,\n', "config"),
        ('{"bogus": 1}', "bogus"),
        ('{"p": [0.1, 0.2], "K": 3}', "p"),
    ],
)
def test_bad_config(tmp_path, capsys, content, field):
    cfg = tmp_path / "c.json"
    cfg.write_text(content)
    code, _, err = run(capsys, "solve", "--config", str(cfg))
    doc = json.loads(err)
    assert code == 2
    assert doc["field"] == field


def test_bad_json_reports_line(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{\n  "p": [0.1,\n')
    _, _, err = run(capsys, "solve", "--config", str(cfg))
    assert json.loads(err)["line"] == 3


def test_invalid_probability(capsys):
    code, _, err = run(capsys, "solve", "--p", "0.3", "1.5", "0.2", "--K", "3")
    assert code == 2
    assert "1.5" in json.loads(err)["message"]
