import csv
import io
import json
import math
import shutil
import subprocess
import sys

import numpy as np
import pytest

from toric_ma import cli
from toric_ma.errors import NonConvergence

SQUARE = {"dim": 2, "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]}
DIAMOND = {"dim": 2, "vertices": [[1, 0], [0, 1], [-1, 0], [0, -1]]}
UNIT = {"dim": 1, "vertices": [[0], [1]]}


def call(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def result(capsys, *argv):
    code, out, err = call(capsys, *argv)
    assert code == 0, err
    return json.loads(out)["result"]


@pytest.fixture
def files(tmp_path):
    def write(name, doc):
        p = tmp_path / name
        p.write_text(json.dumps(doc))
        return str(p)

    return write


def test_mixed_volume(capsys, files):
    res = result(capsys, "mixed-volume", "--bodies", files("q.json", SQUARE), files("d.json", DIAMOND))
    assert res["mv"] == pytest.approx(2.0, abs=1e-9)


def test_volume_polynomial_for_other_counts(capsys):
    res = result(capsys, "mixed-volume", "--bodies", json.dumps(SQUARE))
    assert res["coefficients"] == [{"degrees": [2], "value": pytest.approx(1.0)}]


def test_bm_check_equal_bodies(capsys):
    res = result(capsys, "bm-check", "--bodies", json.dumps(DIAMOND), json.dumps(DIAMOND))
    assert res["lhs"] == pytest.approx(res["rhs"], abs=1e-9) and res["holds"] is True


def test_bm_check_random_is_seeded(capsys):
    a = result(capsys, "bm-check", "--random", 5, "--seed", 7)
    b = result(capsys, "bm-check", "--random", 5, "--seed", 7)
    c = result(capsys, "bm-check", "--random", 5, "--seed", 8)
    assert a == b and a != c and a["holds"]


def test_log_concavity(capsys):
    res = result(capsys, "log-concavity", "--bodies", json.dumps(SQUARE), json.dumps(DIAMOND), "--t", 0.5)
    assert res["samples"][0]["volume"] == pytest.approx(1.75) and res["holds"]


def test_solve(capsys, files):
    mu = {"atoms": [{"x": [0, 0], "mass": 0.5}]}
    res = result(capsys, "solve", "--body", files("p.json", SQUARE), "--measure", files("m.json", mu))
    assert res["residual"] <= 1e-8
    nodes = np.array(res["solution"]["nodes"])
    assert np.allclose(res["solution"]["values"], np.max(nodes @ np.array(SQUARE["vertices"]).T, axis=1), atol=1e-6)


def test_aubin_yau(capsys):
    mu = {"atoms": [{"x": [-1], "mass": 0.2}, {"x": [1], "mass": 0.3}]}
    res = result(capsys, "aubin-yau", "--body", json.dumps(UNIT), "--measure", json.dumps(mu), "--lambda", 2)
    assert res["residual"] <= 1e-8 and res["lambda"] == 2.0


def test_mass(capsys):
    f = {"body": UNIT, "nodes": [[-2], [-1], [0], [1], [2]], "values": [-0.5, -0.5, 0, 0.5, 1.5]}
    res = result(capsys, "mass", "--function", json.dumps(f))
    assert res["masses"] == pytest.approx([0, 0.25, 0, 0.25, 0]) and res["full_mass"] is True


def test_capacity(capsys):
    region = {"boxes": [{"lo": [2], "hi": [3]}]}
    res = result(capsys, "capacity", "--body", json.dumps(UNIT), "--region", json.dumps(region), "--grid", 17, "--box-radius", 4)
    assert res["cap_mass"] == pytest.approx(0.25) and res["cap_energy"] == pytest.approx(0.25)


def test_envelope_modes(capsys):
    x = [[-1.0], [0.0], [1.0]]
    body = {"dim": 1, "vertices": [[-1], [1]]}
    u = {"body": body, "nodes": x, "values": [-1, 0, 1]}
    v = {"body": body, "nodes": x, "values": [1, 0, -1]}
    res = result(capsys, "envelope", "--psi", json.dumps(u), "--chi", json.dumps(v), "--mode", "rooftop")
    assert res["envelope"]["values"] == pytest.approx([-1, -1, -1])


def test_recover_body(capsys):
    g = np.linspace(-2, 2, 5)
    nodes = [[a, b] for a in g for b in g]
    f = {"body": SQUARE, "nodes": nodes, "values": [max(0, a) + max(0, b) for a, b in nodes]}
    res = result(capsys, "recover-body", "--function", json.dumps(f))
    assert sorted(map(tuple, res["body"]["vertices"])) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_is_model(capsys):
    f = {"body": UNIT, "nodes": [[-1], [0], [1]], "values": [0, 0, 1]}
    res = result(capsys, "is-model", "--function", json.dumps(f), "--r", 1)
    assert res["model"] is True and res["bound"] <= 0.5 * math.log(2) + 1e-6


def test_uniform_bound(capsys):
    res = result(capsys, "uniform-bound", "--body", json.dumps(UNIT), "--levels", 3, 4, 5)
    assert res["deviations"] == pytest.approx([0.25, 0.25, 0.25], abs=1e-6)


def test_byte_identical_output(capsys):
    args = ["solve", "--body", json.dumps(SQUARE), "--measure", json.dumps({"atoms": [{"x": [0, 0], "mass": 0.5}]})]
    first = call(capsys, *args)[1]
    second = call(capsys, *args)[1]
    assert first == second and "wall_time" not in first


def test_timing_flag(capsys):
    out = call(capsys, "mixed-volume", "--bodies", json.dumps(SQUARE), json.dumps(SQUARE), "--timing")[1]
    assert json.loads(out)["wall_time"] >= 0


def test_csv_output(capsys):
    out = call(capsys, "mixed-volume", "--bodies", json.dumps(SQUARE), json.dumps(DIAMOND), "--out", "csv")[1]
    rows = dict(csv.reader(io.StringIO(out)))
    assert float(rows["result.mv"]) == pytest.approx(2.0)


def test_config_precedence(capsys, files):
    cfg = files("cfg.json", {"tol": 1e-6, "out": "csv", "r": 2.0})
    out = call(capsys, "mixed-volume", "--bodies", json.dumps(SQUARE), json.dumps(SQUARE), "--config", cfg)[1]
    rows = dict(csv.reader(io.StringIO(out)))
    assert rows["scenario.params.tol"] == "1e-06"
    out = call(capsys, "mixed-volume", "--bodies", json.dumps(SQUARE), json.dumps(SQUARE), "--config", cfg, "--tol", 1e-3, "--out", "json")[1]
    assert json.loads(out)["scenario"]["params"]["tol"] == 1e-3


class TestErrors:
    def test_mass_mismatch_is_validation_failure(self, capsys):
        mu = {"atoms": [{"x": [0, 0], "mass": 0.4}]}
        code, out, err = call(capsys, "solve", "--body", json.dumps(SQUARE), "--measure", json.dumps(mu))
        assert code == 1 and out == ""
        assert json.loads(err)["error"]["type"] == "MassMismatch"

    def test_bad_json(self, capsys):
        code, _, err = call(capsys, "mixed-volume", "--bodies", "{not json")
        assert code == 1 and json.loads(err)["error"]["exit_code"] == 1

    def test_missing_file(self, capsys):
        code, _, err = call(capsys, "mass", "--function", "/nonexistent/f.json")
        assert code == 1 and "no such file" in json.loads(err)["error"]["message"]

    def test_missing_input(self, capsys):
        code, _, err = call(capsys, "solve", "--body", json.dumps(SQUARE))
        assert code == 1 and "measure" in json.loads(err)["error"]["message"]

    def test_nonconvex_function(self, capsys):
        f = {"body": UNIT, "nodes": [[-1], [0], [1]], "values": [0, 1, 0]}
        code, _, err = call(capsys, "mass", "--function", json.dumps(f))
        assert code == 1 and json.loads(err)["error"]["type"] == "NonConvexInput"

    def test_nonconvergence_exit_code(self, capsys, monkeypatch):
        def boom(p):
            raise NonConvergence("stalled")

        monkeypatch.setitem(cli.RUNNERS, "solve", boom)
        code, _, err = call(capsys, "solve")
        assert code == 2 and json.loads(err)["error"] == {"exit_code": 2, "message": "stalled", "type": "NonConvergence"}


def test_batch(capsys, files, monkeypatch):
    monkeypatch.setenv("TORIC_MA_THREADS", "3")
    items = [
        {"kind": "mixed-volume", "bodies": [SQUARE, DIAMOND]},
        {"kind": "bm-check", "bodies": [SQUARE, SQUARE]},
        {"kind": "solve", "body": SQUARE, "measure": {"atoms": [{"x": [0, 0], "mass": 0.3}]}},
    ]
    code, out, _ = call(capsys, "batch", files("batch.json", items))
    docs = json.loads(out)["results"]
    assert code == 1
    assert docs[0]["result"]["mv"] == pytest.approx(2.0)
    assert docs[1]["result"]["holds"] is True
    assert docs[2]["error"]["type"] == "MassMismatch"


@pytest.mark.skipif(shutil.which("toric-ma") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(
        ["toric-ma", "mixed-volume", "--bodies", json.dumps(SQUARE), json.dumps(DIAMOND)],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["result"]["mv"] == pytest.approx(2.0)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "toric_ma.cli", "bm-check", "--bodies", json.dumps(SQUARE), json.dumps(SQUARE)],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["result"]["holds"] is True
