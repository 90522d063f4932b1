from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from qvsets import cli
from qvsets.fixtures import diag, four_dim_context, non_hausdorff
from qvsets.quantum import observables_to_json


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def obs2(tmp_path):
    return _write(tmp_path / "obs2.json", observables_to_json([diag("A", [1.0, -1.0])]))


@pytest.fixture
def obs4(tmp_path):
    return _write(tmp_path / "obs4.json", observables_to_json(list(four_dim_context().family)))


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_context(capsys, obs2):
    code, out, _ = run(capsys, "context", obs2)
    assert code == 0
    data = json.loads(out)
    assert [a["label"] for a in data["atoms"]] == ["atom0", "atom1"]
    code, out, _ = run(capsys, "context", obs2, "--format", "table")
    assert out.startswith("2 atoms (dim 2)")


def test_context_rejects_bad_input(capsys, tmp_path):
    pauli = {"dim": 2, "operators": [{"name": "Z", "matrix": [[1, 0], [0, -1]]},
                                     {"name": "X", "matrix": [[0, 1], [1, 0]]}]}
    code, _, err = run(capsys, "context", _write(tmp_path / "nc.json", pauli))
    assert code == 2 and "do not commute" in err and "2.83" in err
    code, _, err = run(capsys, "context", _write(tmp_path / "empty.json", {"dim": 2, "operators": []}))
    assert code == 2 and "/operators" in err
    bad = {"dim": 2, "operators": [{"name": "N", "matrix": [[0, 1], [0, 0]]}]}
    code, _, err = run(capsys, "context", _write(tmp_path / "nh.json", bad))
    assert code == 2 and "/operators/0/matrix" in err
    (tmp_path / "broken.json").write_text("{")
    code, _, err = run(capsys, "context", str(tmp_path / "broken.json"))
    assert code == 2 and "invalid JSON" in err
    code, _, _ = run(capsys, "context", str(tmp_path / "missing.json"))
    assert code == 2
    code, _, _ = run(capsys, "context", str(tmp_path / "obs.json"), "--tol-eig", "-1")
    assert code == 2


def test_eval_fixture(capsys):
    code, out, _ = run(capsys, "eval", "a = b | ~(a = b)", "--fixture", "non-hausdorff")
    assert code == 0
    assert json.loads(out) == {"formula": "((a = b) | ~(a = b))", "truth_open": ["1"],
                               "per_point": {"0": False, "1": True}}
    code, out, _ = run(capsys, "eval", "a = a", "--fixture", "non-hausdorff")
    assert json.loads(out)["truth_open"] == ["0", "1"]


def test_eval_errors(capsys):
    code, _, err = run(capsys, "eval", "a = ", "--fixture", "non-hausdorff")
    assert code == 2 and "position 4" in err
    code, _, err = run(capsys, "eval", "forall x in T . x = a", "--fixture", "non-hausdorff")
    assert code == 2
    code, _, _ = run(capsys, "eval", "a = a")
    assert code == 2


def test_eval_presheaf_and_context(capsys, tmp_path, obs4):
    path = _write(tmp_path / "p.json", non_hausdorff().to_json())
    code, out, _ = run(capsys, "eval", "exists x in S . x = b", "--presheaf", path)
    assert code == 0 and json.loads(out)["truth_open"] == ["0", "1"]
    code, out, _ = run(capsys, "eval", "0 <= A & B <= 0", "--context", obs4)
    assert json.loads(out)["truth_open"] == ["atom1"]


def test_takeuti(capsys, obs2):
    code, out, _ = run(capsys, "takeuti", "roundtrip", obs2, "--op", "A")
    data = json.loads(out)
    assert code == 0 and data["A"]["max_abs_error"] <= 1e-10 and data["A"]["cut_axioms"]
    code, out, _ = run(capsys, "takeuti", "family", obs2)
    assert json.loads(out)["A"]["cumulative"] == [["atom1"], ["atom0", "atom1"]]


def test_born_and_collapse(capsys, tmp_path, obs4):
    st = _write(tmp_path / "h.json", {"amplitudes": [0.5, 0.5, 0.5, [0, 0.5]]})
    code, out, _ = run(capsys, "born", obs4, st, "--atoms", "atom0", "atom3")
    data = json.loads(out)
    assert code == 0 and data["measure"] == 0.5 and sum(data["per_atom"].values()) == 1.0
    code, out, _ = run(capsys, "collapse", "--context", obs4, "--atom", "atom1",
                       "--formula", "0 <= A", "--formula", "0 <= B")
    data = json.loads(out)
    assert data["maximal"] and [r["value"] for r in data["results"]] == [True, False]
    assert data["results"][0]["witness_open"] == ["atom1"]
    code, out, _ = run(capsys, "collapse", "table", "--context", obs4, "--formula", "A = B", "--state", st)
    data = json.loads(out)
    assert [r["formulas"]["A = B"] for r in data["atoms"].values()] == [True, False, False, True]
    assert data["born"]["atom3"] == 0.25
    code, _, _ = run(capsys, "collapse", "--context", obs4)
    assert code == 2


def test_unnormalised_state_is_rejected(capsys, tmp_path, obs4):
    st = _write(tmp_path / "h.json", {"amplitudes": [1, 1, 0, 0]})
    code, _, err = run(capsys, "born", obs4, st)
    assert code == 2 and "norm" in err


def test_topology(capsys, tmp_path):
    path = _write(tmp_path / "s.json", {"points": ["0", "1"], "opens": [[], ["1"], ["0", "1"]]})
    code, out, _ = run(capsys, "topology", path)
    data = json.loads(out)
    assert code == 0 and data["lattice_atoms"] == [["1"]]
    assert data["minimal_neighborhoods"] == {"0": ["0", "1"], "1": ["1"]}
    bad = _write(tmp_path / "b.json", {"points": ["a", "b", "c"], "opens": [[], ["a"], ["b"], ["a", "b", "c"]]})
    code, _, _ = run(capsys, "topology", bad)
    assert code == 2


@pytest.mark.parametrize("name", ["non-hausdorff", "takeuti-2dim", "collapse-4dim"])
def test_demos(capsys, name):
    code, out, _ = run(capsys, "demo", name, "--format", "table")
    assert code == 0
    assert "[FAIL]" not in out
    if name == "non-hausdorff":
        assert "excluded middle not forced at 0" in out
    if name == "collapse-4dim":
        assert "atom1: A=+1 B=-1" in out
    code, out, _ = run(capsys, "demo", name)
    assert all(json.loads(out)["checks"].values())


def test_unknown_demo(capsys):
    assert run(capsys, "demo", "nope")[0] == 2


def test_invariant_failure_exit_code(capsys, monkeypatch):
    monkeypatch.setitem(cli.DEMOS, "broken", lambda args: ({}, [("always false", False)]))
    code, _, err = run(capsys, "demo", "broken")
    assert code == 3 and "always false" in err


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest", "--seed", "3")
    assert code == 0 and all(json.loads(out)["results"].values())


def test_out_file_and_byte_identical_output(tmp_path, obs4):
    outs = []
    for k in range(2):
        dest = tmp_path / f"r{k}.json"
        proc = subprocess.run([sys.executable, "-m", "qvsets.cli", "collapse", "table", "--context", obs4,
                               "--formula", "0 <= A", "--seed", "7", "--out", str(dest)],
                              capture_output=True, check=True)
        outs.append((proc.stdout, dest.read_bytes()))
    assert outs[0] == outs[1]
    assert outs[0][0] == outs[0][1]


def test_json_floats_are_rounded():
    text = cli.dumps({"x": 0.1 + 0.2, "y": -0.0, "z": [np.float64(1 / 3)]})
    assert json.loads(text) == {"x": 0.3, "y": 0.0, "z": [0.333333333333]}
