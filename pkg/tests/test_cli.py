from __future__ import annotations

import io
import json
import subprocess
import sys

import pytest

from affrank import classify, cli
from affrank.field import GF
from affrank.spaces import AffineSubspace, CanonicalFamilySpec, construct_canonical, embed_inp


def run(*args, stdin=None):
    proc = subprocess.run([sys.executable, "-m", "affrank", *args], input=stdin, capture_output=True, text=True)
    return proc.returncode, proc.stdout, proc.stderr


def space_json(S):
    return json.dumps(S.to_json())


def test_construct_canonical():
    code, out, _ = run("construct", "canonical", "--field", "3", "--parts", "1,1")
    assert code == 0
    S = AffineSubspace.from_json(json.loads(out))
    assert S.dim == 1 and S.offset.row_list() == [[1, 0], [0, 1]]
    assert [b.row_list() for b in S.basis] == [[[0, 1], [0, 0]]]


def test_construct_alternate():
    code, out, _ = run("construct", "alternate", "--field", "3", "--n", "2")
    assert code == 0
    assert json.loads(out)["basis"] == [[[0, 1], [2, 0]]]


def test_construct_embed_from_stdin():
    W = construct_canonical(CanonicalFamilySpec.from_parts([1, 1], GF(3)))
    code, out, _ = run("construct", "embed", "--n", "3", "--p", "2", stdin=space_json(W))
    assert code == 0
    assert AffineSubspace.from_json(json.loads(out)).dim == 3


def test_construct_vee():
    one = construct_canonical(CanonicalFamilySpec.from_parts([1], GF(3)))
    payload = json.dumps({"A": one.to_json(), "B": one.to_json()})
    code, out, _ = run("construct", "vee", stdin=payload)
    assert code == 0 and AffineSubspace.from_json(json.loads(out)).dim == 1


def test_invalid_spec_is_reported_as_json():
    code, out, err = run("construct", "canonical", "--field", "3", "--parts", "3")
    assert code == 2 and out == ""
    assert json.loads(err.strip().splitlines()[-1])["error"] == "precondition"


def test_analyze_intro_example():
    code, out, _ = run("construct", "intro", "--n", "3", "--p", "2", "--r", "2")
    code, out, _ = run("analyze", stdin=out)
    rep = json.loads(out)
    assert code == 0 and rep["lrk"] == 2 and rep["codim"] == 3 and rep["extremal"]
    assert rep["core"] == {"r": 2, "dim_core": 1, "dim_H": 2}


def test_analyze_trivial_inputs():
    eye = json.dumps({"field": 3, "rows": 2, "cols": 2, "offset": [[1, 0], [0, 1]], "basis": []})
    rep = json.loads(run("analyze", stdin=eye)[1])
    assert rep["lrk"] == 2 and rep["dim"] == 0
    full = json.dumps({"field": 3, "rows": 2, "cols": 2, "offset": [[0, 0], [0, 0]],
                       "basis": [[[1, 0], [0, 0]], [[0, 1], [0, 0]], [[0, 0], [1, 0]], [[0, 0], [0, 1]]]})
    assert json.loads(run("analyze", stdin=full)[1])["lrk"] == 0


def test_analyze_over_budget_is_inconclusive():
    code, out, _ = run("construct", "intro", "--n", "3", "--p", "3", "--r", "2")
    code, out, _ = run("analyze", "--budget", "50", stdin=out)
    assert code == 3 and json.loads(out)["inconclusive"]


@pytest.mark.parametrize("parts,expect", [("1,1", [1, 1]), ("2", [2])])
def test_classify_shuffled_embeddings(parts, expect):
    _, W, _ = run("construct", "canonical", "--parts", parts)
    _, V, _ = run("construct", "embed", "--n", "3", "--p", "2", stdin=W)
    _, V, _ = run("shuffle", "--seed", "11", stdin=V)
    code, out, _ = run("classify", "--r", "2", stdin=V)
    assert code == 0
    wit = json.loads(out)
    assert wit["signature"]["parts"] == expect
    assert set(wit) == {"P", "Q", "W", "signature"}


def test_classify_non_extremal_exit_2():
    _, alt, _ = run("construct", "alternate", "--n", "2")
    code, out, err = run("classify", "--r", "2", stdin=alt)
    assert code == 2 and out == "" and json.loads(err)["error"] == "precondition"


def test_usage_errors_exit_1():
    assert run("verify")[0] == 1
    assert run("frobnicate")[0] == 1
    code, _, err = run("analyze", stdin="{not json")
    assert code == 1 and json.loads(err)["error"] == "usage"
    assert run("construct", "canonical", "--parts", "a,b")[0] == 1
    assert run("construct", "intro", "--n", "3")[0] == 1


def test_verify_targets():
    code, out, _ = run("verify", "classification", "--n", "2", "--p", "2", "--r", "2")
    assert code == 0 and json.loads(out)["orbit_count"] == 2
    code, out, _ = run("verify", "facts", "--n", "3", "--field", "3")
    rep = json.loads(out)
    assert code == 0 and rep["ok"]
    code, out, _ = run("verify", "bound", "--n", "2", "--p", "2", "--r", "2")
    assert code == 0 and json.loads(out)["checks"]["codim_below_bound"]["2"]["max_lrk"] < 2


def test_verify_over_budget_exit_3():
    code, _, err = run("verify", "classification", "--n", "3", "--p", "2", "--r", "2", "--budget", "1000")
    assert code == 3 and json.loads(err)["error"] == "inconclusive"


def test_table_output():
    code, out, _ = run("construct", "canonical", "--parts", "2", "--table")
    assert code == 0 and "dim" not in out and out.startswith("basis: ")


def test_shuffle_is_seeded():
    _, W, _ = run("construct", "intro", "--n", "3", "--p", "2", "--r", "2")
    a = run("shuffle", "--seed", "5", stdin=W)[1]
    b = run("shuffle", "--seed", "5", stdin=W)[1]
    c = run("shuffle", "--seed", "6", stdin=W)[1]
    assert a == b and a != c


def test_falsifier_exit_4(monkeypatch, capsys):
    monkeypatch.setattr(classify, "_corrections", lambda V, r: None)
    W = construct_canonical(CanonicalFamilySpec.from_parts([1, 1], GF(3)))
    monkeypatch.setattr(sys, "stdin", io.StringIO(space_json(embed_inp(W, 3, 2))))
    assert cli.main(["classify", "--r", "2"]) == 4
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "theorem-falsified" and "dump" in err
