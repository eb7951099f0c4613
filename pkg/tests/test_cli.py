import io
import json
import subprocess
import sys

import pytest

from jankov.cli import run
from jankov.heyting import z3


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def z3_file(tmp_path):
    p = tmp_path / "z3.json"
    d = z3().to_dict()
    d["label"] = "Z3"
    p.write_text(json.dumps(d))
    return str(p)


def test_alg_jankov(z3_file):
    code, out, _ = call("alg", "jankov", z3_file)
    assert code == 0
    assert "-> p_w" in out


def test_alg_leq_false_exit_code():
    code, out, _ = call("alg", "leq", "c4", "c3")
    assert code == 1 and "false" in out
    assert call("alg", "leq", "c3", "c4")[0] == 0


def test_ident_decide_refuted(z3_file):
    code, out, _ = call("ident", "decide", "--variety", f"gen:{z3_file}", "x|~x = 1")
    assert code == 1
    assert "refuted; witness Z3: x->w" in out
    assert "certificate: characteristic identity of" in out


def test_ident_decide_valid():
    code, out, _ = call("ident", "decide", "--variety", "gen:c2", "x | ~x")
    assert code == 0 and out.startswith("valid")


def test_alg_info():
    code, out, _ = call("alg", "info", "d5")
    assert code == 0
    assert "subdirectly irreducible: yes" in out and "opremum: c" in out


def test_alg_chi_with_relations():
    code, out, _ = call("alg", "chi", "z3", "--relations", "~~x = 1", "--json")
    assert code == 0
    d = json.loads(out)
    assert d["variables"] == 1 and d["simplified"] == "~~x -> x = 1"


def test_alg_antichain_and_pretrue():
    assert call("alg", "antichain", "antichain:0", "antichain:1", "antichain:2")[0] == 0
    assert call("alg", "antichain", "c3", "c4")[0] == 1
    assert call("alg", "pretrue", "z3", "~~x -> x")[0] == 0
    assert call("alg", "pretrue", "c4", "x | ~x")[0] == 1


def test_ident_decompose_and_prime():
    code, out, _ = call("ident", "decompose", "--variety", "gen:z3", "~~x -> x")
    assert code == 0 and out.startswith("1 locally characteristic identity")
    code, out, _ = call("ident", "prime", "--ambient", "heyting", "--bound", "6", "~~x -> x")
    assert code == 0 and out.startswith("prime")


def test_variety_verbs(tmp_path):
    code, out, _ = call("variety", "free", "--spec", "gen:c2", "-n", "2")
    assert code == 0 and "16 elements" in out
    code, out, _ = call("variety", "axiomatize", "--sub", "gen:c2", "--ambient", "gen:z3", "--bound", "4")
    assert code == 0 and out.startswith("1 axiom(s), complete")
    ids = tmp_path / "set.txt"
    ids.write_text("~~x -> x\n")
    code, out, _ = call("variety", "rcomplete", "--spec", "gen:z3", "--set", str(ids), "--bound", "5")
    assert code == 0 and out.startswith("r-complete")
    code, out, _ = call("variety", "split", "--algebra", "z3", "--ambient", "slice:3", "--bound", "6")
    assert code == 0 and "splits" in out


def test_rcomplete_empty_set_is_false(tmp_path):
    ids = tmp_path / "empty.json"
    ids.write_text("[]")
    assert call("variety", "rcomplete", "--spec", "gen:z3", "--set", str(ids), "--bound", "5")[0] == 1


@pytest.mark.parametrize("argv", [
    ["alg", "info", "no-such-file.json"],
    ["ident", "decide", "--variety", "gen:z3", "x &"],
    ["alg", "leq", "b4", "c3"],
    ["bogus"],
    ["variety", "split", "--algebra", "b4", "--ambient", "heyting", "--bound", "4"],
])
def test_input_errors_exit_2(argv):
    code, _, err = call(*argv)
    assert code == 2


def test_bound_errors_exit_3():
    code, _, err = call("ident", "decide", "--variety", "slice:3", "x | ~x")
    assert code == 3 and "bound" in err
    code, _, _ = call("variety", "free", "--spec", "gen:z3", "-n", "2", "--cap", "20")
    assert code == 3


@pytest.mark.parametrize("argv", [
    ["alg", "info", "z3"],
    ["alg", "leq", "c3", "c4"],
    ["ident", "decide", "--variety", "gen:z3", "x | ~x"],
    ["ident", "decompose", "--variety", "gen:c4", "x | ~x", "--pool", "5"],
    ["variety", "axiomatize", "--sub", "gen:c3", "--ambient", "slice:3", "--bound", "6"],
    ["variety", "free", "--spec", "gen:z3", "-n", "1"],
])
def test_json_reports_parse_and_are_deterministic(argv):
    code1, out1, _ = call(*argv, "--json")
    code2, out2, _ = call(*argv, "--json")
    assert out1 == out2 and code1 == code2
    d = json.loads(out1)
    assert d["command"] == " ".join(argv[:2])
    assert d["exit"] == code1
    assert json.loads(json.dumps(d)) == d


def test_text_output_is_deterministic():
    argv = ["variety", "axiomatize", "--sub", "gen:c3", "--ambient", "slice:3", "--bound", "6"]
    assert call(*argv) == call(*argv)


def test_td_flag():
    code, out, _ = call("alg", "chi", "z3", "--td", "td_meet", "--json")
    assert code == 0 and json.loads(out)["td"] == "td_meet"
    assert call("alg", "chi", "z3", "--td", "nope")[0] == 2


def test_self_check():
    code, out, _ = call("--check")
    assert code == 0
    assert out.count("PASS") == 4


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "jankov.cli", "alg", "leq", "c4", "c3"],
                       capture_output=True, text=True)
    assert r.returncode == 1 and "false" in r.stdout
