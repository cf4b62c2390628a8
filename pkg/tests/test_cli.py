import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from seqalloc.cli import run
from seqalloc.numerics import parse_exact


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), stdout=out)
    return code, out.getvalue()


def call_json(*argv):
    code, text = call(*argv)
    return code, json.loads(text) if text else None


def test_expect_alternating_six():
    code, doc = call_json("expect", "--policy", "121212", "--scoring", "borda")
    assert code == 0
    assert [a["exact"] for a in doc["agents"]] == ["14/1", "595/48"]
    assert doc["sw"] == {"exact": "1267/48", "decimal": 26.395833}
    assert doc["config"]["policy"] == "121212"


def test_expect_engines_agree():
    _, a = call_json("expect", "--policy", "1122121", "--engine", "borda")
    _, b = call_json("expect", "--policy", "1122121", "--engine", "general")
    assert a["agents"] == b["agents"]


def test_exact_strings_reparse():
    _, doc = call_json("expect", "--policy", "12312", "--places", "9")
    total = sum(parse_exact(a["exact"]) for a in doc["agents"])
    assert total == parse_exact(doc["sw"]["exact"])
    assert abs(float(total) - doc["sw"]["decimal"]) < 1e-9


@pytest.mark.parametrize("argv", [
    ["expect", "--policy", ""],
    ["expect", "--policy", "12x"],
    ["expect"],
    ["nonsense"],
    ["expect", "--policy", "12", "--scoring", "linear", "--alpha", "2"],
    ["strategic", "--check-theorem3"],
    ["sample", "--gap-event"],
])
def test_usage_errors_exit_2(argv, capsys):
    code, _ = call(*argv)
    assert code == 2


def test_size_guard_exits_2():
    code, _ = call("oracle", "--policy", "12121212")
    assert code == 2


def test_compare_two_agents_six_items():
    code, doc = call_json("compare", "--agents", "2", "--items", "6")
    assert code == 0
    values = {m["mechanism"]: parse_exact(m["exact"]) for m in doc["mechanisms"]}
    assert values == {"AltPolicy": Fraction(1267, 48), "BestPref": Fraction(161, 6), "Random": 21}
    assert values["Random"] < values["AltPolicy"] < values["BestPref"]
    assert doc["title"] == "Expected utilitarian social welfare for different mechanisms"


def test_compare_csv():
    code, text = call("compare", "--agents", "2", "--items", "6", "--format", "csv")
    assert code == 0
    lines = text.strip().splitlines()
    assert any(line.startswith("AltPolicy,1267/48") for line in lines)


def test_expect_csv():
    code, text = call("expect", "--policy", "12", "--format", "csv")
    assert code == 0
    assert text.splitlines() == ["policy,row,exact,decimal", "12,agent1,2/1,2.0",
                                 "12,agent2,3/2,1.5", "12,sw,7/2,3.5"]


def test_probabilities():
    _, doc = call_json("probabilities", "--policy", "12")
    assert doc["rows"][1]["a"] == ["1/2", "1/2"]


def test_optimize():
    code, doc = call_json("optimize", "--agents", "2", "--items", "5")
    assert code == 0 and doc["argmax"] == ["12121"] and doc["alternating_in_argmax"]
    _, doc = call_json("optimize", "--items", "3", "--scoring", "approval", "--k", "2")
    assert doc["argmax"] == ["112"] and not doc["alternating_in_argmax"]


def test_tree_shape():
    _, doc = call_json("tree", "--depth", "3")
    node = doc["tree"]
    assert set(node) == {"policy", "sw_exact", "sw_decimal", "left", "right"}
    assert node["left"]["right"]["policy"] == "112"
    assert node["left"]["left"]["policy"] == "121"
    assert node["left"]["left"]["left"] is None


def test_aksets():
    code, doc = call_json("aksets", "--k", "3", "--provenance")
    assert code == 0 and doc["size"] == 4
    assert {(p["a"], p["b"]) for p in doc["points"]} == {
        ("0/1", "0/1"), ("1/2", "-2/3"), ("-3/2", "4/3"), ("3/2", "-8/3")}
    code, doc = call_json("aksets", "--k", "8", "--verify", "--summary")
    assert code == 0
    assert doc.get("points") is None


def test_lemmas_small():
    code, doc = call_json("lemmas", "--k-max", "20", "--m-max", "20", "--ops-k", "5", "--ops-m", "5",
                          "--sums-k", "6", "--sums-m", "8")
    assert code == 0 and doc["ok"]
    assert all(r["violations"] == [] for r in doc["reports"])


def test_oracle_matches_expect():
    _, a = call_json("oracle", "--policy", "1212")
    _, b = call_json("expect", "--policy", "1212")
    assert a["agents"] == b["agents"] and a["profiles"] == 576
    _, s = call_json("oracle", "--policy", "121", "--strategy", "spne")
    assert [x["exact"] for x in s["agents"]] == ["14/3", "5/2"]


def test_strategic_single_profile():
    code, doc = call_json("strategic", "--policy", "121", "--profile", "[[1,2,3],[2,3,1]]")
    assert code == 0 and doc["manipulated"]
    assert doc["strategic"]["bundles"] == {"1": [2, 1], "2": [3]}
    assert [u["exact"] for u in doc["strategic"]["utilities"]] == ["5/1", "2/1"]
    assert [u["exact"] for u in doc["truthful"]["utilities"]] == ["4/1", "3/1"]


def test_strategic_modes():
    _, doc = call_json("strategic", "--policy", "121", "--exact")
    assert doc["sw"]["exact"] == "43/6"
    _, a = call_json("strategic", "--policy", "1212", "--trials", "200", "--seed", "3")
    _, b = call_json("strategic", "--policy", "1212", "--trials", "200", "--seed", "3")
    assert a == b and a["mode"] == "sampled"


def test_strategic_optimality_check():
    code, doc = call_json("strategic", "--items", "4", "--check-theorem3")
    assert code == 0 and doc["alternating_optimal"] and doc["argmax"] == ["1212"]
    for row in doc["reversal_symmetric"]:
        assert row["truthful_sw"] == row["strategic_sw"]


def test_sample_is_byte_identical_for_a_seed():
    a = call("sample", "--policy", "1212", "--trials", "5000", "--seed", "9")
    b = call("sample", "--policy", "1212", "--trials", "5000", "--seed", "9")
    assert a == b
    doc = json.loads(a[1])
    assert doc["generator"] == "numpy.random.PCG64"
    assert abs(doc["sw"]["mean"] - (20 / 3 + 45 / 8)) < 5 * doc["sw"]["stderr"]


def test_sample_gap_event():
    code, doc = call_json("sample", "--gap-event", "--items", "30", "--epsilon", "0.2",
                          "--trials", "500", "--seed", "1")
    assert code == 0 and doc["holds"]
    assert doc["threshold"] == 25.0


def test_explore_convex():
    code, doc = call_json("explore-convex", "--items", "4")
    assert code == 0 and doc["scoring"] == "lex"
    assert [r["items"] for r in doc["results"]] == [2, 3, 4]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "seqalloc", "expect", "--policy", "12"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["sw"]["exact"] == "7/2"
