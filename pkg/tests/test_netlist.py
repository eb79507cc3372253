"""BLIF parsing, cut enumeration, and cone function extraction."""

import pytest

from ftl.netlist import (NetlistError, cut_function, enumerate_cuts,
                         parse_blif, write_blif)
from ftl.threshold import f115_table
from ftl.truthtable import parse_truth_table

TWO_GATE = """\
.model two
.inputs a b c
.outputs y
.names a b t
11 1
.names t c y
1- 1
-1 1
.end
"""

LATCHED = """\
.model seq
.inputs a b
.outputs q
.names a b d
11 1
.latch d q re clk 0
.end
"""


def test_parse_two_gate_connectivity():
    nl = parse_blif(TWO_GATE)
    assert nl.inputs == ["a", "b", "c"]
    assert nl.outputs == ["y"]
    assert set(nl.gates) == {"t", "y"}
    assert nl.gates["t"].inputs == ["a", "b"]
    assert nl.gates["y"].inputs == ["t", "c"]
    # t = AND2, y = OR2
    assert nl.gates["t"].table == parse_truth_table("8", 2)
    assert nl.gates["y"].table == parse_truth_table("E", 2)


def test_parse_latch():
    nl = parse_blif(LATCHED)
    assert set(nl.latches) == {"q"}
    assert nl.latches["q"].d == "d"
    assert nl.latches["q"].init == 0


def test_parse_detects_loop():
    cyclic = """\
.model bad
.inputs a
.outputs y
.names a y x
11 1
.names x y
1 1
.end
"""
    with pytest.raises(NetlistError):
        parse_blif(cyclic)


def test_parse_rejects_double_driver():
    bad = """\
.model bad
.inputs a b
.outputs y
.names a y
1 1
.names b y
1 1
.end
"""
    with pytest.raises(NetlistError):
        parse_blif(bad)


def test_parse_rejects_unknown_directive():
    with pytest.raises(NetlistError):
        parse_blif(".model x\n.inputs a\n.outputs a\n.gate nand2\n.end\n")


def test_parse_rejects_undriven_net():
    bad = """\
.model bad
.inputs a
.outputs y
.names a ghost y
11 1
.end
"""
    with pytest.raises(NetlistError):
        parse_blif(bad)


def test_off_set_cover_and_dont_cares():
    nl = parse_blif("""\
.model f
.inputs a b
.outputs y
.names a b y
0- 0
-0 0
.end
""")
    assert nl.gates["y"].table == parse_truth_table("8", 2)


def test_write_parse_round_trip():
    nl = parse_blif(TWO_GATE)
    again = parse_blif(write_blif(nl))
    assert again.inputs == nl.inputs
    assert again.outputs == nl.outputs
    assert {g: (again.gates[g].inputs, again.gates[g].table)
            for g in again.gates} == \
           {g: (nl.gates[g].inputs, nl.gates[g].table) for g in nl.gates}


def test_eval_and_step():
    nl = parse_blif(LATCHED)
    state = {"q": 0}
    nets = nl.eval_comb({"a": 1, "b": 1}, state)
    assert nets["d"] == 1
    _, new_state = nl.step({"a": 1, "b": 1}, state)
    assert new_state["q"] == 1


def test_trivial_cut_only_for_pi_root():
    nl = parse_blif(TWO_GATE)
    cuts = enumerate_cuts(nl, "a")
    assert [c.leaves for c in cuts] == [("a",)]


def test_and2_cuts():
    nl = parse_blif(TWO_GATE)
    cuts = enumerate_cuts(nl, "t")
    assert {c.leaves for c in cuts} == {("t",), ("a", "b")}


def test_and4_tree_cut_found():
    tree = """\
.model and4
.inputs a b c d
.outputs y
.names a b t1
11 1
.names c d t2
11 1
.names t1 t2 y
11 1
.end
"""
    nl = parse_blif(tree)
    cuts = enumerate_cuts(nl, "y", k=4)
    assert ("a", "b", "c", "d") in {c.leaves for c in cuts}


def test_cut_feasibility_and_completeness():
    nl = parse_blif(TWO_GATE)
    for cut in enumerate_cuts(nl, "y", k=3):
        assert len(cut.leaves) <= 3
        # every leaf is outside the cone's gate set; every cone gate input
        # is either a leaf or driven inside the cone
        for g in cut.gates:
            for src in nl.gates[g].inputs:
                assert src in cut.leaves or src in cut.gates


def test_cut_function_and2():
    nl = parse_blif(TWO_GATE)
    cut = next(c for c in enumerate_cuts(nl, "t") if c.leaves == ("a", "b"))
    assert cut_function(nl, cut) == parse_truth_table("8", 2)


def test_cut_function_trivial_identity():
    nl = parse_blif(TWO_GATE)
    cut = enumerate_cuts(nl, "a")[0]
    tt = cut_function(nl, cut)
    assert tt.n == 1 and [tt.value(0), tt.value(1)] == [0, 1]


def test_f115_cone_function():
    text = open("src/ftl/corpus/f115_nandinv.blif").read()
    nl = parse_blif(text)
    root = nl.latches["fq"].d
    cuts = enumerate_cuts(nl, root, k=5)
    tables = {cut_function(nl, c).bits for c in cuts if len(c.leaves) == 5}
    assert f115_table().bits in tables
