"""Netlist IR, text format, evaluation, and equivalence checking."""

from random import Random

import pytest

from lockleak import circuits
from lockleak.netlist import (
    ArityError,
    AssignmentError,
    CycleError,
    DuplicateDriverError,
    Gate,
    InterfaceMismatchError,
    Netlist,
    NetlistError,
    NetlistSyntaxError,
    UndrivenNetError,
    equivalence_check,
    evaluate,
    evaluate_patterns,
    input_patterns,
    parse,
    serialize,
)

MINIMAL = "module t\ninput a\noutput y\ngate BUF y a\nendmodule"


def test_parse_minimal():
    n = parse(MINIMAL)
    assert n.name == "t"
    assert n.primary_inputs == ("a",)
    assert n.key_inputs == ()
    assert n.primary_outputs == ("y",)
    assert n.gates == (Gate("BUF", "y", ("a",)),)


def test_serialize_minimal_is_canonical():
    n = parse(MINIMAL)
    assert serialize(n) == MINIMAL + "\n"


def test_parse_key_section():
    text = (
        "module frag\n"
        "input in1\n"
        "key lolo_key_bit1\n"
        "output w1\n"
        "gate XOR w1 in1 lolo_key_bit1\n"
        "endmodule\n"
    )
    n = parse(text)
    assert n.key_inputs == ("lolo_key_bit1",)
    assert n.gates[0].kind == "XOR"


def test_parse_comments_and_multi_net_lines():
    text = (
        "module m  # a comment\n"
        "input a b   # two inputs\n"
        "input c\n"
        "output y\n\n"
        "gate AND t a b\n"
        "gate OR y t c\n"
        "endmodule\n"
    )
    n = parse(text)
    assert n.primary_inputs == ("a", "b", "c")


def test_duplicate_driver_diagnostic_names_net():
    text = "module m\ninput a\noutput y\ngate BUF y a\ngate NOT y a\nendmodule"
    with pytest.raises(DuplicateDriverError, match="'y'"):
        parse(text)


def test_undriven_net():
    text = "module m\ninput a\noutput y\ngate AND y a ghost\nendmodule"
    with pytest.raises(UndrivenNetError, match="ghost"):
        parse(text)


def test_po_must_be_driven():
    text = "module m\ninput a\noutput a\nendmodule"
    with pytest.raises(UndrivenNetError):
        parse(text)


def test_cycle_detected():
    text = (
        "module m\ninput a\noutput y\n"
        "gate AND u a v\ngate BUF v u\ngate BUF y u\nendmodule"
    )
    with pytest.raises(CycleError):
        parse(text)


def test_bad_arity():
    text = "module m\ninput a b\noutput y\ngate NOT y a b\nendmodule"
    with pytest.raises(ArityError):
        parse(text)


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("input a\n", "module"),
        ("module m\ngarbage x\nendmodule", "garbage"),
        ("module m\ninput a\noutput y\ngate BUF y a\n", "endmodule"),
        ("module m\ninput 5bad\noutput y\nendmodule", "5bad"),
        ("module m\noutput y\ninput a\ngate BUF y a\nendmodule", "out of order"),
    ],
)
def test_syntax_errors(text, fragment):
    with pytest.raises(NetlistSyntaxError, match=fragment):
        parse(text)


def test_syntax_error_carries_line():
    try:
        parse("module m\nblah\nendmodule")
    except NetlistSyntaxError as exc:
        assert exc.line == 2
    else:
        pytest.fail("expected a syntax error")


@pytest.mark.parametrize("name", sorted(circuits.BUNDLED))
def test_round_trip_bundled(name):
    n = circuits.BUNDLED[name]()
    text = serialize(n)
    again = parse(text)
    assert again == n
    assert serialize(again) == text  # fixpoint


@pytest.mark.parametrize("kind,table", [
    ("AND", {(0, 0): 0, (0, 1): 0, (1, 0): 0, (1, 1): 1}),
    ("OR", {(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 1}),
    ("XOR", {(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 0}),
    ("XNOR", {(0, 0): 1, (0, 1): 0, (1, 0): 0, (1, 1): 1}),
    ("NAND", {(0, 0): 1, (0, 1): 1, (1, 0): 1, (1, 1): 0}),
    ("NOR", {(0, 0): 1, (0, 1): 0, (1, 0): 0, (1, 1): 0}),
])
def test_two_input_gate_semantics(kind, table):
    n = Netlist("g", ("a", "b"), (), ("y",), (Gate(kind, "y", ("a", "b")),))
    for (a, b), want in table.items():
        assert evaluate(n, {"a": a, "b": b})["y"] == want


def test_single_input_gate_semantics():
    n = Netlist("g", ("a",), (), ("y", "z"),
                (Gate("NOT", "y", ("a",)), Gate("BUF", "z", ("a",))))
    for a in (0, 1):
        out = evaluate(n, {"a": a})
        assert out["y"] == 1 - a
        assert out["z"] == a


def test_xor_key_gate_buffer_and_invert():
    # key 0 buffers the data input, key 1 inverts it
    n = Netlist("kx", ("a",), ("k",), ("y",), (Gate("XOR", "y", ("a", "k")),))
    assert evaluate(n, {"a": 1}, {"k": 0})["y"] == 1
    assert evaluate(n, {"a": 1}, {"k": 1})["y"] == 0
    # the XNOR key gate preserves its input for key 1
    m = Netlist("kx2", ("a",), ("k",), ("y",), (Gate("XNOR", "y", ("a", "k")),))
    assert evaluate(m, {"a": 1}, {"k": 1})["y"] == 1


def test_evaluate_missing_and_extra_assignments():
    n = parse(MINIMAL)
    with pytest.raises(AssignmentError):
        evaluate(n, {})
    with pytest.raises(AssignmentError):
        evaluate(n, {"a": 1, "b": 0})
    with pytest.raises(AssignmentError):
        evaluate(n, {"a": 2})


def test_evaluate_matches_reference_adder():
    n = circuits.adder4()
    rng = Random(1)
    for _ in range(200):
        a = rng.getrandbits(4)
        b = rng.getrandbits(4)
        cin = rng.getrandbits(1)
        pi = {f"a{i}": (a >> i) & 1 for i in range(4)}
        pi.update({f"b{i}": (b >> i) & 1 for i in range(4)})
        pi["cin"] = cin
        out = evaluate(n, pi)
        total = a + b + cin
        got = sum(out[f"s{i}"] << i for i in range(4)) + (out["c3"] << 4)
        assert got == total


def test_evaluate_is_deterministic():
    n = circuits.mux4()
    pi = {"d0": 1, "d1": 0, "d2": 1, "d3": 0, "s0": 1, "s1": 0}
    assert evaluate(n, pi) == evaluate(n, pi)


def test_input_patterns_enumerate_all_vectors():
    pats = input_patterns(3)
    seen = set()
    for v in range(8):
        seen.add(tuple((pats[i] >> v) & 1 for i in range(3)))
    assert len(seen) == 8


def test_pattern_evaluation_matches_scalar():
    n = circuits.c17()
    pats = dict(zip(n.primary_inputs, input_patterns(5)))
    vec = evaluate_patterns(n, pats, {}, 32)
    for v in range(32):
        pi = {net: (pats[net] >> v) & 1 for net in n.primary_inputs}
        scalar = evaluate(n, pi)
        for po in n.primary_outputs:
            assert (vec[po] >> v) & 1 == scalar[po]


def test_equivalence_reflexive():
    n = circuits.c17()
    assert equivalence_check(n, n) is None


def test_equivalence_finds_counterexample():
    n = circuits.c17()
    # swap one gate kind; some input must expose it
    gates = list(n.gates)
    gates[0] = Gate("NOR", gates[0].output, gates[0].inputs)
    m = Netlist(n.name, n.primary_inputs, (), n.primary_outputs, tuple(gates))
    cex = equivalence_check(n, m)
    assert cex is not None
    assert evaluate(n, cex.inputs) == cex.outputs_a
    assert evaluate(m, cex.inputs) == cex.outputs_b
    assert cex.outputs_a != cex.outputs_b


def test_equivalence_sampled_deterministic():
    n = circuits.parity8()
    gates = list(n.gates)
    gates[-1] = Gate("XNOR", gates[-1].output, gates[-1].inputs)
    m = Netlist(n.name, n.primary_inputs, (), n.primary_outputs, tuple(gates))
    c1 = equivalence_check(n, m, mode="sampled", count=64, seed=9)
    c2 = equivalence_check(n, m, mode="sampled", count=64, seed=9)
    assert c1 == c2
    assert c1 is not None


def test_equivalence_interface_mismatch():
    with pytest.raises(InterfaceMismatchError):
        equivalence_check(circuits.c17(), circuits.mux4())


def test_equivalence_width_cap():
    wide = Netlist(
        "wide",
        tuple(f"i{k}" for k in range(21)),
        (),
        ("y",),
        (Gate("AND", "y", ("i0", "i1")),),
    )
    with pytest.raises(NetlistError, match="at most 20"):
        equivalence_check(wide, wide)


def test_random_netlists_round_trip():
    # random DAGs exercise the parser/serializer pair beyond the bundled set
    for seed in range(25):
        rng = Random(seed)
        n_pi = rng.randint(1, 5)
        nets = [f"i{k}" for k in range(n_pi)]
        gates = []
        for g in range(rng.randint(1, 12)):
            kind = rng.choice(["AND", "OR", "XOR", "XNOR", "NAND", "NOR", "NOT", "BUF"])
            arity = 1 if kind in ("NOT", "BUF") else 2
            ins = tuple(rng.choice(nets) for _ in range(arity))
            out = f"n{g}"
            gates.append(Gate(kind, out, ins))
            nets.append(out)
        n = Netlist("rand", tuple(f"i{k}" for k in range(n_pi)), (),
                    (gates[-1].output,), tuple(gates))
        assert parse(serialize(n)) == n


def test_pi_cannot_be_gate_output():
    with pytest.raises(DuplicateDriverError):
        Netlist("m", ("a",), (), ("a",), (Gate("BUF", "a", ("a",)),))
