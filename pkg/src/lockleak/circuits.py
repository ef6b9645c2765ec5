"""Bundled toy circuits and the reference decoder-locking profile.

The builders return validated netlists; the same circuits are shipped as
text files under ``data/`` for CLI use, and a test pins file and builder
to each other.  ``compressed_decoder_frontend`` is the decoder-scale
benchmark: its first sixteen gates buffer the fetched instruction word
onto the nets ``instr_line0..15`` that the rest of the decode tree (and
the fault model) hang off, padded with a mixing scaffold to exactly 128
lockable sites.
"""

from __future__ import annotations

from importlib import resources

from .locking import insert_key_gates
from .netlist import Gate, Netlist, parse

# Fixed parameters of the bundled decoder profile: lock every one of the
# 128 sites so each instruction line carries exactly one key gate.
PROFILE_SEED = 1
PROFILE_KEY_GATES = 128
INSTR_LINE_PREFIX = "instr_line"


def c17():
    """The classic 6-NAND benchmark circuit."""
    g = [
        Gate("NAND", "n10", ("i1", "i3")),
        Gate("NAND", "n11", ("i3", "i6")),
        Gate("NAND", "n16", ("i2", "n11")),
        Gate("NAND", "n19", ("n11", "i7")),
        Gate("NAND", "n22", ("n10", "n16")),
        Gate("NAND", "n23", ("n16", "n19")),
    ]
    return Netlist("c17", ("i1", "i2", "i3", "i6", "i7"), (), ("n22", "n23"), tuple(g))


def full_adder():
    g = [
        Gate("XOR", "s1", ("a", "b")),
        Gate("XOR", "sum", ("s1", "cin")),
        Gate("AND", "c1", ("a", "b")),
        Gate("AND", "c2", ("s1", "cin")),
        Gate("OR", "cout", ("c1", "c2")),
    ]
    return Netlist("full_adder", ("a", "b", "cin"), (), ("sum", "cout"), tuple(g))


def mux4():
    g = [
        Gate("NOT", "ns0", ("s0",)),
        Gate("NOT", "ns1", ("s1",)),
        Gate("AND", "sel0", ("ns1", "ns0")),
        Gate("AND", "sel1", ("ns1", "s0")),
        Gate("AND", "sel2", ("s1", "ns0")),
        Gate("AND", "sel3", ("s1", "s0")),
        Gate("AND", "m0", ("d0", "sel0")),
        Gate("AND", "m1", ("d1", "sel1")),
        Gate("AND", "m2", ("d2", "sel2")),
        Gate("AND", "m3", ("d3", "sel3")),
        Gate("OR", "or01", ("m0", "m1")),
        Gate("OR", "or23", ("m2", "m3")),
        Gate("OR", "y", ("or01", "or23")),
    ]
    return Netlist("mux4", ("d0", "d1", "d2", "d3", "s0", "s1"), (), ("y",), tuple(g))


def adder4():
    """4-bit ripple-carry adder, 9 inputs, 5 outputs."""
    gates = []
    carry = "cin"
    for i in range(4):
        a, b = f"a{i}", f"b{i}"
        gates.append(Gate("XOR", f"p{i}", (a, b)))
        gates.append(Gate("XOR", f"s{i}", (f"p{i}", carry)))
        gates.append(Gate("AND", f"g{i}", (a, b)))
        gates.append(Gate("AND", f"t{i}", (f"p{i}", carry)))
        gates.append(Gate("OR", f"c{i}", (f"g{i}", f"t{i}")))
        carry = f"c{i}"
    pis = tuple(f"a{i}" for i in range(4)) + tuple(f"b{i}" for i in range(4)) + ("cin",)
    pos = tuple(f"s{i}" for i in range(4)) + ("c3",)
    return Netlist("adder4", pis, (), pos, tuple(gates))


def parity8():
    """XOR reduction tree; every wire sensitizes to the output."""
    gates = [
        Gate("XOR", "x01", ("b0", "b1")),
        Gate("XOR", "x23", ("b2", "b3")),
        Gate("XOR", "x45", ("b4", "b5")),
        Gate("XOR", "x67", ("b6", "b7")),
        Gate("XOR", "x0123", ("x01", "x23")),
        Gate("XOR", "x4567", ("x45", "x67")),
        Gate("XOR", "parity", ("x0123", "x4567")),
    ]
    return Netlist("parity8", tuple(f"b{i}" for i in range(8)), (), ("parity",), tuple(gates))


def parity4(name="parity4"):
    """Small XOR chain used as an interlock module (renameable)."""
    gates = [
        Gate("XOR", "p01", ("a", "b")),
        Gate("XOR", "p012", ("p01", "c")),
        Gate("XOR", "p", ("p012", "d")),
    ]
    return Netlist(name, ("a", "b", "c", "d"), (), ("p",), tuple(gates))


def compressed_decoder_frontend():
    """Decoder-scale benchmark with named instruction-bit lines.

    Sixteen buffers expose the fetched halfword as ``instr_line<k>``; a small
    decode tree recognises the two-register logic/arithmetic group (so the
    funct bits 5 and 6 matter), and a mixing scaffold pads the circuit to
    exactly 128 gate outputs, all lockable.
    """
    gates = []
    line = [f"{INSTR_LINE_PREFIX}{k}" for k in range(16)]
    for k in range(16):
        gates.append(Gate("BUF", line[k], (f"instr{k}",)))

    # quadrant check: bits [1:0] == 01
    gates.append(Gate("NOT", "n_b1", (line[1],)))
    gates.append(Gate("AND", "quad1", (line[0], "n_b1")))
    # funct6 check: bits [15:10] == 100011
    gates.append(Gate("NOT", "n_b14", (line[14],)))
    gates.append(Gate("NOT", "n_b13", (line[13],)))
    gates.append(Gate("NOT", "n_b12", (line[12],)))
    gates.append(Gate("AND", "f6_a", (line[15], "n_b14")))
    gates.append(Gate("AND", "f6_b", ("f6_a", "n_b13")))
    gates.append(Gate("AND", "f6_c", ("f6_b", "n_b12")))
    gates.append(Gate("AND", "f6_d", ("f6_c", line[11])))
    gates.append(Gate("AND", "f6", ("f6_d", line[10])))
    gates.append(Gate("AND", "two_reg", ("f6", "quad1")))
    # funct2 split: bit 6 picks or/and vs sub/xor, bit 5 picks within the pair
    gates.append(Gate("NOT", "n_b5", (line[5],)))
    gates.append(Gate("NOT", "n_b6", (line[6],)))
    gates.append(Gate("AND", "grp_hi", ("two_reg", line[6])))
    gates.append(Gate("AND", "is_or", ("grp_hi", "n_b5")))
    gates.append(Gate("AND", "is_and", ("grp_hi", line[5])))
    gates.append(Gate("AND", "grp_lo", ("two_reg", "n_b6")))
    gates.append(Gate("AND", "is_sub", ("grp_lo", "n_b5")))
    gates.append(Gate("AND", "is_xor", ("grp_lo", line[5])))

    # mixing scaffold: five 16-wide layers plus a parity chain
    for k in range(16):
        gates.append(Gate("XOR", f"mx_a{k}", (line[k], line[(k + 1) % 16])))
    for k in range(16):
        gates.append(Gate("XOR", f"mx_b{k}", (f"mx_a{k}", f"mx_a{(k + 3) % 16}")))
    for k in range(16):
        gates.append(Gate("AND", f"mx_c{k}", (f"mx_b{k}", f"mx_a{(k + 5) % 16}")))
    for k in range(16):
        gates.append(Gate("OR", f"mx_d{k}", (f"mx_c{k}", f"mx_b{(k + 7) % 16}")))
    for k in range(16):
        gates.append(Gate("XOR", f"mx_e{k}", (f"mx_d{k}", f"mx_c{(k + 11) % 16}")))
    prev = "mx_e0"
    for k in range(1, 14):
        gates.append(Gate("XOR", f"chain{k}", (prev, f"mx_e{k}")))
        prev = f"chain{k}"

    assert len(gates) == 128, len(gates)
    return Netlist(
        "cdec",
        tuple(f"instr{k}" for k in range(16)),
        (),
        ("is_or", "is_and", "is_sub", "is_xor", "chain13", "mx_e15"),
        tuple(gates),
    )


BUNDLED = {
    "c17": c17,
    "full_adder": full_adder,
    "mux4": mux4,
    "adder4": adder4,
    "parity8": parity8,
    "cdec": compressed_decoder_frontend,
}


def bundled_path(name):
    """Filesystem path of a bundled circuit's text file."""
    return resources.files("lockleak.data") / f"{name}.nl"


def load_bundled(name):
    if name not in BUNDLED:
        raise KeyError(f"no bundled circuit {name!r}, have {sorted(BUNDLED)}")
    return parse(bundled_path(name).read_text())


def decoder_profile():
    """The reference profile: the decoder frontend locked on every site.

    Deterministic (fixed seed), so the key-index that lands on each
    instruction line is stable.  Returns ``(locked, key, plan)``.
    """
    return insert_key_gates(compressed_decoder_frontend(), PROFILE_KEY_GATES, PROFILE_SEED)
