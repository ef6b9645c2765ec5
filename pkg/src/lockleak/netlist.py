"""Combinational gate-level netlist: IR, text format, evaluation, equivalence.

The netlist is a named DAG of one- and two-input Boolean gates with three
kinds of external nets: primary inputs, key inputs (the locking key lines)
and primary outputs.  Everything here is immutable after construction and
all operations are pure, so netlists can be shared freely across threads.

Text format (one token stream, ``#`` starts a comment):

    module <name>
    input <net> [<net> ...]     (one or more lines)
    key <net> [<net> ...]       (zero or more lines)
    output <net> [<net> ...]    (one or more lines)
    gate <KIND> <out> <in1> [<in2>]
    endmodule
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from random import Random

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.\[\]]*\Z")

# kind -> number of inputs
GATE_ARITY = {
    "AND": 2,
    "OR": 2,
    "XOR": 2,
    "XNOR": 2,
    "NAND": 2,
    "NOR": 2,
    "NOT": 1,
    "BUF": 1,
}

# Evaluation works on machine words holding one vector per bit position, so
# the same table serves the scalar and the bit-parallel paths.  ``m`` is the
# all-ones mask for the vector width (1 for scalar evaluation).
_GATE_FN = {
    "AND": lambda ins, m: ins[0] & ins[1],
    "OR": lambda ins, m: ins[0] | ins[1],
    "XOR": lambda ins, m: ins[0] ^ ins[1],
    "XNOR": lambda ins, m: (ins[0] ^ ins[1]) ^ m,
    "NAND": lambda ins, m: (ins[0] & ins[1]) ^ m,
    "NOR": lambda ins, m: (ins[0] | ins[1]) ^ m,
    "NOT": lambda ins, m: ins[0] ^ m,
    "BUF": lambda ins, m: ins[0],
}

EXHAUSTIVE_INPUT_LIMIT = 20


class NetlistError(ValueError):
    """Base class for netlist construction and usage errors."""


class NetlistSyntaxError(NetlistError):
    def __init__(self, message, line, column=None):
        loc = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{loc}: {message}")
        self.line = line
        self.column = column


class DuplicateDriverError(NetlistError):
    pass


class UndrivenNetError(NetlistError):
    pass


class CycleError(NetlistError):
    pass


class ArityError(NetlistError):
    pass


class InterfaceMismatchError(NetlistError):
    pass


class AssignmentError(NetlistError):
    pass


def _check_name(name):
    if not NAME_RE.match(name or ""):
        raise NetlistError(f"invalid net name {name!r}")
    return name


@dataclass(frozen=True)
class Gate:
    """A single gate: ``output = kind(inputs...)``."""

    kind: str
    output: str
    inputs: tuple[str, ...]

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise NetlistError(f"unknown gate kind {self.kind!r}")
        if len(self.inputs) != GATE_ARITY[self.kind]:
            raise ArityError(
                f"gate {self.kind} driving {self.output!r} takes "
                f"{GATE_ARITY[self.kind]} inputs, got {len(self.inputs)}"
            )
        _check_name(self.output)
        for net in self.inputs:
            _check_name(net)


@dataclass(frozen=True)
class Netlist:
    """A validated combinational netlist.

    Construction checks all structural invariants: unique names, a single
    driver per net, no undriven nets or outputs, and acyclicity.  The
    topological order computed during validation is kept for evaluation.
    """

    name: str
    primary_inputs: tuple[str, ...]
    key_inputs: tuple[str, ...]
    primary_outputs: tuple[str, ...]
    gates: tuple[Gate, ...]

    def __post_init__(self):
        _check_name(self.name)
        if not self.primary_inputs:
            raise NetlistError(f"netlist {self.name!r} has no primary inputs")
        if not self.primary_outputs:
            raise NetlistError(f"netlist {self.name!r} has no primary outputs")

        driver = {}
        sources = set()
        for net in (*self.primary_inputs, *self.key_inputs):
            _check_name(net)
            if net in sources:
                raise DuplicateDriverError(f"net {net!r} declared twice as input")
            sources.add(net)
        for gate in self.gates:
            if gate.output in driver:
                raise DuplicateDriverError(f"two gates drive net {gate.output!r}")
            if gate.output in sources:
                raise DuplicateDriverError(
                    f"net {gate.output!r} is both an input and a gate output"
                )
            driver[gate.output] = gate
        known = sources | driver.keys()
        for gate in self.gates:
            for net in gate.inputs:
                if net not in known:
                    raise UndrivenNetError(
                        f"gate driving {gate.output!r} reads undriven net {net!r}"
                    )
        for net in self.primary_outputs:
            _check_name(net)
            if net not in driver:
                raise UndrivenNetError(f"primary output {net!r} is not driven by a gate")

        object.__setattr__(self, "_driver", driver)
        object.__setattr__(self, "_topo", self._topo_sort(driver))

    def _topo_sort(self, driver):
        # Kahn's algorithm over gate-to-gate dependencies.
        indeg = {}
        consumers = {}
        for gate in self.gates:
            indeg[gate.output] = sum(1 for net in gate.inputs if net in driver)
            for net in gate.inputs:
                if net in driver:
                    consumers.setdefault(net, []).append(gate)
        ready = [g for g in self.gates if indeg[g.output] == 0]
        order = []
        while ready:
            gate = ready.pop()
            order.append(gate)
            for consumer in consumers.get(gate.output, ()):
                indeg[consumer.output] -= 1
                if indeg[consumer.output] == 0:
                    ready.append(consumer)
        if len(order) != len(self.gates):
            stuck = sorted(out for out, d in indeg.items() if d > 0)
            raise CycleError(f"combinational cycle through nets {stuck[:8]}")
        return tuple(order)

    @property
    def topo_order(self):
        return self._topo

    @property
    def driver_of(self):
        return self._driver

    def internal_nets(self):
        """Gate-output net names, in gate declaration order."""
        return tuple(g.output for g in self.gates)


def parse(text):
    """Parse netlist-format text into a :class:`Netlist`.

    Diagnostics carry line (and, for token-level problems, column)
    information.  Structural violations raise the matching dedicated
    error class.
    """
    name = None
    sections = {"input": [], "key": [], "output": []}
    gates = []
    gate_lines = {}
    seen_end = False
    section_order = ["module", "input", "key", "output", "gate", "endmodule"]
    progress = 0

    def tok_col(raw, token):
        idx = raw.find(token)
        return idx + 1 if idx >= 0 else 1

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if seen_end:
            raise NetlistSyntaxError("text after endmodule", lineno)
        tokens = line.split()
        head, rest = tokens[0], tokens[1:]
        if head == "module":
            if name is not None:
                raise NetlistSyntaxError("duplicate module line", lineno)
            if len(rest) != 1:
                raise NetlistSyntaxError("module takes exactly one name", lineno)
            name = rest[0]
            progress = 1
            continue
        if name is None:
            raise NetlistSyntaxError("expected module <name> first", lineno)
        if head in ("input", "key", "output"):
            wanted = section_order.index(head)
            if wanted < progress:
                raise NetlistSyntaxError(f"{head} section out of order", lineno)
            progress = wanted
            if not rest:
                raise NetlistSyntaxError(f"{head} line lists no nets", lineno)
            for net in rest:
                if not NAME_RE.match(net):
                    raise NetlistSyntaxError(
                        f"invalid net name {net!r}", lineno, tok_col(raw, net)
                    )
                sections[head].append(net)
            continue
        if head == "gate":
            progress = section_order.index("gate")
            if len(rest) < 3:
                raise NetlistSyntaxError("gate needs KIND, output and inputs", lineno)
            kind, out, ins = rest[0], rest[1], tuple(rest[2:])
            if kind not in GATE_ARITY:
                raise NetlistSyntaxError(
                    f"unknown gate kind {kind!r}", lineno, tok_col(raw, kind)
                )
            if len(ins) != GATE_ARITY[kind]:
                raise ArityError(
                    f"line {lineno}: gate {kind} driving {out!r} takes "
                    f"{GATE_ARITY[kind]} inputs, got {len(ins)}"
                )
            if out in gate_lines:
                raise DuplicateDriverError(
                    f"line {lineno}: two gates drive net {out!r} "
                    f"(first at line {gate_lines[out]})"
                )
            gate_lines[out] = lineno
            gates.append(Gate(kind, out, ins))
            continue
        if head == "endmodule":
            if rest:
                raise NetlistSyntaxError("endmodule takes no arguments", lineno)
            seen_end = True
            continue
        raise NetlistSyntaxError(f"unknown keyword {head!r}", lineno, tok_col(raw, head))

    if name is None:
        raise NetlistSyntaxError("empty input, expected module <name>", 1)
    if not seen_end:
        raise NetlistSyntaxError("missing endmodule", max(1, text.count("\n") + 1))
    return Netlist(
        name=name,
        primary_inputs=tuple(sections["input"]),
        key_inputs=tuple(sections["key"]),
        primary_outputs=tuple(sections["output"]),
        gates=tuple(gates),
    )


def serialize(n):
    """Render a netlist in canonical text form.

    Declaration order is preserved, each section is a single line, and the
    result ends with a newline; ``parse(serialize(n))`` equals ``n``.
    """
    lines = [f"module {n.name}", "input " + " ".join(n.primary_inputs)]
    if n.key_inputs:
        lines.append("key " + " ".join(n.key_inputs))
    lines.append("output " + " ".join(n.primary_outputs))
    for g in n.gates:
        lines.append(f"gate {g.kind} {g.output} " + " ".join(g.inputs))
    lines.append("endmodule")
    return "\n".join(lines) + "\n"


def _check_assignment(values, expected, role):
    got = set(values)
    want = set(expected)
    if got != want:
        missing = sorted(want - got)
        extra = sorted(got - want)
        raise AssignmentError(
            f"{role} assignment mismatch: missing {missing[:5]}, extra {extra[:5]}"
        )
    for net, bit in values.items():
        if bit not in (0, 1):
            raise AssignmentError(f"{role} value for {net!r} is {bit!r}, not a bit")


def evaluate(n, pi, key=None):
    """Evaluate primary outputs for one input/key assignment.

    ``pi`` must cover exactly the primary inputs and ``key`` exactly the key
    inputs.  Returns a dict over the primary outputs.
    """
    key = {} if key is None else key
    _check_assignment(pi, n.primary_inputs, "primary input")
    _check_assignment(key, n.key_inputs, "key input")
    values = dict(pi)
    values.update(key)
    return _propagate(n, values, 1)


def _propagate(n, values, mask):
    for gate in n.topo_order:
        ins = tuple(values[net] for net in gate.inputs)
        values[gate.output] = _GATE_FN[gate.kind](ins, mask)
    return {po: values[po] for po in n.primary_outputs}


def evaluate_patterns(n, pi_patterns, key_bits, width):
    """Bit-parallel evaluation: every value is an int carrying ``width`` vectors.

    ``pi_patterns`` maps each primary input to its vector word, ``key_bits``
    maps each key input to a scalar bit broadcast across all vectors.
    """
    mask = (1 << width) - 1
    values = dict(pi_patterns)
    for net, bit in key_bits.items():
        values[net] = mask if bit else 0
    return _propagate(n, values, mask)


@lru_cache(maxsize=32)
def input_patterns(n_inputs):
    """Exhaustive stimulus: pattern ``i`` has bit ``v`` set iff vector ``v``
    sets input ``i``, for all ``2**n_inputs`` vectors."""
    total = 1 << n_inputs
    patterns = []
    for i in range(n_inputs):
        block = 1 << i
        pat = ((1 << block) - 1) << block
        span = block * 2
        while span < total:
            pat |= pat << span
            span *= 2
        patterns.append(pat)
    return tuple(patterns)


@dataclass(frozen=True)
class Counterexample:
    """A primary-input vector on which two netlists disagree."""

    inputs: dict
    outputs_a: dict
    outputs_b: dict

    def __str__(self):
        pi = " ".join(f"{k}={v}" for k, v in sorted(self.inputs.items()))
        oa = " ".join(f"{k}={v}" for k, v in sorted(self.outputs_a.items()))
        ob = " ".join(f"{k}={v}" for k, v in sorted(self.outputs_b.items()))
        return f"inputs: {pi}\n  a: {oa}\n  b: {ob}"


def equivalence_check(a, b, key_a=None, key_b=None, mode="exhaustive",
                      count=10_000, seed=0):
    """Compare two netlists under fixed keys.

    Returns ``None`` when no differing input vector was found, otherwise a
    :class:`Counterexample`.  ``mode`` is ``"exhaustive"`` (all ``2**|PI|``
    vectors, capped at 20 inputs) or ``"sampled"`` (``count`` vectors drawn
    from a Mersenne Twister seeded with ``seed``).
    """
    key_a = {} if key_a is None else key_a
    key_b = {} if key_b is None else key_b
    if set(a.primary_inputs) != set(b.primary_inputs):
        raise InterfaceMismatchError(
            f"primary input sets differ: {sorted(a.primary_inputs)} vs "
            f"{sorted(b.primary_inputs)}"
        )
    if set(a.primary_outputs) != set(b.primary_outputs):
        raise InterfaceMismatchError(
            f"primary output sets differ: {sorted(a.primary_outputs)} vs "
            f"{sorted(b.primary_outputs)}"
        )
    _check_assignment(key_a, a.key_inputs, "key input (a)")
    _check_assignment(key_b, b.key_inputs, "key input (b)")

    order = a.primary_inputs
    if mode == "exhaustive":
        n_pi = len(order)
        if n_pi > EXHAUSTIVE_INPUT_LIMIT:
            raise NetlistError(
                f"exhaustive mode supports at most {EXHAUSTIVE_INPUT_LIMIT} "
                f"primary inputs, netlist has {n_pi}"
            )
        width = 1 << n_pi
        patterns = dict(zip(order, input_patterns(n_pi)))
    elif mode == "sampled":
        if count < 1:
            raise NetlistError("sampled mode needs count >= 1")
        width = count
        rng = Random(seed)
        patterns = {net: rng.getrandbits(count) for net in order}
    else:
        raise NetlistError(f"unknown equivalence mode {mode!r}")

    out_a = evaluate_patterns(a, patterns, key_a, width)
    out_b = evaluate_patterns(b, patterns, key_b, width)
    diff = 0
    for po in a.primary_outputs:
        diff |= out_a[po] ^ out_b[po]
    if diff == 0:
        return None
    v = (diff & -diff).bit_length() - 1  # first differing vector
    vector = {net: (patterns[net] >> v) & 1 for net in order}
    return Counterexample(
        inputs=vector,
        outputs_a=evaluate(a, vector, key_a),
        outputs_b=evaluate(b, vector, key_b),
    )
