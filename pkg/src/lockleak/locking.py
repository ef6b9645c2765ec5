"""Random XOR/XNOR key-gate locking with inverter camouflage.

``insert_key_gates`` cuts randomly chosen internal wires and reroutes each
through a fresh XOR or XNOR gate controlled by a new key input, optionally
followed by an inverter so the gate kind alone does not reveal the correct
key bit.  ``interlock`` locks several modules and chains them so that a
wrong key segment in one module disturbs the effective key of the next.
``TrojanKeyMux`` models a ROM of adversarial keys selectable at runtime.

Key file format::

    width:<n>
    <lowercase hex, most-significant digit first>

Plan file format (one record per inserted key gate)::

    keygate <index> <XOR|XNOR> <net> inv:<0|1> correct:<0|1>

Trojan ROM file: one key hex string per line, the line number is the
ROM address.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from pathlib import Path
from random import Random

from .netlist import Gate, Netlist, NetlistError

KEY_INPUT_FMT = "lolo_key_bit{index}"
KEY_INPUT_RE = re.compile(r"lolo_key_bit(\d+)\Z")

# Default hardware profile: a 1024-bit locking key, with the two
# instruction-decode modules carrying 128 key gates each.
DEFAULT_KEY_WIDTH = 1024
DECODER_KEY_GATES = 128
DEFAULT_CHAIN_BITS = 4


class LockingError(ValueError):
    pass


@dataclass(frozen=True)
class LockKey:
    """An immutable locking-key bit vector (LSB-first indexing)."""

    width: int
    value: int

    def __post_init__(self):
        if self.width < 1:
            raise LockingError(f"key width must be >= 1, got {self.width}")
        if not 0 <= self.value < (1 << self.width):
            raise LockingError(f"key value does not fit in {self.width} bits")

    @classmethod
    def zero(cls, width=DEFAULT_KEY_WIDTH):
        return cls(width, 0)

    @classmethod
    def from_bits(cls, bits):
        bits = tuple(bits)
        value = 0
        for i, b in enumerate(bits):
            if b not in (0, 1):
                raise LockingError(f"bit {i} is {b!r}, not 0/1")
            value |= b << i
        return cls(len(bits), value)

    def bit(self, index):
        if not 0 <= index < self.width:
            raise LockingError(f"bit index {index} out of range for width {self.width}")
        return (self.value >> index) & 1

    def bits(self):
        return tuple((self.value >> i) & 1 for i in range(self.width))

    def bitstring(self):
        """LSB-first bit string, bit 0 leftmost."""
        return "".join(str(b) for b in self.bits())

    def to_hex(self):
        digits = (self.width + 3) // 4
        return f"{self.value:0{digits}x}"

    @classmethod
    def from_hex(cls, text, width=None):
        text = text.strip().lower()
        if not re.fullmatch(r"[0-9a-f]+", text):
            raise LockingError(f"bad key hex {text!r}")
        if width is None:
            width = 4 * len(text)
        return cls(width, int(text, 16))


def flip_key_bit(key, index):
    """Return a key differing from ``key`` in exactly bit ``index``."""
    if not 0 <= index < key.width:
        raise LockingError(f"bit index {index} out of range for width {key.width}")
    return LockKey(key.width, key.value ^ (1 << index))


@dataclass(frozen=True)
class KeyGateRecord:
    """Provenance of one inserted key gate."""

    key_index: int
    gate_kind: str
    locked_net: str
    inverter_appended: bool
    correct_bit: int

    def __post_init__(self):
        if self.gate_kind not in ("XOR", "XNOR"):
            raise LockingError(f"key gate kind must be XOR/XNOR, got {self.gate_kind}")
        base = 0 if self.gate_kind == "XOR" else 1
        expected = base ^ (1 if self.inverter_appended else 0)
        if self.correct_bit != expected:
            raise LockingError(
                f"key gate at index {self.key_index}: correct bit {self.correct_bit} "
                f"inconsistent with {self.gate_kind}, inverter={self.inverter_appended}"
            )

    @property
    def pre_net(self):
        """Name given to the original driver output after the cut."""
        return f"{self.locked_net}__pre{self.key_index}"

    @property
    def key_gate_output(self):
        """Net driven by the XOR/XNOR itself (before any inverter)."""
        if self.inverter_appended:
            return f"{self.locked_net}__kg{self.key_index}"
        return self.locked_net

    @property
    def key_net(self):
        return KEY_INPUT_FMT.format(index=self.key_index)


@dataclass(frozen=True)
class LockingPlan:
    records: tuple[KeyGateRecord, ...]
    seed: int
    source_module: str

    def __post_init__(self):
        indices = [r.key_index for r in self.records]
        if len(set(indices)) != len(indices):
            raise LockingError("duplicate key indices in locking plan")

    def record_for(self, index):
        for r in self.records:
            if r.key_index == index:
                return r
        return None


def lockable_sites(n):
    """Nets eligible for a key-gate cut: outputs of gates that are not
    themselves fed by a key input (i.e. not already key gates)."""
    key_nets = set(n.key_inputs)
    return [g.output for g in n.gates if not key_nets.intersection(g.inputs)]


def insert_key_gates(n, count, seed):
    """Lock ``count`` randomly chosen wires of ``n``.

    Returns ``(locked, key, plan)``.  The locked netlist gains ``count`` key
    inputs named ``lolo_key_bit<i>``; under ``key`` it is functionally
    identical to ``n``.  The same ``(n, count, seed)`` always produces the
    same output.
    """
    locked, records = _insert(n, count, seed, first_index=0)
    value = 0
    for r in records:
        value |= r.correct_bit << r.key_index
    key = LockKey(count, value)
    plan = LockingPlan(tuple(records), seed, n.name)
    return locked, key, plan


def _insert(n, count, seed, first_index):
    sites = lockable_sites(n)
    if count < 1:
        raise LockingError(f"key gate count must be >= 1, got {count}")
    if not sites:
        raise LockingError(f"netlist {n.name!r} has no lockable internal nets")
    if count > len(sites):
        raise LockingError(
            f"netlist {n.name!r} has {len(sites)} lockable sites, requested {count}"
        )
    rng = Random(seed)
    chosen = rng.sample(sites, count)

    gates = list(n.gates)
    driver_pos = {g.output: i for i, g in enumerate(gates)}
    new_gates = []
    new_keys = []
    records = []
    for j, net in enumerate(chosen):
        idx = first_index + j
        kind = rng.choice(("XOR", "XNOR"))
        inverter = bool(rng.getrandbits(1))
        record = KeyGateRecord(
            key_index=idx,
            gate_kind=kind,
            locked_net=net,
            inverter_appended=inverter,
            correct_bit=(0 if kind == "XOR" else 1) ^ (1 if inverter else 0),
        )
        pos = driver_pos[net]
        gates[pos] = replace(gates[pos], output=record.pre_net)
        new_keys.append(record.key_net)
        new_gates.append(Gate(kind, record.key_gate_output, (record.pre_net, record.key_net)))
        if inverter:
            new_gates.append(Gate("NOT", net, (record.key_gate_output,)))
        records.append(record)

    locked = Netlist(
        name=n.name,
        primary_inputs=n.primary_inputs,
        key_inputs=n.key_inputs + tuple(new_keys),
        primary_outputs=n.primary_outputs,
        gates=tuple(gates) + tuple(new_gates),
    )
    return locked, records


def rename_nets(n, prefix):
    """Prefix every net name (used to give modules disjoint namespaces)."""
    def p(net):
        return prefix + net

    return Netlist(
        name=n.name,
        primary_inputs=tuple(p(x) for x in n.primary_inputs),
        key_inputs=tuple(p(x) for x in n.key_inputs),
        primary_outputs=tuple(p(x) for x in n.primary_outputs),
        gates=tuple(
            Gate(g.kind, p(g.output), tuple(p(i) for i in g.inputs)) for g in n.gates
        ),
    )


def disjoint_union(modules, name="union"):
    """Concatenate netlists with already-disjoint namespaces."""
    return Netlist(
        name=name,
        primary_inputs=tuple(x for m in modules for x in m.primary_inputs),
        key_inputs=tuple(x for m in modules for x in m.key_inputs),
        primary_outputs=tuple(x for m in modules for x in m.primary_outputs),
        gates=tuple(g for m in modules for g in m.gates),
    )


def interlock(modules, master_seed, chain_bits=DEFAULT_CHAIN_BITS):
    """Lock several modules and chain them into one codependent netlist.

    Each module is locked with its own contiguous key segment.  For every
    module after the first, ``chain_bits`` of its key gates are fed not by
    the raw key input but by the key input XORed with a difference tap from
    the previous module: XOR of a locked wire's pre- and post-key-gate
    values.  Under the correct composite key every tap is constant zero, so
    the composition is functionally the disjoint union of the originals;
    corrupting a tapped key bit of module ``i-1`` forces an effective
    key-bit inversion inside module ``i``.

    Returns ``(composed, key, plans)`` with one plan per module, indices
    global within the composite key.
    """
    modules = list(modules)
    if len(modules) < 2:
        raise LockingError("interlock needs at least 2 modules")
    names = [n.name for n, _ in modules]
    if len(set(names)) != len(names):
        raise LockingError(f"module names must be distinct, got {names}")
    for n, _ in modules:
        if n.key_inputs:
            raise LockingError(f"module {n.name!r} is already locked")

    rng = Random(master_seed)
    seeds = [rng.getrandbits(64) for _ in modules]
    offsets = []
    total = 0
    for _, count in modules:
        offsets.append(total)
        total += count

    locked_parts = []
    module_records = []
    for (n, count), seed, offset in zip(modules, seeds, offsets):
        prefixed = rename_nets(n, f"{n.name}.")
        locked, records = _insert(prefixed, count, seed, first_index=offset)
        locked_parts.append(locked)
        module_records.append(records)

    gates = [g for part in locked_parts for g in part.gates]
    gate_pos = {g.output: i for i, g in enumerate(gates)}
    extra_gates = []
    for i in range(1, len(modules)):
        src_records = module_records[i - 1]
        dst_records = module_records[i]
        n_chain = min(chain_bits, len(src_records), len(dst_records))
        if n_chain == 0:
            continue
        dst_chain = rng.sample(dst_records, n_chain)
        src_chain = rng.sample(src_records, n_chain)
        for src, dst in zip(src_chain, dst_chain):
            tap = f"ilk_tap{dst.key_index}"
            mixed = f"ilk_key{dst.key_index}"
            extra_gates.append(Gate("XOR", tap, (src.pre_net, src.locked_net)))
            extra_gates.append(Gate("XOR", mixed, (dst.key_net, tap)))
            pos = gate_pos[dst.key_gate_output]
            g = gates[pos]
            gates[pos] = replace(
                g,
                inputs=tuple(mixed if net == dst.key_net else net for net in g.inputs),
            )

    composed = Netlist(
        name="interlock_" + "_".join(names),
        primary_inputs=tuple(x for p in locked_parts for x in p.primary_inputs),
        key_inputs=tuple(x for p in locked_parts for x in p.key_inputs),
        primary_outputs=tuple(x for p in locked_parts for x in p.primary_outputs),
        gates=tuple(gates) + tuple(extra_gates),
    )
    value = 0
    for records in module_records:
        for r in records:
            value |= r.correct_bit << r.key_index
    key = LockKey(total, value)
    plans = [
        LockingPlan(tuple(records), seed, name)
        for records, seed, name in zip(module_records, seeds, names)
    ]
    return composed, key, plans


@dataclass(frozen=True)
class TrojanKeyMux:
    """ROM of adversarial locking keys plus the select/enable state that a
    privileged register write would control on real hardware."""

    rom: tuple[LockKey, ...]
    select: int = 0
    enable: bool = False

    ROM_CAPACITY = 1024  # 10-bit address space

    def __post_init__(self):
        if len(self.rom) > self.ROM_CAPACITY:
            raise LockingError(f"trojan ROM holds at most {self.ROM_CAPACITY} keys")
        widths = {k.width for k in self.rom}
        if len(widths) > 1:
            raise LockingError(f"trojan ROM keys have mixed widths {sorted(widths)}")
        if self.enable:
            if not self.rom:
                raise LockingError("enabled trojan mux needs a nonempty ROM")
            if not 0 <= self.select < len(self.rom):
                raise LockingError(
                    f"select {self.select} out of range for ROM of {len(self.rom)}"
                )


def trojan_select(mux, address, original):
    """Pure read of the key the mux presents for ``address``.

    A disabled mux is transparent and returns ``original``.
    """
    if not mux.enable:
        return original
    if not mux.rom:
        raise LockingError("enabled trojan mux needs a nonempty ROM")
    if not 0 <= address < len(mux.rom):
        raise LockingError(f"address {address} out of range for ROM of {len(mux.rom)}")
    selected = mux.rom[address]
    if selected.width != original.width:
        raise LockingError(
            f"ROM key width {selected.width} does not match original {original.width}"
        )
    return selected


def key_assignment(n, key):
    """Map a LockKey onto a netlist's key inputs.

    Key inputs named ``lolo_key_bit<i>`` take bit ``i``; any other naming
    scheme falls back to positional order.
    """
    matches = [KEY_INPUT_RE.match(net) for net in n.key_inputs]
    if all(matches):
        out = {}
        for net, m in zip(n.key_inputs, matches):
            out[net] = key.bit(int(m.group(1)))
        return out
    return {net: key.bit(i) for i, net in enumerate(n.key_inputs)}


# --- file formats ---------------------------------------------------------


def save_key(key, path):
    Path(path).write_text(f"width:{key.width}\n{key.to_hex()}\n")


def load_key(path):
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("width:"):
        raise LockingError(f"{path}: expected 'width:<n>' on the first line")
    try:
        width = int(lines[0].split(":", 1)[1])
    except ValueError:
        raise LockingError(f"{path}: bad width line {lines[0]!r}") from None
    if len(lines) < 2:
        raise LockingError(f"{path}: missing key hex line")
    return LockKey.from_hex(lines[1], width=width)


def save_plan(plan, path):
    lines = [f"# module {plan.source_module}", f"# seed {plan.seed}"]
    for r in plan.records:
        lines.append(
            f"keygate {r.key_index} {r.gate_kind} {r.locked_net} "
            f"inv:{1 if r.inverter_appended else 0} correct:{r.correct_bit}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def load_plan(path):
    source = "unknown"
    seed = 0
    records = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if body.startswith("module "):
                source = body.split(None, 1)[1]
            elif body.startswith("seed "):
                seed = int(body.split(None, 1)[1])
            continue
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 6 or tokens[0] != "keygate":
            raise LockingError(f"{path}:{lineno}: bad plan record {line!r}")
        _, idx, kind, net, inv, correct = tokens
        if not inv.startswith("inv:") or not correct.startswith("correct:"):
            raise LockingError(f"{path}:{lineno}: bad plan record {line!r}")
        records.append(
            KeyGateRecord(
                key_index=int(idx),
                gate_kind=kind,
                locked_net=net,
                inverter_appended=bool(int(inv.split(":", 1)[1])),
                correct_bit=int(correct.split(":", 1)[1]),
            )
        )
    return LockingPlan(tuple(records), seed, source)


def save_rom(keys, path):
    widths = {k.width for k in keys}
    if len(widths) > 1:
        raise LockingError(f"ROM keys have mixed widths {sorted(widths)}")
    Path(path).write_text("".join(k.to_hex() + "\n" for k in keys))


def load_rom(path, width=None):
    # Addresses are line numbers, so every line must hold exactly one key.
    keys = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        try:
            keys.append(LockKey.from_hex(line, width=width))
        except (LockingError, NetlistError) as exc:
            raise LockingError(f"{path}:{lineno}: {exc}") from None
    return keys
