"""Bundled circuits: shipped files match the builders, profile is stable."""

import pytest

from lockleak import circuits, locking
from lockleak.netlist import serialize


@pytest.mark.parametrize("name", sorted(circuits.BUNDLED))
def test_data_file_matches_builder(name):
    shipped = circuits.bundled_path(name).read_text()
    assert shipped == serialize(circuits.BUNDLED[name]())


def test_load_bundled_unknown_name():
    with pytest.raises(KeyError):
        circuits.load_bundled("nope")


def test_decoder_frontend_shape():
    n = circuits.compressed_decoder_frontend()
    assert len(n.gates) == 128
    assert len(n.primary_inputs) == 16
    lines = [g.output for g in n.gates if g.output.startswith(circuits.INSTR_LINE_PREFIX)]
    assert sorted(lines) == sorted(f"instr_line{k}" for k in range(16))
    assert len(locking.lockable_sites(n)) == 128


def test_decoder_profile_covers_every_instruction_line():
    _, key, plan = circuits.decoder_profile()
    assert key.width == 128
    locked_lines = {r.locked_net for r in plan.records
                    if r.locked_net.startswith(circuits.INSTR_LINE_PREFIX)}
    assert locked_lines == {f"instr_line{k}" for k in range(16)}
    # exactly one key gate per instruction line
    per_line = [r for r in plan.records
                if r.locked_net.startswith(circuits.INSTR_LINE_PREFIX)]
    assert len(per_line) == 16


def test_decoder_profile_is_deterministic():
    a = circuits.decoder_profile()
    b = circuits.decoder_profile()
    assert serialize(a[0]) == serialize(b[0])
    assert a[1] == b[1]
    assert a[2] == b[2]
