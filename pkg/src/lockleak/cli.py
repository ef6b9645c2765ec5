"""Command-line front end.

Subcommands:

    lock         insert key gates into a netlist, write the locked design,
                 key file and plan file
    verify       equivalence-check an original against a locked design
                 under a key
    sweep        run the single-bit key-flip sweep from a config file
    trojan       run a target under the original key and under a ROM key
                 selected by the key multiplexer, and compare
    chacha-demo  print the initial matrix, the rotation collapse, the
                 mixed matrix and the degenerate keystream for a key

Exit codes: 0 success / equivalent, 1 analysis-negative (a counterexample
or leak where the command verifies), 2 usage or input errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import chacha, leakage, sweep as sweep_mod
from .locking import (
    LockingError,
    TrojanKeyMux,
    insert_key_gates,
    key_assignment,
    load_key,
    load_rom,
    save_key,
    save_plan,
    trojan_select,
)
from .netlist import NetlistError, InterfaceMismatchError, equivalence_check, parse, serialize

SAMPLED_VECTORS = 100_000


def _read_netlist(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise NetlistError(f"cannot read {path}: {exc.strerror}") from None
    return parse(text)


def cmd_lock(args):
    n = _read_netlist(args.netlist)
    locked, key, plan = insert_key_gates(n, args.count, args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    netlist_path = out_dir / f"{n.name}_locked.nl"
    key_path = out_dir / f"{n.name}_key.txt"
    plan_path = out_dir / f"{n.name}_plan.txt"
    netlist_path.write_text(serialize(locked))
    save_key(key, key_path)
    save_plan(plan, plan_path)
    print(f"locked {n.name}: {len(n.gates)} -> {len(locked.gates)} gates, "
          f"key width {key.width}")
    print(f"wrote {netlist_path}")
    print(f"wrote {key_path}")
    print(f"wrote {plan_path}")
    return 0


def cmd_verify(args):
    original = _read_netlist(args.original)
    locked = _read_netlist(args.locked)
    key = load_key(args.key)
    key_bits = key_assignment(locked, key)
    n_pi = len(original.primary_inputs)
    if n_pi <= 20:
        mode, kwargs = "exhaustive", {}
        print(f"exhaustive check over 2^{n_pi} input vectors")
    else:
        mode, kwargs = "sampled", {"count": SAMPLED_VECTORS, "seed": args.seed}
        print(f"sampled check over {SAMPLED_VECTORS} vectors (seed {args.seed})")
    cex = equivalence_check(original, locked, {}, key_bits, mode=mode, **kwargs)
    if cex is None:
        print("equivalent under the provided key")
        return 0
    print("counterexample found:")
    print(f"  {cex}")
    return 1


def cmd_sweep(args):
    cfg = sweep_mod.parse_config(args.config)
    report = sweep_mod.run_sweep(cfg, jobs=args.jobs)
    written = report.write(cfg.report_path, figure=not args.no_figure)
    print(report.text_summary())
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_trojan(args):
    cfg = sweep_mod.parse_config(args.config)
    ctx = sweep_mod.TargetContext(cfg)
    rom = load_rom(args.rom, width=ctx.key.width)
    mux = TrojanKeyMux(rom=tuple(rom), select=args.address, enable=args.enable)
    selected = trojan_select(mux, args.address, ctx.key)

    category, finding = ctx.evaluate_key(selected)
    print(f"trojan {'enabled' if args.enable else 'disabled'}, address {args.address}")
    print(f"baseline output: {ctx.baseline.output.hex()}")
    if selected == ctx.key:
        print("selected key equals the original key")
    else:
        print(f"selected key differs in "
              f"{bin(selected.value ^ ctx.key.value).count('1')} bit(s)")
    print(f"verdict: {category}")
    if finding:
        print(f"leak fraction: {finding.fraction_of_secret_leaked:.2f} "
              f"({finding.matched_transform}, ranges {list(finding.byte_ranges)})")
    # restoring the original key returns the target to baseline behaviour
    restored_category, _ = ctx.evaluate_key(ctx.key)
    print(f"after restoring the original key: {restored_category}")
    return 0


def cmd_chacha_demo(args):
    key = chacha.ChaChaKey.from_hex(args.key)
    layout = args.layout
    if layout == chacha.NONCE_FIRST:
        nonce = sweep_mod.parse_words(args.nonce, 4, "nonce")
        counter = sweep_mod.parse_words(args.counter, 4, "counter")
    else:
        nonce = sweep_mod.parse_words(args.nonce, 3, "nonce")
        counter = (int(args.counter, 16),)
    state = chacha.init_state(key, nonce, counter, layout)

    print("initial matrix:")
    print(state.format_matrix())

    p = 0x12345678
    print(f"\nrotation of p={p:#010x}: intended OR merge vs faulted AND merge")
    print(f"{'n':>4} {'p<<n':>10} {'p>>(32-n)':>10} {'or':>10} {'and':>10}")
    for n in (16, 12, 8, 7):
        hi = (p << n) & chacha.MASK32
        lo = p >> (32 - n)
        print(f"{n:>4} {hi:#010x} {lo:#010x} "
              f"{chacha.rotl(p, n):#010x} {chacha.rotl(p, n, chacha.FAULT_OR_TO_AND):#010x}")

    mixed = chacha.run_rounds(state, chacha.FAULT_OR_TO_AND)
    print("\nmatrix after 20 faulted rounds:")
    print(mixed.format_matrix())

    ks = chacha.keystream_block(state, chacha.FAULT_OR_TO_AND)
    print("\nfaulted keystream (matrix + initial matrix):")
    print(chacha.ChaChaState(ks, layout).format_matrix())
    print("\nkeystream words 4..7 equal key[0..3]; words 8..11 equal "
          "2*key[4..7] mod 2^32:")
    print("  key[0..3]  " + " ".join(f"{w:08x}" for w in key.words[:4]))
    print("  ks[4..7]   " + " ".join(f"{w:08x}" for w in ks[4:8]))
    print("  2*key[4..7]" + " " + " ".join(f"{(2 * w) & chacha.MASK32:08x}" for w in key.words[4:]))
    print("  ks[8..11]  " + " ".join(f"{w:08x}" for w in ks[8:12]))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lockleak",
        description="logic-locking key-fault simulator and leakage analyzer",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lock", help="insert key gates into a netlist")
    p.add_argument("netlist", help="input netlist file")
    p.add_argument("--count", type=int, required=True, help="number of key gates")
    p.add_argument("--seed", type=int, required=True, help="locking seed")
    p.add_argument("--out-dir", default=".", help="directory for the three outputs")
    p.set_defaults(func=cmd_lock)

    p = sub.add_parser("verify", help="equivalence-check original vs locked")
    p.add_argument("original")
    p.add_argument("locked")
    p.add_argument("--key", required=True, help="key file for the locked design")
    p.add_argument("--seed", type=int, default=0, help="seed for the sampled mode")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="run the single-bit key-flip sweep")
    p.add_argument("--config", required=True, help="sweep configuration file")
    p.add_argument("--jobs", type=int, default=1, help="parallel per-bit workers")
    p.add_argument("--no-figure", action="store_true", help="skip the pie figure")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("trojan", help="substitute a ROM key and compare outputs")
    p.add_argument("--rom", required=True, help="ROM file, one key hex per line")
    p.add_argument("--address", type=int, required=True, help="ROM address to select")
    p.add_argument("--enable", action="store_true", help="enable the key multiplexer")
    p.add_argument("--config", required=True, help="target configuration file")
    p.set_defaults(func=cmd_trojan)

    p = sub.add_parser("chacha-demo", help="print the degenerate keystream tables")
    p.add_argument("--key", required=True, help="64 hex chars")
    p.add_argument("--nonce", required=True, help="nonce hex (layout-sized)")
    p.add_argument("--counter", required=True, help="counter hex")
    p.add_argument("--layout", choices=list(chacha.LAYOUTS), default=chacha.NONCE_FIRST)
    p.set_defaults(func=cmd_chacha_demo)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InterfaceMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NetlistError, LockingError, leakage.LeakageError,
            sweep_mod.ConfigError, chacha.ChaChaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
