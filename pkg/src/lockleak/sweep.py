"""Single-bit key-flip sweep: execution targets, classification, reports.

For every bit in the configured range the sweep flips that one key bit,
replays the target, classifies the outcome against the correct-key
baseline, and scans changed output for secret material.  Two targets
exist: a locked netlist driven with seeded random vectors, and the
stream-cipher workload driven through the masked instruction decoder.
For the cipher target, key bits whose gates sit on the instruction-bit
lines (per the locking plan) become decoder fault masks; all other bits
are judged purely by their effect on the locked netlist's outputs.

The report is written as JSON (the machine contract), a CSV with one row
per bit, and a category pie figure, all next to the configured report
path.  A fixed-width text summary goes to standard output.
"""

from __future__ import annotations

import csv
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from random import Random

from . import chacha, leakage, rvc
from .locking import flip_key_bit, key_assignment, load_key, load_plan
from .netlist import evaluate_patterns, parse

DEFAULT_VECTORS = 256


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    target: str                     # "netlist" | "chacha"
    key_file: Path
    bit_lo: int
    bit_hi: int
    report_path: Path
    netlist_path: Path | None = None
    vectors: int = DEFAULT_VECTORS
    seed: int = 0
    plan_path: Path | None = None
    instr_net_prefix: str = "instr_line"
    chacha_key: chacha.ChaChaKey | None = None
    nonce: tuple[int, ...] = ()
    counter: tuple[int, ...] = ()
    layout: str = chacha.NONCE_FIRST
    plaintext: bytes = b"\x00" * 64


_CONFIG_KEYS = {
    "target", "key_file", "bit_range", "report", "netlist", "vectors", "seed",
    "plan_file", "instr_net_prefix", "chacha_key", "chacha_nonce",
    "chacha_counter", "layout", "plaintext",
}


def parse_words(hex_text, n_words, what):
    data = bytes.fromhex(hex_text)
    if len(data) != 4 * n_words:
        raise ConfigError(f"{what} must be {4 * n_words} bytes of hex, got {len(data)}")
    return tuple(int.from_bytes(data[i:i + 4], "little") for i in range(0, len(data), 4))


def _parse_plaintext(spec):
    if spec.startswith("zeros:"):
        return b"\x00" * int(spec.split(":", 1)[1])
    if spec.startswith("hex:"):
        return bytes.fromhex(spec.split(":", 1)[1])
    raise ConfigError(f"plaintext must be 'zeros:<n>' or 'hex:<bytes>', got {spec!r}")


def parse_config(path):
    """Read the key=value sweep configuration.

    Seeds and every other knob are explicit in the file; the environment is
    never consulted.
    """
    path = Path(path)
    raw = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        raw[key] = value

    for required in ("target", "key_file", "report"):
        if required not in raw:
            raise ConfigError(f"{path}: missing required key {required!r}")
    target = raw["target"]
    if target not in ("netlist", "chacha"):
        raise ConfigError(f"{path}: target must be netlist or chacha, got {target!r}")
    if raw.get("layout", chacha.NONCE_FIRST) not in chacha.LAYOUTS:
        raise ConfigError(f"{path}: layout must be one of {chacha.LAYOUTS}")

    base = path.parent

    def as_path(value):
        p = Path(value)
        return p if p.is_absolute() else base / p

    key = load_key(as_path(raw["key_file"]))
    if "bit_range" in raw:
        m = re.fullmatch(r"(\d+)\.\.(\d+)", raw["bit_range"])
        if not m:
            raise ConfigError(f"{path}: bit_range must look like 0..1023")
        bit_lo, bit_hi = int(m.group(1)), int(m.group(2))
    else:
        bit_lo, bit_hi = 0, key.width - 1
    if not (0 <= bit_lo <= bit_hi < key.width):
        raise ConfigError(
            f"{path}: bit_range {bit_lo}..{bit_hi} outside key width {key.width}"
        )
    vectors = int(raw.get("vectors", DEFAULT_VECTORS))
    if vectors < 1:
        raise ConfigError(f"{path}: vectors must be >= 1")

    cfg = SweepConfig(
        target=target,
        key_file=as_path(raw["key_file"]),
        bit_lo=bit_lo,
        bit_hi=bit_hi,
        report_path=as_path(raw["report"]),
        netlist_path=as_path(raw["netlist"]) if "netlist" in raw else None,
        vectors=vectors,
        seed=int(raw.get("seed", 0)),
        plan_path=as_path(raw["plan_file"]) if "plan_file" in raw else None,
        instr_net_prefix=raw.get("instr_net_prefix", "instr_line"),
        chacha_key=chacha.ChaChaKey.from_hex(raw["chacha_key"]) if "chacha_key" in raw else None,
        nonce=parse_words(raw["chacha_nonce"],
                           4 if raw.get("layout", chacha.NONCE_FIRST) != chacha.STANDARD else 3,
                           "chacha_nonce") if "chacha_nonce" in raw else (),
        counter=parse_words(raw["chacha_counter"],
                             4 if raw.get("layout", chacha.NONCE_FIRST) != chacha.STANDARD else 1,
                             "chacha_counter") if "chacha_counter" in raw else (),
        layout=raw.get("layout", chacha.NONCE_FIRST),
        plaintext=_parse_plaintext(raw["plaintext"]) if "plaintext" in raw else b"\x00" * 64,
    )
    if target == "netlist" and cfg.netlist_path is None:
        raise ConfigError(f"{path}: netlist target needs a netlist path")
    if target == "chacha":
        for needed in ("plan_file", "netlist", "chacha_key", "chacha_nonce", "chacha_counter"):
            if needed not in raw:
                raise ConfigError(f"{path}: chacha target needs {needed!r}")
    return cfg


# --- interpreter-driven cipher runs ---------------------------------------


def interpreter_keystream_block(state, mask=0):
    """Keystream block with every quarter round executed through the masked
    instruction decoder.  Returns the 16 words or :data:`rvc.TRAP`."""
    words = list(state.words)
    for _ in range(chacha.NUM_DOUBLE_ROUNDS):
        for i, j, k, l in chacha.DOUBLE_ROUND:
            result = rvc.run_quarter_round(words[i], words[j], words[k], words[l], mask)
            if result is rvc.TRAP:
                return rvc.TRAP
            words[i], words[j], words[k], words[l] = result
    return tuple((m + s) & chacha.MASK32 for m, s in zip(words, state.words))


def interpreter_encrypt(key, nonce, counter, plaintext, mask=0, layout=chacha.NONCE_FIRST):
    """Encrypt through the interpreter path; returns bytes or :data:`rvc.TRAP`."""
    out = bytearray()
    for block_index in range(0, (len(plaintext) + 63) // 64):
        advanced = chacha.advance_counter(counter, layout, block_index)
        state = chacha.init_state(key, nonce, advanced, layout)
        ks = interpreter_keystream_block(state, mask)
        if ks is rvc.TRAP:
            return rvc.TRAP
        stream = chacha.keystream_bytes(ks)
        chunk = plaintext[64 * block_index:64 * (block_index + 1)]
        out.extend(p ^ k for p, k in zip(chunk, stream))
    return bytes(out)


# --- sweep execution -------------------------------------------------------


@dataclass(frozen=True)
class BitResult:
    bit: int
    category: str
    finding: leakage.LeakFinding | None = None


class TargetContext:
    """Prepared state shared by every per-key run of one sweep or demo.

    Holds two baselines: the program-level one (interpreter-driven cipher
    output under the correct key) and the netlist-level one (locked-netlist
    outputs on the seeded vectors), so each evaluation channel compares
    like with like.
    """

    def __init__(self, cfg):
        self.cfg = cfg
        self.key = load_key(cfg.key_file)
        self.netlist = parse(Path(cfg.netlist_path).read_text()) if cfg.netlist_path else None
        self.plan = load_plan(cfg.plan_path) if cfg.plan_path else None
        self.instr_line_re = re.compile(re.escape(cfg.instr_net_prefix) + r"(\d+)\Z")

        if self.netlist is not None:
            rng = Random(cfg.seed)
            self.pi_patterns = {
                net: rng.getrandbits(cfg.vectors) for net in self.netlist.primary_inputs
            }
            self.baseline_netlist = self.netlist_outcome(self.key)
        else:
            self.pi_patterns = None
            self.baseline_netlist = None

        if cfg.target == "chacha":
            result = interpreter_encrypt(
                cfg.chacha_key, cfg.nonce, cfg.counter, cfg.plaintext, 0, cfg.layout
            )
            if result is rvc.TRAP:
                raise ConfigError("baseline run with the unmodified key did not complete")
            self.baseline = leakage.RunOutcome.completed(result)
        else:
            self.baseline = self.baseline_netlist
        if self.baseline.status != leakage.COMPLETED:
            raise ConfigError("baseline run with the unmodified key did not complete")

    def netlist_outcome(self, key):
        bits = key_assignment(self.netlist, key)
        outs = evaluate_patterns(self.netlist, self.pi_patterns, bits, self.cfg.vectors)
        nbytes = (self.cfg.vectors + 7) // 8
        blob = b"".join(
            outs[po].to_bytes(nbytes, "little") for po in self.netlist.primary_outputs
        )
        return leakage.RunOutcome.completed(blob)

    def instruction_mask(self, key):
        """Map differing key bits to their instruction-line fault mask.

        Returns ``(mask, n_instr_bits, n_other_bits)`` where the counts say
        how many differing bits did and did not land on instruction lines.
        """
        diff = key.value ^ self.key.value
        mask = 0
        n_instr = 0
        n_other = 0
        index = 0
        while diff:
            if diff & 1:
                record = self.plan.record_for(index) if self.plan else None
                m = self.instr_line_re.match(record.locked_net) if record else None
                # interlock plans carry module-prefixed names
                if record and not m and "." in record.locked_net:
                    m = self.instr_line_re.match(record.locked_net.rsplit(".", 1)[1])
                if m:
                    mask ^= 1 << int(m.group(1))
                    n_instr += 1
                else:
                    n_other += 1
            diff >>= 1
            index += 1
        return mask, n_instr, n_other

    def evaluate_key(self, key):
        """Classify a full candidate key against the baseline.

        Returns ``(category, finding)``.  For the cipher target, key bits
        whose gates feed instruction lines turn into a decoder fault mask;
        keys differing only off the instruction lines are judged by the
        locked netlist's outputs alone.
        """
        cfg = self.cfg
        if cfg.target == "netlist":
            run = self.netlist_outcome(key)
            return leakage.classify(self.baseline, run), None

        mask, n_instr, n_other = self.instruction_mask(key)
        if n_instr == 0 and n_other > 0:
            run = self.netlist_outcome(key)
            return leakage.classify(self.baseline_netlist, run), None
        result = interpreter_encrypt(
            cfg.chacha_key, cfg.nonce, cfg.counter, cfg.plaintext, mask, cfg.layout
        )
        run = leakage.RunOutcome.trapped() if result is rvc.TRAP \
            else leakage.RunOutcome.completed(result)
        category = leakage.classify(self.baseline, run)
        finding = None
        if category == leakage.CHANGED:
            finding = leakage.scan_leak(run.output, cfg.chacha_key.to_bytes())
            if finding.fraction_of_secret_leaked > 0:
                category = leakage.LEAK
            else:
                finding = None
        return category, finding

    def sweep_bits(self):
        """Bits in range that can affect this target at all."""
        lo, hi = self.cfg.bit_lo, self.cfg.bit_hi
        if self.cfg.target == "chacha":
            indexed = {r.key_index for r in self.plan.records}
        else:
            indexed = set()
            for net in self.netlist.key_inputs:
                m = re.match(r"lolo_key_bit(\d+)\Z", net)
                if m:
                    indexed.add(int(m.group(1)))
        return [b for b in range(lo, hi + 1) if b in indexed]

    def evaluate_bit(self, bit):
        try:
            category, finding = self.evaluate_key(flip_key_bit(self.key, bit))
            return BitResult(bit, category, finding)
        except Exception:
            # A per-bit failure must never abort the sweep.
            return BitResult(bit, leakage.BOOT_FAILURE, None)


@dataclass(frozen=True)
class SweepReport:
    per_bit: tuple[BitResult, ...]
    tallies: dict
    percentages: dict

    @classmethod
    def from_results(cls, results):
        results = tuple(sorted(results, key=lambda r: r.bit))
        tallies = {cat: 0 for cat in leakage.CATEGORIES}
        for r in results:
            tallies[r.category] += 1
        total = len(results)
        percentages = {
            cat: (round(100.0 * n / total, 2) if total else 0.0)
            for cat, n in tallies.items()
        }
        return cls(results, tallies, percentages)

    def to_json_dict(self):
        return {
            "bits_swept": len(self.per_bit),
            "tallies": self.tallies,
            "percentages": self.percentages,
            "per_bit": [
                {
                    "bit": r.bit,
                    "category": r.category,
                    "leak": r.finding.to_json_dict() if r.finding else None,
                }
                for r in self.per_bit
            ],
        }

    def text_summary(self):
        lines = [f"{'category':<14}{'bits':>6}{'pct':>9}"]
        for cat in leakage.CATEGORIES:
            lines.append(f"{cat:<14}{self.tallies[cat]:>6}{self.percentages[cat]:>8.2f}%")
        lines.append(f"{'total':<14}{len(self.per_bit):>6}")
        return "\n".join(lines)

    def write(self, report_path, figure=True):
        """Write the JSON report plus the per-bit CSV and the pie figure."""
        report_path = Path(report_path)
        report_path.parent.mkdir(parents=True, exist_ok=True)
        report_path.write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")

        csv_path = report_path.with_suffix(".csv")
        with open(csv_path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["bit", "category", "leak_fraction"])
            for r in self.per_bit:
                frac = r.finding.fraction_of_secret_leaked if r.finding else ""
                writer.writerow([r.bit, r.category, frac])

        written = [report_path, csv_path]
        if figure:
            fig_path = report_path.with_suffix(".png")
            _render_figure(self, fig_path)
            written.append(fig_path)
        return written


def _render_figure(report, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    labels = [cat for cat in leakage.CATEGORIES if report.tallies[cat]]
    sizes = [report.tallies[cat] for cat in labels]
    fig, ax = plt.subplots(figsize=(5, 5))
    if sizes:
        ax.pie(sizes, labels=labels, autopct="%1.1f%%", startangle=90)
    else:
        ax.text(0.5, 0.5, "no bits swept", ha="center", va="center")
        ax.set_axis_off()
    ax.set_title("key bit-flip outcomes")
    fig.savefig(path, dpi=100)
    plt.close(fig)


def run_sweep(cfg, jobs=1):
    """Execute the sweep described by ``cfg`` and return its report.

    Per-bit runs are independent; ``jobs > 1`` fans them out to a thread
    pool.  The report is ordered by bit index either way.
    """
    ctx = TargetContext(cfg)
    bits = ctx.sweep_bits()
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(ctx.evaluate_bit, bits))
    else:
        results = [ctx.evaluate_bit(bit) for bit in bits]
    return SweepReport.from_results(results)
