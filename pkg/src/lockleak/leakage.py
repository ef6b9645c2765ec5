"""Output classification, sensitive-data scanning, and key recovery.

A run's outcome is compared against a known-good baseline and sorted into
the sweep taxonomy (boot failure, no output, unchanged, changed, with
"leak" as the refinement of "changed" that the sweep applies when a scan
finds secret material).  ``scan_leak`` looks for 32-bit words of the secret
in the output, both verbatim and doubled modulo 2^32, the two transforms
the degenerate keystream produces.  ``recover_key`` inverts that structure.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .chacha import MASK32, ChaChaKey

COMPLETED = "completed"
TRAPPED = "trapped"
NO_OUTPUT = "no_output"

BOOT_FAILURE = "boot_failure"
UNCHANGED = "unchanged"
CHANGED = "changed"
LEAK = "leak"
CATEGORIES = (BOOT_FAILURE, NO_OUTPUT, UNCHANGED, CHANGED, LEAK)

IDENTITY = "identity"
DOUBLED = "doubled"


class LeakageError(ValueError):
    pass


class InconsistentFaultError(LeakageError):
    """Raised when output could not have come from the modeled fault."""


@dataclass(frozen=True)
class RunOutcome:
    status: str
    output: bytes = b""

    def __post_init__(self):
        if self.status not in (COMPLETED, TRAPPED, NO_OUTPUT):
            raise LeakageError(f"unknown run status {self.status!r}")
        if self.status == NO_OUTPUT and self.output:
            raise LeakageError("a no-output run cannot carry output bytes")

    @classmethod
    def completed(cls, output):
        """Completed run; empty output counts as producing no output."""
        if not output:
            return cls(NO_OUTPUT, b"")
        return cls(COMPLETED, bytes(output))

    @classmethod
    def trapped(cls):
        return cls(TRAPPED, b"")


def classify(baseline, run):
    """Sort a run against its baseline (which must have completed)."""
    if baseline.status != COMPLETED:
        raise LeakageError(f"baseline must be a completed run, got {baseline.status}")
    if run.status == TRAPPED:
        return BOOT_FAILURE
    if run.status == NO_OUTPUT:
        return NO_OUTPUT
    if run.output == baseline.output:
        return UNCHANGED
    return CHANGED


@dataclass(frozen=True)
class LeakFinding:
    fraction_of_secret_leaked: float
    matched_transform: str
    byte_ranges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not 0.0 <= self.fraction_of_secret_leaked <= 1.0:
            raise LeakageError("leak fraction must be within [0, 1]")

    def to_json_dict(self):
        return {
            "fraction": self.fraction_of_secret_leaked,
            "transform": self.matched_transform,
            "ranges": [list(r) for r in self.byte_ranges],
        }


def _aligned_words(data, order):
    return [int.from_bytes(data[i:i + 4], order) for i in range(0, len(data) - 3, 4)]


def scan_leak(output, secret):
    """Scan ``output`` for contiguous runs of the secret's 32-bit words.

    Words match verbatim (identity transform) or doubled mod 2^32, at any
    word-aligned offset, in either byte order.  The fraction counts distinct
    secret words covered by at least one run; ranges report every maximal
    matching run.
    """
    if len(secret) % 4 != 0 or not secret:
        raise LeakageError("secret length must be a positive multiple of 4 bytes")
    secret_words = _aligned_words(secret, "little")
    n_secret = len(secret_words)
    targets = {
        IDENTITY: secret_words,
        DOUBLED: [(2 * w) & MASK32 for w in secret_words],
    }

    covered = set()
    ranges = set()
    transforms_hit = set()
    for order in ("little", "big"):
        out_words = _aligned_words(output, order)
        for transform, wanted in targets.items():
            for start in range(len(out_words)):
                for j0 in range(n_secret):
                    if out_words[start] != wanted[j0]:
                        continue
                    # only begin at run heads, the extension loop covers the rest
                    if start > 0 and j0 > 0 and out_words[start - 1] == wanted[j0 - 1]:
                        continue
                    length = 0
                    while (start + length < len(out_words)
                           and j0 + length < n_secret
                           and out_words[start + length] == wanted[j0 + length]):
                        length += 1
                    covered.update(range(j0, j0 + length))
                    ranges.add((4 * start, 4 * length))
                    transforms_hit.add(transform)

    if not covered:
        return LeakFinding(0.0, IDENTITY, ())
    transform = IDENTITY if IDENTITY in transforms_hit else DOUBLED
    return LeakFinding(
        fraction_of_secret_leaked=len(covered) / n_secret,
        matched_transform=transform,
        byte_ranges=tuple(sorted(ranges)),
    )


def recover_key(ciphertext, plaintext):
    """Recover encryption-key candidates from one faulted output block.

    With the OR->AND fault, keystream words 4..7 are key[0..3] verbatim and
    words 8..11 are 2*key[4..7] mod 2^32; halving a doubled word leaves two
    candidates (the lost top bit), so at most 16 keys are returned.  An odd
    doubled word cannot arise from the modeled fault.
    """
    if len(ciphertext) < 64 or len(plaintext) < 64:
        raise LeakageError("need at least 64 bytes of known plaintext/ciphertext")
    keystream = bytes(c ^ p for c, p in zip(ciphertext[:64], plaintext[:64]))
    words = _aligned_words(keystream, "little")
    low = words[4:8]
    candidates_high = []
    for i, w in enumerate(words[8:12]):
        if w & 1:
            raise InconsistentFaultError(
                f"keystream word {8 + i} is odd, not a doubled key word"
            )
        half = w >> 1
        candidates_high.append((half, (half + 0x80000000) & MASK32))
    return [
        ChaChaKey(tuple(low) + combo) for combo in product(*candidates_high)
    ]
