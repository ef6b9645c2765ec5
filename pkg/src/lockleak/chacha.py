"""ChaCha keystream generation with a substitutable-logic fault model.

The clean path is standard ChaCha20 (ten column/diagonal double rounds,
initial-state addition, little-endian words).  ``FaultSpec`` redirects the
logic operation that merges the two shifted halves inside every rotation;
with the OR->AND substitution the halves are bit-disjoint, the merge
collapses to zero, and the keystream degenerates into a structure that
copies the key to the output.

Two state layouts are supported: ``STANDARD`` is the published layout
(constants / key / key / counter+nonce); ``NONCE_FIRST`` places the nonce row
first, then the two key rows, then a replicated counter row.  Both put the
key in rows 1 and 2, so the faulted keystream leaks it either way.
"""

from __future__ import annotations

from dataclasses import dataclass

MASK32 = 0xFFFFFFFF

NONCE_FIRST = "nonce_first"
STANDARD = "standard"
LAYOUTS = (NONCE_FIRST, STANDARD)

CONSTANT_WORDS = (0x61707865, 0x3320646E, 0x79622D32, 0x6B206574)

# Column then diagonal quarter-round index pattern; ten repetitions give
# the twenty rounds.
DOUBLE_ROUND = (
    (0, 4, 8, 12),
    (1, 5, 9, 13),
    (2, 6, 10, 14),
    (3, 7, 11, 15),
    (0, 5, 10, 15),
    (1, 6, 11, 12),
    (2, 7, 8, 13),
    (3, 4, 9, 14),
)
NUM_DOUBLE_ROUNDS = 10

_LOGIC_OPS = ("AND", "OR", "XOR")


class ChaChaError(ValueError):
    pass


@dataclass(frozen=True)
class ChaChaKey:
    """256-bit encryption key as eight 32-bit words."""

    words: tuple[int, ...]

    def __post_init__(self):
        if len(self.words) != 8 or any(not 0 <= w <= MASK32 for w in self.words):
            raise ChaChaError("key must be eight 32-bit words")

    @classmethod
    def from_bytes(cls, data):
        if len(data) != 32:
            raise ChaChaError(f"key must be 32 bytes, got {len(data)}")
        return cls(tuple(int.from_bytes(data[i:i + 4], "little") for i in range(0, 32, 4)))

    @classmethod
    def from_hex(cls, text):
        return cls.from_bytes(bytes.fromhex(text))

    def to_bytes(self):
        return b"".join(w.to_bytes(4, "little") for w in self.words)


@dataclass(frozen=True)
class FaultSpec:
    """Substitution applied to the rotation's merge operation."""

    substitutions: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        for src, dst in self.substitutions:
            if src not in _LOGIC_OPS or dst not in _LOGIC_OPS:
                raise ChaChaError(f"substitution {src}->{dst} outside {_LOGIC_OPS}")

    @classmethod
    def none(cls):
        return cls(())

    @classmethod
    def or_to_and(cls):
        return cls((("OR", "AND"),))

    @classmethod
    def custom(cls, mapping):
        return cls(tuple(sorted(mapping.items())))

    def applied(self, op):
        for src, dst in self.substitutions:
            if src == op:
                return dst
        return op


FAULT_NONE = FaultSpec.none()
FAULT_OR_TO_AND = FaultSpec.or_to_and()


@dataclass(frozen=True)
class ChaChaState:
    """4x4 matrix of 32-bit words plus its layout tag."""

    words: tuple[int, ...]
    layout: str

    def __post_init__(self):
        if len(self.words) != 16 or any(not 0 <= w <= MASK32 for w in self.words):
            raise ChaChaError("state must be sixteen 32-bit words")
        if self.layout not in LAYOUTS:
            raise ChaChaError(f"unknown layout {self.layout!r}")

    def row(self, r):
        return self.words[4 * r:4 * r + 4]

    def format_matrix(self):
        return "\n".join(
            " ".join(f"{w:08x}" for w in self.row(r)) for r in range(4)
        )


def rotl(p, n, fault=FAULT_NONE):
    """Rotate left by merging the shifted halves with the (possibly
    substituted) logic operation."""
    if not 1 <= n <= 31:
        raise ChaChaError(f"rotation amount must be 1..31, got {n}")
    hi = (p << n) & MASK32
    lo = p >> (32 - n)
    op = fault.applied("OR")
    if op == "OR":
        return hi | lo
    if op == "AND":
        return hi & lo
    return hi ^ lo


def quarter_round_words(a, b, c, d, fault=FAULT_NONE):
    a = (a + b) & MASK32
    d = rotl(d ^ a, 16, fault)
    c = (c + d) & MASK32
    b = rotl(b ^ c, 12, fault)
    a = (a + b) & MASK32
    d = rotl(d ^ a, 8, fault)
    c = (c + d) & MASK32
    b = rotl(b ^ c, 7, fault)
    return a, b, c, d


def quarter_round(state, i, j, k, l, fault=FAULT_NONE):
    if len({i, j, k, l}) != 4 or not all(0 <= x < 16 for x in (i, j, k, l)):
        raise ChaChaError(f"bad quarter-round indices {(i, j, k, l)}")
    words = list(state.words)
    words[i], words[j], words[k], words[l] = quarter_round_words(
        words[i], words[j], words[k], words[l], fault
    )
    return ChaChaState(tuple(words), state.layout)


def init_state(key, nonce, counter, layout=NONCE_FIRST):
    """Build the initial matrix.

    ``NONCE_FIRST`` layout: ``nonce`` and ``counter`` are each four words filling
    rows 0 and 3.  ``STANDARD`` layout: ``nonce`` is three words, ``counter``
    one word, after the four published constants.
    """
    nonce = tuple(nonce)
    counter = tuple(counter) if not isinstance(counter, int) else (counter,)
    if layout == NONCE_FIRST:
        if len(nonce) != 4:
            raise ChaChaError(f"nonce-first layout takes a 4-word nonce, got {len(nonce)}")
        if len(counter) != 4:
            raise ChaChaError(f"nonce-first layout takes a 4-word counter, got {len(counter)}")
        words = nonce + key.words + counter
    elif layout == STANDARD:
        if len(nonce) != 3:
            raise ChaChaError(f"standard layout takes a 3-word nonce, got {len(nonce)}")
        if len(counter) != 1:
            raise ChaChaError(f"standard layout takes a 1-word counter, got {len(counter)}")
        words = CONSTANT_WORDS + key.words + counter + nonce
    else:
        raise ChaChaError(f"unknown layout {layout!r}")
    return ChaChaState(tuple(w & MASK32 for w in words), layout)


def run_rounds(state, fault=FAULT_NONE):
    """Apply the twenty rounds (no initial-state addition)."""
    words = list(state.words)
    for _ in range(NUM_DOUBLE_ROUNDS):
        for i, j, k, l in DOUBLE_ROUND:
            words[i], words[j], words[k], words[l] = quarter_round_words(
                words[i], words[j], words[k], words[l], fault
            )
    return ChaChaState(tuple(words), state.layout)


def keystream_block(state, fault=FAULT_NONE):
    """Twenty rounds plus the wordwise initial-state addition."""
    mixed = run_rounds(state, fault)
    return tuple((m + s) & MASK32 for m, s in zip(mixed.words, state.words))


def keystream_bytes(words):
    return b"".join(w.to_bytes(4, "little") for w in words)


def advance_counter(counter, layout, blocks):
    if layout == NONCE_FIRST:
        return tuple((c + blocks) & MASK32 for c in counter)
    value = counter if isinstance(counter, int) else tuple(counter)[0]
    return ((value + blocks) & MASK32,)


def encrypt(key, nonce, counter, plaintext, fault=FAULT_NONE, layout=NONCE_FIRST):
    """XOR the plaintext with the (possibly faulted) keystream.

    Multi-block messages increment the counter per 64-byte block (every
    replicated counter word in the nonce-first layout).
    """
    out = bytearray()
    for block_index in range(0, (len(plaintext) + 63) // 64):
        state = init_state(key, nonce, advance_counter(counter, layout, block_index), layout)
        ks = keystream_bytes(keystream_block(state, fault))
        chunk = plaintext[64 * block_index:64 * (block_index + 1)]
        out.extend(p ^ k for p, k in zip(chunk, ks))
    return bytes(out)
