"""RISC-V compressed (16-bit) instruction subset with a key-gate fault mask.

``decode`` applies an XOR mask to the fetched halfword before decoding,
modeling a stuck wrong locking-key bit on an instruction-bit line.  The
supported subset covers the ten operations used by the bundled
quarter-round program plus C.ANDI, on a 32-bit, 16-register core (x0
hardwired to zero).  Anything else decodes to ILLEGAL.

Field layouts (bit 15 left, bit 0 right):

    CA   100011 rd' f2 rs2' 01    f2: 00=C.SUB 01=C.XOR 10=C.OR 11=C.AND
    CB   100 s5 00 rd'  s[4:0] 01  C.SRLI (shamt = s5:s[4:0], 1..31)
    CB   100 i5 10 rd'  i[4:0] 01  C.ANDI (imm sign-extended 6-bit)
    CI   010 i5 rd[4:0] i[4:0] 01  C.LI
    CI   000 s5 rd[4:0] s[4:0] 10  C.SLLI (shamt 1..31)
    CR   1000  rd[4:0] rs2[4:0] 10  C.MV  (rs2 != 0)
    CR   1001  rd[4:0] rs2[4:0] 10  C.ADD (rs2 != 0)

Note that bit 5 is the low funct2 bit of the CA group, so a bit-5 fault
swaps C.OR with C.AND and C.SUB with C.XOR.

Fixture program format: one instruction per line, ``<hex16>  # <mnemonic>``.
Register convention: a, b, c, d arrive in x10..x13, with shadow copies in
x2..x5; x14/x15 are temporaries; the program clobbers x3, x5, x14, x15.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

MASK32 = 0xFFFFFFFF
BIT5_MASK = 0x0020
NUM_REGS = 16

# Quarter-round register convention.
QR_INPUT_REGS = (10, 11, 12, 13)
QR_SHADOW_REGS = (2, 3, 4, 5)
QR_FUEL = 64  # static bound on fixture length


class EncodeError(ValueError):
    pass


@dataclass(frozen=True)
class DecodedInstr:
    op: str
    rd: int = 0
    rs2: int = 0
    imm: int = 0


ILLEGAL = DecodedInstr("ILLEGAL")

_CA_OPS = ("C.SUB", "C.XOR", "C.OR", "C.AND")


class Trap:
    """Result marker for a program that hit an undecodable instruction."""

    def __repr__(self):
        return "Trap"

    def __bool__(self):
        return False


TRAP = Trap()


def _sext6(value):
    return value - 64 if value & 0x20 else value


def is_compressed(word):
    return 0 <= word <= 0xFFFF and word & 0x3 != 0x3


def decode(word, mask=0):
    """Decode ``word ^ mask``; anything outside the subset is ILLEGAL.

    ``word`` must be a valid compressed halfword (low two bits != 11); the
    masked word may fall anywhere, including the 32-bit instruction space,
    which simply decodes to ILLEGAL.
    """
    if not 0 <= word <= 0xFFFF:
        raise EncodeError(f"instruction word {word:#x} is not 16-bit")
    if word & 0x3 == 0x3:
        raise EncodeError(f"word {word:#06x} is a 32-bit instruction, not compressed")
    if not 0 <= mask <= 0xFFFF:
        raise EncodeError(f"mask {mask:#x} is not 16-bit")
    w = word ^ mask
    op = w & 0x3
    funct3 = w >> 13

    if op == 0b01:
        if funct3 == 0b010:  # C.LI
            rd = (w >> 7) & 0x1F
            if rd == 0 or rd >= NUM_REGS:
                return ILLEGAL
            return DecodedInstr("C.LI", rd=rd, imm=_sext6(((w >> 12) & 1) << 5 | ((w >> 2) & 0x1F)))
        if funct3 == 0b100:
            sub = (w >> 10) & 0x3
            rd = 8 + ((w >> 7) & 0x7)
            if sub == 0b00:  # C.SRLI
                shamt = ((w >> 12) & 1) << 5 | ((w >> 2) & 0x1F)
                if not 1 <= shamt <= 31:
                    return ILLEGAL
                return DecodedInstr("C.SRLI", rd=rd, imm=shamt)
            if sub == 0b10:  # C.ANDI
                return DecodedInstr("C.ANDI", rd=rd, imm=_sext6(((w >> 12) & 1) << 5 | ((w >> 2) & 0x1F)))
            if sub == 0b11:
                if (w >> 12) & 1:  # 64-bit word ops
                    return ILLEGAL
                rs2 = 8 + ((w >> 2) & 0x7)
                return DecodedInstr(_CA_OPS[(w >> 5) & 0x3], rd=rd, rs2=rs2)
            return ILLEGAL  # C.SRAI
        return ILLEGAL

    if op == 0b10:
        if funct3 == 0b000:  # C.SLLI
            rd = (w >> 7) & 0x1F
            shamt = ((w >> 12) & 1) << 5 | ((w >> 2) & 0x1F)
            if rd == 0 or rd >= NUM_REGS or not 1 <= shamt <= 31:
                return ILLEGAL
            return DecodedInstr("C.SLLI", rd=rd, imm=shamt)
        if funct3 == 0b100:
            rd = (w >> 7) & 0x1F
            rs2 = (w >> 2) & 0x1F
            if rs2 == 0 or rd == 0:  # jumps, ebreak, hints
                return ILLEGAL
            if rd >= NUM_REGS or rs2 >= NUM_REGS:
                return ILLEGAL
            return DecodedInstr("C.ADD" if (w >> 12) & 1 else "C.MV", rd=rd, rs2=rs2)
        return ILLEGAL

    return ILLEGAL  # quadrant 0 and 32-bit space


def encode(d):
    """Inverse of ``decode(.., mask=0)`` for the supported subset."""
    op = d.op
    if op in _CA_OPS:
        _need_reg(d.rd, 8, 15, op, "rd")
        _need_reg(d.rs2, 8, 15, op, "rs2")
        f2 = _CA_OPS.index(op)
        return 0b100011 << 10 | (d.rd - 8) << 7 | f2 << 5 | (d.rs2 - 8) << 2 | 0b01
    if op == "C.SRLI":
        _need_reg(d.rd, 8, 15, op, "rd")
        _need_shamt(d.imm, op)
        return 0b100 << 13 | (d.imm >> 5) << 12 | 0b00 << 10 | (d.rd - 8) << 7 | (d.imm & 0x1F) << 2 | 0b01
    if op == "C.ANDI":
        _need_reg(d.rd, 8, 15, op, "rd")
        imm6 = _imm6(d.imm, op)
        return 0b100 << 13 | (imm6 >> 5) << 12 | 0b10 << 10 | (d.rd - 8) << 7 | (imm6 & 0x1F) << 2 | 0b01
    if op == "C.LI":
        _need_reg(d.rd, 1, 15, op, "rd")
        imm6 = _imm6(d.imm, op)
        return 0b010 << 13 | (imm6 >> 5) << 12 | d.rd << 7 | (imm6 & 0x1F) << 2 | 0b01
    if op == "C.SLLI":
        _need_reg(d.rd, 1, 15, op, "rd")
        _need_shamt(d.imm, op)
        return (d.imm >> 5) << 12 | d.rd << 7 | (d.imm & 0x1F) << 2 | 0b10
    if op in ("C.MV", "C.ADD"):
        _need_reg(d.rd, 1, 15, op, "rd")
        _need_reg(d.rs2, 1, 15, op, "rs2")
        funct4 = 0b1001 if op == "C.ADD" else 0b1000
        return funct4 << 12 | d.rd << 7 | d.rs2 << 2 | 0b10
    raise EncodeError(f"cannot encode op {op!r}")


def _need_reg(r, lo, hi, op, role):
    if not lo <= r <= hi:
        raise EncodeError(f"{op} {role} must be x{lo}..x{hi}, got x{r}")


def _need_shamt(s, op):
    if not 1 <= s <= 31:
        raise EncodeError(f"{op} shift amount must be 1..31, got {s}")


def _imm6(imm, op):
    if not -32 <= imm <= 31:
        raise EncodeError(f"{op} immediate must fit 6 signed bits, got {imm}")
    return imm & 0x3F


@dataclass(frozen=True)
class CoreState:
    """Sixteen 32-bit registers, x0 pinned to zero."""

    regs: tuple[int, ...]

    def __post_init__(self):
        if len(self.regs) != NUM_REGS:
            raise EncodeError(f"core has {NUM_REGS} registers, got {len(self.regs)}")
        if self.regs[0] != 0:
            raise EncodeError("x0 must read as zero")

    @classmethod
    def boot(cls, **named):
        """Fresh state with ``x<i>=value`` overrides, e.g. ``boot(x10=5)``."""
        regs = [0] * NUM_REGS
        for name, value in named.items():
            regs[int(name.lstrip("x"))] = value & MASK32
        regs[0] = 0
        return cls(tuple(regs))

    def reg(self, i):
        return self.regs[i]


def step(state, d):
    """One-instruction architectural update; pure."""
    if d.op == "ILLEGAL":
        raise EncodeError("cannot step an ILLEGAL instruction")
    rd_val = state.regs[d.rd]
    rs2_val = state.regs[d.rs2]
    op = d.op
    if op == "C.AND":
        result = rd_val & rs2_val
    elif op == "C.OR":
        result = rd_val | rs2_val
    elif op == "C.XOR":
        result = rd_val ^ rs2_val
    elif op == "C.SUB":
        result = (rd_val - rs2_val) & MASK32
    elif op == "C.ADD":
        result = (rd_val + rs2_val) & MASK32
    elif op == "C.MV":
        result = rs2_val
    elif op == "C.LI":
        result = d.imm & MASK32
    elif op == "C.SLLI":
        result = (rd_val << d.imm) & MASK32
    elif op == "C.SRLI":
        result = rd_val >> d.imm
    elif op == "C.ANDI":
        result = rd_val & (d.imm & MASK32)
    else:
        raise EncodeError(f"unknown op {op!r}")
    regs = list(state.regs)
    regs[d.rd] = result
    regs[0] = 0
    return CoreState(tuple(regs))


def build_quarter_round_program():
    """Assemble the quarter-round fixture as (word, mnemonic) pairs.

    One ChaCha quarter round on (x10..x13); each rotation is shift-left,
    shift-right, C.OR merge.  The instruction mix is arranged so that the
    bit-5 fault leaves every step either intact or annihilated:

    * CA-format ops keep their registers under a bit-5 flip, only the
      operation swaps (OR<->AND, XOR<->SUB).
    * C.ADD/C.MV read rs2^8 under the flip, so additions source x3/x5,
      whose shadow values are the real operands at first use and zero
      afterwards (the double left shifts clear them on either decode path,
      since both shift-amount readings total >= 32).
    * No shift amount of 8 appears anywhere (8^8 = 0 would be undecodable),
      which is why the rotate-by-8 does its left shift as 7 then 1, and the
      two post-shift readings of every merge stay bit-disjoint, so the
      faulted AND-merge is exactly zero.

    A preamble of canary shifts into dead registers makes every other
    single-bit instruction fault undecodable somewhere in the program, so
    corrupted fetches trap instead of limping into coincidental
    pass-through of the inputs.
    """
    def i(op, rd, rs2=0, imm=0):
        d = DecodedInstr(op, rd=rd, rs2=rs2, imm=imm)
        if op in ("C.SLLI", "C.SRLI"):
            text = f"c.slli x{rd}, {imm}" if op == "C.SLLI" else f"c.srli x{rd}, {imm}"
        else:
            text = f"{op.lower()} x{rd}, x{rs2}"
        return encode(d), text

    prog = [
        # decode canaries: dead-register shifts that become undecodable
        # under the instruction-bit faults the round body tolerates
        i("C.SLLI", 9, imm=2),    # bit-3 fault: shift amount drops to 0
        i("C.SLLI", 9, imm=4),    # bit-4 fault: shift amount drops to 0
        i("C.SLLI", 1, imm=16),   # bit-7 fault: destination becomes x0
        i("C.SLLI", 2, imm=16),   # bit-8 fault: destination becomes x0
        i("C.SLLI", 4, imm=16),   # bit-9 fault: destination becomes x0
        # a += b; d ^= a; d = rotl(d, 16)
        i("C.ADD", 10, 11),
        i("C.XOR", 13, 10),
        i("C.MV", 14, 13),
        i("C.SLLI", 14, imm=16),
        i("C.SRLI", 13, imm=16),
        i("C.OR", 13, 14),
        # clear the d shadow on both decode paths
        i("C.SLLI", 5, imm=16),
        i("C.SLLI", 5, imm=17),
        # c += d; b ^= c; b = rotl(b, 12)
        i("C.ADD", 12, 13),
        i("C.XOR", 11, 12),
        i("C.MV", 15, 11),
        i("C.SLLI", 15, imm=12),
        i("C.SRLI", 11, imm=20),
        i("C.OR", 11, 15),
        # clear the b shadow
        i("C.SLLI", 3, imm=16),
        i("C.SLLI", 3, imm=17),
        # a += b; d ^= a; d = rotl(d, 8)  (left shift split as 7 + 1)
        i("C.ADD", 10, 11),
        i("C.XOR", 13, 10),
        i("C.MV", 14, 13),
        i("C.SLLI", 14, imm=7),
        i("C.SLLI", 14, imm=1),
        i("C.SRLI", 13, imm=24),
        i("C.OR", 13, 14),
        # c += d; b ^= c; b = rotl(b, 7)
        i("C.ADD", 12, 13),
        i("C.XOR", 11, 12),
        i("C.MV", 15, 11),
        i("C.SLLI", 15, imm=7),
        i("C.SRLI", 11, imm=25),
        i("C.OR", 11, 15),
    ]
    return prog


def parse_program(text):
    """Parse fixture text: one ``<hex16>  # <mnemonic>`` line per instruction."""
    words = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            word = int(line, 16)
        except ValueError:
            raise EncodeError(f"line {lineno}: bad instruction word {line!r}") from None
        if not is_compressed(word):
            raise EncodeError(f"line {lineno}: {word:#06x} is not a compressed instruction")
        words.append(word)
    return tuple(words)


def format_program(prog):
    return "".join(f"{word:04x}  # {text}\n" for word, text in prog)


@lru_cache(maxsize=1)
def quarter_round_program():
    """The shipped fixture, parsed from the packaged data file."""
    text = resources.files("lockleak.data").joinpath("quarter_round.prog").read_text()
    words = parse_program(text)
    if len(words) > QR_FUEL:
        raise EncodeError(f"fixture exceeds the static bound of {QR_FUEL} instructions")
    return words


def run_quarter_round(a, b, c, d, mask=0, program=None):
    """Execute the quarter-round fixture through the masked decoder.

    Returns the updated ``(a, b, c, d)`` or :data:`TRAP` if any fixture
    instruction decodes to ILLEGAL under ``mask``.
    """
    words = quarter_round_program() if program is None else program
    if len(words) > QR_FUEL:
        raise EncodeError(f"program exceeds the static bound of {QR_FUEL} instructions")
    regs = [0] * NUM_REGS
    for reg, val in zip(QR_INPUT_REGS, (a, b, c, d)):
        regs[reg] = val & MASK32
    for reg, val in zip(QR_SHADOW_REGS, (a, b, c, d)):
        regs[reg] = val & MASK32
    state = CoreState(tuple(regs))
    for word in words:
        instr = decode(word, mask)
        if instr.op == "ILLEGAL":
            return TRAP
        state = step(state, instr)
    return tuple(state.regs[r] for r in QR_INPUT_REGS)
