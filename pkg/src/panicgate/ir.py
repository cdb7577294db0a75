"""Core IR vocabulary: address spaces, varnodes, opcodes, micro-ops, programs.

Values are little-endian byte vectors throughout.  Everything in this module
is immutable after construction and safe to share across threads;
``eval_concrete`` is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

MAX_VARNODE_SIZE = 16
ADDR_MASK = (1 << 64) - 1


class IRError(Exception):
    pass


class SizeMismatch(IRError):
    """Operand sizes violate the opcode's arity/size rules."""


class DivideByZero(IRError):
    """Concrete division by zero.  A machine fault, not a panic."""


class Space(Enum):
    CONST = "const"
    REGISTER = "reg"
    UNIQUE = "uniq"
    RAM = "ram"


@dataclass(frozen=True)
class Varnode:
    """Typed storage reference: (space, offset, size in bytes).

    A CONST varnode encodes the constant ``offset`` truncated to ``size``
    bytes; it is never a write destination.
    """

    space: Space
    offset: int
    size: int

    def __post_init__(self) -> None:
        if not (1 <= self.size <= MAX_VARNODE_SIZE):
            raise ValueError(f"varnode size {self.size} outside 1..{MAX_VARNODE_SIZE}")
        if not (0 <= self.offset <= ADDR_MASK):
            raise ValueError(f"varnode offset {self.offset:#x} outside u64")

    def overlaps(self, other: "Varnode") -> bool:
        if self.space is not other.space:
            return False
        return self.offset < other.offset + other.size and other.offset < self.offset + self.size

    def __str__(self) -> str:
        return f"{self.space.value}:0x{self.offset:x}:{self.size}"


class Opcode(Enum):
    COPY = "COPY"
    LOAD = "LOAD"
    STORE = "STORE"
    BRANCH = "BRANCH"
    CBRANCH = "CBRANCH"
    BRANCHIND = "BRANCHIND"
    CALL = "CALL"
    CALLIND = "CALLIND"
    RETURN = "RETURN"
    INT_EQUAL = "INT_EQUAL"
    INT_NOTEQUAL = "INT_NOTEQUAL"
    INT_LESS = "INT_LESS"
    INT_SLESS = "INT_SLESS"
    INT_LESSEQUAL = "INT_LESSEQUAL"
    INT_SLESSEQUAL = "INT_SLESSEQUAL"
    INT_ADD = "INT_ADD"
    INT_SUB = "INT_SUB"
    INT_MULT = "INT_MULT"
    INT_DIV = "INT_DIV"
    INT_SDIV = "INT_SDIV"
    INT_REM = "INT_REM"
    INT_SREM = "INT_SREM"
    INT_ZEXT = "INT_ZEXT"
    INT_SEXT = "INT_SEXT"
    INT_AND = "INT_AND"
    INT_OR = "INT_OR"
    INT_XOR = "INT_XOR"
    INT_NEGATE = "INT_NEGATE"
    INT_2COMP = "INT_2COMP"
    INT_LEFT = "INT_LEFT"
    INT_RIGHT = "INT_RIGHT"
    INT_SRIGHT = "INT_SRIGHT"
    BOOL_NEGATE = "BOOL_NEGATE"
    BOOL_AND = "BOOL_AND"
    BOOL_OR = "BOOL_OR"
    BOOL_XOR = "BOOL_XOR"
    SUBPIECE = "SUBPIECE"


CONTROL_FLOW_OPS = frozenset(
    {
        Opcode.BRANCH,
        Opcode.CBRANCH,
        Opcode.BRANCHIND,
        Opcode.CALL,
        Opcode.CALLIND,
        Opcode.RETURN,
    }
)

# Two inputs of equal size, output of the same size.
BINARY_SAME_SIZE = frozenset(
    {
        Opcode.INT_ADD,
        Opcode.INT_SUB,
        Opcode.INT_MULT,
        Opcode.INT_DIV,
        Opcode.INT_SDIV,
        Opcode.INT_REM,
        Opcode.INT_SREM,
        Opcode.INT_AND,
        Opcode.INT_OR,
        Opcode.INT_XOR,
    }
)

# Two inputs of equal size, 1-byte boolean output.
COMPARISON_OPS = frozenset(
    {
        Opcode.INT_EQUAL,
        Opcode.INT_NOTEQUAL,
        Opcode.INT_LESS,
        Opcode.INT_SLESS,
        Opcode.INT_LESSEQUAL,
        Opcode.INT_SLESSEQUAL,
    }
)

SHIFT_OPS = frozenset({Opcode.INT_LEFT, Opcode.INT_RIGHT, Opcode.INT_SRIGHT})

BOOL_BINARY_OPS = frozenset({Opcode.BOOL_AND, Opcode.BOOL_OR, Opcode.BOOL_XOR})

# Opcodes with a data output (everything eval_concrete understands).
DATAFLOW_OPS = frozenset(o for o in Opcode if o not in CONTROL_FLOW_OPS and o is not Opcode.STORE)


@dataclass(frozen=True)
class PcodeOp:
    """One micro-operation.  ``location`` is (machine_addr, micro_index)."""

    opcode: Opcode
    inputs: tuple[Varnode, ...]
    output: Optional[Varnode]
    location: tuple[int, int]

    @property
    def machine_addr(self) -> int:
        return self.location[0]

    @property
    def micro_index(self) -> int:
        return self.location[1]


@dataclass(frozen=True)
class ArgSpec:
    """Declared function argument.

    ``locations`` holds one varnode for INT, (ptr, len, cap) for SLICE and
    (ptr, len) for STRING.  ``width`` is the byte width of an INT value.
    """

    name: str
    kind: str  # "INT" | "SLICE" | "STRING"
    locations: tuple[Varnode, ...]
    width: int = 0

    def __post_init__(self) -> None:
        expected = {"INT": 1, "SLICE": 3, "STRING": 2}
        if self.kind not in expected:
            raise ValueError(f"unknown arg kind {self.kind!r}")
        if len(self.locations) != expected[self.kind]:
            raise ValueError(f"{self.kind} arg needs {expected[self.kind]} locations")
        if self.kind == "SLICE" or self.kind == "STRING":
            for i, a in enumerate(self.locations):
                for b in self.locations[i + 1 :]:
                    if a == b:
                        raise ValueError(f"{self.kind} arg locations must be distinct")


@dataclass(frozen=True)
class FunctionSig:
    name: str
    args: tuple[ArgSpec, ...]
    entry: int


@dataclass(frozen=True)
class Program:
    """A loaded program: address-indexed micro-op lists plus metadata."""

    instructions: dict[int, tuple[PcodeOp, ...]]
    entry_points: dict[str, int]
    panic_set: frozenset[int]
    signatures: dict[str, FunctionSig]
    initial_ram: dict[int, int]
    sorted_addrs: tuple[int, ...] = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "sorted_addrs", tuple(sorted(self.instructions)))

    def fetch(self, pc: tuple[int, int]) -> Optional[PcodeOp]:
        micros = self.instructions.get(pc[0])
        if micros is None or pc[1] >= len(micros):
            return None
        return micros[pc[1]]

    def next_addr(self, addr: int) -> Optional[int]:
        """Smallest instruction address strictly greater than ``addr``."""
        import bisect

        i = bisect.bisect_right(self.sorted_addrs, addr)
        return self.sorted_addrs[i] if i < len(self.sorted_addrs) else None

    def resolve_entry(self, name: str) -> Optional[int]:
        sig = self.signatures.get(name)
        if sig is not None:
            return sig.entry
        return self.entry_points.get(name)


def is_internal_pcode_target(target: Varnode) -> bool:
    """True iff the branch target is a micro-op-relative jump (const space)."""
    return target.space is Space.CONST


def decode_le(data: bytes) -> int:
    return int.from_bytes(data, "little")


def encode_le(value: int, size: int) -> bytes:
    return (value & ((1 << (8 * size)) - 1)).to_bytes(size, "little")


def to_signed(value: int, bits: int) -> int:
    if value & (1 << (bits - 1)):
        return value - (1 << bits)
    return value


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SizeMismatch(msg)


def eval_concrete(
    opcode: Opcode, inputs: Sequence[bytes], out_size: Optional[int] = None
) -> bytes:
    """Concrete semantics of a dataflow opcode over little-endian bytes.

    INT_* arithmetic wraps modulo 2**(8*size).  Comparison and BOOL opcodes
    return a single byte 0 or 1.  ``out_size`` is required for INT_ZEXT,
    INT_SEXT and SUBPIECE, whose output width is not implied by the inputs.
    """
    op = opcode
    if op in CONTROL_FLOW_OPS or op is Opcode.LOAD or op is Opcode.STORE:
        raise SizeMismatch(f"{op.value} has no pure concrete evaluation")

    if op is Opcode.COPY:
        _require(len(inputs) == 1, "COPY takes one input")
        if out_size is not None:
            _require(out_size == len(inputs[0]), "COPY output size must match input")
        return bytes(inputs[0])

    if op in BINARY_SAME_SIZE:
        _require(len(inputs) == 2, f"{op.value} takes two inputs")
        a, b = inputs
        _require(len(a) == len(b), f"{op.value} operands must be the same size")
        size = len(a)
        if out_size is not None:
            _require(out_size == size, f"{op.value} output size must match operands")
        bits = 8 * size
        av, bv = decode_le(a), decode_le(b)
        if op is Opcode.INT_ADD:
            r = av + bv
        elif op is Opcode.INT_SUB:
            r = av - bv
        elif op is Opcode.INT_MULT:
            r = av * bv
        elif op in (Opcode.INT_DIV, Opcode.INT_REM):
            if bv == 0:
                raise DivideByZero(f"{op.value} by zero")
            r = av // bv if op is Opcode.INT_DIV else av % bv
        elif op in (Opcode.INT_SDIV, Opcode.INT_SREM):
            if bv == 0:
                raise DivideByZero(f"{op.value} by zero")
            sa, sb = to_signed(av, bits), to_signed(bv, bits)
            # C-style truncation toward zero; remainder keeps dividend sign.
            q = abs(sa) // abs(sb)
            if (sa < 0) != (sb < 0):
                q = -q
            r = q if op is Opcode.INT_SDIV else sa - q * sb
        elif op is Opcode.INT_AND:
            r = av & bv
        elif op is Opcode.INT_OR:
            r = av | bv
        else:
            r = av ^ bv
        return encode_le(r, size)

    if op in COMPARISON_OPS:
        _require(len(inputs) == 2, f"{op.value} takes two inputs")
        a, b = inputs
        _require(len(a) == len(b), f"{op.value} operands must be the same size")
        if out_size is not None:
            _require(out_size == 1, "comparison output is 1 byte")
        bits = 8 * len(a)
        av, bv = decode_le(a), decode_le(b)
        if op is Opcode.INT_EQUAL:
            res = av == bv
        elif op is Opcode.INT_NOTEQUAL:
            res = av != bv
        elif op is Opcode.INT_LESS:
            res = av < bv
        elif op is Opcode.INT_LESSEQUAL:
            res = av <= bv
        elif op is Opcode.INT_SLESS:
            res = to_signed(av, bits) < to_signed(bv, bits)
        else:
            res = to_signed(av, bits) <= to_signed(bv, bits)
        return b"\x01" if res else b"\x00"

    if op in SHIFT_OPS:
        _require(len(inputs) == 2, f"{op.value} takes two inputs")
        a, sh = inputs
        size = len(a)
        if out_size is not None:
            _require(out_size == size, "shift output size must match value operand")
        bits = 8 * size
        av = decode_le(a)
        amount = decode_le(sh)
        if op is Opcode.INT_LEFT:
            r = av << amount if amount < bits else 0
        elif op is Opcode.INT_RIGHT:
            r = av >> amount if amount < bits else 0
        else:  # INT_SRIGHT: sign-fill; huge amounts saturate to the sign.
            sv = to_signed(av, bits)
            r = sv >> amount if amount < bits else (-1 if sv < 0 else 0)
        return encode_le(r, size)

    if op in (Opcode.INT_ZEXT, Opcode.INT_SEXT):
        _require(len(inputs) == 1, f"{op.value} takes one input")
        _require(out_size is not None, f"{op.value} needs an output size")
        _require(out_size > len(inputs[0]), f"{op.value} output must be wider than input")
        av = decode_le(inputs[0])
        if op is Opcode.INT_SEXT:
            av = to_signed(av, 8 * len(inputs[0]))
        return encode_le(av, out_size)

    if op in (Opcode.INT_NEGATE, Opcode.INT_2COMP):
        _require(len(inputs) == 1, f"{op.value} takes one input")
        size = len(inputs[0])
        if out_size is not None:
            _require(out_size == size, f"{op.value} output size must match input")
        av = decode_le(inputs[0])
        r = ~av if op is Opcode.INT_NEGATE else -av
        return encode_le(r, size)

    if op is Opcode.BOOL_NEGATE:
        _require(len(inputs) == 1 and len(inputs[0]) == 1, "BOOL_NEGATE takes one 1-byte input")
        if out_size is not None:
            _require(out_size == 1, "BOOL output is 1 byte")
        return b"\x01" if inputs[0][0] == 0 else b"\x00"

    if op in BOOL_BINARY_OPS:
        _require(len(inputs) == 2, f"{op.value} takes two inputs")
        _require(len(inputs[0]) == 1 and len(inputs[1]) == 1, "BOOL operands are 1 byte")
        if out_size is not None:
            _require(out_size == 1, "BOOL output is 1 byte")
        a, b = inputs[0][0] != 0, inputs[1][0] != 0
        if op is Opcode.BOOL_AND:
            res = a and b
        elif op is Opcode.BOOL_OR:
            res = a or b
        else:
            res = a != b
        return b"\x01" if res else b"\x00"

    if op is Opcode.SUBPIECE:
        _require(len(inputs) == 2, "SUBPIECE takes value and byte-offset inputs")
        _require(out_size is not None, "SUBPIECE needs an output size")
        src = inputs[0]
        off = decode_le(inputs[1])
        _require(off + out_size <= len(src), "SUBPIECE selection exceeds input size")
        return bytes(src[off : off + out_size])

    raise SizeMismatch(f"unhandled opcode {op.value}")
