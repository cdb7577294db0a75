"""Symbolic half of the concolic state.

Shadow terms are byte granular: every shadowed byte of a register, unique
or RAM cell maps to an 8-bit term, so overlapping reads and writes stay
honest.  Reads lift un-shadowed bytes as constants of their current
concrete value; a read with no shadowed byte at all yields no term.

Argument shapes follow the target language's layout: integers are plain
variables, slices materialize as concrete-anchored (ptr, len, cap) with
symbolic len/cap bounded to [0, 64], strings as (ptr, len) with symbolic
printable content bytes and len bounded by the materialized capacity
(at most 256).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import terms
from .ir import ArgSpec, FunctionSig, Opcode, PcodeOp, Space, Varnode
from .solver import SolverSession
from .state import MachineState, read_varnode, write_varnode
from .terms import Term

STRING_CONTENT_LIMIT = 256
SLICE_BOUND = 64
PRINTABLE_LO = 0x20
PRINTABLE_HI = 0x7E
ANCHOR_BASE = 0x00F0_0000
ANCHOR_STRIDE = 0x400

Model = dict[str, int]


class UnsupportedKind(Exception):
    pass


class UnboundVar(terms.UnboundVar):
    pass


@dataclass(frozen=True)
class SliceValue:
    """Concrete slice input: backing bytes plus declared length/capacity."""

    data: bytes
    length: int
    cap: int

    def __post_init__(self) -> None:
        if not (0 <= self.length <= self.cap <= SLICE_BOUND):
            raise ValueError(f"slice bounds 0 <= {self.length} <= {self.cap} <= {SLICE_BOUND} violated")


class PathPredicate:
    """Ordered, append-only conjunction of taken branch conditions."""

    def __init__(self) -> None:
        self._terms: list[Term] = []

    def append(self, phi: Term) -> None:
        self._terms.append(phi)

    @property
    def terms(self) -> tuple[Term, ...]:
        return tuple(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms)


class ShadowMemory:
    """Byte-granular shadow terms per address space."""

    def __init__(self) -> None:
        self.registers: dict[int, Term] = {}
        self.uniques: dict[int, Term] = {}
        self.ram: dict[int, Term] = {}

    def _map(self, space: Space) -> Optional[dict[int, Term]]:
        if space is Space.REGISTER:
            return self.registers
        if space is Space.UNIQUE:
            return self.uniques
        if space is Space.RAM:
            return self.ram
        return None

    def read_term(self, state: MachineState, vn: Varnode) -> Optional[Term]:
        if vn.space is Space.CONST:
            return None
        m = self._map(vn.space)
        byte_terms = [m.get(vn.offset + i) for i in range(vn.size)]
        if all(t is None for t in byte_terms):
            return None
        concrete = read_varnode(state, vn)
        parts = []
        for i in range(vn.size - 1, -1, -1):  # MSB first for concat
            t = byte_terms[i]
            parts.append(t if t is not None else terms.const(concrete[i], 8))
        return terms.concat(parts)

    def write_term(self, vn: Varnode, term: Optional[Term]) -> None:
        m = self._map(vn.space)
        if m is None:
            return
        if term is None:
            for i in range(vn.size):
                m.pop(vn.offset + i, None)
            return
        if term.width != 8 * vn.size:
            raise ValueError(f"term width {term.width} != varnode bits {8 * vn.size}")
        for i in range(vn.size):
            m[vn.offset + i] = terms.extract(term, 8 * i + 7, 8 * i)

    def read_ram_term(self, state: MachineState, addr: int, size: int) -> Optional[Term]:
        return self.read_term(state, Varnode(Space.RAM, addr, size))

    def write_ram_term(self, addr: int, size: int, term: Optional[Term]) -> None:
        self.write_term(Varnode(Space.RAM, addr, size), term)

    def items(self):
        for space_name, m in (("reg", self.registers), ("uniq", self.uniques), ("ram", self.ram)):
            for offset, t in m.items():
                yield space_name, offset, t


@dataclass
class SymbolicArg:
    spec: ArgSpec
    seed: object  # int | bytes | SliceValue
    anchor: Optional[int] = None
    capacity: int = 0
    var: Optional[Term] = None
    len_var: Optional[Term] = None
    cap_var: Optional[Term] = None
    content_vars: tuple[Term, ...] = ()

    def var_names(self) -> set[str]:
        names = set()
        for t in (self.var, self.len_var, self.cap_var, *self.content_vars):
            if t is not None:
                names.add(t.name)
        return names


def arg_anchor(index: int) -> int:
    return ANCHOR_BASE + index * ANCHOR_STRIDE


def normalize_seed(spec: ArgSpec, value) -> object:
    if spec.kind == "INT":
        if not isinstance(value, int):
            raise ValueError(f"arg {spec.name!r} expects an integer seed")
        return value & ((1 << (8 * spec.width)) - 1)
    if spec.kind == "STRING":
        if isinstance(value, str):
            value = value.encode()
        if not isinstance(value, (bytes, bytearray)):
            raise ValueError(f"arg {spec.name!r} expects a text seed")
        data = bytes(value)
        if len(data) > STRING_CONTENT_LIMIT:
            raise ValueError(f"string seed exceeds the {STRING_CONTENT_LIMIT}-byte limit")
        return data
    if spec.kind == "SLICE":
        if isinstance(value, (bytes, bytearray)):
            value = SliceValue(bytes(value), len(value), len(value))
        if not isinstance(value, SliceValue):
            raise ValueError(f"arg {spec.name!r} expects slice bytes")
        if len(value.data) > SLICE_BOUND:
            raise ValueError(f"slice data exceeds {SLICE_BOUND} bytes")
        return value
    raise UnsupportedKind(spec.kind)


def materialize_inputs(
    sig: FunctionSig, values: Sequence[object], state: MachineState
) -> None:
    """Write concrete argument values into the machine state.

    Shared by symbolic initialization and pure replay so both agree on
    anchors and layout byte for byte.
    """
    if len(values) != len(sig.args):
        raise ValueError(f"{sig.name} takes {len(sig.args)} args, got {len(values)}")
    for i, (spec, value) in enumerate(zip(sig.args, values)):
        value = normalize_seed(spec, value)
        if spec.kind == "INT":
            loc = spec.locations[0]
            write_varnode(state, loc, value.to_bytes(spec.width, "little"))
        elif spec.kind == "STRING":
            ptr_loc, len_loc = spec.locations
            anchor = arg_anchor(i)
            write_varnode(state, ptr_loc, anchor.to_bytes(ptr_loc.size, "little"))
            write_varnode(state, len_loc, len(value).to_bytes(len_loc.size, "little"))
            state.write_ram_bytes(anchor, value)
        else:  # SLICE
            ptr_loc, len_loc, cap_loc = spec.locations
            anchor = arg_anchor(i)
            write_varnode(state, ptr_loc, anchor.to_bytes(ptr_loc.size, "little"))
            write_varnode(state, len_loc, value.length.to_bytes(len_loc.size, "little"))
            write_varnode(state, cap_loc, value.cap.to_bytes(cap_loc.size, "little"))
            state.write_ram_bytes(anchor, value.data)


def init_symbolic_args(
    sig: FunctionSig,
    seeds: Sequence[object],
    state: MachineState,
    shadow: ShadowMemory,
    session: SolverSession,
) -> tuple[list[SymbolicArg], Model]:
    """Create argument variables, seed the concrete state, bound the shapes.

    Returns the symbolic args plus the seed model assigning every created
    variable its concrete seed value.
    """
    values = [normalize_seed(spec, v) for spec, v in zip(sig.args, seeds)]
    if len(seeds) != len(sig.args):
        raise ValueError(f"{sig.name} takes {len(sig.args)} args, got {len(seeds)}")
    materialize_inputs(sig, values, state)

    args: list[SymbolicArg] = []
    seed_model: Model = {}
    for i, (spec, value) in enumerate(zip(sig.args, values)):
        sym = SymbolicArg(spec=spec, seed=value)
        if spec.kind == "INT":
            loc = spec.locations[0]
            v = terms.var(spec.name, 8 * spec.width)
            session.declare(spec.name, v.width)
            shadow.write_term(loc, v)
            seed_model[spec.name] = value
            sym.var = v
        elif spec.kind == "STRING":
            ptr_loc, len_loc = spec.locations
            anchor = arg_anchor(i)
            capacity = len(value)
            len_name = f"{spec.name}!len"
            len_var = terms.var(len_name, 8 * len_loc.size)
            session.declare(len_name, len_var.width)
            shadow.write_term(len_loc, len_var)
            seed_model[len_name] = capacity
            session.assert_base(terms.cmp_op("bvule", len_var, terms.const(capacity, len_var.width)))
            content = []
            for j, byte in enumerate(value):
                bname = f"{spec.name}!b{j}"
                bvar = terms.var(bname, 8)
                session.declare(bname, 8)
                shadow.write_ram_term(anchor + j, 1, bvar)
                seed_model[bname] = byte
                # Command-line text inputs: keep content in printable ASCII.
                session.assert_base(terms.cmp_op("bvule", terms.const(PRINTABLE_LO, 8), bvar))
                session.assert_base(terms.cmp_op("bvule", bvar, terms.const(PRINTABLE_HI, 8)))
                content.append(bvar)
            sym.anchor = anchor
            sym.capacity = capacity
            sym.len_var = len_var
            sym.content_vars = tuple(content)
        elif spec.kind == "SLICE":
            ptr_loc, len_loc, cap_loc = spec.locations
            anchor = arg_anchor(i)
            len_name = f"{spec.name}!len"
            cap_name = f"{spec.name}!cap"
            len_var = terms.var(len_name, 8 * len_loc.size)
            cap_var = terms.var(cap_name, 8 * cap_loc.size)
            session.declare(len_name, len_var.width)
            session.declare(cap_name, cap_var.width)
            shadow.write_term(len_loc, len_var)
            shadow.write_term(cap_loc, cap_var)
            seed_model[len_name] = value.length
            seed_model[cap_name] = value.cap
            w = max(len_var.width, cap_var.width)
            lv = terms.zero_extend(len_var, w - len_var.width)
            cv = terms.zero_extend(cap_var, w - cap_var.width)
            session.assert_base(terms.cmp_op("bvule", lv, cv))
            session.assert_base(terms.cmp_op("bvule", cap_var, terms.const(SLICE_BOUND, cap_var.width)))
            sym.anchor = anchor
            sym.capacity = len(value.data)
            sym.len_var = len_var
            sym.cap_var = cap_var
        else:
            raise UnsupportedKind(spec.kind)
        args.append(sym)
    return args, seed_model


_SHADOW_BINOP = {
    Opcode.INT_ADD: "bvadd",
    Opcode.INT_SUB: "bvsub",
    Opcode.INT_MULT: "bvmul",
    Opcode.INT_DIV: "bvudiv",
    Opcode.INT_SDIV: "bvsdiv",
    Opcode.INT_REM: "bvurem",
    Opcode.INT_SREM: "bvsrem",
    Opcode.INT_AND: "bvand",
    Opcode.INT_OR: "bvor",
    Opcode.INT_XOR: "bvxor",
}

_SHADOW_CMP = {
    Opcode.INT_EQUAL: ("=", False),
    Opcode.INT_NOTEQUAL: ("=", True),
    Opcode.INT_LESS: ("bvult", False),
    Opcode.INT_LESSEQUAL: ("bvule", False),
    Opcode.INT_SLESS: ("bvslt", False),
    Opcode.INT_SLESSEQUAL: ("bvsle", False),
}

_SHADOW_SHIFT = {
    Opcode.INT_LEFT: "bvshl",
    Opcode.INT_RIGHT: "bvlshr",
    Opcode.INT_SRIGHT: "bvashr",
}


def shadow_eval(op: PcodeOp, shadow: ShadowMemory, state: MachineState) -> Optional[Term]:
    """Mirror a dataflow micro-op over shadow terms.

    Returns the output term, or None when every input is concrete (the
    caller then clears the output's shadow).  Inputs without terms are
    lifted as constants of their pre-step concrete value.
    """
    in_terms = [shadow.read_term(state, vn) for vn in op.inputs]
    if all(t is None for t in in_terms):
        return None

    def lift(i: int) -> Term:
        t = in_terms[i]
        if t is not None:
            return t
        vn = op.inputs[i]
        return terms.const(int.from_bytes(read_varnode(state, vn), "little"), 8 * vn.size)

    opc = op.opcode
    out_bits = 8 * op.output.size if op.output is not None else 0
    if opc is Opcode.COPY:
        return lift(0)
    if opc in _SHADOW_BINOP:
        return terms.bv_binop(_SHADOW_BINOP[opc], lift(0), lift(1))
    if opc in _SHADOW_CMP:
        smt_op, negate = _SHADOW_CMP[opc]
        cond = terms.cmp_op(smt_op, lift(0), lift(1))
        if negate:
            cond = terms.not_(cond)
        return terms.bool_to_bv(cond, out_bits)
    if opc in _SHADOW_SHIFT:
        a, sh = lift(0), lift(1)
        if sh.width < a.width:
            sh = terms.zero_extend(sh, a.width - sh.width)
        elif sh.width > a.width:
            sh = terms.extract(sh, a.width - 1, 0)
        return terms.bv_binop(_SHADOW_SHIFT[opc], a, sh)
    if opc is Opcode.INT_ZEXT:
        return terms.zero_extend(lift(0), out_bits - 8 * op.inputs[0].size)
    if opc is Opcode.INT_SEXT:
        return terms.sign_extend(lift(0), out_bits - 8 * op.inputs[0].size)
    if opc is Opcode.INT_NEGATE:
        return terms.bv_not(lift(0))
    if opc is Opcode.INT_2COMP:
        return terms.bv_neg(lift(0))
    if opc is Opcode.BOOL_NEGATE:
        return terms.bool_to_bv(terms.not_(terms.truthy(lift(0))), out_bits)
    if opc is Opcode.BOOL_AND:
        return terms.bool_to_bv(terms.and_(terms.truthy(lift(0)), terms.truthy(lift(1))), out_bits)
    if opc is Opcode.BOOL_OR:
        return terms.bool_to_bv(terms.or_(terms.truthy(lift(0)), terms.truthy(lift(1))), out_bits)
    if opc is Opcode.BOOL_XOR:
        return terms.bool_to_bv(terms.xor_(terms.truthy(lift(0)), terms.truthy(lift(1))), out_bits)
    if opc is Opcode.SUBPIECE:
        off = op.inputs[1].offset
        return terms.extract(lift(0), 8 * (off + op.output.size) - 1, 8 * off)
    return None


def references_args(phi: Term, args: Sequence[SymbolicArg]) -> bool:
    """True iff a variable created for any argument occurs in phi."""
    arg_names: set[str] = set()
    for a in args:
        arg_names |= a.var_names()
    return bool(terms.free_vars(phi) & arg_names)


def assert_path(pp: PathPredicate, phi: Term, session: SolverSession) -> None:
    """Append phi to the path predicate and assert it at the base scope.

    Byte-width flags are coerced to booleans via the non-zero rule.
    """
    cond = terms.truthy(phi)
    pp.append(cond)
    session.assert_base(cond)


def lazily_concretize(t: Term, seed_model: Model, session: Optional[SolverSession] = None) -> int:
    """Evaluate a term under the seed assignment without any solver query.

    Callers keep the original term for later queries; this only extracts
    the concrete value the current model implies.
    """
    if session is not None:
        session.stats.concretizations += 1
    try:
        return terms.evaluate(t, seed_model)
    except terms.UnboundVar as exc:
        raise UnboundVar(str(exc)) from exc
