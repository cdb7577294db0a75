"""Concrete machine state: sparse byte maps, pc, shadow call stack, stepping.

A state is single-owner mutable; clone one per replay.  Unwritten bytes read
as zero unless seeded by the program's initial RAM image.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .ir import (
    DivideByZero,
    Opcode,
    PcodeOp,
    Program,
    Space,
    Varnode,
    decode_le,
    encode_le,
    eval_concrete,
    to_signed,
)

DEFAULT_STEP_BUDGET = 10_000_000


class WriteToConst(Exception):
    pass


@dataclass(frozen=True)
class Continue:
    pc: tuple[int, int]


@dataclass(frozen=True)
class PanicReached:
    addr: int


@dataclass(frozen=True)
class Fault:
    kind: str  # "divide_by_zero" | "unmapped_target" | "budget"


@dataclass(frozen=True)
class Halt:
    pass


StepOutcome = Continue | PanicReached | Fault | Halt


@dataclass
class MachineState:
    registers: dict[int, int] = field(default_factory=dict)
    ram: dict[int, int] = field(default_factory=dict)
    uniques: dict[int, int] = field(default_factory=dict)
    pc: Optional[tuple[int, int]] = None
    step_count: int = 0
    call_stack: list[tuple[int, int]] = field(default_factory=list)

    @classmethod
    def boot(cls, program: Program, entry: int) -> "MachineState":
        return cls(ram=dict(program.initial_ram), pc=(entry, 0))

    def clone(self) -> "MachineState":
        return MachineState(
            registers=dict(self.registers),
            ram=dict(self.ram),
            uniques=dict(self.uniques),
            pc=self.pc,
            step_count=self.step_count,
            call_stack=list(self.call_stack),
        )

    def _space_map(self, space: Space) -> dict[int, int]:
        if space is Space.REGISTER:
            return self.registers
        if space is Space.RAM:
            return self.ram
        if space is Space.UNIQUE:
            return self.uniques
        raise WriteToConst("const space has no byte map")

    def read_ram_bytes(self, addr: int, size: int) -> bytes:
        return bytes(self.ram.get(addr + i, 0) for i in range(size))

    def write_ram_bytes(self, addr: int, data: bytes) -> None:
        for i, b in enumerate(data):
            self.ram[addr + i] = b


def read_varnode(state: MachineState, vn: Varnode) -> bytes:
    if vn.space is Space.CONST:
        return encode_le(vn.offset, vn.size)
    m = state._space_map(vn.space)
    return bytes(m.get(vn.offset + i, 0) for i in range(vn.size))


def write_varnode(state: MachineState, vn: Varnode, value: bytes) -> None:
    if vn.space is Space.CONST:
        raise WriteToConst(f"cannot write {vn}")
    if len(value) != vn.size:
        raise ValueError(f"value length {len(value)} != varnode size {vn.size}")
    m = state._space_map(vn.space)
    for i, b in enumerate(value):
        m[vn.offset + i] = b


def _advance(loc: tuple[int, int], program: Program) -> StepOutcome:
    addr, idx = loc
    micros = program.instructions[addr]
    if idx + 1 < len(micros):
        return Continue((addr, idx + 1))
    nxt = program.next_addr(addr)
    if nxt is None:
        return Halt()
    return Continue((nxt, 0))


def _machine_target(program: Program, addr: int) -> StepOutcome:
    # Panic entry takes precedence over any stub body at the same address.
    if addr in program.panic_set:
        return PanicReached(addr)
    if addr in program.instructions:
        return Continue((addr, 0))
    return Fault("unmapped_target")


def _branch_to(loc: tuple[int, int], program: Program, target: Varnode) -> StepOutcome:
    if target.space is Space.CONST:
        addr, idx = loc
        micros = program.instructions[addr]
        rel = to_signed(target.offset, 8 * target.size)
        new_idx = idx + rel
        if new_idx == len(micros):
            nxt = program.next_addr(addr)
            return Halt() if nxt is None else Continue((nxt, 0))
        if 0 <= new_idx < len(micros):
            return Continue((addr, new_idx))
        return Fault("unmapped_target")
    if target.space is Space.RAM:
        return _machine_target(program, target.offset)
    return Fault("unmapped_target")


def step_concrete(state: MachineState, op: PcodeOp, program: Program) -> StepOutcome:
    """Execute one micro-op; on Continue the state's pc is already updated."""
    state.step_count += 1
    opc = op.opcode
    loc = op.location
    outcome: StepOutcome

    if opc is Opcode.BRANCH:
        outcome = _branch_to(loc, program, op.inputs[0])
    elif opc is Opcode.CBRANCH:
        cond = read_varnode(state, op.inputs[1])
        if cond[0] != 0:
            outcome = _branch_to(loc, program, op.inputs[0])
        else:
            outcome = _advance(loc, program)
    elif opc is Opcode.BRANCHIND:
        addr = decode_le(read_varnode(state, op.inputs[0]))
        outcome = _machine_target(program, addr)
    elif opc in (Opcode.CALL, Opcode.CALLIND):
        if opc is Opcode.CALL:
            target = op.inputs[0]
            if target.space is not Space.RAM:
                state.pc = None
                return Fault("unmapped_target")
            addr = target.offset
        else:
            addr = decode_le(read_varnode(state, op.inputs[0]))
        outcome = _machine_target(program, addr)
        if isinstance(outcome, Continue):
            ret = _advance(loc, program)
            if isinstance(ret, Continue):
                state.call_stack.append(ret.pc)
            else:
                # Call in the program's last micro slot: return falls off the end.
                state.call_stack.append((outcome.pc[0], -1))
    elif opc is Opcode.RETURN:
        if not state.call_stack:
            outcome = Halt()
        else:
            ret_pc = state.call_stack.pop()
            outcome = Halt() if ret_pc[1] < 0 else Continue(ret_pc)
    elif opc is Opcode.LOAD:
        addr = decode_le(read_varnode(state, op.inputs[0]))
        write_varnode(state, op.output, state.read_ram_bytes(addr, op.output.size))
        outcome = _advance(loc, program)
    elif opc is Opcode.STORE:
        addr = decode_le(read_varnode(state, op.inputs[0]))
        state.write_ram_bytes(addr, read_varnode(state, op.inputs[1]))
        outcome = _advance(loc, program)
    else:
        try:
            result = eval_concrete(
                opc,
                [read_varnode(state, vn) for vn in op.inputs],
                out_size=op.output.size if op.output is not None else None,
            )
        except DivideByZero:
            state.pc = None
            return Fault("divide_by_zero")
        if op.output is not None:
            write_varnode(state, op.output, result)
        outcome = _advance(loc, program)

    state.pc = outcome.pc if isinstance(outcome, Continue) else None
    return outcome


def run_concrete(
    state: MachineState,
    program: Program,
    step_budget: int = DEFAULT_STEP_BUDGET,
    trace: Optional[list[tuple[int, int]]] = None,
) -> StepOutcome:
    """Drive step_concrete until a terminal outcome or budget exhaustion."""
    while state.pc is not None:
        if state.step_count >= step_budget:
            state.pc = None
            return Fault("budget")
        pc = state.pc
        op = program.fetch(pc)
        if op is None:
            state.pc = None
            return Fault("unmapped_target")
        if trace is not None:
            trace.append(pc)
        outcome = step_concrete(state, op, program)
        if not isinstance(outcome, Continue):
            return outcome
    return Halt()
