"""Parser, validator and canonical emitter for the textual program format.

Format summary (line oriented, ``;`` starts a comment):

    .entry NAME 0xADDR
    .panic 0xADDR ...
    .sig NAME(arg, ...) entry 0xADDR
    .ram                       ; followed by lines: 0xADDR 0xBB 0xCC ...
    .code                      ; followed by instruction lines
    0xADDR: OPCODE operand* [-> vn]
            OPCODE operand* [-> vn]   ; continuation micro, same instruction

An operand or destination is ``space:0xOFFSET:SIZE`` with space one of
const/reg/uniq/ram.  Addresses and constants are hex with the 0x prefix,
sizes are decimal bytes.  INT argument widths are written in bits
(``INT8`` is one byte).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .ir import (
    ArgSpec,
    BINARY_SAME_SIZE,
    BOOL_BINARY_OPS,
    COMPARISON_OPS,
    FunctionSig,
    MAX_VARNODE_SIZE,
    Opcode,
    PcodeOp,
    Program,
    SHIFT_OPS,
    Space,
    Varnode,
    to_signed,
)


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    line: int
    message: str

    def __str__(self) -> str:
        return f"{self.severity.value}:{self.line}: {self.message}"


@dataclass
class ParseResult:
    program: Optional[Program]
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.program is not None

    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity is Severity.ERROR]


_VN_RE = re.compile(r"^(const|reg|uniq|ram):(0[xX][0-9a-fA-F]+):(\d+)$")
_ADDR_RE = re.compile(r"^0[xX][0-9a-fA-F]+$")
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_SIG_RE = re.compile(r"^\.sig\s+([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\s+entry\s+(0[xX][0-9a-fA-F]+)$")

_SPACES = {"const": Space.CONST, "reg": Space.REGISTER, "uniq": Space.UNIQUE, "ram": Space.RAM}
_OPCODES = {o.value: o for o in Opcode}


def _parse_vn(token: str) -> Optional[Varnode]:
    m = _VN_RE.match(token)
    if not m:
        return None
    size = int(m.group(3))
    if not (1 <= size <= MAX_VARNODE_SIZE):
        return None
    return Varnode(_SPACES[m.group(1)], int(m.group(2), 16), size)


def _parse_arg(text: str) -> Optional[ArgSpec]:
    head, sep, rest = text.partition(":")
    if not sep or not _NAME_RE.match(head.strip()):
        return None
    name = head.strip()
    rest = rest.strip()
    m = re.match(r"^INT(\d+)@(\S+)$", rest)
    if m:
        bits = int(m.group(1))
        if bits <= 0 or bits % 8 != 0 or bits // 8 > MAX_VARNODE_SIZE:
            return None
        vn = _parse_vn(m.group(2))
        if vn is None:
            return None
        return ArgSpec(name, "INT", (vn,), width=bits // 8)
    for kind, count in (("SLICE", 3), ("STRING", 2)):
        prefix = kind + "@"
        if rest.startswith(prefix):
            tokens = rest[len(prefix) :].split()
            if len(tokens) != count:
                return None
            vns = [_parse_vn(t) for t in tokens]
            if any(v is None for v in vns):
                return None
            try:
                return ArgSpec(name, kind, tuple(vns))
            except ValueError:
                return None
    return None


def _split_args(inner: str) -> list[str]:
    return [p for p in (piece.strip() for piece in inner.split(",")) if p]


def parse_program(source: str) -> ParseResult:
    diags: list[Diagnostic] = []
    entry_points: dict[str, int] = {}
    panic_addrs: list[int] = []
    signatures: dict[str, FunctionSig] = {}
    initial_ram: dict[int, int] = {}
    instructions: dict[int, list[PcodeOp]] = {}
    seen_sections: set[str] = set()
    mode = None  # None | "ram" | "code"
    current_addr: Optional[int] = None

    def err(line: int, msg: str) -> None:
        diags.append(Diagnostic(Severity.ERROR, line, msg))

    def warn(line: int, msg: str) -> None:
        diags.append(Diagnostic(Severity.WARNING, line, msg))

    lines = source.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        text = raw.split(";", 1)[0].strip()
        if not text:
            continue

        if text.startswith("."):
            tokens = text.split()
            section = tokens[0]
            if section == ".entry":
                mode = None
                if len(tokens) != 3 or not _NAME_RE.match(tokens[1]) or not _ADDR_RE.match(tokens[2]):
                    err(lineno, ".entry expects NAME 0xADDR")
                    continue
                if tokens[1] in entry_points:
                    err(lineno, f"duplicate entry point {tokens[1]!r}")
                    continue
                entry_points[tokens[1]] = int(tokens[2], 16)
            elif section == ".panic":
                mode = None
                if "panic" in seen_sections:
                    err(lineno, "duplicate .panic section")
                    continue
                seen_sections.add("panic")
                if len(tokens) < 2:
                    err(lineno, ".panic expects at least one address")
                    continue
                bad = [t for t in tokens[1:] if not _ADDR_RE.match(t)]
                if bad:
                    err(lineno, f"malformed panic address {bad[0]!r}")
                    continue
                panic_addrs.extend(int(t, 16) for t in tokens[1:])
            elif section == ".sig":
                mode = None
                m = _SIG_RE.match(text)
                if not m:
                    err(lineno, ".sig expects NAME(arg, ...) entry 0xADDR")
                    continue
                name = m.group(1)
                if name in signatures:
                    err(lineno, f"duplicate signature {name!r}")
                    continue
                args: list[ArgSpec] = []
                broken = False
                for piece in _split_args(m.group(2)):
                    arg = _parse_arg(piece)
                    if arg is None:
                        err(lineno, f"malformed argument {piece!r}")
                        broken = True
                        break
                    args.append(arg)
                if broken:
                    continue
                signatures[name] = FunctionSig(name, tuple(args), int(m.group(3), 16))
            elif section == ".ram":
                if "ram" in seen_sections:
                    err(lineno, "duplicate .ram section")
                    mode = None
                    continue
                seen_sections.add("ram")
                if len(tokens) != 1:
                    err(lineno, ".ram header takes no inline data; use following lines")
                    continue
                mode = "ram"
            elif section == ".code":
                if "code" in seen_sections:
                    err(lineno, "duplicate .code section")
                    mode = None
                    continue
                seen_sections.add("code")
                if len(tokens) != 1:
                    err(lineno, ".code header stands alone")
                    continue
                mode = "code"
                current_addr = None
            else:
                err(lineno, f"unknown section {section!r}")
                mode = None
            continue

        if mode == "ram":
            tokens = text.split()
            if len(tokens) < 2 or not all(_ADDR_RE.match(t) for t in tokens):
                err(lineno, ".ram line expects 0xADDR 0xBYTE ...")
                continue
            base = int(tokens[0], 16)
            ok = True
            for i, t in enumerate(tokens[1:]):
                b = int(t, 16)
                if b > 0xFF:
                    err(lineno, f"ram byte {t} exceeds 0xFF")
                    ok = False
                    break
                initial_ram[base + i] = b
            if not ok:
                continue
        elif mode == "code":
            body = text
            addr = current_addr
            first = body.split(None, 1)[0]
            if first.endswith(":") and _ADDR_RE.match(first[:-1]):
                addr = int(first[:-1], 16)
                if addr in instructions:
                    err(lineno, f"duplicate machine address 0x{addr:x}")
                    current_addr = addr
                    continue
                instructions[addr] = []
                current_addr = addr
                body = body[len(first) :].strip()
                if not body:
                    err(lineno, "instruction line needs at least one micro-op")
                    continue
            elif addr is None:
                err(lineno, "micro-op before any 0xADDR: line")
                continue

            tokens = body.split()
            opname = tokens[0]
            opcode = _OPCODES.get(opname)
            if opcode is None:
                err(lineno, f"unknown opcode {opname!r}")
                continue
            output = None
            operands = tokens[1:]
            if "->" in operands:
                pos = operands.index("->")
                if pos != len(operands) - 2:
                    err(lineno, "'->' must be followed by exactly one destination")
                    continue
                output = _parse_vn(operands[-1])
                if output is None:
                    err(lineno, f"malformed destination {operands[-1]!r}")
                    continue
                operands = operands[:pos]
            inputs = []
            malformed = False
            for tok in operands:
                vn = _parse_vn(tok)
                if vn is None:
                    err(lineno, f"malformed operand {tok!r}")
                    malformed = True
                    break
                inputs.append(vn)
            if malformed:
                continue
            micros = instructions[addr]
            micros.append(PcodeOp(opcode, tuple(inputs), output, (addr, len(micros))))
        else:
            err(lineno, f"statement outside any section: {text!r}")

    if "panic" not in seen_sections:
        warn(len(lines) or 1, "no panic sites declared")
    if not instructions:
        diags.append(Diagnostic(Severity.ERROR, len(lines) or 1, "program has no .code section or it is empty"))

    if any(d.severity is Severity.ERROR for d in diags):
        return ParseResult(None, diags)

    program = Program(
        instructions={a: tuple(m) for a, m in instructions.items()},
        entry_points=entry_points,
        panic_set=frozenset(panic_addrs),
        signatures=signatures,
        initial_ram=initial_ram,
    )
    semantic = validate(program)
    diags.extend(semantic)
    if any(d.severity is Severity.ERROR for d in semantic):
        return ParseResult(None, diags)
    return ParseResult(program, diags)


def _check_micro(op: PcodeOp, program: Program) -> list[str]:
    """Arity/size rules for one micro-op; returns problem descriptions."""
    problems: list[str] = []
    opc = op.opcode
    n = len(op.inputs)

    def need_inputs(k: int) -> bool:
        if n != k:
            problems.append(f"{opc.value} expects {k} operand(s), got {n}")
            return False
        return True

    def need_output(required: bool) -> bool:
        if required and op.output is None:
            problems.append(f"{opc.value} requires a destination")
            return False
        if not required and op.output is not None:
            problems.append(f"{opc.value} takes no destination")
            return False
        return True

    if op.output is not None and op.output.space is Space.CONST:
        problems.append("destination in const space")

    if opc is Opcode.COPY:
        if need_inputs(1) and need_output(True):
            if op.inputs[0].size != op.output.size:
                problems.append("COPY sizes must match")
    elif opc is Opcode.LOAD:
        if need_inputs(1) and need_output(True):
            if op.inputs[0].size > 8:
                problems.append("LOAD pointer wider than 8 bytes")
    elif opc is Opcode.STORE:
        if need_inputs(2) and need_output(False):
            if op.inputs[0].size > 8:
                problems.append("STORE pointer wider than 8 bytes")
    elif opc in (Opcode.BRANCH, Opcode.CBRANCH):
        k = 1 if opc is Opcode.BRANCH else 2
        if need_inputs(k) and need_output(False):
            target = op.inputs[0]
            if target.space not in (Space.CONST, Space.RAM):
                problems.append("static branch target must be const or ram space")
            if opc is Opcode.CBRANCH and op.inputs[1].size != 1:
                problems.append("condition must be 1 byte")
    elif opc is Opcode.CALL:
        if need_inputs(1) and need_output(False):
            if op.inputs[0].space is not Space.RAM:
                problems.append("CALL target must be a ram-space address")
    elif opc in (Opcode.BRANCHIND, Opcode.CALLIND):
        if need_inputs(1) and need_output(False):
            if op.inputs[0].size > 8:
                problems.append(f"{opc.value} target wider than 8 bytes")
    elif opc is Opcode.RETURN:
        if n > 1:
            problems.append("RETURN takes at most one operand")
        need_output(False)
    elif opc in COMPARISON_OPS:
        if need_inputs(2) and need_output(True):
            if op.inputs[0].size != op.inputs[1].size:
                problems.append(f"{opc.value} operands must be the same size")
            if op.output.size != 1:
                problems.append("comparison output must be 1 byte")
    elif opc in BINARY_SAME_SIZE:
        if need_inputs(2) and need_output(True):
            if not (op.inputs[0].size == op.inputs[1].size == op.output.size):
                problems.append(f"{opc.value} operand/output sizes must match")
    elif opc in SHIFT_OPS:
        if need_inputs(2) and need_output(True):
            if op.inputs[0].size != op.output.size:
                problems.append("shift output size must match the value operand")
    elif opc in (Opcode.INT_ZEXT, Opcode.INT_SEXT):
        if need_inputs(1) and need_output(True):
            if op.output.size <= op.inputs[0].size:
                problems.append(f"{opc.value} output must be wider than the input")
    elif opc in (Opcode.INT_NEGATE, Opcode.INT_2COMP):
        if need_inputs(1) and need_output(True):
            if op.inputs[0].size != op.output.size:
                problems.append(f"{opc.value} sizes must match")
    elif opc is Opcode.BOOL_NEGATE:
        if need_inputs(1) and need_output(True):
            if op.inputs[0].size != 1 or op.output.size != 1:
                problems.append("BOOL operands are 1 byte")
    elif opc in BOOL_BINARY_OPS:
        if need_inputs(2) and need_output(True):
            if any(v.size != 1 for v in op.inputs) or op.output.size != 1:
                problems.append("BOOL operands are 1 byte")
    elif opc is Opcode.SUBPIECE:
        if need_inputs(2) and need_output(True):
            if op.inputs[1].space is not Space.CONST:
                problems.append("SUBPIECE offset must be a const")
            elif op.inputs[1].offset + op.output.size > op.inputs[0].size:
                problems.append("SUBPIECE selection exceeds the input")
    return problems


def validate(program: Program) -> list[Diagnostic]:
    """Semantic checks over a structurally parsed program.

    Diagnostics carry line 0 because the structure no longer maps to source
    lines; messages name the offending address instead.
    """
    diags: list[Diagnostic] = []

    def err(msg: str) -> None:
        diags.append(Diagnostic(Severity.ERROR, 0, msg))

    known = set(program.instructions) | set(program.panic_set)
    for addr, micros in program.instructions.items():
        for op in micros:
            where = f"0x{addr:x}.{op.micro_index}"
            for problem in _check_micro(op, program):
                err(f"{where}: {problem}")
            if op.opcode in (Opcode.BRANCH, Opcode.CBRANCH):
                target = op.inputs[0] if op.inputs else None
                if target is not None and target.space is Space.RAM and target.offset not in known:
                    err(f"{where}: dangling target 0x{target.offset:x}")
                if target is not None and target.space is Space.CONST:
                    rel = to_signed(target.offset, 8 * target.size)
                    landing = op.micro_index + rel
                    if not (0 <= landing <= len(micros)):
                        err(f"{where}: internal branch lands outside the instruction")
            if op.opcode is Opcode.CALL and op.inputs:
                t = op.inputs[0]
                if t.space is Space.RAM and t.offset not in known:
                    err(f"{where}: dangling target 0x{t.offset:x}")

    for name, addr in program.entry_points.items():
        if addr not in program.instructions:
            err(f"entry point {name!r} targets 0x{addr:x} which has no instruction")
    for sig in program.signatures.values():
        if sig.entry not in program.instructions:
            err(f"signature {sig.name!r} entry 0x{sig.entry:x} has no instruction")
        locs: list[Varnode] = []
        for arg in sig.args:
            if arg.kind == "INT" and arg.locations[0].size != arg.width:
                err(f"signature {sig.name!r} arg {arg.name!r}: location size != declared width")
            for vn in arg.locations:
                if vn.space is Space.CONST:
                    err(f"signature {sig.name!r} arg {arg.name!r}: const-space location")
                locs.append(vn)
        for i, a in enumerate(locs):
            for b in locs[i + 1 :]:
                if a.overlaps(b):
                    err(f"signature {sig.name!r}: aliasing argument locations {a} and {b}")
    return diags


def _vn_text(vn: Varnode) -> str:
    return f"{vn.space.value}:0x{vn.offset:x}:{vn.size}"


def _arg_text(arg: ArgSpec) -> str:
    if arg.kind == "INT":
        return f"{arg.name}:INT{arg.width * 8}@{_vn_text(arg.locations[0])}"
    vns = " ".join(_vn_text(v) for v in arg.locations)
    return f"{arg.name}:{arg.kind}@{vns}"


def emit_program(program: Program) -> str:
    """Canonical text for a program; parse(emit(p)) is structurally p."""
    out: list[str] = []
    for name in sorted(program.entry_points):
        out.append(f".entry {name} 0x{program.entry_points[name]:x}")
    for name in sorted(program.signatures):
        sig = program.signatures[name]
        args = ", ".join(_arg_text(a) for a in sig.args)
        out.append(f".sig {name}({args}) entry 0x{sig.entry:x}")
    if program.panic_set:
        out.append(".panic " + " ".join(f"0x{a:x}" for a in sorted(program.panic_set)))
    if program.initial_ram:
        out.append(".ram")
        run_start = None
        run: list[int] = []
        prev = None
        for addr in sorted(program.initial_ram):
            if prev is not None and addr == prev + 1:
                run.append(program.initial_ram[addr])
            else:
                if run:
                    out.append(f"  0x{run_start:x} " + " ".join(f"0x{b:02x}" for b in run))
                run_start = addr
                run = [program.initial_ram[addr]]
            prev = addr
        if run:
            out.append(f"  0x{run_start:x} " + " ".join(f"0x{b:02x}" for b in run))
    out.append(".code")
    for addr in sorted(program.instructions):
        for op in program.instructions[addr]:
            parts = [op.opcode.value]
            parts.extend(_vn_text(v) for v in op.inputs)
            if op.output is not None:
                parts.append("->")
                parts.append(_vn_text(op.output))
            prefix = f"0x{addr:x}: " if op.micro_index == 0 else "  "
            out.append(prefix + " ".join(parts))
    return "\n".join(out) + "\n"
