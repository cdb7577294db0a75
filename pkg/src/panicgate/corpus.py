"""Five logic-bomb programs with declared panic sites and ground truth.

Each entry carries non-triggering seeds, known triggering inputs, and an
enumerable input domain for the brute-force oracle.  Generation verifies
both directions by concrete replay: every seed halts cleanly, every known
trigger panics.  A panic-free variant (panic declaration removed, stub
bodies kept) is emitted alongside for false-positive checks.

Semantics, fixed here and recorded in the manifest:

  crashme            panics iff the input is exactly the one byte 'K'
  invalid_shift      panics iff input[0] >= 64 indexes past a 64-cell table
                     (empty input exits cleanly)
  panic_index        panics iff the numeric argument n > 3 (unsigned)
  broken_calculator  panics iff num1 == 5 and num2 == 5, any operator
  omni_vuln_mini     Merkle-proof sketch: sibling index s = 2*len + 1 over
                     an 8-cell tree; panics iff s >= 8, i.e. len >= 4
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .executor import PANIC_CONFIRMED, replay_concrete
from .ir import Program
from .loader import parse_program
from .symbolic import SliceValue

NAMES = ("crashme", "invalid_shift", "panic_index", "broken_calculator", "omni_vuln_mini")

PRINTABLE = [bytes([b]) for b in range(0x20, 0x7F)]


class UnknownName(Exception):
    pass


class DomainTooLarge(Exception):
    pass


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    function: str
    source: str
    panic_free_source: str
    seeds: tuple[tuple, ...]
    known_triggers: tuple[tuple, ...]
    expected_gating: str  # "NONE" | "PARTIAL"
    semantics: str

    def program(self) -> Program:
        result = parse_program(self.source)
        if result.program is None:
            raise AssertionError(f"corpus entry {self.name} failed to parse: {result.diagnostics}")
        return result.program

    def panic_free_program(self) -> Program:
        result = parse_program(self.panic_free_source)
        if result.program is None:
            raise AssertionError(f"corpus entry {self.name} variant failed to parse")
        return result.program

    def enumerate_domain(self) -> Iterator[tuple]:
        yield from _DOMAINS[self.name]()

    def domain_size(self) -> int:
        return _DOMAIN_SIZES[self.name]


def _crashme_text(panic: bool) -> str:
    lines = [
        "; conditional byte check feeding a branch into a panic stub",
        ".entry main 0x2000",
        ".sig crash(input:STRING@reg:0x10:8 reg:0x18:8) entry 0x1000",
        ".sig main(input:STRING@reg:0x10:8 reg:0x18:8) entry 0x2000",
    ]
    if panic:
        lines.append(".panic 0x9990")
    lines += [
        ".code",
        "0x1000: LOAD reg:0x10:8 -> uniq:0x0:1",
        "0x1008: INT_EQUAL reg:0x18:8 const:0x1:8 -> uniq:0x1:1",
        "0x1010: INT_EQUAL uniq:0x0:1 const:0x4b:1 -> uniq:0x2:1",
        "0x1018: BOOL_AND uniq:0x1:1 uniq:0x2:1 -> uniq:0x3:1",
        "0x1020: CBRANCH ram:0x9990:8 uniq:0x3:1",
        "0x1028: RETURN",
        "0x2000: CALL ram:0x1000:8",
        "0x2008: RETURN",
        "0x9990: RETURN",
    ]
    return "\n".join(lines) + "\n"


def _invalid_shift_text(panic: bool) -> str:
    lines = [
        "; byte-as-index into a fixed 64-cell table",
        ".entry main 0x2000",
        ".sig shift(input:STRING@reg:0x10:8 reg:0x18:8) entry 0x1000",
    ]
    if panic:
        lines.append(".panic 0x9994")
    lines += [
        ".ram",
        "  0x4000 0x07 0x0e 0x15 0x1c 0x23 0x2a 0x31 0x38",
        ".code",
        "0x1000: INT_EQUAL reg:0x18:8 const:0x0:8 -> uniq:0x0:1",
        "0x1008: CBRANCH ram:0x1040:8 uniq:0x0:1",
        "0x1010: LOAD reg:0x10:8 -> uniq:0x1:1",
        "0x1018: INT_LESS const:0x3f:1 uniq:0x1:1 -> uniq:0x2:1",
        "0x1020: CBRANCH ram:0x1048:8 uniq:0x2:1",
        "0x1028: INT_ZEXT uniq:0x1:1 -> uniq:0x10:8",
        "0x1030: INT_ADD uniq:0x10:8 const:0x4000:8 -> uniq:0x18:8",
        "0x1038: LOAD uniq:0x18:8 -> uniq:0x20:1",
        "0x1040: RETURN",
        "0x1048: CALL ram:0x9994:8",
        "0x1050: RETURN",
        "0x2000: CALL ram:0x1000:8",
        "0x2008: RETURN",
        "0x9994: RETURN",
    ]
    return "\n".join(lines) + "\n"


def _panic_index_text(panic: bool) -> str:
    lines = [
        "; numeric argument guarding an access; post-guard bucket logic",
        ".entry main 0x2000",
        ".sig index(n:INT8@reg:0x10:1) entry 0x1000",
    ]
    if panic:
        lines.append(".panic 0x9990")
    lines += [
        ".ram",
        "  0x4000 0x00",
        ".code",
        "0x1000: LOAD const:0x4000:8 -> uniq:0x0:1",
        "0x1008: INT_EQUAL uniq:0x0:1 const:0x0:1 -> uniq:0x1:1",
        "0x1010: CBRANCH ram:0x1020:8 uniq:0x1:1",
        "0x1018: COPY const:0x1:1 -> reg:0x100:1",
        "0x1020: INT_LESS const:0x3:1 reg:0x10:1 -> uniq:0x2:1",
        "0x1028: CBRANCH ram:0x1080:8 uniq:0x2:1",
        "0x1030: INT_EQUAL reg:0x10:1 const:0x0:1 -> uniq:0x3:1",
        "  BOOL_NEGATE uniq:0x3:1 -> uniq:0x4:1",
        "  CBRANCH ram:0x1040:8 uniq:0x4:1",
        "0x1038: INT_ADD reg:0x100:1 const:0x1:1 -> reg:0x100:1",
        "0x1040: INT_EQUAL reg:0x10:1 const:0x1:1 -> uniq:0x5:1",
        "  BOOL_NEGATE uniq:0x5:1 -> uniq:0x6:1",
        "  CBRANCH ram:0x1050:8 uniq:0x6:1",
        "0x1048: INT_ADD reg:0x100:1 const:0x2:1 -> reg:0x100:1",
        "0x1050: INT_EQUAL reg:0x10:1 const:0x2:1 -> uniq:0x7:1",
        "  BOOL_NEGATE uniq:0x7:1 -> uniq:0x8:1",
        "  CBRANCH ram:0x1060:8 uniq:0x8:1",
        "0x1058: INT_ADD reg:0x100:1 const:0x3:1 -> reg:0x100:1",
        "0x1060: RETURN",
        "0x1080: CALL ram:0x9990:8",
        "0x1088: RETURN",
        "0x2000: CALL ram:0x1000:8",
        "0x2008: RETURN",
        "0x9990: RETURN",
    ]
    return "\n".join(lines) + "\n"


def _broken_calculator_text(panic: bool) -> str:
    lines = [
        "; operator dispatch, then an operand-pair trap past the join",
        ".entry main 0x2000",
        ".sig coreEngine(num1:INT8@reg:0x10:1, operator:STRING@reg:0x18:8 reg:0x20:8, num2:INT8@reg:0x28:1) entry 0x1000",
    ]
    if panic:
        lines.append(".panic 0x9998")
    lines += [
        ".code",
        "0x1000: LOAD reg:0x18:8 -> uniq:0x0:1",
        "0x1008: INT_EQUAL reg:0x20:8 const:0x1:8 -> uniq:0x1:1",
        "0x1010: INT_EQUAL uniq:0x0:1 const:0x2b:1 -> uniq:0x2:1",
        "  BOOL_AND uniq:0x1:1 uniq:0x2:1 -> uniq:0x3:1",
        "  BOOL_NEGATE uniq:0x3:1 -> uniq:0x4:1",
        "  CBRANCH ram:0x1020:8 uniq:0x4:1",
        "0x1018: INT_ADD reg:0x10:1 reg:0x28:1 -> reg:0x100:1",
        "  BRANCH ram:0x1040:8",
        "0x1020: INT_EQUAL uniq:0x0:1 const:0x2d:1 -> uniq:0x5:1",
        "  BOOL_AND uniq:0x1:1 uniq:0x5:1 -> uniq:0x6:1",
        "  BOOL_NEGATE uniq:0x6:1 -> uniq:0x7:1",
        "  CBRANCH ram:0x1030:8 uniq:0x7:1",
        "0x1028: INT_SUB reg:0x10:1 reg:0x28:1 -> reg:0x100:1",
        "  BRANCH ram:0x1040:8",
        "0x1030: INT_EQUAL uniq:0x0:1 const:0x2a:1 -> uniq:0x8:1",
        "  BOOL_AND uniq:0x1:1 uniq:0x8:1 -> uniq:0x9:1",
        "  BOOL_NEGATE uniq:0x9:1 -> uniq:0xa:1",
        "  CBRANCH ram:0x1038:8 uniq:0xa:1",
        "0x1034: INT_MULT reg:0x10:1 reg:0x28:1 -> reg:0x100:1",
        "  BRANCH ram:0x1040:8",
        "0x1038: COPY const:0x0:1 -> reg:0x100:1",
        "0x1040: INT_EQUAL reg:0x10:1 const:0x5:1 -> uniq:0x10:1",
        "  INT_EQUAL reg:0x28:1 const:0x5:1 -> uniq:0x11:1",
        "  BOOL_AND uniq:0x10:1 uniq:0x11:1 -> uniq:0x12:1",
        "  CBRANCH ram:0x1090:8 uniq:0x12:1",
        "0x1048: INT_EQUAL reg:0x100:1 const:0x0:1 -> uniq:0x13:1",
        "  CBRANCH const:0x2:8 uniq:0x13:1",
        "  INT_ADD reg:0x100:1 const:0x1:1 -> reg:0x101:1",
        "  COPY reg:0x100:1 -> reg:0x102:1",
        "0x1050: INT_SLESS reg:0x100:1 const:0x0:1 -> uniq:0x14:1",
        "  BOOL_NEGATE uniq:0x14:1 -> uniq:0x15:1",
        "  CBRANCH ram:0x1058:8 uniq:0x15:1",
        "0x1054: INT_2COMP reg:0x100:1 -> reg:0x103:1",
        "0x1058: INT_EQUAL reg:0x100:1 const:0xa:1 -> uniq:0x16:1",
        "  BOOL_NEGATE uniq:0x16:1 -> uniq:0x17:1",
        "  CBRANCH ram:0x1060:8 uniq:0x17:1",
        "0x105c: INT_ADD reg:0x103:1 const:0x2:1 -> reg:0x103:1",
        "0x1060: INT_EQUAL reg:0x100:1 const:0x7:1 -> uniq:0x18:1",
        "  BOOL_NEGATE uniq:0x18:1 -> uniq:0x19:1",
        "  CBRANCH ram:0x1070:8 uniq:0x19:1",
        "0x1068: INT_ADD reg:0x103:1 const:0x3:1 -> reg:0x103:1",
        "0x1070: RETURN",
        "0x1090: CALL ram:0x9998:8",
        "0x1098: RETURN",
        "0x2000: CALL ram:0x1000:8",
        "0x2008: RETURN",
        "0x9998: RETURN",
    ]
    return "\n".join(lines) + "\n"


def _omni_vuln_mini_text(panic: bool) -> str:
    lines = [
        "; proof walk over a fixed 8-cell tree; sibling index depends on len",
        ".entry main 0x2000",
        ".sig getMultiProof(proof:SLICE@reg:0x10:8 reg:0x18:8 reg:0x20:8) entry 0x1000",
    ]
    if panic:
        lines.append(".panic 0x999c")
    lines += [
        ".ram",
        "  0x4000 0x11 0x22 0x33 0x44 0x55 0x66 0x77 0x88",
        ".code",
        "0x1000: INT_AND reg:0x18:8 const:0x7:8 -> uniq:0x0:8",
        "0x1008: INT_ADD uniq:0x0:8 const:0x4000:8 -> uniq:0x8:8",
        "0x1010: LOAD uniq:0x8:8 -> reg:0x110:1",
        "0x1018: INT_ADD reg:0x18:8 reg:0x18:8 -> uniq:0x10:8",
        "0x1020: INT_ADD uniq:0x10:8 const:0x1:8 -> reg:0x118:8",
        "0x1028: INT_LESSEQUAL const:0x8:8 reg:0x118:8 -> uniq:0x18:1",
        "0x1030: CBRANCH ram:0x10a0:8 uniq:0x18:1",
        "0x1038: COPY const:0x0:8 -> reg:0x108:8",
        "0x1040: INT_LESS reg:0x108:8 reg:0x18:8 -> uniq:0x20:1",
        "  INT_LESS reg:0x108:8 const:0x8:8 -> uniq:0x21:1",
        "  BOOL_AND uniq:0x20:1 uniq:0x21:1 -> uniq:0x22:1",
        "  BOOL_NEGATE uniq:0x22:1 -> uniq:0x23:1",
        "  CBRANCH ram:0x1060:8 uniq:0x23:1",
        "0x1048: INT_ADD reg:0x108:8 const:0x4000:8 -> uniq:0x28:8",
        "  LOAD uniq:0x28:8 -> uniq:0x30:1",
        "  INT_XOR reg:0x110:1 uniq:0x30:1 -> reg:0x110:1",
        "0x1050: INT_ADD reg:0x108:8 const:0x1:8 -> reg:0x108:8",
        "  BRANCH ram:0x1040:8",
        "0x1060: SUBPIECE reg:0x118:8 const:0x0:8 -> reg:0x120:1",
        "0x1068: INT_EQUAL reg:0x120:1 const:0x3:1 -> uniq:0x40:1",
        "  BOOL_NEGATE uniq:0x40:1 -> uniq:0x41:1",
        "  CBRANCH ram:0x1070:8 uniq:0x41:1",
        "0x106c: INT_ADD reg:0x110:1 const:0x1:1 -> reg:0x110:1",
        "0x1070: INT_EQUAL reg:0x120:1 const:0x5:1 -> uniq:0x42:1",
        "  BOOL_NEGATE uniq:0x42:1 -> uniq:0x43:1",
        "  CBRANCH ram:0x1080:8 uniq:0x43:1",
        "0x1078: INT_ADD reg:0x110:1 const:0x2:1 -> reg:0x110:1",
        "0x1080: INT_EQUAL reg:0x120:1 const:0x7:1 -> uniq:0x44:1",
        "  BOOL_NEGATE uniq:0x44:1 -> uniq:0x45:1",
        "  CBRANCH ram:0x1090:8 uniq:0x45:1",
        "0x1088: INT_ADD reg:0x110:1 const:0x3:1 -> reg:0x110:1",
        "0x1090: RETURN",
        "0x10a0: CALL ram:0x999c:8",
        "0x10a8: RETURN",
        "0x2000: CALL ram:0x1000:8",
        "0x2008: RETURN",
        "0x999c: RETURN",
    ]
    return "\n".join(lines) + "\n"


def _slice(data: bytes, length: int | None = None, cap: int | None = None) -> SliceValue:
    length = len(data) if length is None else length
    cap = length if cap is None else cap
    return SliceValue(data, length, cap)


_BUILDERS = {
    "crashme": (
        _crashme_text,
        "crash",
        (("a",), ("B",), ("100",)),
        (("K",),),
        "NONE",
        "panics iff input == 'K' (length 1, byte 0x4b)",
    ),
    "invalid_shift": (
        _invalid_shift_text,
        "shift",
        (("10",), ("42",), ("1000",)),
        (("@",), ("H?",), ("d???",)),
        "NONE",
        "panics iff input is non-empty and input[0] >= 64 (table has 64 cells)",
    ),
    "panic_index": (
        _panic_index_text,
        "index",
        ((0,), (1,), (2,)),
        ((4,), (200,)),
        "PARTIAL",
        "panics iff n > 3 unsigned",
    ),
    "broken_calculator": (
        _broken_calculator_text,
        "coreEngine",
        ((2, "+", 3), (5, "+", 1), (6, "-", 5)),
        ((5, "+", 5), (5, "-", 5)),
        "PARTIAL",
        "panics iff num1 == 5 and num2 == 5, whatever the operator",
    ),
    "omni_vuln_mini": (
        _omni_vuln_mini_text,
        "getMultiProof",
        ((_slice(b"\x0a"),), (_slice(b"\x0a\x0b"),), (_slice(b"\x0a\x0b\x0c"),)),
        ((_slice(b"\x01\x02\x03\x04"),), (_slice(b"", 7, 16),)),
        "PARTIAL",
        "sibling index s = 2*len + 1 over an 8-cell tree; panics iff s >= 8 (len >= 4)",
    ),
}


def _gen_strings(max_len: int) -> Iterator[tuple]:
    yield (b"",)
    if max_len >= 1:
        for b in PRINTABLE:
            yield (b,)
    if max_len >= 2:
        for b0 in PRINTABLE:
            for b1 in PRINTABLE:
                yield (b0 + b1,)


_DOMAINS = {
    "crashme": lambda: _gen_strings(2),
    "invalid_shift": lambda: _gen_strings(2),
    "panic_index": lambda: ((n,) for n in range(256)),
    "broken_calculator": lambda: (
        (a, op, b) for op in ("+", "-", "*") for a in range(16) for b in range(16)
    ),
    "omni_vuln_mini": lambda: ((_slice(b"\x0a\x0b", n, 64),) for n in range(65)),
}

_DOMAIN_SIZES = {
    "crashme": 1 + 95 + 95 * 95,
    "invalid_shift": 1 + 95 + 95 * 95,
    "panic_index": 256,
    "broken_calculator": 3 * 16 * 16,
    "omni_vuln_mini": 65,
}


def emit(name: str) -> CorpusEntry:
    """Deterministic source for one entry, verified by replay."""
    if name not in _BUILDERS:
        raise UnknownName(name)
    builder, function, seeds, triggers, gating, semantics = _BUILDERS[name]
    entry = CorpusEntry(
        name=name,
        function=function,
        source=builder(True),
        panic_free_source=builder(False),
        seeds=seeds,
        known_triggers=triggers,
        expected_gating=gating,
        semantics=semantics,
    )
    _verify(entry)
    return entry


def _verify(entry: CorpusEntry) -> None:
    program = entry.program()
    for seed in entry.seeds:
        verdict = replay_concrete(program, seed, entry.function)
        if verdict == PANIC_CONFIRMED:
            raise AssertionError(f"{entry.name}: seed {seed!r} unexpectedly panics")
    for trigger in entry.known_triggers:
        verdict = replay_concrete(program, trigger, entry.function)
        if verdict != PANIC_CONFIRMED:
            raise AssertionError(f"{entry.name}: trigger {trigger!r} fails to panic")


def emit_all() -> list[CorpusEntry]:
    return [emit(name) for name in NAMES]


def brute_force_triggers(entry: CorpusEntry, domain_bound: int = 20_000) -> set[tuple]:
    """Exhaustive concrete replay over the entry's declared input domain."""
    if entry.domain_size() > domain_bound:
        raise DomainTooLarge(f"{entry.name}: {entry.domain_size()} candidates > {domain_bound}")
    program = entry.program()
    triggers: set[tuple] = set()
    for candidate in entry.enumerate_domain():
        if replay_concrete(program, candidate, entry.function) == PANIC_CONFIRMED:
            triggers.add(candidate)
    return triggers


def domain_key(name: str, inputs: Sequence[object]) -> tuple:
    """Project an input tuple onto the coordinates the entry's domain sweeps.

    Oracle membership is checked after projection: slice inputs, for
    example, are compared by length because data and capacity do not
    affect the entry's panic condition and the domain only sweeps length.
    """
    if name in ("crashme", "invalid_shift"):
        value = inputs[0]
        return (value.encode() if isinstance(value, str) else bytes(value),)
    if name == "panic_index":
        return (int(inputs[0]),)
    if name == "broken_calculator":
        a, op, b = inputs
        op = op.encode() if isinstance(op, str) else bytes(op)
        return (int(a), op, int(b))
    if name == "omni_vuln_mini":
        return (inputs[0].length,)
    raise UnknownName(name)


def in_domain(name: str, inputs: Sequence[object]) -> bool:
    """True when the input lies inside the entry's enumerable domain."""
    if name in ("crashme", "invalid_shift"):
        (data,) = domain_key(name, inputs)
        return len(data) <= 2 and all(0x20 <= b <= 0x7E for b in data)
    if name == "panic_index":
        return 0 <= domain_key(name, inputs)[0] <= 255
    if name == "broken_calculator":
        a, op, b = domain_key(name, inputs)
        return a < 16 and b < 16 and op in (b"+", b"-", b"*")
    if name == "omni_vuln_mini":
        return 0 <= domain_key(name, inputs)[0] <= 64
    raise UnknownName(name)


def _input_json(value) -> object:
    if isinstance(value, SliceValue):
        return {"data": value.data.hex(), "len": value.length, "cap": value.cap}
    if isinstance(value, bytes):
        return value.decode("latin-1")
    return value


def write_corpus(directory: str) -> dict:
    """Write the .pprog files plus manifest.json; returns the manifest."""
    os.makedirs(directory, exist_ok=True)
    manifest = {}
    for entry in emit_all():
        path = os.path.join(directory, f"{entry.name}.pprog")
        with open(path, "w") as fh:
            fh.write(entry.source)
        variant = os.path.join(directory, f"{entry.name}_panic_free.pprog")
        with open(variant, "w") as fh:
            fh.write(entry.panic_free_source)
        manifest[entry.name] = {
            "file": f"{entry.name}.pprog",
            "panic_free_file": f"{entry.name}_panic_free.pprog",
            "function": entry.function,
            "seeds": [[_input_json(v) for v in seed] for seed in entry.seeds],
            "known_triggers": [[_input_json(v) for v in t] for t in entry.known_triggers],
            "expected_gating": entry.expected_gating,
            "semantics": entry.semantics,
        }
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
