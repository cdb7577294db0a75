import pytest

from panicgate.ir import Opcode, PcodeOp, Program, Space, Varnode
from panicgate.loader import parse_program
from panicgate.state import (
    Continue,
    Fault,
    Halt,
    MachineState,
    PanicReached,
    WriteToConst,
    read_varnode,
    run_concrete,
    step_concrete,
    write_varnode,
)


def vn(space, offset, size):
    return Varnode(space, offset, size)


def test_read_const_encodes_offset():
    s = MachineState()
    assert read_varnode(s, vn(Space.CONST, 0x2A, 1)) == b"\x2a"
    assert read_varnode(s, vn(Space.CONST, 0x0102, 2)) == b"\x02\x01"


def test_unwritten_bytes_read_zero():
    s = MachineState()
    assert read_varnode(s, vn(Space.RAM, 0x9000, 2)) == b"\x00\x00"


def test_overlapping_read_against_byte_array_oracle():
    s = MachineState()
    write_varnode(s, vn(Space.REGISTER, 0, 8), (0x0102030405060708).to_bytes(8, "little"))
    # oracle: the full register as a byte array, sliced
    whole = [s.registers.get(i, 0) for i in range(8)]
    assert read_varnode(s, vn(Space.REGISTER, 4, 2)) == bytes(whole[4:6]) == b"\x04\x03"


def test_overlapping_write_partial():
    s = MachineState()
    write_varnode(s, vn(Space.REGISTER, 0, 4), b"\xaa\xbb\xcc\xdd")
    assert read_varnode(s, vn(Space.REGISTER, 2, 4)) == b"\xcc\xdd\x00\x00"


def test_write_read_identity():
    s = MachineState()
    write_varnode(s, vn(Space.UNIQUE, 0x40, 3), b"\x01\x02\x03")
    assert read_varnode(s, vn(Space.UNIQUE, 0x40, 3)) == b"\x01\x02\x03"


def test_write_to_const_rejected():
    s = MachineState()
    with pytest.raises(WriteToConst):
        write_varnode(s, vn(Space.CONST, 1, 1), b"\x00")


def _program(src):
    result = parse_program(src)
    assert result.program is not None, result.diagnostics
    return result.program


def test_cbranch_zero_falls_through():
    p = _program(
        ".code\n"
        "0x1000: CBRANCH ram:0x1010:8 const:0x0:1\n"
        "0x1008: RETURN\n"
        "0x1010: RETURN\n"
    )
    s = MachineState.boot(p, 0x1000)
    out = step_concrete(s, p.instructions[0x1000][0], p)
    assert out == Continue((0x1008, 0))


def test_cbranch_nonzero_takes_branch():
    p = _program(
        ".code\n"
        "0x1000: CBRANCH ram:0x1010:8 const:0x7:1\n"
        "0x1008: RETURN\n"
        "0x1010: RETURN\n"
    )
    s = MachineState.boot(p, 0x1000)
    assert step_concrete(s, p.instructions[0x1000][0], p) == Continue((0x1010, 0))


def test_call_into_panic_set_reports_panic():
    p = _program(".panic 0x9000\n.code\n0x1000: CALL ram:0x9000:8\n0x1008: RETURN\n")
    s = MachineState.boot(p, 0x1000)
    assert step_concrete(s, p.instructions[0x1000][0], p) == PanicReached(0x9000)


def test_panic_entry_takes_precedence_over_stub_body():
    p = _program(
        ".panic 0x9000\n.code\n0x1000: CALL ram:0x9000:8\n0x1008: RETURN\n0x9000: RETURN\n"
    )
    s = MachineState.boot(p, 0x1000)
    assert step_concrete(s, p.instructions[0x1000][0], p) == PanicReached(0x9000)


def test_const_branch_is_micro_relative():
    p = _program(
        ".code\n"
        "0x1000: CBRANCH const:0x2:8 const:0x1:1\n"
        "  COPY const:0x1:1 -> reg:0x0:1\n"
        "  COPY const:0x2:1 -> reg:0x1:1\n"
        "  RETURN\n"
    )
    s = MachineState.boot(p, 0x1000)
    out = step_concrete(s, p.instructions[0x1000][0], p)
    assert out == Continue((0x1000, 2))
    run_concrete(s, p)
    assert s.registers.get(0, 0) == 0  # skipped micro never wrote
    assert s.registers.get(1, 0) == 2


def test_call_and_return_use_shadow_stack():
    p = _program(
        ".code\n"
        "0x1000: CALL ram:0x2000:8\n"
        "0x1008: COPY const:0x5:1 -> reg:0x0:1\n"
        "0x1010: RETURN\n"
        "0x2000: RETURN\n"
    )
    s = MachineState.boot(p, 0x1000)
    out = run_concrete(s, p)
    assert isinstance(out, Halt)
    assert s.registers[0] == 5


def test_return_with_empty_stack_halts():
    p = _program(".code\n0x1000: RETURN\n")
    s = MachineState.boot(p, 0x1000)
    assert isinstance(step_concrete(s, p.instructions[0x1000][0], p), Halt)


def test_branchind_reads_register_target():
    p = _program(
        ".code\n"
        "0x1000: COPY const:0x10:8 -> reg:0x0:8\n"
        "  INT_MULT reg:0x0:8 const:0x101:8 -> reg:0x0:8\n"
        "  BRANCHIND reg:0x0:8\n"
        "0x1010: RETURN\n"
        "0x1110: RETURN\n"
    )
    # 0x10 * 0x101 = 0x1010
    s = MachineState.boot(p, 0x1000)
    trace = []
    out = run_concrete(s, p, trace=trace)
    assert isinstance(out, Halt)
    assert (0x1010, 0) in trace


def test_unmapped_branch_target_faults():
    p = _program(".code\n0x1000: BRANCHIND reg:0x0:8\n")
    s = MachineState.boot(p, 0x1000)
    out = step_concrete(s, p.instructions[0x1000][0], p)
    assert out == Fault("unmapped_target")


def test_divide_by_zero_faults():
    p = _program(".code\n0x1000: INT_DIV const:0x4:1 reg:0x0:1 -> reg:0x1:1\n0x1008: RETURN\n")
    s = MachineState.boot(p, 0x1000)
    assert step_concrete(s, p.instructions[0x1000][0], p) == Fault("divide_by_zero")


def test_step_budget_faults():
    p = _program(".code\n0x1000: BRANCH ram:0x1000:8\n")
    s = MachineState.boot(p, 0x1000)
    out = run_concrete(s, p, step_budget=1000)
    assert out == Fault("budget")
    assert s.step_count == 1000


def test_determinism_identical_traces():
    src = (
        ".ram\n0x4000 0x03\n.code\n"
        "0x1000: LOAD const:0x4000:8 -> reg:0x0:1\n"
        "0x1008: INT_ADD reg:0x0:1 const:0x1:1 -> reg:0x0:1\n"
        "0x1010: INT_EQUAL reg:0x0:1 const:0x4:1 -> reg:0x1:1\n"
        "0x1018: CBRANCH ram:0x1028:8 reg:0x1:1\n"
        "0x1020: RETURN\n"
        "0x1028: STORE const:0x5000:8 reg:0x0:1\n"
        "0x1030: RETURN\n"
    )
    p = _program(src)
    traces = []
    for _ in range(2):
        s = MachineState.boot(p, 0x1000)
        t = []
        out = run_concrete(s, p, trace=t)
        traces.append((t, type(out).__name__, dict(s.ram), s.step_count))
    assert traces[0] == traces[1]
    assert traces[0][0][-1] == (0x1030, 0)


def test_step_count_strictly_increases():
    p = _program(".code\n0x1000: COPY const:0x1:1 -> reg:0x0:1\n0x1008: RETURN\n")
    s = MachineState.boot(p, 0x1000)
    counts = [s.step_count]
    while s.pc is not None:
        step_concrete(s, p.fetch(s.pc), p)
        counts.append(s.step_count)
    assert counts == sorted(set(counts))


def test_corpus_seeds_replay_clean(entries, programs):
    from panicgate.executor import replay_concrete, PANIC_CONFIRMED

    for name, entry in entries.items():
        for seed in entry.seeds:
            verdict = replay_concrete(programs[name], seed, entry.function)
            assert verdict != PANIC_CONFIRMED, (name, seed)
