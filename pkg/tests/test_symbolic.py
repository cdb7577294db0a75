import pytest

from panicgate import terms
from panicgate.ir import Opcode, PcodeOp, Space, Varnode
from panicgate.loader import parse_program
from panicgate.solver import SolverSession, emit_smtlib
from panicgate.state import MachineState, write_varnode
from panicgate.symbolic import (
    PathPredicate,
    ShadowMemory,
    SliceValue,
    assert_path,
    init_symbolic_args,
    lazily_concretize,
    materialize_inputs,
    references_args,
    shadow_eval,
)
from panicgate.terms import const, var


def vn(space, offset, size):
    return Varnode(space, offset, size)


def _sig(src):
    result = parse_program(src + ".code\n0x1000: RETURN\n")
    assert result.program is not None, result.diagnostics
    return result.program


# -- shadow memory -------------------------------------------------------------


def test_shadow_read_without_terms_is_none():
    s = MachineState()
    shadow = ShadowMemory()
    assert shadow.read_term(s, vn(Space.REGISTER, 0, 4)) is None


def test_shadow_write_read_roundtrip_recovers_term():
    s = MachineState()
    shadow = ShadowMemory()
    t = var("x", 32)
    shadow.write_term(vn(Space.REGISTER, 0, 4), t)
    assert shadow.read_term(s, vn(Space.REGISTER, 0, 4)) == t


def test_shadow_overlapping_read_mixes_bytes():
    # write an 8-byte term at reg 0, read 2 bytes at offset 4:
    # the result must be the matching extract of the original term
    s = MachineState()
    shadow = ShadowMemory()
    t = var("wide", 64)
    shadow.write_term(vn(Space.REGISTER, 0, 8), t)
    got = shadow.read_term(s, vn(Space.REGISTER, 4, 2))
    assert got == terms.extract(t, 47, 32)


def test_shadow_partial_overlap_lifts_concrete_bytes():
    s = MachineState()
    write_varnode(s, vn(Space.REGISTER, 4, 2), b"\xaa\xbb")
    shadow = ShadowMemory()
    shadow.write_term(vn(Space.REGISTER, 0, 4), var("lo", 32))
    got = shadow.read_term(s, vn(Space.REGISTER, 2, 4))
    # bytes 2..3 come from the term (0x22, 0x11), bytes 4..5 are concrete
    env = {"lo": 0x11223344}
    assert terms.evaluate(got, env) == 0xBBAA1122


def test_shadow_clear_on_concrete_write():
    s = MachineState()
    shadow = ShadowMemory()
    shadow.write_term(vn(Space.REGISTER, 0, 2), var("x", 16))
    shadow.write_term(vn(Space.REGISTER, 0, 2), None)
    assert shadow.read_term(s, vn(Space.REGISTER, 0, 2)) is None


# -- shadow_eval ---------------------------------------------------------------


def _op(opcode, inputs, output, loc=(0x1000, 0)):
    return PcodeOp(opcode, tuple(inputs), output, loc)


def test_shadow_eval_add_var_const():
    s = MachineState()
    shadow = ShadowMemory()
    shadow.write_term(vn(Space.REGISTER, 0, 1), var("x", 8))
    op = _op(
        Opcode.INT_ADD,
        [vn(Space.REGISTER, 0, 1), vn(Space.CONST, 1, 1)],
        vn(Space.REGISTER, 8, 1),
    )
    t = shadow_eval(op, shadow, s)
    assert t == terms.bv_binop("bvadd", var("x", 8), const(1, 8))


def test_shadow_eval_concrete_only_returns_none():
    s = MachineState()
    shadow = ShadowMemory()
    op = _op(
        Opcode.INT_ADD,
        [vn(Space.CONST, 2, 1), vn(Space.CONST, 3, 1)],
        vn(Space.REGISTER, 8, 1),
    )
    assert shadow_eval(op, shadow, s) is None


def test_shadow_eval_comparison_builds_flag_term():
    # 8-bit symbolic length compared to 1 renders as (= len #x01) under truthy
    s = MachineState()
    shadow = ShadowMemory()
    shadow.write_term(vn(Space.REGISTER, 0, 1), var("len", 8))
    op = _op(
        Opcode.INT_EQUAL,
        [vn(Space.REGISTER, 0, 1), vn(Space.CONST, 1, 1)],
        vn(Space.UNIQUE, 0, 1),
    )
    flag = shadow_eval(op, shadow, s)
    assert terms.render(terms.truthy(flag)) == "(= len #x01)"


def test_shadow_eval_lifts_concrete_partner():
    s = MachineState()
    write_varnode(s, vn(Space.REGISTER, 8, 1), b"\x07")
    shadow = ShadowMemory()
    shadow.write_term(vn(Space.REGISTER, 0, 1), var("x", 8))
    op = _op(
        Opcode.INT_SUB,
        [vn(Space.REGISTER, 0, 1), vn(Space.REGISTER, 8, 1)],
        vn(Space.REGISTER, 16, 1),
    )
    t = shadow_eval(op, shadow, s)
    assert t == terms.bv_binop("bvsub", var("x", 8), const(7, 8))


def test_shadow_eval_shift_amount_width_adjusts():
    s = MachineState()
    shadow = ShadowMemory()
    shadow.write_term(vn(Space.REGISTER, 0, 4), var("v", 32))
    op = _op(
        Opcode.INT_LEFT,
        [vn(Space.REGISTER, 0, 4), vn(Space.CONST, 3, 1)],
        vn(Space.REGISTER, 8, 4),
    )
    t = shadow_eval(op, shadow, s)
    assert t.width == 32
    assert terms.evaluate(t, {"v": 1}) == 8


# -- argument shapes -----------------------------------------------------------


def test_int_arg_seeds_state_and_shadow():
    program = _sig(".sig f(num1:INT8@reg:0x10:1) entry 0x1000\n")
    sig = program.signatures["f"]
    state = MachineState()
    shadow = ShadowMemory()
    with SolverSession() as session:
        args, seed_model = init_symbolic_args(sig, [5], state, shadow, session)
    assert state.registers[0x10] == 5
    assert shadow.read_term(state, vn(Space.REGISTER, 0x10, 1)) == var("num1", 8)
    assert seed_model == {"num1": 5}
    assert args[0].var == var("num1", 8)


def test_slice_arg_asserts_len_cap_bounds():
    program = _sig(".sig f(s:SLICE@reg:0x10:8 reg:0x18:8 reg:0x20:8) entry 0x1000\n")
    sig = program.signatures["f"]
    state = MachineState()
    shadow = ShadowMemory()
    with SolverSession() as session:
        init_symbolic_args(sig, [SliceValue(b"ab", 2, 4)], state, shadow, session)
        script = emit_smtlib(session)
        assert "(bvule s!len s!cap)" in script
        assert "(bvule s!cap #x0000000000000040)" in script
        # the hard bounds admit no model with len > cap or cap > 64
        from panicgate.solver import check_negated

        result = check_negated(session, terms.cmp_op("bvule", var("s!len", 64), const(64, 64)))
        assert result.verdict == "unsat"  # len can never exceed 64


def test_string_arg_materializes_content_and_bounds():
    program = _sig(".sig f(input:STRING@reg:0x10:8 reg:0x18:8) entry 0x1000\n")
    sig = program.signatures["f"]
    state = MachineState()
    shadow = ShadowMemory()
    with SolverSession() as session:
        args, seed_model = init_symbolic_args(sig, ["ab"], state, shadow, session)
        script = emit_smtlib(session)
    anchor = args[0].anchor
    assert state.ram[anchor] == ord("a") and state.ram[anchor + 1] == ord("b")
    ptr = int.from_bytes(bytes(state.registers[0x10 + i] for i in range(8)), "little")
    assert ptr == anchor  # pointer anchored to a concrete address
    assert "(bvule input!len #x0000000000000002)" in script
    assert "(bvule #x20 input!b0)" in script and "(bvule input!b0 #x7e)" in script
    assert seed_model["input!len"] == 2
    assert seed_model["input!b1"] == ord("b")


def test_empty_signature_creates_nothing():
    program = _sig(".sig f() entry 0x1000\n")
    sig = program.signatures["f"]
    state = MachineState()
    shadow = ShadowMemory()
    with SolverSession() as session:
        args, seed_model = init_symbolic_args(sig, [], state, shadow, session)
        assert args == [] and seed_model == {}
        assert session.base_script == []


def test_string_seed_over_limit_rejected():
    program = _sig(".sig f(input:STRING@reg:0x10:8 reg:0x18:8) entry 0x1000\n")
    sig = program.signatures["f"]
    with SolverSession() as session:
        with pytest.raises(ValueError):
            init_symbolic_args(sig, ["x" * 257], MachineState(), ShadowMemory(), session)


def test_materialize_matches_init_layout():
    program = _sig(".sig f(input:STRING@reg:0x10:8 reg:0x18:8) entry 0x1000\n")
    sig = program.signatures["f"]
    s1, s2 = MachineState(), MachineState()
    with SolverSession() as session:
        init_symbolic_args(sig, ["hey"], s1, ShadowMemory(), session)
    materialize_inputs(sig, ["hey"], s2)
    assert s1.registers == s2.registers and s1.ram == s2.ram


# -- predicates and concretization ----------------------------------------------


def test_references_args_direct_and_transitive():
    program = _sig(".sig f(num1:INT8@reg:0x10:1, num2:INT8@reg:0x11:1) entry 0x1000\n")
    sig = program.signatures["f"]
    state = MachineState()
    with SolverSession() as session:
        args, _ = init_symbolic_args(sig, [1, 2], state, ShadowMemory(), session)
    phi = terms.eq(var("num1", 8), const(5, 8))
    assert references_args(phi, args)
    assert not references_args(terms.eq(const(1, 8), const(1, 8)), args)
    derived = terms.eq(terms.bv_binop("bvmul", const(2, 8), var("num2", 8)), const(4, 8))
    assert references_args(derived, args)


def test_assert_path_appends_and_coerces():
    pp = PathPredicate()
    with SolverSession() as session:
        session.declare("x", 8)
        flag = terms.bool_to_bv(terms.eq(var("x", 8), const(5, 8)))
        assert_path(pp, flag, session)
        assert len(pp) == 1
        assert pp.terms[0] == terms.eq(var("x", 8), const(5, 8))
        assert session.check_sat() == "sat"
        # contradiction at base makes the session unsat
        assert_path(pp, terms.not_(terms.eq(var("x", 8), const(5, 8))), session)
        assert session.check_sat() == "unsat"
        assert len(pp) == 2


def test_lazily_concretize_evaluates_without_queries():
    with SolverSession() as session:
        session.declare("idx", 8)
        queries_before = session.stats.queries
        assert lazily_concretize(var("idx", 8), {"idx": 2}, session) == 2
        t = terms.bv_binop("bvadd", var("idx", 8), const(1, 8))
        assert lazily_concretize(t, {"idx": 2}, session) == 3
        branchy = terms.ite(
            terms.eq(var("len", 8), const(0, 8)),
            const(0, 8),
            terms.bv_binop("bvsub", var("len", 8), const(1, 8)),
        )
        assert lazily_concretize(branchy, {"len": 4}, session) == 3
        assert session.stats.queries == queries_before
        assert session.stats.concretizations == 3


def test_lazily_concretize_unbound_var():
    from panicgate.symbolic import UnboundVar

    with pytest.raises(terms.UnboundVar):
        lazily_concretize(var("ghost", 8), {})
