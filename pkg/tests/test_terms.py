import random

import pytest

from panicgate import terms
from panicgate.terms import const, var


def test_const_masks_to_width():
    assert const(0x1FF, 8).value == 0xFF
    assert const(-1, 8).value == 0xFF


def test_binop_width_checks():
    with pytest.raises(ValueError):
        terms.bv_binop("bvadd", var("a", 8), var("b", 16))
    t = terms.bv_binop("bvadd", var("a", 8), var("b", 8))
    assert t.width == 8


def test_constant_folding():
    assert terms.bv_binop("bvadd", const(250, 8), const(10, 8)) == const(4, 8)
    assert terms.cmp_op("bvult", const(1, 8), const(2, 8)) == terms.TRUE


def test_extract_of_extract_composes():
    base = var("x", 32)
    inner = terms.extract(base, 23, 8)  # 16 bits
    outer = terms.extract(inner, 11, 4)
    assert outer == terms.extract(base, 19, 12)


def test_concat_of_adjacent_extracts_merges_back():
    base = var("x", 32)
    lo = terms.extract(base, 15, 0)
    hi = terms.extract(base, 31, 16)
    assert terms.concat([hi, lo]) == base


def test_byte_split_roundtrip_recovers_base_term():
    # mirrors the byte-granular shadow: split into bytes, concat MSB first
    base = var("len", 64)
    parts = [terms.extract(base, 8 * i + 7, 8 * i) for i in reversed(range(8))]
    assert terms.concat(parts) == base


def test_truthy_collapses_comparison_flags():
    flag = terms.bool_to_bv(terms.eq(var("n", 8), const(5, 8)))
    assert terms.truthy(flag) == terms.eq(var("n", 8), const(5, 8))
    inverted = terms.ite(terms.eq(var("n", 8), const(5, 8)), const(0, 8), const(1, 8))
    assert terms.truthy(inverted) == terms.not_(terms.eq(var("n", 8), const(5, 8)))


def test_not_not_cancels():
    phi = terms.eq(var("n", 8), const(5, 8))
    assert terms.not_(terms.not_(phi)) == phi


def test_evaluate_matches_semantics():
    env = {"a": 0xF0, "b": 0x0F}
    a, b = var("a", 8), var("b", 8)
    assert terms.evaluate(terms.bv_binop("bvadd", a, b), env) == 0xFF
    assert terms.evaluate(terms.bv_binop("bvsub", b, a), env) == 0x1F
    assert terms.evaluate(terms.cmp_op("bvslt", a, b), env) == 1  # -16 < 15
    assert terms.evaluate(terms.sign_extend(a, 8), env) == 0xFFF0
    assert terms.evaluate(terms.zero_extend(a, 8), env) == 0x00F0
    assert terms.evaluate(terms.concat([a, b]), env) == 0xF00F
    assert terms.evaluate(terms.ite(terms.eq(a, b), a, b), env) == 0x0F


def test_evaluate_unbound_var_raises():
    with pytest.raises(terms.UnboundVar):
        terms.evaluate(var("ghost", 8), {})


def test_render_smtlib_shapes():
    t = terms.cmp_op("bvule", var("len", 64), const(64, 64))
    assert terms.render(t) == "(bvule len #x0000000000000040)"
    assert terms.render(const(1, 8)) == "#x01"
    assert terms.render(terms.extract(var("x", 16), 7, 0)) == "((_ extract 7 0) x)"
    assert terms.render(terms.eq(var("len", 8), const(1, 8))) == "(= len #x01)"


def test_render_nonnibble_width_uses_binary():
    assert terms.render(const(1, 3)) == "#b001"


def test_free_vars_walks_subterms():
    t = terms.bv_binop("bvmul", const(2, 8), var("num2", 8))
    assert terms.free_vars(t) == {"num2"}
    assert terms.free_vars(terms.truthy(terms.bool_to_bv(terms.eq(t, const(4, 8))))) == {"num2"}


def test_evaluate_division_follows_smt_semantics_on_zero():
    a = var("a", 8)
    env = {"a": 7}
    assert terms.evaluate(terms.bv_binop("bvudiv", a, const(0, 8)), env) == 0xFF
    assert terms.evaluate(terms.bv_binop("bvurem", a, const(0, 8)), env) == 7


def test_random_eval_against_direct_python():
    rng = random.Random(11)
    ops = ["bvadd", "bvsub", "bvmul", "bvand", "bvor", "bvxor"]
    for _ in range(3000):
        w = rng.choice((8, 16, 32))
        x, y = rng.randrange(1 << w), rng.randrange(1 << w)
        op = rng.choice(ops)
        t = terms.bv_binop(op, var("x", w), var("y", w))
        got = terms.evaluate(t, {"x": x, "y": y})
        expect = {
            "bvadd": (x + y),
            "bvsub": (x - y),
            "bvmul": (x * y),
            "bvand": x & y,
            "bvor": x | y,
            "bvxor": x ^ y,
        }[op] & ((1 << w) - 1)
        assert got == expect
