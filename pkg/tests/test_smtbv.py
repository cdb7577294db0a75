"""The bundled QF_BV backend, driven in-process through its text protocol.

The differential oracle is brute-force enumeration with a reference
evaluator written here, independent of both the backend and the engine's
term evaluator.
"""

import io
import itertools
import random
import re

from panicgate.smtbv import run


def drive(script):
    out = io.StringIO()
    run(io.StringIO(script), out)
    return out.getvalue().strip().splitlines()


def test_empty_session_is_sat():
    assert drive("(check-sat)\n") == ["sat"]


def test_assert_and_model():
    lines = drive(
        "(declare-fun x () (_ BitVec 8))\n(assert (= x #x05))\n(check-sat)\n(get-value (x))\n"
    )
    assert lines == ["sat", "((x (_ bv5 8)))"]


def test_push_pop_scoping():
    lines = drive(
        "(declare-fun x () (_ BitVec 8))\n"
        "(assert (= x #x05))\n"
        "(push 1)\n(assert (not (= x #x05)))\n(check-sat)\n(pop 1)\n(check-sat)\n"
    )
    assert lines == ["unsat", "sat"]


def test_print_success_option():
    lines = drive("(set-option :print-success true)\n(set-logic QF_BV)\n(check-sat)\n")
    assert lines == ["success", "success", "sat"]


def test_pop_below_base_errors():
    lines = drive("(pop 1)\n")
    assert lines[0].startswith("(error")


def test_unknown_command_reports_error():
    assert drive("(frobnicate)\n")[0].startswith("(error")


def test_commands_may_span_lines():
    lines = drive("(declare-fun x\n () (_ BitVec 4))\n(assert (= x\n #x3))\n(check-sat)\n(get-value (x))\n")
    assert lines == ["sat", "((x (_ bv3 4)))"]


def test_reset_clears_state():
    lines = drive(
        "(declare-fun x () (_ BitVec 4))\n(assert (= x #x1))\n(reset)\n"
        "(declare-fun x () (_ BitVec 4))\n(assert (= x #x2))\n(check-sat)\n(get-value (x))\n"
    )
    assert lines == ["sat", "((x (_ bv2 4)))"]


def test_indexed_ops_round_trip():
    lines = drive(
        "(declare-fun x () (_ BitVec 8))\n"
        "(assert (= ((_ extract 7 4) x) #x5))\n"
        "(assert (= ((_ zero_extend 8) x) #x0051))\n"
        "(check-sat)\n(get-value (x))\n"
    )
    assert lines == ["sat", "((x (_ bv81 8)))"]  # 0x51


def test_concat_is_msb_first():
    lines = drive(
        "(declare-fun x () (_ BitVec 4))\n(declare-fun y () (_ BitVec 4))\n"
        "(assert (= (concat x y) #x2a))\n(check-sat)\n(get-value (x y))\n"
    )
    assert lines[0] == "sat"
    m = dict(re.findall(r"\((\w+) \(_ bv(\d+) \d+\)\)", lines[1]))
    assert int(m["x"]) == 2 and int(m["y"]) == 10


# -- reference semantics for the differential ---------------------------------

BINOPS = [
    "bvadd", "bvsub", "bvmul", "bvand", "bvor", "bvxor",
    "bvshl", "bvlshr", "bvashr", "bvudiv", "bvurem", "bvsdiv", "bvsrem",
]
CMPS = ["=", "bvult", "bvule", "bvslt", "bvsle"]


def signed(v, w):
    return v - (1 << w) if v & (1 << (w - 1)) else v


def ref(ast, env, w):
    if isinstance(ast, str):
        if ast.startswith("#x"):
            return int(ast[2:], 16)
        return env[ast]
    op = ast[0]
    m = (1 << w) - 1
    if op in BINOPS:
        a, b = ref(ast[1], env, w), ref(ast[2], env, w)
        if op == "bvadd":
            return (a + b) & m
        if op == "bvsub":
            return (a - b) & m
        if op == "bvmul":
            return (a * b) & m
        if op == "bvand":
            return a & b
        if op == "bvor":
            return a | b
        if op == "bvxor":
            return a ^ b
        if op == "bvshl":
            return (a << b) & m if b < w else 0
        if op == "bvlshr":
            return a >> b if b < w else 0
        if op == "bvashr":
            sa = signed(a, w)
            return (sa >> b) & m if b < w else (m if sa < 0 else 0)
        if op == "bvudiv":
            return m if b == 0 else (a // b) & m
        if op == "bvurem":
            return a if b == 0 else a % b
        if op == "bvsdiv":
            sa, sb = signed(a, w), signed(b, w)
            if sb == 0:
                return m if sa >= 0 else 1
            q = abs(sa) // abs(sb)
            return (-q if (sa < 0) != (sb < 0) else q) & m
        if op == "bvsrem":
            sa, sb = signed(a, w), signed(b, w)
            if sb == 0:
                return a
            q = abs(sa) // abs(sb)
            if (sa < 0) != (sb < 0):
                q = -q
            return (sa - q * sb) & m
    if op in CMPS:
        a, b = ref(ast[1], env, w), ref(ast[2], env, w)
        if op == "=":
            return int(a == b)
        if op == "bvult":
            return int(a < b)
        if op == "bvule":
            return int(a <= b)
        if op == "bvslt":
            return int(signed(a, w) < signed(b, w))
        return int(signed(a, w) <= signed(b, w))
    if op == "not":
        return 1 - ref(ast[1], env, w)
    if op == "and":
        return int(all(ref(a, env, w) for a in ast[1:]))
    if op == "or":
        return int(any(ref(a, env, w) for a in ast[1:]))
    raise AssertionError(op)


def to_text(ast):
    if isinstance(ast, str):
        return ast
    return "(" + " ".join(to_text(a) for a in ast) + ")"


def test_single_op_circuits_exhaustive_width4():
    """Every binary circuit over every 4-bit operand pair vs the reference."""
    for op in BINOPS:
        script_parts = ["(declare-fun r () (_ BitVec 4))"]
        checks = []
        for a in range(16):
            for b in range(16):
                checks.append((a, b))
        # one process, reset between probes, keeps this quick
        script = []
        for a, b in checks:
            script.append("(reset)")
            script.append("(declare-fun r () (_ BitVec 4))")
            script.append(f"(assert (= r ({op} #x{a:x} #x{b:x})))")
            script.append("(check-sat)")
            script.append("(get-value (r))")
        lines = drive("\n".join(script) + "\n")
        idx = 0
        for a, b in checks:
            assert lines[idx] == "sat"
            got = int(re.search(r"bv(\d+)", lines[idx + 1]).group(1))
            want = ref((op, f"#x{a:x}", f"#x{b:x}"), {}, 4)
            assert got == want, (op, a, b, got, want)
            idx += 2


def rand_bv(rng, depth, names, w):
    if depth == 0 or rng.random() < 0.35:
        if rng.random() < 0.5:
            return rng.choice(names)
        return "#x%0*x" % (w // 4, rng.randrange(1 << w))
    return (rng.choice(BINOPS), rand_bv(rng, depth - 1, names, w), rand_bv(rng, depth - 1, names, w))


def rand_bool(rng, depth, names, w):
    if depth == 0 or rng.random() < 0.4:
        return (rng.choice(CMPS), rand_bv(rng, 2, names, w), rand_bv(rng, 2, names, w))
    k = rng.random()
    if k < 0.3:
        return ("not", rand_bool(rng, depth - 1, names, w))
    if k < 0.65:
        return ("and", rand_bool(rng, depth - 1, names, w), rand_bool(rng, depth - 1, names, w))
    return ("or", rand_bool(rng, depth - 1, names, w), rand_bool(rng, depth - 1, names, w))


def test_random_formulas_against_brute_force():
    rng = random.Random(20240809)
    w, names = 4, ["u", "v"]
    for _ in range(150):
        asserts = [rand_bool(rng, 2, names, w) for _ in range(rng.randrange(1, 4))]
        script = "".join(f"(declare-fun {n} () (_ BitVec {w}))\n" for n in names)
        script += "".join(f"(assert {to_text(a)})\n" for a in asserts)
        script += "(check-sat)\n(get-value (u v))\n"
        lines = drive(script)
        truth = any(
            all(ref(a, dict(zip(names, vals)), w) for a in asserts)
            for vals in itertools.product(range(1 << w), repeat=2)
        )
        assert lines[0] == ("sat" if truth else "unsat"), [to_text(a) for a in asserts]
        if truth:
            m = dict(re.findall(r"\((\w+) \(_ bv(\d+) \d+\)\)", lines[1]))
            env = {k: int(v) for k, v in m.items()}
            assert all(ref(a, env, w) for a in asserts), (env, [to_text(a) for a in asserts])


def test_deterministic_models():
    script = (
        "(declare-fun x () (_ BitVec 8))\n(declare-fun y () (_ BitVec 8))\n"
        "(assert (bvult x y))\n(check-sat)\n(get-value (x y))\n"
    )
    assert drive(script) == drive(script)


def test_wide_arithmetic_64_bit():
    lines = drive(
        "(declare-fun len () (_ BitVec 64))\n"
        "(assert (bvule len #x0000000000000040))\n"
        "(assert (bvule #x0000000000000008 (bvadd (bvadd len len) #x0000000000000001)))\n"
        "(assert (= (bvand len #x0000000000000007) #x0000000000000002))\n"
        "(check-sat)\n(get-value (len))\n"
    )
    assert lines[0] == "sat"
    value = int(re.search(r"bv(\d+)", lines[1]).group(1))
    assert value <= 64 and 2 * value + 1 >= 8 and value % 8 == 2
