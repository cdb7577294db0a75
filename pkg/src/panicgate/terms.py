"""Bit-vector expression trees shadowing concrete dataflow.

Terms carry an explicit width in bits; width 0 marks boolean sort.  The
constructors enforce operator width rules and apply a few structural
simplifications so that byte-granular shadow round-trips collapse back to
the original expression.  ``evaluate`` is a pure big-integer interpreter
used as the solver-independent oracle; ``render`` produces SMT-LIB2 text.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping


class UnboundVar(Exception):
    pass


@dataclass(frozen=True)
class Term:
    op: str
    width: int  # bits; 0 for boolean sort
    args: tuple["Term", ...] = ()
    params: tuple[int, ...] = ()
    name: str = ""
    value: int = 0

    @property
    def is_bool(self) -> bool:
        return self.width == 0

    def __str__(self) -> str:
        return render(self)


_BV_BINOPS = {
    "bvadd",
    "bvsub",
    "bvmul",
    "bvudiv",
    "bvsdiv",
    "bvurem",
    "bvsrem",
    "bvand",
    "bvor",
    "bvxor",
    "bvshl",
    "bvlshr",
    "bvashr",
}
_CMP_OPS = {"=", "bvult", "bvule", "bvslt", "bvsle"}

TRUE = Term("true", 0)
FALSE = Term("false", 0)


def const(value: int, width: int) -> Term:
    if width <= 0:
        raise ValueError("const width must be positive")
    return Term("const", width, value=value & ((1 << width) - 1))


def var(name: str, width: int) -> Term:
    if width <= 0:
        raise ValueError("var width must be positive")
    return Term("var", width, name=name)


def _check_bv(t: Term) -> None:
    if t.is_bool:
        raise ValueError("expected a bit-vector term")


def bv_binop(op: str, a: Term, b: Term) -> Term:
    if op not in _BV_BINOPS:
        raise ValueError(f"unknown bit-vector operator {op}")
    _check_bv(a)
    _check_bv(b)
    if a.width != b.width:
        raise ValueError(f"{op} width mismatch: {a.width} vs {b.width}")
    if a.op == "const" and b.op == "const":
        return const(_eval_bv_binop(op, a.value, b.value, a.width), a.width)
    return Term(op, a.width, (a, b))


def bv_not(a: Term) -> Term:
    _check_bv(a)
    if a.op == "const":
        return const(~a.value, a.width)
    return Term("bvnot", a.width, (a,))


def bv_neg(a: Term) -> Term:
    _check_bv(a)
    if a.op == "const":
        return const(-a.value, a.width)
    return Term("bvneg", a.width, (a,))


def extract(a: Term, hi: int, lo: int) -> Term:
    _check_bv(a)
    if not (0 <= lo <= hi < a.width):
        raise ValueError(f"extract [{hi}:{lo}] outside width {a.width}")
    if lo == 0 and hi == a.width - 1:
        return a
    if a.op == "const":
        return const(a.value >> lo, hi - lo + 1)
    if a.op == "extract":
        return extract(a.args[0], a.params[1] + hi, a.params[1] + lo)
    return Term("extract", hi - lo + 1, (a,), params=(hi, lo))


def zero_extend(a: Term, extra: int) -> Term:
    _check_bv(a)
    if extra < 0:
        raise ValueError("negative extension")
    if extra == 0:
        return a
    if a.op == "const":
        return const(a.value, a.width + extra)
    return Term("zero_extend", a.width + extra, (a,), params=(extra,))


def sign_extend(a: Term, extra: int) -> Term:
    _check_bv(a)
    if extra < 0:
        raise ValueError("negative extension")
    if extra == 0:
        return a
    if a.op == "const":
        v = a.value
        if v & (1 << (a.width - 1)):
            v -= 1 << a.width
        return const(v, a.width + extra)
    return Term("sign_extend", a.width + extra, (a,), params=(extra,))


def concat(parts: Iterable[Term]) -> Term:
    """Concatenate bit-vector parts, most-significant first."""
    flat: list[Term] = []
    for p in parts:
        _check_bv(p)
        if p.op == "concat":
            flat.extend(p.args)
        else:
            flat.append(p)
    if not flat:
        raise ValueError("concat of nothing")
    merged: list[Term] = []
    for p in flat:
        if merged:
            q = merged[-1]
            if q.op == "const" and p.op == "const":
                merged[-1] = const((q.value << p.width) | p.value, q.width + p.width)
                continue
            # Adjacent extracts of the same base merge back: base[h:m+1] ++
            # base[m:l] == base[h:l].  This undoes byte-granular splitting.
            if (
                q.op == "extract"
                and p.op == "extract"
                and q.args[0] == p.args[0]
                and q.params[1] == p.params[0] + 1
            ):
                merged[-1] = extract(q.args[0], q.params[0], p.params[1])
                continue
        merged.append(p)
    if len(merged) == 1:
        return merged[0]
    return Term("concat", sum(p.width for p in merged), tuple(merged))


def eq(a: Term, b: Term) -> Term:
    if a.is_bool != b.is_bool or (not a.is_bool and a.width != b.width):
        raise ValueError("= operands must share a sort")
    if a == b:
        return TRUE
    if a.op == "const" and b.op == "const":
        return TRUE if a.value == b.value else FALSE
    if a.op in ("true", "false") and b.op in ("true", "false"):
        return TRUE if a.op == b.op else FALSE
    return Term("=", 0, (a, b))


def cmp_op(op: str, a: Term, b: Term) -> Term:
    if op == "=":
        return eq(a, b)
    if op not in _CMP_OPS:
        raise ValueError(f"unknown comparison {op}")
    _check_bv(a)
    _check_bv(b)
    if a.width != b.width:
        raise ValueError(f"{op} width mismatch")
    if a.op == "const" and b.op == "const":
        return TRUE if _eval_cmp(op, a.value, b.value, a.width) else FALSE
    return Term(op, 0, (a, b))


def not_(a: Term) -> Term:
    if not a.is_bool:
        raise ValueError("not expects a boolean")
    if a.op == "true":
        return FALSE
    if a.op == "false":
        return TRUE
    if a.op == "not":
        return a.args[0]
    return Term("not", 0, (a,))


def and_(*args: Term) -> Term:
    kept = []
    for a in args:
        if not a.is_bool:
            raise ValueError("and expects booleans")
        if a.op == "false":
            return FALSE
        if a.op != "true":
            kept.append(a)
    if not kept:
        return TRUE
    if len(kept) == 1:
        return kept[0]
    return Term("and", 0, tuple(kept))


def or_(*args: Term) -> Term:
    kept = []
    for a in args:
        if not a.is_bool:
            raise ValueError("or expects booleans")
        if a.op == "true":
            return TRUE
        if a.op != "false":
            kept.append(a)
    if not kept:
        return FALSE
    if len(kept) == 1:
        return kept[0]
    return Term("or", 0, tuple(kept))


def xor_(a: Term, b: Term) -> Term:
    if not (a.is_bool and b.is_bool):
        raise ValueError("xor expects booleans")
    if a.op in ("true", "false") and b.op in ("true", "false"):
        return TRUE if a.op != b.op else FALSE
    return Term("xor", 0, (a, b))


def ite(cond: Term, then: Term, els: Term) -> Term:
    if not cond.is_bool:
        raise ValueError("ite condition must be boolean")
    if then.is_bool != els.is_bool or (not then.is_bool and then.width != els.width):
        raise ValueError("ite branches must share a sort")
    if cond.op == "true":
        return then
    if cond.op == "false":
        return els
    if then == els:
        return then
    return Term("ite", then.width, (cond, then, els))


def bool_to_bv(cond: Term, width: int = 8) -> Term:
    """Mirror a boolean as the 0/1 byte a comparison opcode produces."""
    return ite(cond, const(1, width), const(0, width))


def truthy(t: Term) -> Term:
    """Branch-flag truth semantics: a bit-vector is true iff non-zero."""
    if t.is_bool:
        return t
    if t.op == "const":
        return TRUE if t.value != 0 else FALSE
    # ite(c, 1, 0) != 0 collapses to c, keeping predicates readable.
    if (
        t.op == "ite"
        and t.args[1].op == "const"
        and t.args[2].op == "const"
        and t.args[1].value != 0
        and t.args[2].value == 0
    ):
        return t.args[0]
    if (
        t.op == "ite"
        and t.args[1].op == "const"
        and t.args[2].op == "const"
        and t.args[1].value == 0
        and t.args[2].value != 0
    ):
        return not_(t.args[0])
    return not_(eq(t, const(0, t.width)))


def _to_signed(value: int, bits: int) -> int:
    if value & (1 << (bits - 1)):
        return value - (1 << bits)
    return value


def _eval_bv_binop(op: str, a: int, b: int, width: int) -> int:
    mask = (1 << width) - 1
    if op == "bvadd":
        return (a + b) & mask
    if op == "bvsub":
        return (a - b) & mask
    if op == "bvmul":
        return (a * b) & mask
    if op == "bvudiv":
        return mask if b == 0 else (a // b) & mask
    if op == "bvurem":
        return a if b == 0 else (a % b) & mask
    if op == "bvsdiv":
        # SMT-LIB: truncates toward zero; x/0 is -1 for non-negative x, 1 otherwise.
        sa, sb = _to_signed(a, width), _to_signed(b, width)
        if sb == 0:
            return mask if sa >= 0 else 1
        q = abs(sa) // abs(sb)
        if (sa < 0) != (sb < 0):
            q = -q
        return q & mask
    if op == "bvsrem":
        sa, sb = _to_signed(a, width), _to_signed(b, width)
        if sb == 0:
            return a
        q = abs(sa) // abs(sb)
        if (sa < 0) != (sb < 0):
            q = -q
        return (sa - q * sb) & mask
    if op == "bvand":
        return a & b
    if op == "bvor":
        return a | b
    if op == "bvxor":
        return a ^ b
    if op == "bvshl":
        return (a << b) & mask if b < width else 0
    if op == "bvlshr":
        return a >> b if b < width else 0
    if op == "bvashr":
        sa = _to_signed(a, width)
        if b >= width:
            return mask if sa < 0 else 0
        return (sa >> b) & mask
    raise ValueError(f"unknown operator {op}")


def _eval_cmp(op: str, a: int, b: int, width: int) -> bool:
    if op == "=":
        return a == b
    if op == "bvult":
        return a < b
    if op == "bvule":
        return a <= b
    if op == "bvslt":
        return _to_signed(a, width) < _to_signed(b, width)
    if op == "bvsle":
        return _to_signed(a, width) <= _to_signed(b, width)
    raise ValueError(f"unknown comparison {op}")


def evaluate(t: Term, env: Mapping[str, int]) -> int:
    """Evaluate under an assignment; booleans come back as 0/1."""
    op = t.op
    if op == "const":
        return t.value
    if op == "var":
        if t.name not in env:
            raise UnboundVar(t.name)
        return env[t.name] & ((1 << t.width) - 1)
    if op == "true":
        return 1
    if op == "false":
        return 0
    if op in _BV_BINOPS:
        return _eval_bv_binop(op, evaluate(t.args[0], env), evaluate(t.args[1], env), t.width)
    if op == "bvnot":
        return ~evaluate(t.args[0], env) & ((1 << t.width) - 1)
    if op == "bvneg":
        return -evaluate(t.args[0], env) & ((1 << t.width) - 1)
    if op == "extract":
        hi, lo = t.params
        return (evaluate(t.args[0], env) >> lo) & ((1 << (hi - lo + 1)) - 1)
    if op == "zero_extend":
        return evaluate(t.args[0], env)
    if op == "sign_extend":
        inner = t.args[0]
        v = evaluate(inner, env)
        return _to_signed(v, inner.width) & ((1 << t.width) - 1)
    if op == "concat":
        v = 0
        for part in t.args:
            v = (v << part.width) | evaluate(part, env)
        return v
    if op in _CMP_OPS:
        a, b = t.args
        if op == "=" and a.is_bool:
            return int(evaluate(a, env) == evaluate(b, env))
        return int(_eval_cmp(op, evaluate(a, env), evaluate(b, env), a.width))
    if op == "not":
        return 1 - evaluate(t.args[0], env)
    if op == "and":
        return int(all(evaluate(a, env) for a in t.args))
    if op == "or":
        return int(any(evaluate(a, env) for a in t.args))
    if op == "xor":
        return evaluate(t.args[0], env) ^ evaluate(t.args[1], env)
    if op == "ite":
        return evaluate(t.args[1], env) if evaluate(t.args[0], env) else evaluate(t.args[2], env)
    raise ValueError(f"cannot evaluate {op}")


def free_vars(t: Term) -> set[str]:
    names: set[str] = set()
    stack = [t]
    while stack:
        cur = stack.pop()
        if cur.op == "var":
            names.add(cur.name)
        else:
            stack.extend(cur.args)
    return names


def _render_const(value: int, width: int) -> str:
    if width % 4 == 0:
        return f"#x{value:0{width // 4}x}"
    return f"#b{value:0{width}b}"


def render(t: Term) -> str:
    """Deterministic SMT-LIB2 rendering."""
    op = t.op
    if op == "const":
        return _render_const(t.value, t.width)
    if op == "var":
        return t.name
    if op in ("true", "false"):
        return op
    if op == "extract":
        return f"((_ extract {t.params[0]} {t.params[1]}) {render(t.args[0])})"
    if op == "zero_extend":
        return f"((_ zero_extend {t.params[0]}) {render(t.args[0])})"
    if op == "sign_extend":
        return f"((_ sign_extend {t.params[0]}) {render(t.args[0])})"
    return f"({op} {' '.join(render(a) for a in t.args)})"
