"""Self-contained QF_BV solver speaking SMT-LIB2 on stdin/stdout.

This module is the default backend the executor talks to as a child
process; any external SMT-LIB2 solver can be substituted via the solver
command option.  It deliberately imports nothing from the rest of the
package: assertions are parsed from text, bit-blasted to CNF and decided
by a small CDCL core, so its verdicts are independent of the engine's
term evaluator.

Supported commands: set-option, set-logic, set-info, declare-fun,
declare-const, assert, push, pop, check-sat, get-value, get-model,
echo, reset, exit.
"""

from __future__ import annotations

import sys


# ---------------------------------------------------------------------------
# S-expression reader


class SmtError(Exception):
    pass


def tokenize(chunk: str) -> list[str]:
    tokens: list[str] = []
    i, n = 0, len(chunk)
    while i < n:
        c = chunk[i]
        if c in "()":
            tokens.append(c)
            i += 1
        elif c.isspace():
            i += 1
        elif c == ";":
            while i < n and chunk[i] != "\n":
                i += 1
        elif c == '"':
            j = i + 1
            while j < n and chunk[j] != '"':
                j += 1
            tokens.append(chunk[i : j + 1])
            i = j + 1
        elif c == "|":
            j = i + 1
            while j < n and chunk[j] != "|":
                j += 1
            tokens.append(chunk[i : j + 1])
            i = j + 1
        else:
            j = i
            while j < n and not chunk[j].isspace() and chunk[j] not in "();":
                j += 1
            tokens.append(chunk[i:j])
            i = j
    return tokens


def parse_sexprs(tokens: list[str]):
    """Consume as many complete s-expressions as possible.

    Returns (expressions, leftover_tokens).
    """
    exprs = []
    pos = 0

    def read(at: int):
        if at >= len(tokens):
            return None, at
        tok = tokens[at]
        if tok == "(":
            items = []
            at += 1
            while True:
                if at >= len(tokens):
                    return None, at
                if tokens[at] == ")":
                    return tuple(items), at + 1
                item, at = read(at)
                if item is None:
                    return None, at
                items.append(item)
        if tok == ")":
            raise SmtError("unbalanced ')'")
        return tok, at + 1

    while pos < len(tokens):
        save = pos
        try:
            expr, pos = read(pos)
        except SmtError:
            return exprs, []
        if expr is None:
            return exprs, tokens[save:]
        exprs.append(expr)
    return exprs, []


# ---------------------------------------------------------------------------
# CDCL SAT core


class Sat:
    """Two-watched-literal CDCL with 1UIP learning and geometric restarts."""

    def __init__(self) -> None:
        self.nvars = 0
        self.clauses: list[list[int]] = []
        self.watches: dict[int, list[int]] = {}
        self.assign: dict[int, bool] = {}
        self.level: dict[int, int] = {}
        self.reason: dict[int, int | None] = {}
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.activity: dict[int, float] = {}
        self.var_inc = 1.0
        self.ok = True

    def new_var(self) -> int:
        self.nvars += 1
        v = self.nvars
        self.activity[v] = 0.0
        return v

    def value(self, lit: int):
        v = self.assign.get(abs(lit))
        if v is None:
            return None
        return v if lit > 0 else not v

    def add_clause(self, lits: list[int]) -> None:
        if not self.ok:
            return
        seen: set[int] = set()
        out: list[int] = []
        for lit in lits:
            if -lit in seen:
                return  # tautology
            if lit in seen:
                continue
            if not self.trail_lim:  # simplify against root-level assignments
                val = self.value(lit)
                if val is True:
                    return
                if val is False:
                    continue
            seen.add(lit)
            out.append(lit)
        if not out:
            self.ok = False
            return
        if len(out) == 1:
            if not self._enqueue(out[0], None):
                self.ok = False
            return
        idx = len(self.clauses)
        self.clauses.append(out)
        self.watches.setdefault(out[0], []).append(idx)
        self.watches.setdefault(out[1], []).append(idx)

    def _enqueue(self, lit: int, reason: int | None) -> bool:
        val = self.value(lit)
        if val is not None:
            return val
        v = abs(lit)
        self.assign[v] = lit > 0
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)
        return True

    def _propagate(self) -> int | None:
        """Unit propagation; returns a conflicting clause index or None."""
        head = getattr(self, "_qhead", 0)
        while head < len(self.trail):
            lit = self.trail[head]
            head += 1
            false_lit = -lit
            watching = self.watches.get(false_lit, [])
            keep: list[int] = []
            i = 0
            while i < len(watching):
                ci = watching[i]
                i += 1
                clause = self.clauses[ci]
                if clause[0] == false_lit:
                    clause[0], clause[1] = clause[1], clause[0]
                other = clause[0]
                if self.value(other) is True:
                    keep.append(ci)
                    continue
                moved = False
                for k in range(2, len(clause)):
                    if self.value(clause[k]) is not False:
                        clause[1], clause[k] = clause[k], clause[1]
                        self.watches.setdefault(clause[1], []).append(ci)
                        moved = True
                        break
                if moved:
                    continue
                keep.append(ci)
                if self.value(other) is False:
                    keep.extend(watching[i:])
                    self.watches[false_lit] = keep
                    self._qhead = len(self.trail)
                    return ci
                self._enqueue(other, ci)
            self.watches[false_lit] = keep
        self._qhead = head
        return None

    def _bump(self, v: int) -> None:
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for k in self.activity:
                self.activity[k] *= 1e-100
            self.var_inc *= 1e-100

    def _analyze(self, confl: int) -> tuple[list[int], int]:
        learnt: list[int] = []
        seen: set[int] = set()
        counter = 0
        lit = 0
        idx = len(self.trail) - 1
        cur_level = len(self.trail_lim)
        clause = self.clauses[confl]
        while True:
            for q in clause if lit == 0 else clause[1:]:
                v = abs(q)
                if v in seen or self.level[v] == 0:
                    continue
                seen.add(v)
                self._bump(v)
                if self.level[v] >= cur_level:
                    counter += 1
                else:
                    learnt.append(q)
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            lit = self.trail[idx]
            idx -= 1
            seen.discard(abs(lit))
            counter -= 1
            if counter == 0:
                break
            r = self.reason[abs(lit)]
            clause = self.clauses[r]
            # position the implied literal first for uniform slicing
            if clause[0] != lit:
                pos = clause.index(lit)
                clause[0], clause[pos] = clause[pos], clause[0]
        learnt.insert(0, -lit)
        if len(learnt) == 1:
            return learnt, 0
        back = max(self.level[abs(q)] for q in learnt[1:])
        return learnt, back

    def _backjump(self, target_level: int) -> None:
        while len(self.trail_lim) > target_level:
            split = self.trail_lim.pop()
            while len(self.trail) > split:
                lit = self.trail.pop()
                v = abs(lit)
                del self.assign[v]
                del self.level[v]
                self.reason[v] = None
        self._qhead = len(self.trail)

    def _decide(self) -> int | None:
        best_v, best_a = None, -1.0
        for v in range(1, self.nvars + 1):
            if v not in self.assign:
                a = self.activity[v]
                if a > best_a:
                    best_v, best_a = v, a
        if best_v is None:
            return None
        return -best_v  # prefer false: zero-heavy deterministic models

    def solve(self) -> bool:
        if not self.ok:
            return False
        self._qhead = 0
        conflicts = 0
        restart_limit = 100
        while True:
            confl = self._propagate()
            if confl is not None:
                if not self.trail_lim:
                    self.ok = False
                    return False
                conflicts += 1
                self.var_inc /= 0.95
                learnt, back = self._analyze(confl)
                self._backjump(back)
                if len(learnt) == 1:
                    if not self._enqueue(learnt[0], None):
                        self.ok = False
                        return False
                else:
                    idx = len(self.clauses)
                    self.clauses.append(learnt)
                    self.watches.setdefault(learnt[0], []).append(idx)
                    self.watches.setdefault(learnt[1], []).append(idx)
                    self._enqueue(learnt[0], idx)
                if conflicts >= restart_limit:
                    conflicts = 0
                    restart_limit = int(restart_limit * 1.5)
                    self._backjump(0)
            else:
                lit = self._decide()
                if lit is None:
                    return True
                self.trail_lim.append(len(self.trail))
                self._enqueue(lit, None)


# ---------------------------------------------------------------------------
# Bit blasting


class Blaster:
    def __init__(self, sat: Sat, var_bits: dict[str, list[int]]):
        self.sat = sat
        self.var_bits = var_bits
        self.cache: dict = {}
        t = sat.new_var()
        sat.add_clause([t])
        self.T = t
        self.F = -t

    # -- gates --------------------------------------------------------------

    def g_and(self, a: int, b: int) -> int:
        if a == self.F or b == self.F or a == -b:
            return self.F
        if a == self.T:
            return b
        if b == self.T or a == b:
            return a
        key = ("and", min(a, b), max(a, b))
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        o = self.sat.new_var()
        self.sat.add_clause([-o, a])
        self.sat.add_clause([-o, b])
        self.sat.add_clause([o, -a, -b])
        self.cache[key] = o
        return o

    def g_or(self, a: int, b: int) -> int:
        return -self.g_and(-a, -b)

    def g_xor(self, a: int, b: int) -> int:
        if a == self.F:
            return b
        if b == self.F:
            return a
        if a == self.T:
            return -b
        if b == self.T:
            return -a
        if a == b:
            return self.F
        if a == -b:
            return self.T
        key = ("xor", min(abs(a), abs(b)), max(abs(a), abs(b)), (a > 0) == (b > 0))
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        o = self.sat.new_var()
        self.sat.add_clause([-o, a, b])
        self.sat.add_clause([-o, -a, -b])
        self.sat.add_clause([o, -a, b])
        self.sat.add_clause([o, a, -b])
        self.cache[key] = o
        return o

    def g_eq(self, a: int, b: int) -> int:
        return -self.g_xor(a, b)

    def g_ite(self, c: int, t: int, e: int) -> int:
        if c == self.T:
            return t
        if c == self.F:
            return e
        if t == e:
            return t
        return self.g_or(self.g_and(c, t), self.g_and(-c, e))

    def g_and_many(self, lits: list[int]) -> int:
        out = self.T
        for lit in lits:
            out = self.g_and(out, lit)
        return out

    def g_or_many(self, lits: list[int]) -> int:
        out = self.F
        for lit in lits:
            out = self.g_or(out, lit)
        return out

    # -- vectors (LSB first) --------------------------------------------------

    def const_vec(self, value: int, width: int) -> list[int]:
        return [self.T if (value >> i) & 1 else self.F for i in range(width)]

    def add_vec(self, a: list[int], b: list[int], cin: int | None = None) -> list[int]:
        carry = cin if cin is not None else self.F
        out = []
        for x, y in zip(a, b):
            s = self.g_xor(self.g_xor(x, y), carry)
            carry = self.g_or(self.g_and(x, y), self.g_and(carry, self.g_xor(x, y)))
            out.append(s)
        return out

    def sub_vec(self, a: list[int], b: list[int]) -> list[int]:
        return self.add_vec(a, [-x for x in b], cin=self.T)

    def neg_vec(self, a: list[int]) -> list[int]:
        return self.add_vec([-x for x in a], self.const_vec(0, len(a)), cin=self.T)

    def mux_vec(self, c: int, t: list[int], e: list[int]) -> list[int]:
        return [self.g_ite(c, x, y) for x, y in zip(t, e)]

    def eq_vec(self, a: list[int], b: list[int]) -> int:
        return self.g_and_many([self.g_eq(x, y) for x, y in zip(a, b)])

    def ult_vec(self, a: list[int], b: list[int]) -> int:
        lt = self.F
        for x, y in zip(a, b):  # LSB to MSB; later bits dominate
            lt = self.g_ite(self.g_xor(x, y), self.g_and(-x, y), lt)
        return lt

    def ule_vec(self, a: list[int], b: list[int]) -> int:
        return -self.ult_vec(b, a)

    def _flip_sign(self, a: list[int]) -> list[int]:
        return a[:-1] + [-a[-1]]

    def slt_vec(self, a: list[int], b: list[int]) -> int:
        return self.ult_vec(self._flip_sign(a), self._flip_sign(b))

    def sle_vec(self, a: list[int], b: list[int]) -> int:
        return -self.slt_vec(b, a)

    def shift_vec(self, a: list[int], b: list[int], kind: str) -> list[int]:
        w = len(a)
        fill = a[-1] if kind == "ashr" else self.F
        cur = list(a)
        stage = 0
        while (1 << stage) < w:
            bit = b[stage] if stage < len(b) else self.F
            k = 1 << stage
            if kind == "shl":
                shifted = ([self.F] * k + cur)[:w]
            else:
                shifted = (cur[k:] + [fill] * k)[:w]
            cur = self.mux_vec(bit, shifted, cur)
            stage += 1
        overflow = self.g_or_many(list(b[stage:]))
        return self.mux_vec(overflow, [fill] * w, cur)

    def mul_vec(self, a: list[int], b: list[int]) -> list[int]:
        w = len(a)
        acc = self.const_vec(0, w)
        for i in range(w):
            bit = b[i]
            if bit == self.F:
                continue
            addend = [self.F] * i + [self.g_and(bit, a[j]) for j in range(w - i)]
            acc = self.add_vec(acc, addend)
        return acc

    def udivrem_vec(self, a: list[int], b: list[int]) -> tuple[list[int], list[int]]:
        w = len(a)
        dext = b + [self.F]  # one guard bit for the compare
        r = self.const_vec(0, w + 1)
        q: list[int] = [self.F] * w
        for i in range(w - 1, -1, -1):
            r = ([a[i]] + r)[: w + 1]
            ge = self.ule_vec(dext, r)
            r = self.mux_vec(ge, self.sub_vec(r, dext), r)
            q[i] = ge
        dz = self.eq_vec(b, self.const_vec(0, w))
        quot = self.mux_vec(dz, self.const_vec((1 << w) - 1, w), q)
        rem = self.mux_vec(dz, a, r[:w])
        return quot, rem

    def sdivrem_vec(self, a: list[int], b: list[int]) -> tuple[list[int], list[int]]:
        sa, sb = a[-1], b[-1]
        aa = self.mux_vec(sa, self.neg_vec(a), a)
        bb = self.mux_vec(sb, self.neg_vec(b), b)
        q, r = self.udivrem_vec(aa, bb)
        quot = self.mux_vec(self.g_xor(sa, sb), self.neg_vec(q), q)
        rem = self.mux_vec(sa, self.neg_vec(r), r)
        return quot, rem


# ---------------------------------------------------------------------------
# AST -> bits


_BV_LITERAL_PREFIXES = ("#x", "#b")

_BOOL_OPS = {"and", "or", "not", "xor", "=>", "=", "distinct", "ite",
             "bvult", "bvule", "bvugt", "bvuge", "bvslt", "bvsle", "bvsgt", "bvsge"}


def _parse_bv_literal(tok: str) -> tuple[int, int] | None:
    if tok.startswith("#x"):
        return int(tok[2:], 16), 4 * (len(tok) - 2)
    if tok.startswith("#b"):
        return int(tok[2:], 2), len(tok) - 2
    return None


class Session:
    def __init__(self) -> None:
        self.decl_order: list[str] = []
        self.widths: dict[str, int] = {}
        self.scopes: list[list] = [[]]
        self.print_success = False
        self.model: dict[str, int] | None = None

    # -- sorts ---------------------------------------------------------------

    def sort_of(self, ast) -> int | str:
        """Width in bits, or the string 'bool'."""
        if isinstance(ast, str):
            lit = _parse_bv_literal(ast)
            if lit:
                return lit[1]
            if ast in ("true", "false"):
                return "bool"
            if ast in self.widths:
                return self.widths[ast]
            raise SmtError(f"unknown symbol {ast}")
        head = ast[0]
        if head == "_":
            if ast[1].startswith("bv"):
                return int(ast[2])
            raise SmtError(f"unknown indexed literal {ast}")
        if isinstance(head, tuple) and head[0] == "_":
            kind = head[1]
            if kind == "extract":
                return int(head[2]) - int(head[3]) + 1
            if kind in ("zero_extend", "sign_extend"):
                inner = self.sort_of(ast[1])
                assert isinstance(inner, int)
                return inner + int(head[2])
            raise SmtError(f"unknown indexed op {kind}")
        if head == "concat":
            total = 0
            for part in ast[1:]:
                w = self.sort_of(part)
                assert isinstance(w, int)
                total += w
            return total
        if head == "ite":
            return self.sort_of(ast[2])
        if head in ("bvnot", "bvneg"):
            return self.sort_of(ast[1])
        if head.startswith("bv") and head not in _BOOL_OPS:
            return self.sort_of(ast[1])
        if head in _BOOL_OPS:
            if head == "ite":
                return self.sort_of(ast[2])
            return "bool"
        raise SmtError(f"cannot infer sort of {ast}")

    # -- blasting -------------------------------------------------------------

    def blast_bool(self, bl: Blaster, ast) -> int:
        if isinstance(ast, str):
            if ast == "true":
                return bl.T
            if ast == "false":
                return bl.F
            raise SmtError(f"expected a boolean, got {ast}")
        head = ast[0]
        if head == "not":
            return -self.blast_bool(bl, ast[1])
        if head == "and":
            return bl.g_and_many([self.blast_bool(bl, a) for a in ast[1:]])
        if head == "or":
            return bl.g_or_many([self.blast_bool(bl, a) for a in ast[1:]])
        if head == "xor":
            out = bl.F
            for a in ast[1:]:
                out = bl.g_xor(out, self.blast_bool(bl, a))
            return out
        if head == "=>":
            return bl.g_or(-self.blast_bool(bl, ast[1]), self.blast_bool(bl, ast[2]))
        if head == "ite":
            return bl.g_ite(
                self.blast_bool(bl, ast[1]),
                self.blast_bool(bl, ast[2]),
                self.blast_bool(bl, ast[3]),
            )
        if head in ("=", "distinct"):
            sort = self.sort_of(ast[1])
            if sort == "bool":
                e = bl.g_eq(self.blast_bool(bl, ast[1]), self.blast_bool(bl, ast[2]))
            else:
                e = bl.eq_vec(self.blast_bv(bl, ast[1]), self.blast_bv(bl, ast[2]))
            return e if head == "=" else -e
        if head in ("bvult", "bvule", "bvugt", "bvuge", "bvslt", "bvsle", "bvsgt", "bvsge"):
            a = self.blast_bv(bl, ast[1])
            b = self.blast_bv(bl, ast[2])
            if head == "bvult":
                return bl.ult_vec(a, b)
            if head == "bvule":
                return bl.ule_vec(a, b)
            if head == "bvugt":
                return bl.ult_vec(b, a)
            if head == "bvuge":
                return bl.ule_vec(b, a)
            if head == "bvslt":
                return bl.slt_vec(a, b)
            if head == "bvsle":
                return bl.sle_vec(a, b)
            if head == "bvsgt":
                return bl.slt_vec(b, a)
            return bl.sle_vec(b, a)
        raise SmtError(f"unknown boolean operator {head}")

    def blast_bv(self, bl: Blaster, ast) -> list[int]:
        if isinstance(ast, str):
            lit = _parse_bv_literal(ast)
            if lit:
                return bl.const_vec(lit[0], lit[1])
            bits = bl.var_bits.get(ast)
            if bits is None:
                raise SmtError(f"unknown symbol {ast}")
            return bits
        head = ast[0]
        if head == "_" and ast[1].startswith("bv"):
            return bl.const_vec(int(ast[1][2:]), int(ast[2]))
        if isinstance(head, tuple) and head[0] == "_":
            kind = head[1]
            inner = self.blast_bv(bl, ast[1])
            if kind == "extract":
                hi, lo = int(head[2]), int(head[3])
                return inner[lo : hi + 1]
            if kind == "zero_extend":
                return inner + [bl.F] * int(head[2])
            if kind == "sign_extend":
                return inner + [inner[-1]] * int(head[2])
            raise SmtError(f"unknown indexed op {kind}")
        if head == "concat":
            bits: list[int] = []
            for part in reversed(ast[1:]):  # SMT concat is MSB-first
                bits.extend(self.blast_bv(bl, part))
            return bits
        if head == "ite":
            return bl.mux_vec(
                self.blast_bool(bl, ast[1]),
                self.blast_bv(bl, ast[2]),
                self.blast_bv(bl, ast[3]),
            )
        if head == "bvnot":
            return [-x for x in self.blast_bv(bl, ast[1])]
        if head == "bvneg":
            return bl.neg_vec(self.blast_bv(bl, ast[1]))
        a = self.blast_bv(bl, ast[1])
        b = self.blast_bv(bl, ast[2])
        if head == "bvadd":
            return bl.add_vec(a, b)
        if head == "bvsub":
            return bl.sub_vec(a, b)
        if head == "bvmul":
            return bl.mul_vec(a, b)
        if head == "bvand":
            return [bl.g_and(x, y) for x, y in zip(a, b)]
        if head == "bvor":
            return [bl.g_or(x, y) for x, y in zip(a, b)]
        if head == "bvxor":
            return [bl.g_xor(x, y) for x, y in zip(a, b)]
        if head == "bvshl":
            return bl.shift_vec(a, b, "shl")
        if head == "bvlshr":
            return bl.shift_vec(a, b, "lshr")
        if head == "bvashr":
            return bl.shift_vec(a, b, "ashr")
        if head == "bvudiv":
            return bl.udivrem_vec(a, b)[0]
        if head == "bvurem":
            return bl.udivrem_vec(a, b)[1]
        if head == "bvsdiv":
            return bl.sdivrem_vec(a, b)[0]
        if head == "bvsrem":
            return bl.sdivrem_vec(a, b)[1]
        raise SmtError(f"unknown bit-vector operator {head}")

    # -- commands -------------------------------------------------------------

    def check_sat(self) -> str:
        sat = Sat()
        var_bits = {name: [sat.new_var() for _ in range(self.widths[name])] for name in self.decl_order}
        bl = Blaster(sat, var_bits)
        for scope in self.scopes:
            for ast in scope:
                sat.add_clause([self.blast_bool(bl, ast)])
        if sat.solve():
            model: dict[str, int] = {}
            for name in self.decl_order:
                bits = var_bits[name]
                value = 0
                for i, lit in enumerate(bits):
                    if sat.assign.get(abs(lit), False) == (lit > 0):
                        value |= 1 << i
                model[name] = value
            self.model = model
            return "sat"
        self.model = None
        return "unsat"

    def get_value(self, names) -> str:
        if self.model is None:
            return '(error "no model available")'
        parts = []
        for name in names:
            if not isinstance(name, str) or name not in self.widths:
                return f'(error "unknown constant in get-value")'
            value = self.model.get(name, 0)
            parts.append(f"({name} (_ bv{value} {self.widths[name]}))")
        return "(" + " ".join(parts) + ")"


def run(instream, outstream) -> None:
    session = Session()
    pending: list[str] = []

    def out(text: str) -> None:
        outstream.write(text + "\n")
        outstream.flush()

    while True:
        line = instream.readline()
        if not line:
            return
        pending.extend(tokenize(line))
        exprs, pending = parse_sexprs(pending)
        for cmd in exprs:
            if not isinstance(cmd, tuple) or not cmd:
                out('(error "expected a command")')
                continue
            head = cmd[0]
            try:
                if head == "set-option":
                    if len(cmd) == 3 and cmd[1] == ":print-success":
                        session.print_success = cmd[2] == "true"
                    if session.print_success:
                        out("success")
                elif head in ("set-logic", "set-info"):
                    if session.print_success:
                        out("success")
                elif head in ("declare-fun", "declare-const"):
                    name = cmd[1]
                    sort = cmd[3] if head == "declare-fun" else cmd[2]
                    if not (isinstance(sort, tuple) and len(sort) == 3 and sort[1] == "BitVec"):
                        out('(error "only (_ BitVec n) sorts are supported")')
                        continue
                    if name in session.widths:
                        out(f'(error "symbol {name} already declared")')
                        continue
                    session.widths[name] = int(sort[2])
                    session.decl_order.append(name)
                    if session.print_success:
                        out("success")
                elif head == "assert":
                    session.scopes[-1].append(cmd[1])
                    if session.print_success:
                        out("success")
                elif head == "push":
                    n = int(cmd[1]) if len(cmd) > 1 else 1
                    for _ in range(n):
                        session.scopes.append([])
                    if session.print_success:
                        out("success")
                elif head == "pop":
                    n = int(cmd[1]) if len(cmd) > 1 else 1
                    if n >= len(session.scopes):
                        out('(error "pop below the base scope")')
                        continue
                    for _ in range(n):
                        session.scopes.pop()
                    if session.print_success:
                        out("success")
                elif head == "check-sat":
                    out(session.check_sat())
                elif head == "get-value":
                    out(session.get_value(cmd[1]))
                elif head == "get-model":
                    if session.model is None:
                        out('(error "no model available")')
                    else:
                        body = " ".join(
                            f"(define-fun {n} () (_ BitVec {session.widths[n]}) (_ bv{session.model.get(n, 0)} {session.widths[n]}))"
                            for n in session.decl_order
                        )
                        out("(" + body + ")")
                elif head == "echo":
                    out(str(cmd[1]).strip('"'))
                elif head == "reset":
                    session = Session()
                    if session.print_success:
                        out("success")
                elif head == "exit":
                    return
                else:
                    out(f'(error "unsupported command {head}")')
            except SmtError as exc:
                out(f'(error "{exc}")')
            except (IndexError, ValueError) as exc:
                out(f'(error "malformed command: {exc}")')


def main() -> None:
    run(sys.stdin, sys.stdout)


if __name__ == "__main__":
    main()
