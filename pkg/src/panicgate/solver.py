"""Session with an external SMT solver process over SMT-LIB2 pipes.

The default backend is the bundled QF_BV solver run as a child process;
any compliant solver (``z3 -in``, ``cvc5 --incremental`` ...) can be
substituted via the solver command string.  Push/pop scoping is tracked
here so negated-path queries always restore the pre-exploration depth.
On a per-query timeout the child is respawned and the base-scope script
replayed, which maps the query to UNKNOWN without losing the session.
"""

from __future__ import annotations

import os
import select
import shlex
import subprocess
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

from . import terms
from .terms import Term

DEFAULT_TIMEOUT_MS = 10_000


def default_solver_cmd() -> list[str]:
    return [sys.executable, "-m", "panicgate.smtbv"]


class SolverDied(Exception):
    pass


@dataclass
class SolverStats:
    queries: int = 0
    sat: int = 0
    unsat: int = 0
    unknown: int = 0
    concretizations: int = 0


@dataclass(frozen=True)
class CheckResult:
    verdict: str  # "sat" | "unsat" | "unknown"
    model: Optional[dict[str, int]] = None


_PRELUDE = ["(set-option :print-success false)", "(set-logic QF_BV)"]


class SolverSession:
    def __init__(self, cmd: Optional[str | list[str]] = None, timeout_ms: int = DEFAULT_TIMEOUT_MS):
        if cmd is None:
            self.cmd = default_solver_cmd()
        elif isinstance(cmd, str):
            self.cmd = shlex.split(cmd)
        else:
            self.cmd = list(cmd)
        self.timeout_ms = timeout_ms
        self.scope_depth = 0
        self.stats = SolverStats()
        self.declared: dict[str, int] = {}
        self.base_script: list[str] = []  # declarations + base assertions, in order
        self.emit_dir: Optional[str] = None
        self._emit_counter = 0
        self._buf = bytearray()
        self._proc: Optional[subprocess.Popen] = None
        self._spawn()

    # -- process plumbing ---------------------------------------------------

    def _spawn(self) -> None:
        try:
            self._proc = subprocess.Popen(
                self.cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
            )
        except OSError as exc:
            raise SolverDied(f"cannot start solver {self.cmd!r}: {exc}") from exc
        self._buf = bytearray()
        for line in _PRELUDE:
            self._send(line)

    def _respawn(self) -> None:
        self._kill()
        self._spawn()
        for line in self.base_script:
            self._send(line)
        self.scope_depth = 0

    def _kill(self) -> None:
        if self._proc is not None:
            try:
                self._proc.kill()
                self._proc.wait(timeout=5)
            except Exception:
                pass
        self._proc = None

    def close(self) -> None:
        if self._proc is not None:
            try:
                self._proc.stdin.write(b"(exit)\n")
                self._proc.stdin.flush()
            except Exception:
                pass
            self._kill()

    def __enter__(self) -> "SolverSession":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _send(self, line: str) -> None:
        if self._proc is None or self._proc.poll() is not None:
            raise SolverDied("solver process is gone")
        try:
            self._proc.stdin.write(line.encode() + b"\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise SolverDied(f"solver pipe broken: {exc}") from exc

    def _read_line(self, deadline: Optional[float]) -> Optional[str]:
        """One response line, or None on deadline expiry."""
        fd = self._proc.stdout.fileno()
        while True:
            nl = self._buf.find(b"\n")
            if nl >= 0:
                line = self._buf[:nl].decode()
                del self._buf[: nl + 1]
                return line
            wait = None if deadline is None else max(0.0, deadline - time.monotonic())
            if deadline is not None and wait == 0.0:
                return None
            ready, _, _ = select.select([fd], [], [], wait)
            if not ready:
                return None
            chunk = os.read(fd, 65536)
            if not chunk:
                raise SolverDied("solver closed its output")
            self._buf.extend(chunk)

    def _read_sexpr(self, deadline: Optional[float]) -> Optional[str]:
        """Read lines until parentheses balance (for get-value replies)."""
        text = ""
        while True:
            line = self._read_line(deadline)
            if line is None:
                return None
            text += line + "\n"
            if text.count("(") <= text.count(")") and text.strip():
                return text.strip()

    # -- SMT-LIB surface ------------------------------------------------------

    def declare(self, name: str, width_bits: int) -> None:
        if name in self.declared:
            if self.declared[name] != width_bits:
                raise ValueError(f"{name} redeclared with a different width")
            return
        if self.scope_depth != 0:
            raise ValueError("declarations must happen at the base scope")
        self.declared[name] = width_bits
        line = f"(declare-fun {name} () (_ BitVec {width_bits}))"
        self.base_script.append(line)
        self._send(line)

    def assert_base(self, phi: Term) -> None:
        if self.scope_depth != 0:
            raise ValueError("base assertions must happen at the base scope")
        line = f"(assert {terms.render(phi)})"
        self.base_script.append(line)
        self._send(line)

    def push(self) -> None:
        self._send("(push 1)")
        self.scope_depth += 1

    def pop(self) -> None:
        if self.scope_depth <= 0:
            raise ValueError("pop below the base scope")
        self._send("(pop 1)")
        self.scope_depth -= 1

    def assert_scoped(self, phi: Term) -> None:
        self._send(f"(assert {terms.render(phi)})")

    def check_sat(self) -> str:
        """Exactly one (check-sat); timeout respawns and reports unknown."""
        deadline = time.monotonic() + self.timeout_ms / 1000.0
        self.stats.queries += 1
        try:
            self._send("(check-sat)")
            line = self._read_line(deadline)
        except SolverDied:
            raise
        if line is None:
            self._respawn()
            self.stats.unknown += 1
            return "unknown"
        verdict = line.strip()
        if verdict == "sat":
            self.stats.sat += 1
        elif verdict == "unsat":
            self.stats.unsat += 1
        else:
            verdict = "unknown"
            self.stats.unknown += 1
        return verdict

    def get_model(self) -> dict[str, int]:
        names = list(self.declared)
        if not names:
            return {}
        deadline = time.monotonic() + self.timeout_ms / 1000.0
        self._send(f"(get-value ({' '.join(names)}))")
        reply = self._read_sexpr(deadline)
        if reply is None:
            self._respawn()
            raise SolverDied("timeout while reading the model")
        return _parse_value_reply(reply, self.declared)


def _parse_value_reply(text: str, widths: dict[str, int]) -> dict[str, int]:
    toks: list[str] = []
    cur = ""
    for c in text:
        if c in "()":
            if cur:
                toks.append(cur)
                cur = ""
            toks.append(c)
        elif c.isspace():
            if cur:
                toks.append(cur)
                cur = ""
        else:
            cur += c
    if cur:
        toks.append(cur)

    def value_of(ts: list[str]) -> Optional[int]:
        ts = [t for t in ts if t not in "()"]
        if len(ts) == 1:
            t = ts[0]
            if t.startswith("#x"):
                return int(t[2:], 16)
            if t.startswith("#b"):
                return int(t[2:], 2)
            if t.isdigit():
                return int(t)
            return None
        if len(ts) == 3 and ts[0] == "_" and ts[1].startswith("bv") and ts[1][2:].isdigit():
            return int(ts[1][2:])
        return None

    model: dict[str, int] = {}
    i = 0
    while i < len(toks):
        if toks[i] == "(" and i + 1 < len(toks) and toks[i + 1] in widths:
            name = toks[i + 1]
            j = i + 2
            depth = 0
            inner: list[str] = []
            while j < len(toks):
                if toks[j] == "(":
                    depth += 1
                elif toks[j] == ")":
                    if depth == 0:
                        break
                    depth -= 1
                inner.append(toks[j])
                j += 1
            v = value_of(inner)
            if v is not None:
                model[name] = v
            i = j + 1
        else:
            i += 1
    missing = [n for n in widths if n not in model]
    if missing:
        raise SolverDied(f"model reply missing {missing[:3]}: {text[:200]}")
    return model


def check_negated(session: SolverSession, phi: Term) -> CheckResult:
    """Push, assert the complement of phi, run one check-sat, pop.

    Scope depth is restored on every path, including solver failures.  SAT
    extracts a model total over all declared variables before popping.
    """
    negated = terms.not_(terms.truthy(phi))
    base_depth = session.scope_depth
    if session.emit_dir is not None:
        _emit_query_script(session, negated)
    session.push()
    try:
        session.assert_scoped(negated)
        verdict = session.check_sat()
        if verdict == "sat":
            model = session.get_model()
            return CheckResult("sat", model)
        return CheckResult(verdict)
    finally:
        # A timeout respawn already reset the depth to base.
        while session.scope_depth > base_depth:
            session.pop()


def emit_smtlib(session: SolverSession) -> str:
    """Deterministic script reproducing the session's live assertion set."""
    lines = list(_PRELUDE)
    lines.extend(session.base_script)
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def _emit_query_script(session: SolverSession, negated: Term) -> None:
    os.makedirs(session.emit_dir, exist_ok=True)
    path = os.path.join(session.emit_dir, f"query_{session._emit_counter:04d}.smt2")
    session._emit_counter += 1
    lines = list(_PRELUDE)
    lines.extend(session.base_script)
    lines.append("(push 1)")
    lines.append(f"(assert {terms.render(negated)})")
    lines.append("(check-sat)")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
