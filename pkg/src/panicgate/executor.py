"""Concolic execution loop: fetch/execute, the four-layer branch filter
cascade, negated-path exploration with single-evaluation commitment, model
verification by concrete replay, and the unfiltered baseline mode.

Filter order at each conditional branch mirrors the gated design:

  1. internal targets (const-space micro jumps) are never explored;
  2. panic-reachability gating: skip when neither the branch site nor its
     target can reach a panic;
  3. constraint context: skip branches whose flag carries no symbolic term
     (or references nothing symbolic while no prior constraints exist);
  4. bounded forward pre-check from the alternative address must find a
     panic before any solver work.

A branch surviving all four costs exactly one solver query.  The taken
condition is appended to the path predicate whether or not the branch was
explored, so any model of the accumulated predicate replays the seed path
up to the flipped site.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from . import terms
from .cfg import CFG, PrecheckResult, ReachSet, ast_precheck, build_cfg, compute_panic_reach
from .ir import Opcode, PcodeOp, Program, Space, is_internal_pcode_target
from .solver import CheckResult, SolverSession, check_negated
from .state import (
    Continue,
    DEFAULT_STEP_BUDGET,
    Fault,
    Halt,
    MachineState,
    PanicReached,
    StepOutcome,
    read_varnode,
    run_concrete,
    step_concrete,
)
from .symbolic import (
    Model,
    PathPredicate,
    ShadowMemory,
    SliceValue,
    SymbolicArg,
    assert_path,
    init_symbolic_args,
    lazily_concretize,
    materialize_inputs,
    normalize_seed,
    references_args,
    shadow_eval,
)

FIRST_FINDING = "FIRST_FINDING"
EXHAUSTIVE = "EXHAUSTIVE"

PANIC_CONFIRMED = "PANIC_CONFIRMED"
REACHED_ALT_ONLY = "REACHED_ALT_ONLY"
DIVERGED = "DIVERGED"


class BoundViolation(Exception):
    """A model value exceeded its declared width or shape bounds."""


class ConsistencyError(AssertionError):
    """A shadow term disagreed with the concrete byte it mirrors."""


@dataclass
class ExecConfig:
    start: str
    seed_inputs: tuple = ()
    optimized: bool = True
    max_ast_blocks: int = 10
    step_budget: int = DEFAULT_STEP_BUDGET
    stop_mode: str = FIRST_FINDING
    solver_cmd: Optional[str] = None
    timeout_ms: int = 10_000
    check_consistency: bool = False
    collect_trace: bool = False
    emit_smt_dir: Optional[str] = None


@dataclass
class ExecStats:
    cbranch_total: int = 0
    internal_filtered: int = 0
    gate_filtered: int = 0
    context_filtered: int = 0
    ast_filtered: int = 0
    solver_queries: int = 0
    sat_count: int = 0
    unsat_count: int = 0
    unknown_count: int = 0
    steps: int = 0
    wall_ms: int = 0

    def identity_holds(self) -> bool:
        buckets = (
            self.internal_filtered
            + self.gate_filtered
            + self.context_filtered
            + self.ast_filtered
            + self.solver_queries
        )
        return self.cbranch_total == buckets

    def to_dict(self) -> dict:
        return {
            "cbranch_total": self.cbranch_total,
            "internal_filtered": self.internal_filtered,
            "gate_filtered": self.gate_filtered,
            "context_filtered": self.context_filtered,
            "ast_filtered": self.ast_filtered,
            "solver_queries": self.solver_queries,
            "sat_count": self.sat_count,
            "unsat_count": self.unsat_count,
            "unknown_count": self.unknown_count,
            "steps": self.steps,
            "wall_ms": self.wall_ms,
        }


@dataclass
class Finding:
    branch_location: tuple[int, int]
    negated_condition: str
    model: Model
    synthesized_inputs: tuple
    replay_verdict: str
    alt_addr: int

    def to_dict(self) -> dict:
        return {
            "branch_addr": f"0x{self.branch_location[0]:x}",
            "micro_index": self.branch_location[1],
            "negated_condition": self.negated_condition,
            "model": {k: v for k, v in sorted(self.model.items())},
            "inputs": [_input_to_json(v) for v in self.synthesized_inputs],
            "replay": self.replay_verdict,
        }


def _input_to_json(value) -> object:
    if isinstance(value, SliceValue):
        return {"data": value.data.hex(), "len": value.length, "cap": value.cap}
    if isinstance(value, bytes):
        return value.decode("latin-1")
    return value


@dataclass
class Report:
    findings: list[Finding]
    stats: ExecStats
    terminal: str
    trace: Optional[list[tuple[int, int]]] = None

    @property
    def confirmed(self) -> list[Finding]:
        return [f for f in self.findings if f.replay_verdict == PANIC_CONFIRMED]


def _terminal_of(outcome: StepOutcome) -> str:
    if isinstance(outcome, Halt):
        return "halt"
    if isinstance(outcome, PanicReached):
        return "panic"
    if isinstance(outcome, Fault):
        return f"fault:{outcome.kind}"
    return "running"


def _alt_of_cbranch(
    program: Program, op: PcodeOp, taken: bool
) -> tuple[Optional[int], Optional[tuple[int, int]]]:
    """Machine address and pc of the path NOT taken concretely."""
    addr, idx = op.location
    if taken:
        micros = program.instructions[addr]
        if idx + 1 < len(micros):
            return addr, (addr, idx + 1)
        nxt = program.next_addr(addr)
        if nxt is None:
            return None, None
        return nxt, (nxt, 0)
    target = op.inputs[0]
    if target.space is not Space.RAM:
        return None, None
    return target.offset, (target.offset, 0)


def _check_consistency(state: MachineState, shadow: ShadowMemory, seed_model: Model) -> None:
    concrete = {"reg": state.registers, "uniq": state.uniques, "ram": state.ram}
    for space_name, offset, term in shadow.items():
        expect = concrete[space_name].get(offset, 0)
        got = terms.evaluate(term, seed_model)
        if got != expect:
            raise ConsistencyError(
                f"shadow {space_name}:0x{offset:x} evaluates to {got:#x}, concrete is {expect:#x}"
            )


def synthesize_inputs(
    model: Model, args: Sequence[SymbolicArg], seeds: Sequence[object]
) -> tuple:
    """Rebuild per-arg concrete values from a model, seeding the gaps.

    Model values take priority; variables the model does not mention fall
    back to the seed bytes.  Shape bounds are re-checked: a violation
    signals a solver-integration bug, not an interesting input.
    """
    out: list[object] = []
    for arg, seed in zip(args, seeds):
        spec = arg.spec
        if spec.kind == "INT":
            value = model.get(spec.name, seed)
            if not (0 <= value < (1 << (8 * spec.width))):
                raise BoundViolation(f"{spec.name} value {value:#x} exceeds width {spec.width}")
            out.append(value)
        elif spec.kind == "STRING":
            length = model.get(f"{spec.name}!len", len(seed))
            if not (0 <= length <= arg.capacity):
                raise BoundViolation(f"{spec.name} length {length} outside [0, {arg.capacity}]")
            content = bytearray(seed)
            for j in range(arg.capacity):
                v = model.get(f"{spec.name}!b{j}")
                if v is not None:
                    if not (0 <= v <= 0xFF):
                        raise BoundViolation(f"{spec.name}!b{j} value {v:#x} is not a byte")
                    content[j] = v
            out.append(bytes(content[:length]))
        else:  # SLICE
            length = model.get(f"{spec.name}!len", seed.length)
            cap = model.get(f"{spec.name}!cap", seed.cap)
            if not (0 <= length <= cap <= 64):
                raise BoundViolation(f"{spec.name} bounds len={length} cap={cap}")
            out.append(SliceValue(seed.data, length, cap))
    return tuple(out)


def replay_concrete(
    program: Program,
    inputs: Sequence[object],
    start: str,
    alt_pc: Optional[tuple[int, int]] = None,
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> str:
    """Pure concrete replay: no shadow, no solver.

    PANIC_CONFIRMED when the run reaches a declared panic entry;
    REACHED_ALT_ONLY when the recorded alternative pc executed but the run
    halted cleanly; DIVERGED otherwise (including faults and budget).
    """
    entry = program.resolve_entry(start)
    if entry is None:
        raise ValueError(f"unknown entry {start!r}")
    state = MachineState.boot(program, entry)
    sig = program.signatures.get(start)
    if sig is not None:
        materialize_inputs(sig, list(inputs), state)
    elif inputs:
        raise ValueError(f"entry {start!r} has no signature; seeds are not applicable")
    trace: list[tuple[int, int]] = []
    outcome = run_concrete(state, program, step_budget=step_budget, trace=trace)
    if isinstance(outcome, PanicReached):
        return PANIC_CONFIRMED
    if isinstance(outcome, Halt) and alt_pc is not None and alt_pc in set(trace):
        return REACHED_ALT_ONLY
    return DIVERGED


class _Executor:
    def __init__(self, program: Program, config: ExecConfig):
        self.program = program
        self.config = config
        entry = program.resolve_entry(config.start)
        if entry is None:
            raise ValueError(f"unknown entry {config.start!r}")
        self.entry = entry
        self.sig = program.signatures.get(config.start)
        self.state = MachineState.boot(program, entry)
        self.shadow = ShadowMemory()
        self.session = SolverSession(config.solver_cmd, timeout_ms=config.timeout_ms)
        self.session.emit_dir = config.emit_smt_dir
        self.pp = PathPredicate()
        self.stats = ExecStats()
        self.findings: list[Finding] = []
        self.cfg: CFG = build_cfg(program)
        self.reach: ReachSet = compute_panic_reach(self.cfg, program.panic_set)
        self.args: list[SymbolicArg] = []
        self.seed_model: Model = {}
        self.seeds: list[object] = []
        if self.sig is not None:
            self.seeds = [normalize_seed(s, v) for s, v in zip(self.sig.args, config.seed_inputs)]
            self.args, self.seed_model = init_symbolic_args(
                self.sig, list(config.seed_inputs), self.state, self.shadow, self.session
            )
        elif config.seed_inputs:
            raise ValueError(f"entry {config.start!r} has no signature; seeds are not applicable")

    # -- branch cascade -------------------------------------------------------

    def _gate_passes(self, op: PcodeOp) -> bool:
        pc_block = self.cfg.block_of_addr.get(op.machine_addr)
        if pc_block is not None and pc_block in self.reach:
            return True
        target = op.inputs[0]
        if target.space is Space.RAM:
            t = target.offset
            if t in self.program.panic_set:
                return True
            t_block = self.cfg.block_of_addr.get(t)
            if t_block is not None and t_block in self.reach:
                return True
        return False

    def _handle_cbranch(self, op: PcodeOp, stop_requested: list[bool]) -> None:
        self.stats.cbranch_total += 1
        cond_bytes = read_varnode(self.state, op.inputs[1])
        taken = cond_bytes[0] != 0
        cond_term = self.shadow.read_term(self.state, op.inputs[1])
        phi_taken: Optional[terms.Term] = None
        if cond_term is not None:
            truth = terms.truthy(cond_term)
            phi_taken = truth if taken else terms.not_(truth)

        explore = False
        if is_internal_pcode_target(op.inputs[0]):
            self.stats.internal_filtered += 1
        else:
            alt_addr, alt_pc = _alt_of_cbranch(self.program, op, taken)
            if self.config.optimized:
                if not self._gate_passes(op):
                    self.stats.gate_filtered += 1
                elif phi_taken is None or not (
                    references_args(phi_taken, self.args) or len(self.pp) > 0
                ):
                    self.stats.context_filtered += 1
                elif (
                    alt_addr is None
                    or ast_precheck(self.cfg, alt_addr, self.config.max_ast_blocks)
                    is not PrecheckResult.FOUND_PANIC
                ):
                    self.stats.ast_filtered += 1
                else:
                    explore = True
            else:
                if phi_taken is None:
                    self.stats.context_filtered += 1
                else:
                    explore = True

        if explore:
            self.stats.solver_queries += 1
            result = check_negated(self.session, phi_taken)
            if result.verdict == "sat":
                self.stats.sat_count += 1
                self._record_finding(op, phi_taken, result, alt_addr, alt_pc)
                if self.config.stop_mode == FIRST_FINDING:
                    stop_requested[0] = True
            elif result.verdict == "unsat":
                self.stats.unsat_count += 1
            else:
                self.stats.unknown_count += 1

        if phi_taken is not None:
            assert_path(self.pp, phi_taken, self.session)

    def _record_finding(
        self,
        op: PcodeOp,
        phi_taken: terms.Term,
        result: CheckResult,
        alt_addr: Optional[int],
        alt_pc: Optional[tuple[int, int]],
    ) -> None:
        inputs = synthesize_inputs(result.model, self.args, self.seeds)
        verdict = replay_concrete(
            self.program,
            inputs,
            self.config.start,
            alt_pc=alt_pc,
            step_budget=self.config.step_budget,
        )
        self.findings.append(
            Finding(
                branch_location=op.location,
                negated_condition=terms.render(terms.not_(phi_taken)),
                model=dict(result.model),
                synthesized_inputs=inputs,
                replay_verdict=verdict,
                alt_addr=alt_addr if alt_addr is not None else -1,
            )
        )

    # -- memory shadowing -----------------------------------------------------

    def _concretize_address(self, vn) -> None:
        """Record the lazy concretization of a symbolic address in the
        path predicate so later models stay consistent with this access."""
        term = self.shadow.read_term(self.state, vn)
        if term is None:
            return
        value = lazily_concretize(term, self.seed_model, self.session)
        assert_path(self.pp, terms.eq(term, terms.const(value, term.width)), self.session)

    def _pre_step_shadow(self, op: PcodeOp) -> Optional[tuple]:
        """Shadow work that needs the pre-step state; returns a deferred
        output-shadow write."""
        opc = op.opcode
        if opc is Opcode.LOAD:
            self._concretize_address(op.inputs[0])
            addr = int.from_bytes(read_varnode(self.state, op.inputs[0]), "little")
            out_term = self.shadow.read_ram_term(self.state, addr, op.output.size)
            return ("vn", op.output, out_term)
        if opc is Opcode.STORE:
            self._concretize_address(op.inputs[0])
            addr = int.from_bytes(read_varnode(self.state, op.inputs[0]), "little")
            value_term = self.shadow.read_term(self.state, op.inputs[1])
            return ("ram", (addr, op.inputs[1].size), value_term)
        if opc in (Opcode.BRANCHIND, Opcode.CALLIND):
            self._concretize_address(op.inputs[0])
            return None
        if opc in (Opcode.BRANCH, Opcode.CALL, Opcode.RETURN, Opcode.CBRANCH):
            return None
        if op.output is None:
            return None
        return ("vn", op.output, shadow_eval(op, self.shadow, self.state))

    def _apply_shadow(self, deferred: Optional[tuple]) -> None:
        if deferred is None:
            return
        kind, where, term = deferred
        if kind == "vn":
            self.shadow.write_term(where, term)
        else:
            addr, size = where
            self.shadow.write_ram_term(addr, size, term)

    # -- main loop --------------------------------------------------------------

    def run(self) -> Report:
        started = time.monotonic()
        trace: Optional[list[tuple[int, int]]] = [] if self.config.collect_trace else None
        terminal = "halt"
        stop_requested = [False]
        try:
            while self.state.pc is not None:
                if self.state.step_count >= self.config.step_budget:
                    terminal = "fault:budget"
                    break
                pc = self.state.pc
                op = self.program.fetch(pc)
                if op is None:
                    terminal = "fault:unmapped_target"
                    break
                if trace is not None:
                    trace.append(pc)
                if op.opcode is Opcode.CBRANCH:
                    self._handle_cbranch(op, stop_requested)
                    deferred = None
                else:
                    deferred = self._pre_step_shadow(op)
                outcome = step_concrete(self.state, op, self.program)
                self._apply_shadow(deferred)
                if self.config.check_consistency:
                    _check_consistency(self.state, self.shadow, self.seed_model)
                if stop_requested[0]:
                    terminal = "stopped"
                    break
                if not isinstance(outcome, Continue):
                    terminal = _terminal_of(outcome)
                    break
        finally:
            self.stats.steps = self.state.step_count
            self.stats.wall_ms = int((time.monotonic() - started) * 1000)
            self.session.close()
        findings = sorted(
            self.findings, key=lambda f: (f.branch_location[0], f.branch_location[1])
        )
        return Report(findings=findings, stats=self.stats, terminal=terminal, trace=trace)


def run(program: Program, config: ExecConfig) -> Report:
    """Algorithm entry point: concolic run with the full filter cascade."""
    return _Executor(program, config).run()


def run_unoptimized(program: Program, config: ExecConfig) -> Report:
    """Baseline: every symbolic, non-internal branch triggers a query.

    Internal-target skipping stays active; const-space branches are IR
    artifacts in both modes.  Findings are still replay-verified.
    """
    return _Executor(program, replace(config, optimized=False)).run()
