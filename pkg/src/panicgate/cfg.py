"""Basic-block control-flow graph, panic reachability, bounded pre-check.

Reachability is deliberately conservative: indirect exits are treated as
able to reach a panic, and calls contribute both an edge into the callee
and a fallthrough edge.  Membership queries on the resulting set are
constant time.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from .ir import Opcode, Program, Space


@dataclass(frozen=True)
class BasicBlock:
    id: int
    start_addr: int
    instr_addrs: tuple[int, ...]
    successors: tuple[int, ...]
    has_indirect_exit: bool
    calls: tuple[int, ...]
    branch_targets: tuple[int, ...]


@dataclass(frozen=True)
class CFG:
    blocks: tuple[BasicBlock, ...]
    block_of_addr: dict[int, int]
    panic_addrs: frozenset[int]

    def block_at(self, addr: int) -> Optional[BasicBlock]:
        bid = self.block_of_addr.get(addr)
        return self.blocks[bid] if bid is not None else None


@dataclass(frozen=True)
class ReachSet:
    members: frozenset[int]

    def __contains__(self, block_id: int) -> bool:
        return block_id in self.members

    def __len__(self) -> int:
        return len(self.members)


class PrecheckResult(Enum):
    FOUND_PANIC = "FOUND_PANIC"
    NOT_FOUND = "NOT_FOUND"


@dataclass(frozen=True)
class _InstrFlow:
    branch_targets: tuple[int, ...]  # ram-space BRANCH/CBRANCH targets
    calls: tuple[int, ...]
    has_indirect: bool
    is_terminator: bool
    falls_through: bool


def _instr_flow(program: Program, addr: int) -> _InstrFlow:
    micros = program.instructions[addr]
    branch_targets: list[int] = []
    calls: list[int] = []
    has_indirect = False
    is_terminator = False
    for op in micros:
        if op.opcode in (Opcode.BRANCH, Opcode.CBRANCH):
            target = op.inputs[0]
            if target.space is Space.RAM:
                branch_targets.append(target.offset)
                is_terminator = True
            # const-space targets are intra-instruction and do not split blocks
        elif op.opcode is Opcode.CALL:
            calls.append(op.inputs[0].offset)
            is_terminator = True
        elif op.opcode in (Opcode.BRANCHIND, Opcode.CALLIND):
            has_indirect = True
            is_terminator = True
        elif op.opcode is Opcode.RETURN:
            is_terminator = True
    last = micros[-1].opcode
    falls_through = True
    if last is Opcode.RETURN or last is Opcode.BRANCHIND:
        falls_through = False
    elif last is Opcode.BRANCH and micros[-1].inputs[0].space is Space.RAM:
        falls_through = False
    return _InstrFlow(tuple(branch_targets), tuple(calls), has_indirect, is_terminator, falls_through)


def build_cfg(program: Program) -> CFG:
    """Partition instructions into blocks and wire machine-level edges.

    Leaders are entry points, ram-space branch/call targets and the
    instruction after any terminator.  Call edges point at the callee entry
    *and* fall through, so reachability never misses a panic behind a call.
    """
    addrs = list(program.sorted_addrs)
    if not addrs:
        return CFG((), {}, frozenset(program.panic_set))
    flows = {a: _instr_flow(program, a) for a in addrs}

    leaders: set[int] = {addrs[0]}
    leaders.update(a for a in program.entry_points.values() if a in program.instructions)
    leaders.update(s.entry for s in program.signatures.values() if s.entry in program.instructions)
    leaders.update(a for a in program.panic_set if a in program.instructions)
    for a in addrs:
        flow = flows[a]
        for t in flow.branch_targets:
            if t in program.instructions:
                leaders.add(t)
        for t in flow.calls:
            if t in program.instructions:
                leaders.add(t)
        if flow.is_terminator:
            nxt = program.next_addr(a)
            if nxt is not None:
                leaders.add(nxt)

    blocks_raw: list[list[int]] = []
    current: list[int] = []
    for a in addrs:
        if a in leaders and current:
            blocks_raw.append(current)
            current = []
        current.append(a)
        if flows[a].is_terminator:
            blocks_raw.append(current)
            current = []
    if current:
        blocks_raw.append(current)

    block_of_addr: dict[int, int] = {}
    for bid, instr_addrs in enumerate(blocks_raw):
        for a in instr_addrs:
            block_of_addr[a] = bid

    blocks: list[BasicBlock] = []
    for bid, instr_addrs in enumerate(blocks_raw):
        last_addr = instr_addrs[-1]
        flow = flows[last_addr]
        succ: list[int] = []

        def add_addr(target: int) -> None:
            tb = block_of_addr.get(target)
            if tb is not None and tb not in succ:
                succ.append(tb)

        for t in flow.branch_targets:
            add_addr(t)
        for t in flow.calls:
            add_addr(t)
        if flow.falls_through:
            nxt = program.next_addr(last_addr)
            if nxt is not None:
                add_addr(nxt)
        calls = tuple(t for a in instr_addrs for t in flows[a].calls)
        branch_targets = tuple(t for a in instr_addrs for t in flows[a].branch_targets)
        has_ind = any(flows[a].has_indirect for a in instr_addrs)
        blocks.append(
            BasicBlock(
                id=bid,
                start_addr=instr_addrs[0],
                instr_addrs=tuple(instr_addrs),
                successors=tuple(succ),
                has_indirect_exit=has_ind,
                calls=calls,
                branch_targets=branch_targets,
            )
        )
    return CFG(tuple(blocks), block_of_addr, frozenset(program.panic_set))


def _touches_panic(block: BasicBlock, panic_set: frozenset[int] | set[int]) -> bool:
    return (
        any(t in panic_set for t in block.calls)
        or any(t in panic_set for t in block.branch_targets)
        or any(a in panic_set for a in block.instr_addrs)
    )


def compute_panic_reach(cfg: CFG, panic_set: Iterable[int]) -> ReachSet:
    """Reverse-BFS fixpoint of blocks that may reach a panic site.

    Seeds are blocks that touch the panic set directly plus every block with
    an indirect exit (uncertain targets are assumed reachable).
    """
    pset = frozenset(panic_set)
    preds: dict[int, list[int]] = {b.id: [] for b in cfg.blocks}
    for b in cfg.blocks:
        for s in b.successors:
            preds[s].append(b.id)

    seeds = [b.id for b in cfg.blocks if b.has_indirect_exit or _touches_panic(b, pset)]
    members: set[int] = set()
    queue = deque(seeds)
    while queue:
        bid = queue.popleft()
        if bid in members:
            continue
        members.add(bid)
        queue.extend(p for p in preds[bid] if p not in members)
    return ReachSet(frozenset(members))


def ast_precheck(cfg: CFG, start_addr: int, max_blocks: int = 10) -> PrecheckResult:
    """Bounded forward BFS from the block holding ``start_addr``.

    Visits at most ``max_blocks`` distinct blocks; FOUND_PANIC iff any
    visited block calls or branches into the panic set or contains a panic
    address.  No solver interaction happens here.
    """
    start = cfg.block_of_addr.get(start_addr)
    if start is None:
        # Branching straight at a bodyless panic stub still counts.
        if start_addr in cfg.panic_addrs:
            return PrecheckResult.FOUND_PANIC
        return PrecheckResult.NOT_FOUND
    visited: set[int] = set()
    queue = deque([start])
    while queue and len(visited) < max_blocks:
        bid = queue.popleft()
        if bid in visited:
            continue
        visited.add(bid)
        block = cfg.blocks[bid]
        if _touches_panic(block, cfg.panic_addrs):
            return PrecheckResult.FOUND_PANIC
        queue.extend(s for s in block.successors if s not in visited)
    return PrecheckResult.NOT_FOUND


def dump_cfg(cfg: CFG, reach: ReachSet) -> str:
    lines = []
    for b in cfg.blocks:
        succ = ",".join(str(s) for s in b.successors)
        flag = 1 if b.id in reach else 0
        lines.append(f"B{b.id} start=0x{b.start_addr:x} succ=[{succ}] reach={flag}")
    return "\n".join(lines)
