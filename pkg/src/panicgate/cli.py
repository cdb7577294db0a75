"""Command-line driver.

Subcommands:
  run     load a program, execute concolically, report findings
  corpus  regenerate and verify the bundled benchmark programs
  diff    optimized vs unoptimized run on one program; prints the
          solver-query reduction ratio

Exit codes: 0 ran with no confirmed finding, 1 at least one
PANIC_CONFIRMED finding, 2 usage or parse error, 3 solver/runtime fault.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

from . import __version__, corpus
from .cfg import build_cfg, compute_panic_reach, dump_cfg
from .executor import EXHAUSTIVE, FIRST_FINDING, ExecConfig, Report, run, run_unoptimized
from .ir import Program
from .loader import Severity, parse_program
from .solver import SolverDied
from .symbolic import SliceValue

EXIT_OK = 0
EXIT_FINDING = 1
EXIT_USAGE = 2
EXIT_FAULT = 3


def _load(path: str):
    try:
        with open(path) as fh:
            source = fh.read()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return None, None
    result = parse_program(source)
    for diag in result.diagnostics:
        stream = sys.stderr if diag.severity is Severity.ERROR else sys.stdout
        print(f"{path}:{diag}", file=stream)
    return result.program, source


def parse_seed(text: str, kind: str):
    """Seed syntax: INT decimal/hex; STRING literal text; SLICE 'HEX[:len[:cap]]'."""
    if kind == "INT":
        return int(text, 0)
    if kind == "STRING":
        return text
    parts = text.split(":")
    data = bytes.fromhex(parts[0]) if parts[0] else b""
    length = int(parts[1]) if len(parts) > 1 else len(data)
    cap = int(parts[2]) if len(parts) > 2 else max(length, len(data))
    return SliceValue(data, length, cap)


def _seeds_for(program: Program, start: str, raw_seeds: list[str]):
    sig = program.signatures.get(start)
    if sig is None:
        if raw_seeds:
            raise ValueError(f"entry {start!r} has no signature; --seed is not applicable")
        return ()
    if len(raw_seeds) != len(sig.args):
        expected = ", ".join(f"{a.name}:{a.kind}" for a in sig.args)
        raise ValueError(f"{start} expects {len(sig.args)} seeds ({expected}); got {len(raw_seeds)}")
    return tuple(parse_seed(raw, spec.kind) for raw, spec in zip(raw_seeds, sig.args))


def _report_document(program_source: str, config: ExecConfig, report: Report) -> dict:
    digest = hashlib.sha256(program_source.encode()).hexdigest()
    return {
        "tool": {"name": "panicgate", "version": __version__},
        "program_digest": f"sha256:{digest}",
        "config": {
            "start": config.start,
            "optimized": config.optimized,
            "max_ast_blocks": config.max_ast_blocks,
            "step_budget": config.step_budget,
            "stop_mode": config.stop_mode,
        },
        "terminal": report.terminal,
        "stats": report.stats.to_dict(),
        "findings": [f.to_dict() for f in report.findings],
        "exit_classification": "finding" if report.confirmed else "clean",
    }


def _emit_report(doc: dict, path: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _human_summary(report: Report) -> None:
    s = report.stats
    print(
        f"terminal={report.terminal} steps={s.steps} "
        f"cbranch={s.cbranch_total} gated={s.gate_filtered} internal={s.internal_filtered} "
        f"context={s.context_filtered} ast={s.ast_filtered} queries={s.solver_queries} "
        f"(sat={s.sat_count} unsat={s.unsat_count} unknown={s.unknown_count})"
    )
    for f in report.findings:
        print(
            f"finding at 0x{f.branch_location[0]:x}.{f.branch_location[1]} "
            f"[{f.replay_verdict}] inputs={[_fmt_input(v) for v in f.synthesized_inputs]}"
        )


def _fmt_input(v) -> str:
    if isinstance(v, SliceValue):
        return f"slice(data={v.data.hex() or '-'},len={v.length},cap={v.cap})"
    if isinstance(v, bytes):
        return repr(v.decode('latin-1'))
    return str(v)


def _cmd_run(args) -> int:
    program, source = _load(args.program)
    if program is None:
        return EXIT_USAGE
    try:
        seeds = _seeds_for(program, args.start, args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.dump_cfg:
        cfg = build_cfg(program)
        reach = compute_panic_reach(cfg, program.panic_set)
        print(dump_cfg(cfg, reach))
    config = ExecConfig(
        start=args.start,
        seed_inputs=seeds,
        optimized=not args.no_opt,
        max_ast_blocks=args.max_ast_blocks,
        step_budget=args.step_budget,
        stop_mode=EXHAUSTIVE if args.find_all else FIRST_FINDING,
        solver_cmd=args.solver_cmd,
        emit_smt_dir=args.emit_smt,
    )
    try:
        report = (run if config.optimized else run_unoptimized)(program, config)
    except SolverDied as exc:
        print(f"error: solver failed: {exc}", file=sys.stderr)
        return EXIT_FAULT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _human_summary(report)
    doc = _report_document(source, config, report)
    if args.report:
        _emit_report(doc, args.report)
    if report.terminal.startswith("fault:"):
        return EXIT_FAULT
    return EXIT_FINDING if report.confirmed else EXIT_OK


def _cmd_corpus(args) -> int:
    manifest = corpus.write_corpus(args.dir)
    for name in corpus.NAMES:
        meta = manifest[name]
        print(f"{name}: wrote {meta['file']} ({meta['semantics']})")
    print(f"manifest: {args.dir}/manifest.json")
    return EXIT_OK


def _cmd_diff(args) -> int:
    program, source = _load(args.program)
    if program is None:
        return EXIT_USAGE
    try:
        seeds = _seeds_for(program, args.start, args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    base = ExecConfig(
        start=args.start,
        seed_inputs=seeds,
        stop_mode=EXHAUSTIVE,
        solver_cmd=args.solver_cmd,
        step_budget=args.step_budget,
    )
    try:
        optimized = run(program, base)
        unoptimized = run_unoptimized(program, base)
    except SolverDied as exc:
        print(f"error: solver failed: {exc}", file=sys.stderr)
        return EXIT_FAULT
    q_opt = optimized.stats.solver_queries
    q_unopt = unoptimized.stats.solver_queries
    ratio = (q_unopt / q_opt) if q_opt else float(q_unopt)
    doc = {
        "program": args.program,
        "start": args.start,
        "queries_opt": q_opt,
        "queries_unopt": q_unopt,
        "query_reduction_ratio": round(ratio, 3),
        "gate_filtered": optimized.stats.gate_filtered,
        "cbranch_total": optimized.stats.cbranch_total,
        "gate_ratio": round(
            optimized.stats.gate_filtered / optimized.stats.cbranch_total, 3
        )
        if optimized.stats.cbranch_total
        else 0.0,
        "confirmed_opt": sorted(
            {json.dumps([_fmt_input(v) for v in f.synthesized_inputs]) for f in optimized.confirmed}
        ),
        "confirmed_unopt": sorted(
            {json.dumps([_fmt_input(v) for v in f.synthesized_inputs]) for f in unoptimized.confirmed}
        ),
    }
    print(json.dumps(doc, indent=2))
    return EXIT_FINDING if optimized.confirmed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="panicgate", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"panicgate {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="concolic run on one program")
    p_run.add_argument("program", help=".pprog file")
    p_run.add_argument("--start", required=True, help="entry name (function or 'main')")
    p_run.add_argument("--seed", action="append", default=[], help="seed value, one per argument in order")
    p_run.add_argument("--no-opt", action="store_true", help="disable the filter cascade")
    p_run.add_argument("--max-ast-blocks", type=int, default=10, help="pre-check block budget")
    p_run.add_argument("--step-budget", type=int, default=10_000_000)
    p_run.add_argument("--solver-cmd", default=None, help="external SMT solver command line")
    p_run.add_argument("--report", default=None, help="write the JSON report here")
    p_run.add_argument("--find-all", action="store_true", help="keep exploring past the first finding")
    p_run.add_argument("--dump-cfg", action="store_true")
    p_run.add_argument("--emit-smt", default=None, metavar="DIR", help="write each solver query script")
    p_run.set_defaults(func=_cmd_run)

    p_corpus = sub.add_parser("corpus", help="regenerate and verify the benchmark corpus")
    p_corpus.add_argument("--dir", default="corpus")
    p_corpus.set_defaults(func=_cmd_corpus)

    p_diff = sub.add_parser("diff", help="optimized vs unoptimized query comparison")
    p_diff.add_argument("program")
    p_diff.add_argument("--start", required=True)
    p_diff.add_argument("--seed", action="append", default=[])
    p_diff.add_argument("--solver-cmd", default=None)
    p_diff.add_argument("--step-budget", type=int, default=10_000_000)
    p_diff.set_defaults(func=_cmd_diff)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
