"""Panic-gated concolic execution for a textual pcode-like IR."""

__version__ = "0.1.0"

from .cfg import ast_precheck, build_cfg, compute_panic_reach  # noqa: F401
from .executor import (  # noqa: F401
    ExecConfig,
    ExecStats,
    Finding,
    Report,
    replay_concrete,
    run,
    run_unoptimized,
    synthesize_inputs,
)
from .ir import Opcode, Program, Space, Varnode, eval_concrete, is_internal_pcode_target  # noqa: F401
from .loader import Diagnostic, ParseResult, Severity, emit_program, parse_program, validate  # noqa: F401
from .solver import SolverSession, check_negated, emit_smtlib  # noqa: F401
from .symbolic import (  # noqa: F401
    PathPredicate,
    ShadowMemory,
    SliceValue,
    SymbolicArg,
    assert_path,
    init_symbolic_args,
    lazily_concretize,
    references_args,
    shadow_eval,
)
from .state import MachineState, read_varnode, step_concrete, write_varnode  # noqa: F401
