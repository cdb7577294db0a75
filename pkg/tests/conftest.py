import pytest

from panicgate import corpus
from panicgate.executor import EXHAUSTIVE, ExecConfig, run, run_unoptimized


@pytest.fixture(scope="session")
def entries():
    return {name: corpus.emit(name) for name in corpus.NAMES}


@pytest.fixture(scope="session")
def programs(entries):
    return {name: e.program() for name, e in entries.items()}


def _run_matrix(entries, programs, optimized):
    runs = {}
    runner = run if optimized else run_unoptimized
    for name, entry in entries.items():
        program = programs[name]
        for i, seed in enumerate(entry.seeds):
            config = ExecConfig(
                start=entry.function,
                seed_inputs=seed,
                stop_mode=EXHAUSTIVE,
                check_consistency=True,
            )
            runs[(name, i)] = runner(program, config)
    return runs


@pytest.fixture(scope="session")
def optimized_runs(entries, programs):
    """Instrumented optimized run per (entry, seed); consistency-checked."""
    return _run_matrix(entries, programs, optimized=True)


@pytest.fixture(scope="session")
def unoptimized_runs(entries, programs):
    return _run_matrix(entries, programs, optimized=False)


@pytest.fixture(scope="session")
def oracles(entries):
    return {name: corpus.brute_force_triggers(e) for name, e in entries.items()}
