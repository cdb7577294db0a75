import json

import pytest

from panicgate import corpus
from panicgate.executor import EXHAUSTIVE, ExecConfig, PANIC_CONFIRMED, replay_concrete, run
from panicgate.loader import parse_program, validate
from panicgate.symbolic import SliceValue


def test_unknown_name_rejected():
    with pytest.raises(corpus.UnknownName):
        corpus.emit("nonesuch")


def test_emit_is_deterministic():
    a = corpus.emit("crashme")
    b = corpus.emit("crashme")
    assert a.source == b.source
    assert a.panic_free_source == b.panic_free_source


def test_all_entries_parse_and_validate(entries):
    for entry in entries.values():
        for text in (entry.source, entry.panic_free_source):
            result = parse_program(text)
            assert result.program is not None, (entry.name, result.diagnostics)
            assert validate(result.program) == []


def test_expected_signature_of_broken_calculator(entries):
    sig = entries["broken_calculator"].program().signatures["coreEngine"]
    assert [(a.name, a.kind) for a in sig.args] == [
        ("num1", "INT"),
        ("operator", "STRING"),
        ("num2", "INT"),
    ]
    assert sig.args[0].width == 1 and sig.args[2].width == 1


def test_seeds_replay_clean_and_triggers_panic(entries, programs):
    for name, entry in entries.items():
        p = programs[name]
        for seed in entry.seeds:
            assert replay_concrete(p, seed, entry.function) != PANIC_CONFIRMED
        for trig in entry.known_triggers:
            assert replay_concrete(p, trig, entry.function) == PANIC_CONFIRMED


def test_partial_gating_entries_have_three_plus_quiet_branches(entries):
    """Static check: at least 3 conditional branch sites sit in blocks that
    cannot reach any panic."""
    from panicgate.cfg import build_cfg, compute_panic_reach
    from panicgate.ir import Opcode, Space

    for name in ("panic_index", "broken_calculator", "omni_vuln_mini"):
        p = entries[name].program()
        cfg = build_cfg(p)
        reach = compute_panic_reach(cfg, p.panic_set)
        quiet = 0
        for addr, micros in p.instructions.items():
            for op in micros:
                if op.opcode is Opcode.CBRANCH and op.inputs[0].space is Space.RAM:
                    if cfg.block_of_addr[addr] not in reach:
                        quiet += 1
        assert quiet >= 3, (name, quiet)
        assert entries[name].expected_gating == "PARTIAL"


def test_brute_force_crashme_is_exactly_K(oracles):
    assert oracles["crashme"] == {(b"K",)}


def test_brute_force_panic_index_matches_gt3(oracles):
    assert oracles["panic_index"] == {(n,) for n in range(4, 256)}


def test_brute_force_broken_calculator_plus_slice(oracles):
    plus_pairs = {(a, b) for (a, op, b) in oracles["broken_calculator"] if op == "+"}
    assert plus_pairs == {(5, 5)}
    # the trap ignores the operator entirely
    assert oracles["broken_calculator"] == {(5, op, 5) for op in ("+", "-", "*")}


def test_brute_force_invalid_shift_first_byte_rule(oracles):
    got = oracles["invalid_shift"]
    expect = set()
    for b0 in range(0x20, 0x7F):
        if b0 >= 64:
            expect.add((bytes([b0]),))
            for b1 in range(0x20, 0x7F):
                expect.add((bytes([b0, b1]),))
    assert got == expect


def test_brute_force_omni_len_threshold(oracles):
    lengths = {corpus.domain_key("omni_vuln_mini", t)[0] for t in oracles["omni_vuln_mini"]}
    assert lengths == set(range(4, 65))


def test_domain_too_large_guard(entries):
    with pytest.raises(corpus.DomainTooLarge):
        corpus.brute_force_triggers(entries["crashme"], domain_bound=10)


def test_engine_findings_within_oracle(entries, programs, oracles, optimized_runs):
    for name, entry in entries.items():
        oracle_keys = {corpus.domain_key(name, t) for t in oracles[name]}
        confirmed_in_domain = 0
        for i in range(len(entry.seeds)):
            rep = optimized_runs[(name, i)]
            for f in rep.confirmed:
                if corpus.in_domain(name, f.synthesized_inputs):
                    key = corpus.domain_key(name, f.synthesized_inputs)
                    assert key in oracle_keys, (name, f.synthesized_inputs)
                    confirmed_in_domain += 1
        assert confirmed_in_domain > 0, name
        assert oracles[name], name


def test_panic_free_variants_yield_zero_findings(entries):
    for name, entry in entries.items():
        p = entry.panic_free_program()
        for seed in entry.seeds:
            rep = run(p, ExecConfig(start=entry.function, seed_inputs=seed, stop_mode=EXHAUSTIVE))
            assert rep.findings == [], name
            assert rep.terminal == "halt"


def test_write_corpus_and_manifest(tmp_path):
    manifest = corpus.write_corpus(str(tmp_path))
    assert set(manifest) == set(corpus.NAMES)
    on_disk = json.loads((tmp_path / "manifest.json").read_text())
    assert on_disk == json.loads(json.dumps(manifest))
    for name in corpus.NAMES:
        text = (tmp_path / f"{name}.pprog").read_text()
        assert parse_program(text).program is not None
        variant = (tmp_path / f"{name}_panic_free.pprog").read_text()
        assert parse_program(variant).program is not None


def test_checked_in_corpus_matches_emitter(tmp_path):
    """The files committed under corpus/ are exactly what emit produces."""
    import os

    repo_corpus = os.path.join(os.path.dirname(__file__), "..", "corpus")
    if not os.path.isdir(repo_corpus):
        pytest.skip("corpus directory not present")
    for name in corpus.NAMES:
        entry = corpus.emit(name)
        with open(os.path.join(repo_corpus, f"{name}.pprog")) as fh:
            assert fh.read() == entry.source
