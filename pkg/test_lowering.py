#!/usr/bin/env python3
"""
Tests for lowering Flint to IR
Symbols, storage layout, typestate ordinals, entry checks, dispatch and the
textual IR form
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from abi import compute_selector
from compiler import FlintCompiler
from flint_types import ADDRESS, INT, named
from ir import dump_ir, load_ir
from lowering import mangle

CONTRACTS_DIR = os.path.join(os.path.dirname(__file__), 'contracts')


def compile_program(name: str):
    with open(os.path.join(CONTRACTS_DIR, name), encoding='utf-8') as handle:
        result = FlintCompiler().compile_source(handle.read(), name)
    assert result.ok, [d.message for d in result.errors]
    return result.program


def instruction_texts(function):
    return [instr.text() for instr in function.checks]


def test_mangled_symbols():
    assert mangle("Bank", "transfer", [INT, ADDRESS]) == "Bank$transfer$Int_Address"
    assert mangle("Wei", "transfer", [(named("Wei"), True), (INT, False)]) == "Wei$transfer$Wei&_Int"
    assert mangle("Bank", "getBalance", []) == "Bank$getBalance$"
    print("✅ Type$function$params symbols")


def test_bank_storage_layout():
    bank = compile_program("bank.flint").contract("Bank")
    slots = {name: slot for name, slot, _ in bank.storage_layout}
    assert slots == {"manager": 0, "balances": 1, "accounts": 2, "lastIndex": 3, "totalDonations": 4}
    assert bank.slot_of("lastIndex") == 3
    assert bank.typestates == {}
    assert bank.struct_layouts["Wei"][0][:2] == ("rawValue", 0)
    print("✅ Bank properties occupy slots 0-4 in declaration order")


def test_typestate_ordinals():
    dao = compile_program("simple_dao.flint").contract("SimpleDAO")
    assert dao.typestates == {"Join": 1, "Propose": 2, "Vote": 3}
    assert dao.completed_state == 4
    assert dao.function("SimpleDAO$joinTimeElapsed$").states == [1]
    print("✅ typestates numbered from 1 in declaration order")


def test_entry_checks():
    bank = compile_program("bank.flint").contract("Bank")
    assert instruction_texts(bank.function("Bank$freeDeposit$Address_Int")) == ["protectionCheck address:0"]
    assert instruction_texts(bank.function("Bank$getBalance$")) == ["protectionCheck list:2"]
    assert bank.function("Bank$getManager$").checks == []

    dao = compile_program("simple_dao.flint").contract("SimpleDAO")
    checks = instruction_texts(dao.function("SimpleDAO$newProposal$Int_Address"))
    assert checks == ["typestateCheck 2", "protectionCheck predicate:SimpleDAO$tokenHolder$Address"]
    assert instruction_texts(dao.function("SimpleDAO$beginVote$Int")) == [
        "typestateCheck 2", "protectionCheck address:0",
    ]
    print("✅ typestate check precedes the caller protection check")


def test_internal_calls():
    states = compile_program("states.flint").contract("States")
    chain_ops = [(i.op, i.args[0]) for i in states.function("States$chain$Int").body if i.op in ("call", "callChecked")]
    try_ops = [(i.op, i.args[0]) for i in states.function("States$tryChain$Int").body if i.op in ("call", "callChecked")]
    assert chain_ops == [("call", "States$step$")]
    assert try_ops == [("callChecked", "States$step$")]
    print("✅ statically checked calls skip entry checks, try calls run them")


def test_dispatch_table():
    program = compile_program("bank.flint")
    bank = program.contract("Bank")
    entries = bank.dispatch_by_name("transfer")
    assert len(entries) == 1
    entry = entries[0]
    assert entry.signature == "transfer(uint256,address)"
    assert entry.selector == "0x" + compute_selector("transfer(uint256,address)").hex()
    assert entry.function == "Bank$transfer$Int_Address"
    assert bank.initialiser == "Bank$init$Address"
    assert bank.dispatch_by_name("getBalance")[0].returns == "uint256"
    assert bank.dispatch_by_name("register")[0].returns == ""
    # private helpers are never dispatched
    assert all(e.function.startswith("Bank$") for e in bank.dispatch.values())
    print("✅ dispatch by 4-byte selector")


def test_getters_and_fallback():
    dao = compile_program("simple_dao.flint").contract("SimpleDAO")
    entry = dao.dispatch_by_name("proposal")[0]
    assert entry.signature == "proposal()" and entry.returns == "uint256"
    assert entry.function == "SimpleDAO$proposal$"
    assert dao.fallback == "SimpleDAO$fallback$"
    print("✅ visible properties get getters; the fallback is recorded")


def test_library_functions_linked():
    bank = compile_program("bank.flint").contract("Bank")
    names = {f.name for f in bank.functions}
    assert "Wei$transfer$Wei&_Int" in names
    assert "Wei$init$Int" in names
    print("✅ reachable Wei functions are linked into the contract")


def test_ir_text_round_trip():
    for name in ("bank.flint", "simple_dao.flint", "valid_kotet.flint", "callers.flint", "states.flint"):
        text = dump_ir(compile_program(name))
        assert text.startswith("; Flint IR\n")
        assert dump_ir(load_ir(text)) == text, name
    print("✅ IR text loads back unchanged")


def test_lowering_is_deterministic():
    first = dump_ir(compile_program("simple_dao.flint"))
    second = dump_ir(compile_program("simple_dao.flint"))
    assert first == second
    print("✅ identical input gives identical IR")


def main():
    print("🧪 FLINT LOWERING TESTS")
    print("=" * 30)
    tests = [
        test_mangled_symbols, test_bank_storage_layout, test_typestate_ordinals, test_entry_checks,
        test_internal_calls, test_dispatch_table, test_getters_and_fallback, test_library_functions_linked,
        test_ir_text_round_trip, test_lowering_is_deterministic,
    ]
    for test in tests:
        test()
    print("\n🎉 ALL LOWERING TESTS PASSED!")
    return True


if __name__ == "__main__":
    sys.exit(0 if main() else 1)
