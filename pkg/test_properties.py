#!/usr/bin/env python3
"""
Property tests over randomised transaction sequences
Wei conservation, all-or-nothing transactions, determinism and the cost of
runtime caller protection and typestate checks
"""

import os
import random
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from chain import ChainState
from compiler import FlintCompiler
from vm import format_address

CONTRACTS_DIR = os.path.join(os.path.dirname(__file__), 'contracts')

MANAGER = int("aa" * 20, 16)
USERS = [int(f"{n}{n}" * 20, 16) for n in range(1, 6)]
SEED_COUNT = 200
SEQUENCE_LENGTH = 25
LONG_SEQUENCE_LENGTH = 200
CHAIN_LENGTH = 50


def compile_program(name: str):
    with open(os.path.join(CONTRACTS_DIR, name), encoding='utf-8') as handle:
        result = FlintCompiler().compile_source(handle.read(), name)
    assert result.ok, [d.message for d in result.errors]
    return result.program


BANK = compile_program("bank.flint")


def random_transaction(rng: random.Random):
    """(function, args, caller, value) for one Bank call"""
    caller = rng.choice(USERS + [MANAGER])
    target = format_address(rng.choice(USERS))
    choice = rng.randrange(7)
    if choice == 0:
        return "register", [], caller, 0
    if choice == 1:
        return "deposit", [], caller, rng.randrange(0, 300)
    if choice == 2:
        return "transfer", [rng.randrange(0, 200), target], caller, 0
    if choice == 3:
        return "withdraw", [rng.randrange(0, 200)], caller, 0
    if choice == 4:
        return "donate", [], caller, rng.randrange(0, 100)
    if choice == 5:
        return "freeDeposit", [target, rng.randrange(0, 100)], caller, 0
    return "getBalance", [], caller, rng.randrange(0, 2)


def run_bank_sequence(seed: int, length: int = SEQUENCE_LENGTH):
    rng = random.Random(seed)
    chain = ChainState()
    deployed = chain.deploy(BANK, "Bank", MANAGER, [format_address(MANAGER)])
    assert deployed.ok
    for user in USERS:
        chain.fund(user, 1000)

    results = []
    for _ in range(length):
        function, args, caller, value = random_transaction(rng)
        before = chain.state_dump()
        result = chain.call(deployed.address, function, args, caller, value)
        assert chain.conserved_total() == 0, (function, args)
        if not result.ok:
            assert chain.state_dump() == before, (function, result.reason)
        results.append(result.to_dict())
    return chain, deployed.address, results


def test_wei_is_conserved():
    reverted = 0
    for seed in range(SEED_COUNT):
        chain, bank, results = run_bank_sequence(seed)
        reverted += sum(1 for r in results if r["status"] == "reverted")

        # the contract holds exactly the Wei recorded in its ledger
        holders = USERS + [MANAGER]
        for holder in holders:
            assert chain.call(bank, "register", [], holder).ok
        held = sum(int(chain.call(bank, "getBalance", [], h).return_value) for h in holders)
        donations = int(chain.call(bank, "getDonations", [], MANAGER).return_value)
        assert chain.balance_of(bank) == held + donations
    assert reverted > 0
    print(f"✅ Wei conserved over {SEED_COUNT} seeds of {SEQUENCE_LENGTH} random transactions ({reverted} reverted)")


def test_execution_is_deterministic():
    first_chain, _, first = run_bank_sequence(7, LONG_SEQUENCE_LENGTH)
    second_chain, _, second = run_bank_sequence(7, LONG_SEQUENCE_LENGTH)
    assert first == second
    assert first_chain.state_dump() == second_chain.state_dump()
    print("✅ identical sequences give identical results and state")


def test_protection_check_counts():
    chain = ChainState()
    owner = USERS[0]
    callers = chain.deploy(compile_program("callers.flint"), "Callers", owner, [])
    assert callers.ok

    static = chain.call(callers.address, "ownerChain", [CHAIN_LENGTH], owner)
    attempted = chain.call(callers.address, "ownerTryChain", [CHAIN_LENGTH], owner)
    assert static.ok and attempted.ok
    assert (static.protection_checks, static.typestate_checks) == (1, 0)
    assert (attempted.protection_checks, attempted.typestate_checks) == (CHAIN_LENGTH + 1, 0)
    assert attempted.gas_used > static.gas_used

    assert chain.call(callers.address, "join", [], USERS[1]).ok
    customers = chain.call(callers.address, "customerChain", [3], USERS[1])
    assert customers.ok and customers.protection_checks == 1
    assert chain.call(callers.address, "customerChain", [3], USERS[2]).reason == "protection"
    assert chain.call(callers.address, "getCounter", [], owner).return_value == str(2 * CHAIN_LENGTH + 3)
    print(f"✅ {CHAIN_LENGTH} internal calls: 1 protection check static, {CHAIN_LENGTH + 1} with try")


def test_typestate_check_counts():
    chain = ChainState()
    owner = USERS[0]
    states = chain.deploy(compile_program("states.flint"), "States", owner, [])
    assert states.ok and chain.typestate_name(states.address) == "Open"

    static = chain.call(states.address, "chain", [CHAIN_LENGTH], owner)
    attempted = chain.call(states.address, "tryChain", [CHAIN_LENGTH], owner)
    assert (static.protection_checks, static.typestate_checks) == (1, 1)
    assert (attempted.protection_checks, attempted.typestate_checks) == (CHAIN_LENGTH + 1, CHAIN_LENGTH + 1)

    assert chain.call(states.address, "close", [], owner).ok
    closed = chain.call(states.address, "chain", [1], owner)
    assert closed.reason == "typestate"
    assert chain.call(states.address, "reopen", [], owner).ok
    assert chain.typestate_name(states.address) == "Open"
    assert chain.call(states.address, "getCounter", [], owner).return_value == str(2 * CHAIN_LENGTH)
    print("✅ typestate checks follow the same pattern")


def main():
    print("🧪 FLINT PROPERTY TESTS")
    print("=" * 30)
    tests = [
        test_wei_is_conserved, test_execution_is_deterministic, test_protection_check_counts,
        test_typestate_check_counts,
    ]
    for test in tests:
        test()
    print("\n🎉 ALL PROPERTY TESTS PASSED!")
    return True


if __name__ == "__main__":
    sys.exit(0 if main() else 1)
