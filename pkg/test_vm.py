#!/usr/bin/env python3
"""
Tests for the interpreter and the simulated chain
Memory, storage addressing, gas, dispatch, checks, Wei and revert handling
"""

import logging
import os
import random
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from abi import abi_encode, keccak_word
from chain import ChainState, Transaction, call, deploy
from compiler import FlintCompiler
from errors import RevertReason
from uint256 import MAX_UINT256
from vm import FREE_POINTER_ADDRESS, GasSchedule, Memory, format_address, storage_address

CONTRACTS_DIR = os.path.join(os.path.dirname(__file__), 'contracts')

MANAGER = int("aa" * 20, 16)
ALICE = int("11" * 20, 16)
BOB = int("22" * 20, 16)


def compile_program(name: str):
    with open(os.path.join(CONTRACTS_DIR, name), encoding='utf-8') as handle:
        result = FlintCompiler().compile_source(handle.read(), name)
    assert result.ok, [d.message for d in result.errors]
    return result.program


def deployed_bank():
    chain = ChainState()
    result = chain.deploy(compile_program("bank.flint"), "Bank", MANAGER, [format_address(MANAGER)])
    assert result.ok, result.to_dict()
    return chain, result.address


def test_memory_allocation():
    memory = Memory()
    assert memory.load(FREE_POINTER_ADDRESS) == 0x60
    assert memory.allocate(32) == 0x60
    assert memory.allocate(1) == 0x80
    assert memory.allocate(64) == 0xa0
    assert memory.load(FREE_POINTER_ADDRESS) == 0xe0
    print("✅ bump allocation from 0x60 in whole words")


def test_storage_addresses():
    assert storage_address(1, "dictEntry", 7) == keccak_word(7, 1)
    assert storage_address(2, "arrayElement", 3) == keccak_word(2) + 3
    in_memory = storage_address(0x60, "arrayElement", 2, is_memory=True)
    assert in_memory % 32 == 0
    assert in_memory - storage_address(0x60, "arrayElement", 0, is_memory=True) == 64
    print("✅ element addresses hash the head (and key)")


def test_gas_schedule():
    schedule = GasSchedule()
    assert schedule.instruction_cost("add") == 1
    assert schedule.instruction_cost("protectionCheck") == 51
    assert GasSchedule.from_mapping({"sstore": 5}).sstore == 5
    for bad in ({"add": -1}, {"add": True}, {"add": "3"}, [1, 2]):
        try:
            GasSchedule.from_mapping(bad)
        except ValueError:
            continue
        raise AssertionError(f"accepted {bad!r}")
    print("✅ gas schedule defaults and validation")


def test_deploy_runs_initialiser():
    chain, bank = deployed_bank()
    instance = chain.contracts[bank]
    assert instance.storage[0] == MANAGER
    assert instance.typestate == instance.code.completed_state
    result = chain.call(bank, "getManager", [], ALICE)
    assert result.ok and result.return_value == format_address(MANAGER)
    print("✅ deployment stores the manager")


def test_deploy_with_wrong_arity_reverts():
    chain = ChainState()
    result = chain.deploy(compile_program("bank.flint"), "Bank", MANAGER, [])
    assert result.status == "reverted" and result.reason == "unknown-selector"
    assert chain.contracts == {}
    print("✅ bad initialiser arguments leave no contract behind")


def test_protection_failure_changes_nothing():
    chain, bank = deployed_bank()
    before = chain.state_dump()
    result = chain.call(bank, "freeDeposit", [format_address(ALICE), 5], ALICE)
    assert result.status == "reverted" and result.reason == "protection"
    assert result.protection_checks == 1
    assert chain.state_dump() == before
    print("✅ failed caller protection reverts")


def test_payable_and_not_payable():
    chain, bank = deployed_bank()
    chain.fund(ALICE, 100)
    assert chain.call(bank, "register", [], ALICE).ok

    result = chain.call(bank, "register", [], ALICE, value=10)
    assert result.reason == "not-payable" and result.protection_checks == 0
    assert chain.balance_of(ALICE) == 100

    result = chain.call(bank, "deposit", [], ALICE, value=60)
    assert result.ok, result.to_dict()
    assert chain.balance_of(ALICE) == 40 and chain.balance_of(bank) == 60
    assert chain.call(bank, "getBalance", [], ALICE).return_value == "60"

    result = chain.call(bank, "deposit", [], ALICE, value=500)
    assert result.reason == "insufficient-funds"
    assert chain.balance_of(ALICE) == 40
    print("✅ Wei attaches only to @payable functions")


def test_events_and_atomicity():
    chain, bank = deployed_bank()
    chain.fund(ALICE, 100)
    chain.call(bank, "register", [], ALICE)
    chain.call(bank, "deposit", [], ALICE, value=100)

    result = chain.call(bank, "transfer", [10, format_address(BOB)], ALICE)
    assert result.ok
    assert [e.to_dict() for e in result.events] == [{
        "name": "didCompleteTransfer",
        "args": {"from": format_address(ALICE), "to": format_address(BOB), "value": "10"},
    }]

    before = chain.state_dump()
    result = chain.call(bank, "transfer", [1000, format_address(BOB)], ALICE)
    assert result.reason == "fatalError" and result.events == []
    assert chain.state_dump() == before
    assert chain.call(bank, "getBalance", [], ALICE).return_value == "90"
    print("✅ events are recorded and reverts restore state")


def test_withdraw_sends_wei():
    chain, bank = deployed_bank()
    chain.fund(ALICE, 100)
    chain.call(bank, "register", [], ALICE)
    chain.call(bank, "deposit", [], ALICE, value=100)
    assert chain.call(bank, "withdraw", [30], ALICE).ok
    assert chain.balance_of(ALICE) == 30 and chain.balance_of(bank) == 70
    assert chain.conserved_total() == 0
    print("✅ send credits the destination account")


def test_gas_limit():
    chain, bank = deployed_bank()
    result = chain.call(bank, "getManager", [], ALICE, gas_limit=1)
    assert result.reason == "out-of-gas"
    unlimited = chain.call(bank, "getManager", [], ALICE)
    assert unlimited.ok and unlimited.gas_used > 1
    print("✅ gas limit reverts with out-of-gas")


def test_unknown_functions_and_fallback():
    chain, bank = deployed_bank()
    assert chain.call(bank, "nope", [], ALICE).reason == "unknown-selector"
    assert chain.call(bank, "getManager", [1], ALICE).reason == "unknown-selector"
    result = call(chain, Transaction(ALICE, bank, b"\xde\xad\xbe\xef"))
    assert result.reason == "unknown-selector"

    program = compile_program("simple_dao.flint")
    dao = deploy(chain, program, "SimpleDAO", MANAGER, [format_address(MANAGER)])
    assert dao.ok
    result = call(chain, Transaction(ALICE, dao.address, b"\xde\xad\xbe\xef"))
    assert result.reason == "unknown-selector"
    print("✅ unknown selectors and reverting fallbacks")


def test_typestate_checked_before_protection():
    chain = ChainState()
    dao = chain.deploy(compile_program("simple_dao.flint"), "SimpleDAO", MANAGER, [format_address(MANAGER)])
    assert chain.typestate_name(dao.address) == "Join"
    result = chain.call(dao.address, "newProposal", [1, format_address(BOB)], ALICE)
    assert result.reason == "typestate"
    assert result.typestate_checks == 1 and result.protection_checks == 0
    print("✅ typestate check runs first")


def test_raw_transaction():
    chain, bank = deployed_bank()
    data = abi_encode("getManager()", [])
    result = call(chain, Transaction(ALICE, bank, data))
    assert result.ok and result.return_value == format_address(MANAGER)
    print("✅ raw call data dispatches by selector")


def compile_text(source: str, name: str):
    result = FlintCompiler().compile_source(source, name)
    assert result.ok, [d.message for d in result.errors]
    return result.program


GROWABLE_SOURCE = """
contract Growable {
  var items: [Int] = []
}

Growable :: (any) {
  public init() {}

  public mutating func put(index: Int, item: Int) {
    items[index] = item
  }

  public func read(index: Int) -> Int {
    return items[index]
  }

  public func length() -> Int {
    return items.size
  }
}
"""

GUARD_SOURCE = """
contract Guard {
  var total: Int = 0
  var history: [Int: Int] = [:]

  event Wrote {
    let amount: Int
  }
}

Guard :: (any) {
  public init() {}

  public mutating func write(amount: Int, succeed: Bool) {
    total += amount
    history[amount] = total
    emit Wrote(amount: amount)
    assert(succeed)
  }

  public func add(a: Int, b: Int) -> Int {
    return a + b
  }

  public func divide(a: Int, b: Int) -> Int {
    return a / b
  }

  public func getTotal() -> Int {
    return total
  }
}
"""

LEAK_SOURCE = """
contract Leak {
  var pot: Wei = Wei(0)
}

Leak :: (any) {
  public init() {}

  @payable
  public mutating func fill(implicit value: Wei) {
    pot.transfer(&value)
  }

  public mutating func drop(amount: Int) {
    let w: Wei = Wei(&pot, amount)
  }
}
"""

OVERLOADS_SOURCE = """
contract Overloads {}

Overloads :: (any) {
  public init() {}

  public func pick(choice: Int) -> Int {
    return 1
  }

  public func pick(choice: Address) -> Int {
    return 2
  }

  public func pick(choice: Bool) -> Int {
    return 3
  }

  public func pair(a: Int, b: Address) -> Int {
    return 1
  }

  public func pair(a: Address, b: Int) -> Int {
    return 2
  }
}
"""


def test_array_write_appends_only_at_the_end():
    chain = ChainState()
    growable = chain.deploy(compile_text(GROWABLE_SOURCE, "growable.flint"), "Growable", ALICE, []).address
    assert chain.call(growable, "put", [0, 7], ALICE).ok
    assert chain.call(growable, "put", [1, 8], ALICE).ok
    assert chain.call(growable, "put", [0, 9], ALICE).ok

    before = chain.state_dump()
    result = chain.call(growable, "put", [5, 7], ALICE)
    assert result.status == "reverted" and result.reason == RevertReason.OUT_OF_BOUNDS.value
    assert chain.state_dump() == before
    assert chain.call(growable, "read", [2], ALICE).reason == "out-of-bounds"
    assert chain.call(growable, "length", [], ALICE).return_value == "2"
    assert chain.call(growable, "read", [0], ALICE).return_value == "9"
    print("✅ writes append at size, skip ahead reverts")


def test_failed_assertion_discards_writes_and_events():
    program = compile_text(GUARD_SOURCE, "guard.flint")
    rng = random.Random(20261017)
    for _ in range(100):
        chain = ChainState()
        guard = chain.deploy(program, "Guard", ALICE, []).address
        expected = 0
        for _ in range(rng.randint(0, 4)):
            amount = rng.randint(1, 1000)
            result = chain.call(guard, "write", [amount, True], ALICE)
            assert result.ok and len(result.events) == 1
            expected += amount

        before = chain.state_dump()
        logged = len(chain.event_log)
        result = chain.call(guard, "write", [rng.randint(1, 1000), False], ALICE)
        assert result.status == "reverted" and result.reason == RevertReason.ASSERTION.value
        assert result.events == []
        assert chain.state_dump() == before
        assert len(chain.event_log) == logged
        assert chain.call(guard, "getTotal", [], ALICE).return_value == str(expected)
    print("✅ a failed assert drops storage writes and events")


def test_arithmetic_traps_revert():
    chain = ChainState()
    guard = chain.deploy(compile_text(GUARD_SOURCE, "guard.flint"), "Guard", ALICE, []).address
    before = chain.state_dump()

    result = chain.call(guard, "add", [MAX_UINT256, 1], ALICE)
    assert result.reason == RevertReason.OVERFLOW.value == "overflow"
    result = chain.call(guard, "divide", [1, 0], ALICE)
    assert result.reason == RevertReason.DIVISION_BY_ZERO.value == "division-by-zero"
    assert chain.state_dump() == before

    assert chain.call(guard, "add", [MAX_UINT256 - 1, 1], ALICE).return_value == str(MAX_UINT256)
    assert chain.call(guard, "divide", [7, 2], ALICE).return_value == "3"
    print("✅ overflow and division by zero revert")


class RecordCollector(logging.Handler):
    def __init__(self):
        super().__init__(level=logging.WARNING)
        self.records = []

    def emit(self, record):
        self.records.append(record)


def test_unconsumed_wei_is_logged():
    chain = ChainState()
    leak = chain.deploy(compile_text(LEAK_SOURCE, "leak.flint"), "Leak", ALICE, []).address
    chain.fund(ALICE, 100)
    assert chain.call(leak, "fill", [], ALICE, value=50).ok

    vm_logger = logging.getLogger("vm")
    collector = RecordCollector()
    previous_level = vm_logger.level
    vm_logger.addHandler(collector)
    vm_logger.setLevel(logging.WARNING)
    try:
        assert chain.call(leak, "drop", [10], ALICE).ok
    finally:
        vm_logger.removeHandler(collector)
        vm_logger.setLevel(previous_level)

    messages = [r.getMessage() for r in collector.records if r.levelno == logging.WARNING]
    assert len(messages) == 1 and "unconsumed Wei" in messages[0]
    assert "holding 10 " in messages[0]
    print("✅ Wei left in a local is reported")


def test_overloads_resolve_by_argument_type():
    chain = ChainState()
    target = chain.deploy(compile_text(OVERLOADS_SOURCE, "overloads.flint"), "Overloads", ALICE, []).address
    assert chain.call(target, "pick", [7], ALICE).return_value == "1"
    assert chain.call(target, "pick", [format_address(BOB)], ALICE).return_value == "2"
    assert chain.call(target, "pick", [True], ALICE).return_value == "3"
    assert chain.call(target, "pair", [1, format_address(BOB)], ALICE).return_value == "1"
    assert chain.call(target, "pair", [format_address(BOB), 1], ALICE).return_value == "2"

    result = chain.call(target, "pair", [1, 2], ALICE)
    assert result.status == "reverted" and result.reason == "unknown-selector"
    assert "ambiguous" in result.detail
    print("✅ overloads pick the matching parameter types")


def main():
    print("🧪 FLINT VM TESTS")
    print("=" * 30)
    tests = [
        test_memory_allocation, test_storage_addresses, test_gas_schedule, test_deploy_runs_initialiser,
        test_deploy_with_wrong_arity_reverts, test_protection_failure_changes_nothing,
        test_payable_and_not_payable, test_events_and_atomicity, test_withdraw_sends_wei, test_gas_limit,
        test_unknown_functions_and_fallback, test_typestate_checked_before_protection, test_raw_transaction,
        test_array_write_appends_only_at_the_end, test_failed_assertion_discards_writes_and_events,
        test_arithmetic_traps_revert, test_unconsumed_wei_is_logged, test_overloads_resolve_by_argument_type,
    ]
    for test in tests:
        test()
    print("\n🎉 ALL VM TESTS PASSED!")
    return True


if __name__ == "__main__":
    sys.exit(0 if main() else 1)
