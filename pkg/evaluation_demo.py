#!/usr/bin/env python3
"""
Evaluation demo for the Flint toolchain
Prints gas and runtime check counters for internal call chains under caller
protections and typestates, with and without `try`, and for common Bank
operations.
"""

import asyncio
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from chain import ChainState
from compiler import FlintCompiler
from vm import format_address

CONTRACTS_DIR = os.path.join(os.path.dirname(__file__), 'contracts')

OWNER = int("aa" * 20, 16)
CUSTOMER = int("11" * 20, 16)
CHAIN_LENGTHS = (1, 10, 50, 100)


async def compile_fixtures():
    compiler = FlintCompiler()
    programs = {}
    for name in ("callers.flint", "states.flint", "bank.flint"):
        result = await compiler.compile_files([os.path.join(CONTRACTS_DIR, name)])
        if not result.ok:
            for diagnostic in result.errors:
                print(f"❌ {name}: {diagnostic.message}")
            return None
        programs[name] = result.program
    return programs


def print_row(label: str, result):
    status = "✅" if result.ok else f"❌ {result.reason}"
    print(f"  {label:<28} gas {result.gas_used:>8}   protection {result.protection_checks:>4}   "
          f"typestate {result.typestate_checks:>4}   {status}")


def demo_call_chains(title: str, program, contract: str, static_fn: str, try_fn: str):
    print(f"\n🔗 {title}")
    print("-" * 40)
    for length in CHAIN_LENGTHS:
        chain = ChainState()
        deployed = chain.deploy(program, contract, OWNER, [])
        print_row(f"{static_fn}({length})", chain.call(deployed.address, static_fn, [length], OWNER))
        print_row(f"{try_fn}({length})", chain.call(deployed.address, try_fn, [length], OWNER))


def demo_bank(program):
    print("\n🏦 BANK OPERATIONS")
    print("-" * 40)
    chain = ChainState()
    deployed = chain.deploy(program, "Bank", OWNER, [format_address(OWNER)])
    print_row("deploy", deployed)
    bank = deployed.address
    chain.fund(CUSTOMER, 1000)

    steps = [
        ("register", [], CUSTOMER, 0),
        ("deposit", [], CUSTOMER, 300),
        ("transfer", [50, format_address(OWNER)], CUSTOMER, 0),
        ("withdraw", [100], CUSTOMER, 0),
        ("donate", [], CUSTOMER, 20),
        ("freeDeposit", [format_address(CUSTOMER), 5], OWNER, 0),
        ("freeDeposit", [format_address(CUSTOMER), 5], CUSTOMER, 0),
        ("getBalance", [], CUSTOMER, 0),
    ]
    for function, args, caller, value in steps:
        print_row(function, chain.call(bank, function, args, caller, value))
    print(f"\n💰 Bank holds {chain.balance_of(bank)} Wei, customer holds {chain.balance_of(CUSTOMER)} Wei")
    print(f"⚖️  Conservation offset: {chain.conserved_total()}")


async def main():
    print("⛓️  FLINT EVALUATION DEMO")
    print("=" * 40)

    programs = await compile_fixtures()
    if programs is None:
        return False
    print("✅ Compiled callers.flint, states.flint and bank.flint")

    demo_call_chains("CALLER PROTECTION CHAINS", programs["callers.flint"], "Callers",
                     "ownerChain", "ownerTryChain")
    demo_call_chains("TYPESTATE CHAINS", programs["states.flint"], "States", "chain", "tryChain")
    demo_bank(programs["bank.flint"])

    print("\n" + "=" * 40)
    print("🎉 Evaluation complete")
    return True


if __name__ == "__main__":
    sys.exit(0 if asyncio.run(main()) else 1)
