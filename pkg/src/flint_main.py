#!/usr/bin/env python3
"""
Flint toolchain command line
check, build and run Flint programs on the simulated chain
"""

import argparse
import asyncio
import json
import logging
import sys
from typing import List, Optional

import aiofiles
from dotenv import load_dotenv

from compiler import CompilationResult, FlintCompiler
from diagnostics import render_all
from errors import ScriptError
from flint_config import FlintConfig
from ir import dump_ir
from script_runner import ScriptReport, ScriptRunner
from vm import GasSchedule

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    pass


class FlintToolchain:
    """check / build / run over one set of input files"""

    def __init__(self, config: FlintConfig):
        self.config = config
        self.compiler = FlintCompiler(use_stdlib=not config.no_stdlib)

    @property
    def json_output(self) -> bool:
        return self.config.format == "json"

    async def compile(self, files: List[str]) -> CompilationResult:
        try:
            return await self.compiler.compile_files(files)
        except OSError as exc:
            raise UsageError(f"Cannot read {exc.filename}: {exc.strerror}") from exc

    def report_diagnostics(self, result: CompilationResult):
        if not result.diagnostics:
            return
        print(render_all(result.diagnostics, self.config.format))

    async def check(self, files: List[str]) -> int:
        result = await self.compile(files)
        if self.json_output:
            print(render_all(result.diagnostics, "json"))
        else:
            self.report_diagnostics(result)
        return EXIT_OK if result.ok else EXIT_FAILURE

    async def build(self, files: List[str], output: Optional[str]) -> int:
        result = await self.compile(files)
        self.report_diagnostics(result)
        if not result.ok or result.program is None:
            return EXIT_FAILURE
        text = dump_ir(result.program)
        if output:
            async with aiofiles.open(output, "w", encoding="utf-8") as handle:
                await handle.write(text)
            if not self.json_output:
                print(f"✅ Wrote IR for {len(result.program.contracts)} contract(s) to {output}")
        else:
            sys.stdout.write(text)
        return EXIT_OK

    async def load_gas_schedule(self) -> GasSchedule:
        if not self.config.gas_table:
            return GasSchedule()
        try:
            async with aiofiles.open(self.config.gas_table, "r", encoding="utf-8") as handle:
                data = json.loads(await handle.read())
        except OSError as exc:
            raise UsageError(f"Cannot read gas table {self.config.gas_table}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"Gas table {self.config.gas_table} is not valid JSON: {exc.msg}") from exc
        try:
            return GasSchedule.from_mapping(data)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc

    async def run(self, files: List[str], script: str) -> int:
        result = await self.compile(files)
        self.report_diagnostics(result)
        if not result.ok or result.program is None:
            return EXIT_FAILURE
        runner = ScriptRunner(result.program, await self.load_gas_schedule(), self.config.gas_limit)
        try:
            report = await runner.run_file(script)
        except OSError as exc:
            raise UsageError(f"Cannot read script {script}: {exc.strerror}") from exc
        except ScriptError as exc:
            print(f"❌ Script error: {exc}")
            return EXIT_FAILURE
        self.print_report(report)
        return EXIT_OK if report.passed else EXIT_FAILURE

    def print_report(self, report: ScriptReport):
        if self.json_output:
            print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
            return
        for step in report.steps:
            icon = "✅" if step.passed else "❌"
            line = f"{icon} line {step.line}: {step.action}"
            if step.result is not None:
                result = step.result
                status = result.status if not result.reason else f"{result.status} ({result.reason})"
                line += (f" {status} gas={result.gas_used} protectionChecks={result.protection_checks}"
                         f" typestateChecks={result.typestate_checks}")
            print(line)
            if not step.passed:
                print(f"   expected: {step.expected}")
                print(f"   actual:   {step.actual}")
        print("=" * 30)
        print("🎉 All expectations hold" if report.passed else "💥 Script failed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flint",
        description="Flint compiler and simulated-chain interpreter",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
COMMANDS:
  check   - Analyse the programs and print diagnostics
  build   - Compile to textual IR (stdout or -o FILE)
  run     - Compile, then execute a JSON-lines transaction script

EXAMPLES:
  python src/flint_main.py check contracts/bank.flint
  python src/flint_main.py build contracts/bank.flint -o bank.ir
  python src/flint_main.py run contracts/bank.flint --script scripts/bank.jsonl
        """
    )
    parser.add_argument("command", choices=["check", "build", "run"], help="What to do with the inputs")
    parser.add_argument("files", nargs="+", help="Flint source files, concatenated in order")
    parser.add_argument("--format", choices=["human", "json"], help="Diagnostic and report format")
    parser.add_argument("-o", "--output", help="IR output path for build")
    parser.add_argument("--gas-table", help="JSON map of instruction name to gas cost")
    parser.add_argument("--gas-limit", type=int, help="Gas limit per transaction")
    parser.add_argument("--no-stdlib", action="store_true", help="Compile without the standard library")
    parser.add_argument("--script", help="Transaction script for run")
    return parser


def configure(args: argparse.Namespace) -> FlintConfig:
    config = FlintConfig.from_env()
    if args.format:
        config.format = args.format
    if args.gas_table:
        config.gas_table = args.gas_table
    if args.gas_limit is not None:
        config.gas_limit = args.gas_limit
    if args.no_stdlib:
        config.no_stdlib = True
    config.validate()
    return config


async def dispatch(toolchain: FlintToolchain, args: argparse.Namespace) -> int:
    if args.command == "check":
        return await toolchain.check(args.files)
    if args.command == "build":
        return await toolchain.build(args.files, args.output)
    if not args.script:
        raise UsageError("run needs --script")
    return await toolchain.run(args.files, args.script)


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    try:
        config = configure(args)
    except ValueError as exc:
        print(f"❌ Configuration error: {exc}")
        return EXIT_USAGE
    config.configure_logging()

    toolchain = FlintToolchain(config)
    try:
        return asyncio.run(dispatch(toolchain, args))
    except UsageError as exc:
        print(f"❌ {exc}")
        return EXIT_USAGE
    except Exception as exc:
        logger.exception("internal error")
        print(f"💥 Internal error: {exc}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
