#!/usr/bin/env python3
"""
Tests for the flint command line and its configuration
"""

import contextlib
import io
import json
import os
import sys
import tempfile

sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from flint_config import FlintConfig
from flint_main import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main
from ir import load_ir

ROOT = os.path.dirname(__file__)
BANK = os.path.join(ROOT, 'contracts', 'bank.flint')
BANK_SCRIPT = os.path.join(ROOT, 'scripts', 'bank.jsonl')

BROKEN_SOURCE = """contract C {}
C :: (any) {
  public init() {
  }
  public func f() -> Int {
    return true
  }
}
"""


def run_cli(*argv):
    output = io.StringIO()
    with contextlib.redirect_stdout(output):
        code = main(list(argv))
    return code, output.getvalue()


def write_temp(directory: str, name: str, text: str) -> str:
    path = os.path.join(directory, name)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)
    return path


def test_check():
    code, _ = run_cli("check", BANK)
    assert code == EXIT_OK
    with tempfile.TemporaryDirectory() as directory:
        broken = write_temp(directory, "broken.flint", BROKEN_SOURCE)
        code, output = run_cli("check", broken, "--format", "json")
        assert code == EXIT_FAILURE
        diagnostics = json.loads(output)
        assert [d["code"] for d in diagnostics] == ["E-TYPE-002"]
        assert diagnostics[0]["line"] == 6

        code, output = run_cli("check", broken)
        assert code == EXIT_FAILURE
        assert "broken.flint:6:12: error:" in output
    print("✅ check reports diagnostics as text or JSON")


def test_build_writes_ir():
    with tempfile.TemporaryDirectory() as directory:
        target = os.path.join(directory, "bank.ir")
        code, output = run_cli("build", BANK, "-o", target)
        assert code == EXIT_OK and "Wrote IR" in output
        with open(target, encoding="utf-8") as handle:
            program = load_ir(handle.read())
        assert program.contract("Bank").slot_of("manager") == 0
    print("✅ build writes loadable IR")


def test_run_script():
    code, output = run_cli("run", BANK, "--script", BANK_SCRIPT)
    assert code == EXIT_OK, output
    assert "All expectations hold" in output

    with tempfile.TemporaryDirectory() as directory:
        manager = "0x" + "aa" * 20
        failing = write_temp(directory, "failing.jsonl", "\n".join([
            '{"action":"deploy","contract":"Bank","as":"bank","caller":"%s","args":["%s"]}' % (manager, manager),
            '{"action":"call","to":"bank","function":"getDonations","caller":"%s","expect":{"returns":"7"}}' % manager,
        ]))
        code, output = run_cli("run", BANK, "--script", failing, "--format", "json")
        assert code == EXIT_FAILURE
        report = json.loads(output[output.index('{\n  "passed"'):])
        assert report["passed"] is False
        assert report["steps"][-1]["actual"] == {"returns": "0"}
    print("✅ run executes scripts and reports failures")


def test_usage_errors():
    assert run_cli("run", BANK)[0] == EXIT_USAGE
    assert run_cli("check", os.path.join(ROOT, "missing.flint"))[0] == EXIT_USAGE
    assert run_cli("check", BANK, "--gas-limit", "-5")[0] == EXIT_USAGE
    assert run_cli("run", BANK, "--script", BANK_SCRIPT, "--gas-table", os.path.join(ROOT, "none.json"))[0] == EXIT_USAGE
    with tempfile.TemporaryDirectory() as directory:
        table = write_temp(directory, "gas.json", '{"sstore": -1}')
        assert run_cli("run", BANK, "--script", BANK_SCRIPT, "--gas-table", table)[0] == EXIT_USAGE
    try:
        run_cli("deploy", BANK)
    except SystemExit as exc:
        assert exc.code == EXIT_USAGE
    else:
        raise AssertionError("unknown command accepted")
    print("✅ usage problems exit with 2")


def test_no_stdlib():
    code, _ = run_cli("check", BANK, "--no-stdlib")
    assert code == EXIT_FAILURE
    print("✅ Wei is unknown without the standard library")


def test_config_from_env():
    config = FlintConfig.from_env({})
    assert (config.format, config.gas_limit, config.log_level, config.no_stdlib) == ("human", None, "WARNING", False)

    config = FlintConfig.from_env({"FLINT_FORMAT": "JSON", "FLINT_GAS_LIMIT": "5000", "FLINT_NO_STDLIB": "yes",
                                   "FLINT_LOG_LEVEL": "debug"})
    assert (config.format, config.gas_limit, config.log_level, config.no_stdlib) == ("json", 5000, "DEBUG", True)

    for environ in ({"FLINT_GAS_LIMIT": "lots"}, {"FLINT_FORMAT": "xml"}, {"FLINT_NO_STDLIB": "maybe"},
                    {"FLINT_LOG_LEVEL": "LOUD"}):
        try:
            FlintConfig.from_env(environ)
        except ValueError:
            continue
        raise AssertionError(f"accepted {environ}")
    print("✅ FLINT_* environment configuration")


def main_tests():
    print("🧪 FLINT CLI TESTS")
    print("=" * 30)
    tests = [test_check, test_build_writes_ir, test_run_script, test_usage_errors, test_no_stdlib,
             test_config_from_env]
    for test in tests:
        test()
    print("\n🎉 ALL CLI TESTS PASSED!")
    return True


if __name__ == "__main__":
    sys.exit(0 if main_tests() else 1)
