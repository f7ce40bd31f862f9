"""
Transaction script runner
Executes JSON-lines scripts (deploy, call, fund and assertions) on a fresh
chain and reports per-step results, stopping at the first failed expectation
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import aiofiles

from chain import CallResult, ChainState, parse_address
from errors import ScriptError
from ir import IRProgram
from vm import GasSchedule, format_address

logger = logging.getLogger(__name__)

SCRIPT_ACTIONS = ("deploy", "call", "fund", "assert_balance", "assert_typestate")


@dataclass
class StepResult:
    line: int
    action: str
    passed: bool = True
    result: Optional[CallResult] = None
    message: str = ""
    expected: Optional[dict] = None
    actual: Optional[dict] = None

    def to_dict(self) -> dict:
        data = {"line": self.line, "action": self.action, "passed": self.passed}
        if self.result is not None:
            data.update(self.result.to_dict())
        if self.message:
            data["message"] = self.message
        if not self.passed:
            data["expected"] = self.expected
            data["actual"] = self.actual
        return data


@dataclass
class ScriptReport:
    steps: List[StepResult] = field(default_factory=list)
    state: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(step.passed for step in self.steps)

    def to_dict(self) -> dict:
        return {"steps": [s.to_dict() for s in self.steps], "state": self.state, "passed": self.passed}


def normalise(value):
    """Comparable text form of an expected or actual value"""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        text = value.strip()
        if text.lower().startswith("0x"):
            return format_address(int(text, 16))
        return text.lower() if text.lower() in ("true", "false") else text
    if isinstance(value, dict):
        return {k: normalise(v) for k, v in value.items()}
    if isinstance(value, list):
        return [normalise(v) for v in value]
    return value


def parse_script(text: str) -> List[dict]:
    actions = []
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("//") or line.startswith("#"):
            continue
        try:
            action = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScriptError(f"invalid JSON: {exc.msg}", number) from exc
        if not isinstance(action, dict) or action.get("action") not in SCRIPT_ACTIONS:
            raise ScriptError(f"expected an object with action one of {', '.join(SCRIPT_ACTIONS)}", number)
        action["_line"] = number
        actions.append(action)
    return actions


class ScriptRunner:
    """Runs transaction scripts against one chain"""

    def __init__(self, program: IRProgram, schedule: Optional[GasSchedule] = None,
                 gas_limit: Optional[int] = None, chain: Optional[ChainState] = None):
        self.program = program
        self.chain = chain or ChainState(schedule, gas_limit)
        self.aliases: Dict[str, int] = {}

    async def run_file(self, path: str) -> ScriptReport:
        async with aiofiles.open(path, "r", encoding="utf-8") as handle:
            text = await handle.read()
        return self.run_actions(parse_script(text))

    def run_text(self, text: str) -> ScriptReport:
        return self.run_actions(parse_script(text))

    def run_actions(self, actions: List[dict]) -> ScriptReport:
        report = ScriptReport()
        for action in actions:
            step = self.run_action(action)
            report.steps.append(step)
            if not step.passed:
                logger.info("script stopped at line %d: %s", step.line, step.message)
                break
        report.state = self.chain.state_dump()
        return report

    # --- actions -----------------------------------------------------------------------

    def run_action(self, action: dict) -> StepResult:
        line = action.get("_line", 0)
        kind = action["action"]
        try:
            if kind == "deploy":
                return self._deploy(action, line)
            if kind == "call":
                return self._call(action, line)
            if kind == "fund":
                address = self.address(self._require(action, "address", line))
                self.chain.fund(address, self._amount(action.get("amount", action.get("value", "0")), line))
                return StepResult(line, kind)
            if kind == "assert_balance":
                address = self.address(self._require(action, "address", line))
                expected = str(self._amount(self._require(action, "equals", line), line))
                actual = str(self.chain.balance_of(address))
                return self._compare(line, kind, {"balance": expected}, {"balance": actual})
            address = self.address(self._require(action, "address", line))
            if address not in self.chain.contracts:
                raise ScriptError(f"no contract at {format_address(address)}", line)
            expected = str(self._require(action, "equals", line))
            actual = self.chain.typestate_name(address)
            if expected.isdigit():
                actual = str(self.chain.contracts[address].typestate)
            return self._compare(line, kind, {"typestate": expected}, {"typestate": actual})
        except ValueError as exc:
            raise ScriptError(str(exc), line) from exc

    def _deploy(self, action: dict, line: int) -> StepResult:
        result = self.chain.deploy(
            self.program, self._require(action, "contract", line), self.address(self._require(action, "caller", line)),
            action.get("args", []), self._amount(action.get("value", "0"), line), action.get("gas_limit"),
        )
        if result.ok and action.get("as"):
            self.aliases[action["as"]] = result.address
        return self._check(line, "deploy", action.get("expect"), result)

    def _call(self, action: dict, line: int) -> StepResult:
        result = self.chain.call(
            self.address(self._require(action, "to", line)), self._require(action, "function", line),
            action.get("args", []), self.address(self._require(action, "caller", line)),
            self._amount(action.get("value", "0"), line), action.get("gas_limit"),
        )
        return self._check(line, "call", action.get("expect"), result)

    def _check(self, line: int, kind: str, expect: Optional[dict], result: CallResult) -> StepResult:
        if not expect:
            return StepResult(line, kind, result=result)
        actual_full = {
            "status": result.status,
            "reason": result.reason,
            "returns": result.return_value,
            "events": [e.to_dict() for e in result.events],
        }
        expected = {key: normalise(value) for key, value in expect.items()}
        actual = {key: normalise(actual_full.get(key)) for key in expect}
        step = self._compare(line, kind, expected, actual)
        step.result = result
        return step

    @staticmethod
    def _compare(line: int, kind: str, expected: dict, actual: dict) -> StepResult:
        passed = expected == actual
        message = "" if passed else f"expected {expected}, got {actual}"
        return StepResult(line, kind, passed, message=message, expected=expected, actual=actual)

    # --- values ------------------------------------------------------------------------

    def address(self, value) -> int:
        if isinstance(value, str) and value in self.aliases:
            return self.aliases[value]
        return parse_address(value)

    @staticmethod
    def _amount(value, line: int) -> int:
        text = str(value)
        if not text.isdigit():
            raise ScriptError(f"'{value}' is not a decimal amount", line)
        return int(text)

    @staticmethod
    def _require(action: dict, key: str, line: int):
        if key not in action:
            raise ScriptError(f"'{action['action']}' needs '{key}'", line)
        return action[key]
