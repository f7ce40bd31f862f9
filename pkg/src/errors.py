"""
Exception hierarchy for the Flint toolchain
User-level problems in Flint programs are Diagnostics, not exceptions
"""

from enum import Enum
from typing import Optional


class FlintError(Exception):
    """Base class for toolchain failures"""


class InternalCompilerError(FlintError):
    """Raised when a stage receives input it was never meant to see"""


class SelectorCollisionError(FlintError):
    def __init__(self, contract: str, first: str, second: str, selector: str):
        self.contract = contract
        self.first = first
        self.second = second
        self.selector = selector
        super().__init__(
            f"Function selector collision in '{contract}': '{first}' and '{second}' both hash to {selector}."
        )


class ScriptError(FlintError):
    """Malformed transaction script line"""

    def __init__(self, message: str, line_number: int = 0):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number else ""
        super().__init__(prefix + message)


class RevertReason(Enum):
    PROTECTION = "protection"
    TYPESTATE = "typestate"
    OVERFLOW = "overflow"
    DIVISION_BY_ZERO = "division-by-zero"
    OUT_OF_BOUNDS = "out-of-bounds"
    ASSERTION = "assertion"
    FATAL_ERROR = "fatalError"
    INSUFFICIENT_FUNDS = "insufficient-funds"
    NOT_PAYABLE = "not-payable"
    OUT_OF_GAS = "out-of-gas"
    UNKNOWN_SELECTOR = "unknown-selector"


class Revert(FlintError):
    """Aborts the current transaction; the chain restores its snapshot"""

    def __init__(self, reason: RevertReason, detail: Optional[str] = None):
        self.reason = reason
        self.detail = detail
        message = reason.value if not detail else f"{reason.value}: {detail}"
        super().__init__(message)


class ArithmeticTrap(Revert):
    pass
