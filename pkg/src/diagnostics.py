"""
Compiler diagnostics
Error, warning and note records with stable codes and human/JSON rendering
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional

from flint_lexer import Span


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"
    NOTE = "note"


# Stable category codes; message text may change, codes anchor the golden tests
DIAGNOSTIC_CODES = {
    "E-LEX-001": "Use of invalid character",
    "E-PARSE-001": "Syntax error",
    "E-DECL-001": "Invalid redeclaration",
    "E-DECL-002": "Behaviour declaration without contract",
    "E-DECL-003": "Dynamic parameter in public function",
    "E-DECL-004": "Use of undeclared identifier",
    "E-DECL-005": "Unknown type",
    "E-DECL-006": "Dynamic return type in public function",
    "E-STATE-001": "Undefined typestate",
    "E-STATE-002": "Typestate collides with property",
    "E-STATE-003": "Typestate-incompatible call",
    "E-PROT-001": "Undefined caller protection",
    "E-PROT-002": "Protection-incompatible call",
    "E-PROT-003": "Unknown function",
    "W-PROT-004": "Protection name is both property and function",
    "E-MUT-001": "Mutating statement in nonmutating function",
    "W-MUT-002": "Unnecessary mutating declaration",
    "E-MUT-003": "Reassignment to constant",
    "W-MUT-004": "Mutating fallback",
    "E-MUT-005": "Fallback changes state",
    "E-INIT-001": "State property never assigned",
    "E-INIT-002": "Return from initialiser before initialising all properties",
    "E-INIT-003": "Missing public initialiser",
    "E-INIT-004": "Multiple public initialisers",
    "E-INIT-005": "Public initialiser not callable with any",
    "E-PAY-001": "Payable function without implicit currency parameter",
    "E-PAY-002": "Ambiguous implicit currency parameter",
    "E-PAY-003": "Implicit parameter outside payable function",
    "E-RES-001": "Discarded function result",
    "W-FLOW-001": "Unreachable code",
    "E-TYPE-001": "Missing return",
    "E-TYPE-002": "Incompatible return type",
    "E-TYPE-003": "Incompatible assignment",
    "E-TYPE-004": "Incompatible argument type",
    "E-TYPE-005": "Invalid operand",
    "E-TYPE-006": "Fractional literal",
    "E-TYPE-007": "Incompatible declaration initialiser",
    "E-TYPE-008": "Invalid inout expression",
    "W-TYPE-009": "Int and Address used interchangeably as dictionary key",
    "E-TRAIT-001": "Missing trait member implementation",
    "E-TRAIT-002": "Duplicate function body",
    "E-TRAIT-003": "Unknown or mismatched trait",
    "E-ABI-001": "Function selector collision",
}

# Pass indices order diagnostics that share a source position
PASS_PARSE = 0
PASS_ENVIRONMENT = 1
PASS_SEMANTIC = 2
PASS_TYPES = 3
PASS_TRAITS = 4
PASS_LOWERING = 5


@dataclass(frozen=True)
class Note:
    message: str
    span: Optional[Span] = None


@dataclass
class Diagnostic:
    severity: Severity
    code: str
    message: str
    span: Span
    notes: List[Note] = field(default_factory=list)
    pass_index: int = field(default=0, compare=False)

    @property
    def is_error(self) -> bool:
        return self.severity == Severity.ERROR

    @property
    def line(self) -> int:
        return self.span.line

    @property
    def column(self) -> int:
        return self.span.column


def error(code: str, message: str, span: Span, notes: Optional[List[Note]] = None, pass_index: int = 0) -> Diagnostic:
    return Diagnostic(Severity.ERROR, code, message, span, list(notes or []), pass_index)


def warning(code: str, message: str, span: Span, notes: Optional[List[Note]] = None, pass_index: int = 0) -> Diagnostic:
    return Diagnostic(Severity.WARNING, code, message, span, list(notes or []), pass_index)


def has_errors(diagnostics: Iterable[Diagnostic]) -> bool:
    return any(d.is_error for d in diagnostics)


def sort_diagnostics(diagnostics: Iterable[Diagnostic], file_order: Optional[List[str]] = None) -> List[Diagnostic]:
    """Order by file, line, column and pass; identical records are reported once"""
    file_order = file_order or []
    unique: List[Diagnostic] = []
    seen = set()
    for diagnostic in diagnostics:
        key = (diagnostic.code, diagnostic.message, diagnostic.span, tuple(diagnostic.notes))
        if key in seen:
            continue
        seen.add(key)
        unique.append(diagnostic)

    def sort_key(item):
        index, diagnostic = item
        file_name = diagnostic.span.file
        file_index = file_order.index(file_name) if file_name in file_order else len(file_order)
        return (file_index, diagnostic.line, diagnostic.column, diagnostic.pass_index, index)

    return [d for _, d in sorted(enumerate(unique), key=sort_key)]


def diagnostic_to_dict(diagnostic: Diagnostic) -> Dict[str, Any]:
    return {
        "severity": diagnostic.severity.value,
        "code": diagnostic.code,
        "message": diagnostic.message,
        "file": diagnostic.span.file,
        "line": diagnostic.span.line,
        "column": diagnostic.span.column,
        "length": diagnostic.span.length,
        "notes": [
            {
                "message": note.message,
                "file": note.span.file if note.span else None,
                "line": note.span.line if note.span else None,
                "column": note.span.column if note.span else None,
                "length": note.span.length if note.span else None,
            }
            for note in diagnostic.notes
        ],
    }


def diagnostic_from_dict(data: Dict[str, Any]) -> Diagnostic:
    notes = []
    for note in data.get("notes", []):
        span = None
        if note.get("line") is not None:
            span = Span(note["line"], note["column"], note.get("length") or 1, note.get("file") or "")
        notes.append(Note(note["message"], span))
    return Diagnostic(
        severity=Severity(data["severity"]),
        code=data["code"],
        message=data["message"],
        span=Span(data["line"], data["column"], data.get("length", 1), data.get("file") or ""),
        notes=notes,
    )


def render(diagnostic: Diagnostic, fmt: str = "human", with_location: bool = False) -> str:
    """Render one diagnostic as text or as a JSON object"""
    if fmt == "json":
        return json.dumps(diagnostic_to_dict(diagnostic))
    if fmt != "human":
        raise ValueError(f"Unknown diagnostic format '{fmt}'")

    head = f"{diagnostic.severity.value}: {diagnostic.message}"
    if with_location:
        location = f"{diagnostic.span.file}:" if diagnostic.span.file else ""
        head = f"{location}{diagnostic.span.line}:{diagnostic.span.column}: {head}"
    lines = [head] + [f"  Note: {note.message}" for note in diagnostic.notes]
    return "\n".join(lines)


def render_all(diagnostics: Iterable[Diagnostic], fmt: str = "human") -> str:
    diagnostics = list(diagnostics)
    if fmt == "json":
        return json.dumps([diagnostic_to_dict(d) for d in diagnostics], indent=2)
    return "\n".join(render(d, fmt, with_location=True) for d in diagnostics)
