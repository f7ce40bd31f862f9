"""
Flint intermediate representation
Contracts, functions and a small register instruction set, with a textual
form that loads back into an identical program
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from errors import InternalCompilerError
from flint_types import TypeRef, parse_type_text

# Operations that write a destination register
VALUE_OPS = {
    "mov", "add", "sub", "mul", "div", "exp", "wadd", "wsub", "wmul",
    "eq", "ne", "lt", "le", "gt", "ge", "load", "allocateMemory", "keccakSlot", "offset",
    "call", "callChecked", "caller",
}

EFFECT_OPS = {
    "store", "copy", "clear", "jump", "branch", "label", "return", "revert", "emitEvent",
    "becomeState", "sendWei", "mint", "trackAsset", "protectionCheck", "typestateCheck",
}

# Wrapping operators keep their own opcodes; checked ones trap
CHECKED_ARITHMETIC = {"add", "sub", "mul", "div", "exp"}
WRAPPING_ARITHMETIC = {"wadd", "wsub", "wmul"}
COMPARISONS = {"eq", "ne", "lt", "le", "gt", "ge"}


@dataclass
class IRInstr:
    op: str
    dest: Optional[str] = None
    args: List[str] = field(default_factory=list)

    def text(self) -> str:
        operands = ", ".join(self.args)
        body = f"{self.op} {operands}" if operands else self.op
        if self.op == "label":
            return f"{self.args[0]}:"
        return f"{self.dest} = {body}" if self.dest else body

    def __str__(self) -> str:
        return self.text()


@dataclass
class IRFunction:
    name: str
    kind: str
    params: List[Tuple[str, TypeRef]] = field(default_factory=list)
    returns: Optional[TypeRef] = None
    public: bool = False
    payable_param: Optional[str] = None
    states: List[int] = field(default_factory=list)
    checks: List[IRInstr] = field(default_factory=list)
    body: List[IRInstr] = field(default_factory=list)

    def labels(self) -> Dict[str, int]:
        return {instr.args[0]: index for index, instr in enumerate(self.body) if instr.op == "label"}

    def callees(self) -> List[str]:
        names = [i.args[0] for i in self.body if i.op in ("call", "callChecked")]
        for check in self.checks:
            if check.op == "protectionCheck":
                names.extend(a.split(":", 1)[1] for a in check.args if a.startswith("predicate:"))
        return names


@dataclass
class DispatchEntry:
    selector: str
    function: str
    signature: str
    param_types: List[str]
    returns: str = ""


@dataclass
class IRContract:
    name: str
    storage_layout: List[Tuple[str, int, TypeRef]] = field(default_factory=list)
    typestates: Dict[str, int] = field(default_factory=dict)
    completed_state: int = 1
    struct_layouts: Dict[str, List[Tuple[str, int, TypeRef]]] = field(default_factory=dict)
    events: Dict[str, List[Tuple[str, TypeRef]]] = field(default_factory=dict)
    functions: List[IRFunction] = field(default_factory=list)
    dispatch: Dict[str, DispatchEntry] = field(default_factory=dict)
    initialiser: Optional[str] = None
    fallback: Optional[str] = None

    def function(self, name: str) -> IRFunction:
        for function in self.functions:
            if function.name == name:
                return function
        raise InternalCompilerError(f"Function '{name}' is not part of contract '{self.name}'")

    def slot_of(self, name: str) -> int:
        for prop, slot, _ in self.storage_layout:
            if prop == name:
                return slot
        raise KeyError(name)

    def dispatch_by_name(self, name: str) -> List[DispatchEntry]:
        return [e for e in self.dispatch.values() if e.signature.split("(", 1)[0] == name]


@dataclass
class IRProgram:
    contracts: List[IRContract] = field(default_factory=list)

    def contract(self, name: str) -> IRContract:
        for contract in self.contracts:
            if contract.name == name:
                return contract
        raise KeyError(f"No contract named '{name}'")


# --- text form -----------------------------------------------------------------

def _function_header(function: IRFunction) -> str:
    parts = [f"function {function.name}", function.kind, function.returns.compact() if function.returns else "-"]
    if function.public:
        parts.append("public")
    if function.payable_param:
        parts.append(f"payable={function.payable_param}")
    if function.states:
        parts.append("states=" + ",".join(str(s) for s in function.states))
    return " ".join(parts)


def dump_ir(program: IRProgram) -> str:
    """One instruction per line; layout tables are header pragmas"""
    lines = ["; Flint IR"]
    for contract in program.contracts:
        lines.append(f"contract {contract.name}")
        for name, slot, type_ref in contract.storage_layout:
            lines.append(f".storage {name} {slot} {type_ref.compact()}")
        for name, ordinal in contract.typestates.items():
            lines.append(f".typestate {name} {ordinal}")
        lines.append(f".completed {contract.completed_state}")
        for struct, fields in contract.struct_layouts.items():
            lines.append(f".struct {struct} " + " ".join(f"{n}:{o}:{t.compact()}" for n, o, t in fields))
        for event, fields in contract.events.items():
            lines.append(f".event {event} " + " ".join(f"{n}:{t.compact()}" for n, t in fields))
        for entry in contract.dispatch.values():
            lines.append(f".dispatch {entry.selector} {entry.function} {entry.signature} {entry.returns or '-'}")
        if contract.initialiser:
            lines.append(f".initialiser {contract.initialiser}")
        if contract.fallback:
            lines.append(f".fallback {contract.fallback}")
        for function in contract.functions:
            lines.append(_function_header(function))
            for reg, type_ref in function.params:
                lines.append(f".param {reg} {type_ref.compact()}")
            for check in function.checks:
                lines.append(f".check {check.text()}")
            for instr in function.body:
                lines.append(("" if instr.op == "label" else "  ") + instr.text())
            lines.append("end")
        lines.append("endcontract")
    return "\n".join(lines) + "\n"


def parse_instruction(text: str) -> IRInstr:
    text = text.strip()
    if text.endswith(":") and " " not in text:
        return IRInstr("label", None, [text[:-1]])
    dest = None
    if " = " in text:
        dest, text = text.split(" = ", 1)
    op, _, rest = text.partition(" ")
    args = [a.strip() for a in rest.split(",")] if rest.strip() else []
    return IRInstr(op, dest, args)


def load_ir(text: str) -> IRProgram:
    """Inverse of dump_ir"""
    program = IRProgram()
    contract: Optional[IRContract] = None
    function: Optional[IRFunction] = None
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip()
        if not line or line.startswith(";"):
            continue
        try:
            if function is not None:
                if line == "end":
                    contract.functions.append(function)
                    function = None
                elif line.startswith(".param "):
                    _, reg, type_text = line.split(" ", 2)
                    function.params.append((reg, parse_type_text(type_text)))
                elif line.startswith(".check "):
                    function.checks.append(parse_instruction(line[len(".check "):]))
                else:
                    function.body.append(parse_instruction(line))
                continue
            words = line.split(" ")
            keyword = words[0]
            if keyword == "contract":
                contract = IRContract(words[1])
            elif keyword == "endcontract":
                program.contracts.append(contract)
                contract = None
            elif keyword == ".storage":
                contract.storage_layout.append((words[1], int(words[2]), parse_type_text(words[3])))
            elif keyword == ".typestate":
                contract.typestates[words[1]] = int(words[2])
            elif keyword == ".completed":
                contract.completed_state = int(words[1])
            elif keyword == ".struct":
                # type text may itself contain ':' (dictionaries), so split at most twice
                fields = [w.split(":", 2) for w in words[2:]]
                contract.struct_layouts[words[1]] = [(n, int(o), parse_type_text(t)) for n, o, t in fields]
            elif keyword == ".event":
                fields = [w.split(":", 1) for w in words[2:]]
                contract.events[words[1]] = [(n, parse_type_text(t)) for n, t in fields]
            elif keyword == ".dispatch":
                selector, name, signature, returns = words[1:5]
                contract.dispatch[selector] = DispatchEntry(
                    selector, name, signature, signature_param_types(signature), "" if returns == "-" else returns,
                )
            elif keyword == ".initialiser":
                contract.initialiser = words[1]
            elif keyword == ".fallback":
                contract.fallback = words[1]
            elif keyword == "function":
                function = IRFunction(words[1], words[2], returns=None if words[3] == "-" else parse_type_text(words[3]))
                for flag in words[4:]:
                    if flag == "public":
                        function.public = True
                    elif flag.startswith("payable="):
                        function.payable_param = flag.split("=", 1)[1]
                    elif flag.startswith("states="):
                        function.states = [int(s) for s in flag.split("=", 1)[1].split(",")]
            else:
                raise ValueError(f"unknown directive '{keyword}'")
        except (ValueError, IndexError, AttributeError) as exc:
            raise InternalCompilerError(f"IR line {number}: {exc}") from exc
    if contract is not None or function is not None:
        raise InternalCompilerError("IR text ends inside a contract or function")
    return program


def signature_param_types(signature: str) -> List[str]:
    inner = signature[signature.index("(") + 1:-1]
    return [t for t in inner.split(",") if t]
