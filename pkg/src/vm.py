"""
Flint virtual machine
Executes lowered IR against one contract instance: register frames, storage and
memory access, checked arithmetic, Wei movement, events, entry checks and gas
"""

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, List, Optional, Tuple

from abi import keccak_word, word_to_string
from errors import InternalCompilerError, Revert, RevertReason
from flint_types import TypeKind, TypeRef, parse_type_text
from ir import COMPARISONS, CHECKED_ARITHMETIC, IRContract, IRFunction, IRInstr, WRAPPING_ARITHMETIC
from uint256 import MODULUS, checked_arith, wrapping_arith

if TYPE_CHECKING:
    from chain import ChainState, ContractInstance

logger = logging.getLogger(__name__)

DEFAULT_GAS_COSTS = {
    "instruction": 1,
    "sload": 20,
    "sstore": 100,
    "protectionCheck": 50,
    "typestateCheck": 50,
    "eventWord": 9,
}

WORD_BYTES = 32
FREE_POINTER_ADDRESS = 0x40
FIRST_FREE_ADDRESS = 0x60
MAX_CALL_DEPTH = 256
ADDRESS_MASK = (1 << 160) - 1


class GasSchedule:
    """Per-instruction costs; any opcode may carry an extra cost on top of 'instruction'"""

    def __init__(self, costs: Optional[Dict[str, int]] = None):
        self.costs = dict(DEFAULT_GAS_COSTS)
        for name, cost in (costs or {}).items():
            if not isinstance(cost, int) or isinstance(cost, bool) or cost < 0:
                raise ValueError(f"Gas cost for '{name}' must be a non-negative integer, got {cost!r}")
            self.costs[name] = cost

    @classmethod
    def from_mapping(cls, data) -> "GasSchedule":
        if not isinstance(data, dict):
            raise ValueError("Gas table must be a JSON object mapping instruction names to costs")
        return cls(data)

    def instruction_cost(self, op: str) -> int:
        return self.costs["instruction"] + self.costs.get(op, 0)

    @property
    def sload(self) -> int:
        return self.costs["sload"]

    @property
    def sstore(self) -> int:
        return self.costs["sstore"]

    @property
    def event_word(self) -> int:
        return self.costs["eventWord"]


class GasMeter:
    def __init__(self, limit: Optional[int] = None):
        self.limit = limit
        self.used = 0

    def charge(self, amount: int):
        self.used += amount
        if self.limit is not None and self.used > self.limit:
            raise Revert(RevertReason.OUT_OF_GAS, f"used {self.used} of {self.limit}")


class Memory:
    """Sparse per-transaction memory; the word at 0x40 is the free pointer"""

    def __init__(self):
        self.words: Dict[int, int] = {FREE_POINTER_ADDRESS: FIRST_FREE_ADDRESS}

    def load(self, address: int) -> int:
        return self.words.get(address, 0)

    def store(self, address: int, word: int):
        self.words[address] = word

    def allocate(self, size: int) -> int:
        """Bump allocation rounded up to whole words, at least one word"""
        pointer = self.load(FREE_POINTER_ADDRESS)
        rounded = max(WORD_BYTES, -(-size // WORD_BYTES) * WORD_BYTES)
        self.store(FREE_POINTER_ADDRESS, pointer + rounded)
        return pointer


def storage_address(head: int, kind: str, value: int, is_memory: bool = False) -> int:
    """
    Address of a collection element relative to its head word.

    arrayElement: word `value` of the elements at keccak(head)
    dictEntry:    the entry for key `value` at keccak(key || head)
    dictKey:      slot `value` of the key index at keccak(head)
    """
    if kind == "dictEntry":
        return _align(keccak_word(value, head), is_memory)
    if kind in ("arrayElement", "dictKey"):
        return offset_address(_align(keccak_word(head), is_memory), value, is_memory)
    raise ValueError(f"Unknown storage address kind '{kind}'")


def _align(address: int, is_memory: bool) -> int:
    return address & ~(WORD_BYTES - 1) if is_memory else address


def offset_address(base: int, words: int, is_memory: bool) -> int:
    return (base + words * (WORD_BYTES if is_memory else 1)) % MODULUS


@dataclass
class EmittedEvent:
    address: int
    name: str
    fields: List[Tuple[str, TypeRef, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "args": {name: present_word(type_ref, word) for name, type_ref, word in self.fields},
        }


def present_word(type_ref: TypeRef, word: int):
    """JSON-friendly value of a word of a basic type"""
    if type_ref.kind == TypeKind.BOOL:
        return word != 0
    if type_ref.kind == TypeKind.ADDRESS:
        return format_address(word)
    if type_ref.kind == TypeKind.STRING:
        return word_to_string(word)
    return str(word)


def format_address(word: int) -> str:
    return "0x" + format(word & ADDRESS_MASK, "040x")


class Interpreter:
    """Executes the functions of one contract for the duration of one transaction"""

    def __init__(self, chain: "ChainState", instance: "ContractInstance", caller: int,
                 schedule: Optional[GasSchedule] = None, gas_limit: Optional[int] = None):
        self.chain = chain
        self.instance = instance
        self.code: IRContract = instance.code
        self.caller = caller
        self.schedule = schedule or GasSchedule()
        self.meter = GasMeter(gas_limit)
        self.memory = Memory()
        self.events: List[EmittedEvent] = []
        self.protection_checks = 0
        self.typestate_checks = 0
        self.tracked_assets: List[int] = []
        self.functions: Dict[str, IRFunction] = {f.name: f for f in self.code.functions}
        self._labels: Dict[str, Dict[str, int]] = {}
        self._types: Dict[str, TypeRef] = {}

    # --- entry points ----------------------------------------------------------------

    def function(self, name: str) -> IRFunction:
        function = self.functions.get(name)
        if function is None:
            raise InternalCompilerError(f"Contract '{self.code.name}' has no IR function '{name}'")
        return function

    def run_entry(self, function: IRFunction, args: List[int], checked: bool = True) -> Optional[int]:
        """External entry: typestate then protection checks, then the body"""
        if checked:
            self.run_checks(function, depth=0)
        return self.invoke(function, args, depth=0)

    def run_checks(self, function: IRFunction, depth: int):
        for check in function.checks:
            self.meter.charge(self.schedule.instruction_cost(check.op))
            if check.op == "typestateCheck":
                self.typestate_check(check)
            elif check.op == "protectionCheck":
                self.protection_check(check, depth)
            else:
                raise InternalCompilerError(f"Unknown entry check '{check.op}'")

    def finish(self):
        """End-of-transaction bookkeeping"""
        for address in self.tracked_assets:
            amount = self.memory.load(address)
            if amount:
                logger.warning("transaction on %s ended holding %d unconsumed Wei in memory at 0x%x",
                               format_address(self.instance.address), amount, address)

    # --- checks ------------------------------------------------------------------------

    def typestate_check(self, check: IRInstr):
        self.typestate_checks += 1
        allowed = {int(a) for a in check.args}
        if self.instance.typestate not in allowed:
            raise Revert(RevertReason.TYPESTATE,
                         f"state {self.state_name(self.instance.typestate)} is not one of "
                         f"{sorted(self.state_name(s) for s in allowed)}")

    def state_name(self, ordinal: int) -> str:
        for name, value in self.code.typestates.items():
            if value == ordinal:
                return name
        return str(ordinal)

    def protection_check(self, check: IRInstr, depth: int):
        """Passes when any one of the protections admits the caller"""
        self.protection_checks += 1
        for operand in check.args:
            if self.admits(operand, depth):
                return
        raise Revert(RevertReason.PROTECTION, f"caller {format_address(self.caller)} is not admitted")

    def admits(self, operand: str, depth: int) -> bool:
        kind, _, rest = operand.partition(":")
        if kind == "address":
            return self.read(int(rest), False) == self.caller
        if kind == "list":
            head = int(rest)
            length = self.read(head, False)
            return any(self.read(storage_address(head, "arrayElement", i), False) == self.caller
                       for i in range(length))
        if kind == "fixed":
            slot, size = (int(part) for part in rest.split(":"))
            return any(self.read(slot + i, False) == self.caller for i in range(size))
        if kind == "predicate":
            try:
                return bool(self.invoke(self.function(rest), [self.caller], depth + 1))
            except Revert as exc:
                if exc.reason == RevertReason.OUT_OF_GAS:
                    raise
                logger.debug("predicate %s reverted during protection check: %s", rest, exc.reason.value)
                return False
        raise InternalCompilerError(f"Unknown protection operand '{operand}'")

    # --- storage and memory --------------------------------------------------------------

    def read(self, address: int, is_memory: bool) -> int:
        if is_memory:
            return self.memory.load(address)
        self.meter.charge(self.schedule.sload)
        return self.instance.storage.get(address, 0)

    def write(self, address: int, word: int, is_memory: bool):
        if is_memory:
            self.memory.store(address, word)
            return
        self.meter.charge(self.schedule.sstore)
        if word:
            self.instance.storage[address] = word
        else:
            self.instance.storage.pop(address, None)

    def type_of(self, text: str) -> TypeRef:
        if text not in self._types:
            self._types[text] = parse_type_text(text)
        return self._types[text]

    def word_count(self, type_ref: TypeRef) -> int:
        if type_ref.kind == TypeKind.FIXED_ARRAY:
            return type_ref.size * self.word_count(type_ref.element)
        if type_ref.kind == TypeKind.NAMED and type_ref.name in self.code.struct_layouts:
            return sum(self.word_count(t) for _, _, t in self.code.struct_layouts[type_ref.name]) or 1
        return 1

    def copy_value(self, target: int, target_mem: bool, source: int, source_mem: bool, type_ref: TypeRef):
        """Deep copy between storage and memory locations of the same type"""
        if target == source and target_mem == source_mem:
            return
        if type_ref.kind == TypeKind.NAMED and type_ref.name in self.code.struct_layouts:
            for _, offset, field_type in self.code.struct_layouts[type_ref.name]:
                self.copy_value(offset_address(target, offset, target_mem), target_mem,
                                offset_address(source, offset, source_mem), source_mem, field_type)
        elif type_ref.kind == TypeKind.FIXED_ARRAY:
            words = self.word_count(type_ref.element)
            for i in range(type_ref.size):
                self.copy_value(offset_address(target, i * words, target_mem), target_mem,
                                offset_address(source, i * words, source_mem), source_mem, type_ref.element)
        elif type_ref.kind == TypeKind.ARRAY:
            self.clear_value(target, target_mem, type_ref)
            length = self.read(source, source_mem)
            words = self.word_count(type_ref.element)
            self.write(target, length, target_mem)
            for i in range(length):
                self.copy_value(storage_address(target, "arrayElement", i * words, target_mem), target_mem,
                                storage_address(source, "arrayElement", i * words, source_mem), source_mem,
                                type_ref.element)
        elif type_ref.kind == TypeKind.DICTIONARY:
            self.clear_value(target, target_mem, type_ref)
            count = self.read(source, source_mem)
            for i in range(count):
                key = self.read(storage_address(source, "dictKey", i, source_mem), source_mem)
                self.register_key(target, target_mem, key)
                self.copy_value(storage_address(target, "dictEntry", key, target_mem), target_mem,
                                storage_address(source, "dictEntry", key, source_mem), source_mem,
                                type_ref.element)
        else:
            self.write(target, self.read(source, source_mem), target_mem)

    def register_key(self, head: int, is_memory: bool, key: int):
        keys = storage_address(head, "dictKey", 0, is_memory)
        marker = _align(keccak_word(key, keys), is_memory)
        if self.read(marker, is_memory):
            return
        count = self.read(head, is_memory)
        self.write(storage_address(head, "dictKey", count, is_memory), key, is_memory)
        self.write(head, count + 1, is_memory)
        self.write(marker, count + 1, is_memory)

    def clear_value(self, address: int, is_memory: bool, type_ref: TypeRef):
        if type_ref.kind == TypeKind.NAMED and type_ref.name in self.code.struct_layouts:
            for _, offset, field_type in self.code.struct_layouts[type_ref.name]:
                self.clear_value(offset_address(address, offset, is_memory), is_memory, field_type)
        elif type_ref.kind == TypeKind.FIXED_ARRAY:
            words = self.word_count(type_ref.element)
            for i in range(type_ref.size):
                self.clear_value(offset_address(address, i * words, is_memory), is_memory, type_ref.element)
        elif type_ref.kind == TypeKind.ARRAY:
            length = self.read(address, is_memory)
            words = self.word_count(type_ref.element)
            for i in range(length):
                self.clear_value(storage_address(address, "arrayElement", i * words, is_memory), is_memory,
                                 type_ref.element)
            self.write(address, 0, is_memory)
        elif type_ref.kind == TypeKind.DICTIONARY:
            count = self.read(address, is_memory)
            keys = storage_address(address, "dictKey", 0, is_memory)
            for i in range(count):
                key_slot = storage_address(address, "dictKey", i, is_memory)
                key = self.read(key_slot, is_memory)
                self.clear_value(storage_address(address, "dictEntry", key, is_memory), is_memory, type_ref.element)
                self.write(_align(keccak_word(key, keys), is_memory), 0, is_memory)
                self.write(key_slot, 0, is_memory)
            self.write(address, 0, is_memory)
        else:
            self.write(address, 0, is_memory)

    # --- execution -----------------------------------------------------------------------

    def labels(self, function: IRFunction) -> Dict[str, int]:
        if function.name not in self._labels:
            self._labels[function.name] = function.labels()
        return self._labels[function.name]

    def invoke(self, function: IRFunction, args: List[int], depth: int) -> Optional[int]:
        if depth > MAX_CALL_DEPTH:
            raise Revert(RevertReason.OUT_OF_GAS, "call depth exceeded")
        if function.states and self.instance.typestate not in function.states:
            # entry assertion, independent of the compile-time typestate rules
            raise Revert(RevertReason.TYPESTATE,
                         f"{function.name} entered in state {self.state_name(self.instance.typestate)}")
        if len(args) != len(function.params):
            raise InternalCompilerError(
                f"{function.name} expects {len(function.params)} words, got {len(args)}")
        registers: Dict[str, int] = {reg: word for (reg, _), word in zip(function.params, args)}
        labels = self.labels(function)
        body = function.body
        pc = 0
        while pc < len(body):
            instr = body[pc]
            pc += 1
            if instr.op == "label":
                continue
            self.meter.charge(self.schedule.instruction_cost(instr.op))
            target = self.execute(instr, registers, depth)
            if target is None:
                continue
            kind, value = target
            if kind == "return":
                return value
            pc = labels[value]
        return None

    def operand(self, registers: Dict[str, int], text: str) -> int:
        if text.startswith("%"):
            try:
                return registers[text]
            except KeyError:
                raise InternalCompilerError(f"Read of unset register {text}") from None
        return int(text)

    def execute(self, instr: IRInstr, registers: Dict[str, int], depth: int) -> Optional[Tuple[str, object]]:
        """Run one instruction; returns ('jump', label) or ('return', value) for control transfers"""
        op = instr.op
        args = instr.args

        def value(index: int) -> int:
            return self.operand(registers, args[index])

        if op == "mov":
            registers[instr.dest] = value(0)
        elif op in CHECKED_ARITHMETIC:
            registers[instr.dest] = checked_arith(op, value(0), value(1))
        elif op in WRAPPING_ARITHMETIC:
            registers[instr.dest] = wrapping_arith(op, value(0), value(1))
        elif op in COMPARISONS:
            a, b = value(0), value(1)
            result = {"eq": a == b, "ne": a != b, "lt": a < b, "le": a <= b, "gt": a > b, "ge": a >= b}[op]
            registers[instr.dest] = 1 if result else 0
        elif op == "load":
            registers[instr.dest] = self.read(value(0), bool(value(1)))
        elif op == "store":
            self.write(value(0), value(1), bool(value(2)))
        elif op == "allocateMemory":
            registers[instr.dest] = self.memory.allocate(value(0))
        elif op == "keccakSlot":
            registers[instr.dest] = _align(keccak_word(*(value(i) for i in range(1, len(args)))), bool(value(0)))
        elif op == "offset":
            registers[instr.dest] = offset_address(value(0), value(1), bool(value(2)))
        elif op in ("call", "callChecked"):
            callee = self.function(args[0])
            if op == "callChecked":
                self.run_checks(callee, depth)
            result = self.invoke(callee, [value(i) for i in range(1, len(args))], depth + 1)
            if instr.dest:
                registers[instr.dest] = result or 0
        elif op == "caller":
            registers[instr.dest] = self.caller
        elif op == "copy":
            self.copy_value(value(0), bool(value(1)), value(2), bool(value(3)), self.type_of(args[4]))
        elif op == "clear":
            self.clear_value(value(0), bool(value(1)), self.type_of(args[2]))
        elif op == "jump":
            return "jump", args[0]
        elif op == "branch":
            return "jump", args[1] if value(0) else args[2]
        elif op == "return":
            return "return", value(0) if args else None
        elif op == "revert":
            raise Revert(RevertReason(args[0]))
        elif op == "emitEvent":
            self.emit(args[0], [value(i) for i in range(1, len(args))])
        elif op == "becomeState":
            self.instance.typestate = value(0)
        elif op == "sendWei":
            self.chain.send_wei(self.instance, value(0), value(1))
        elif op == "mint":
            self.chain.mint(self.instance, value(0))
        elif op == "trackAsset":
            if value(1):
                self.tracked_assets.append(value(0))
        elif op in ("protectionCheck", "typestateCheck"):
            raise InternalCompilerError(f"'{op}' may only appear among entry checks")
        else:
            raise InternalCompilerError(f"Unknown IR instruction '{op}'")
        return None

    def emit(self, name: str, words: List[int]):
        fields = self.code.events.get(name)
        if fields is None or len(fields) != len(words):
            raise InternalCompilerError(f"Event '{name}' does not match its declaration")
        self.meter.charge(self.schedule.event_word * len(words))
        self.events.append(EmittedEvent(
            self.instance.address, name, [(n, t, w) for (n, t), w in zip(fields, words)],
        ))
