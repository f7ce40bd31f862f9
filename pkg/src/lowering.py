"""
Flint lowering
Mangles names, lays out storage, inserts the runtime caller protection and
typestate checks and emits register IR for every reachable function
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

from abi import compute_selector, string_to_word
from environment import ContractInfo, Environment, FunctionInfo, ProtectionKind, TypeInfo
from errors import InternalCompilerError, SelectorCollisionError
from flint_ast import (
    AddressLiteral, ArrayLiteral, AttemptExpression, BecomeStatement, BinaryExpression, BoolLiteral,
    DictionaryLiteral, EmitStatement, ForStatement, FunctionCall, Identifier, IfStatement,
    InOutExpression, IntLiteral, MemberAccess, RangeExpression, ReturnStatement, SelfExpression,
    SourceModule, StringLiteral, SubscriptExpression, VariableDeclaration,
)
from flint_types import ADDRESS, BOOL, INT, TypeKind, TypeRef, VOID, abi_type_name, named
from ir import DispatchEntry, IRContract, IRFunction, IRInstr, IRProgram, parse_instruction
from stdlib import CURRENCY_TYPE
from type_checker import CheckContext, ExpressionTyper, LocalInfo, is_lvalue, unwrap

logger = logging.getLogger(__name__)

WORD_BYTES = 32

ARRAY_ELEMENT = "flint$arrayElement"
FIXED_ELEMENT = "flint$fixedElement"
DICT_ENTRY = "flint$dictEntry"
DICT_KEY_AT = "flint$dictKeyAt"

BINARY_OPCODES = {
    "+": "add", "-": "sub", "*": "mul", "/": "div", "**": "exp",
    "&+": "wadd", "&-": "wsub", "&*": "wmul",
    "==": "eq", "!=": "ne", "<": "lt", "<=": "le", ">": "gt", ">=": "ge",
}
COMPOUND_OPCODES = {"+=": "add", "-=": "sub", "*=": "mul", "/=": "div"}


def mangle(type_name: str, function_name: str,
           parameter_types: Sequence[Union[TypeRef, Tuple[TypeRef, bool]]]) -> str:
    """
    `Type$function$T1_T2`, with `&` marking inout parameters.

    >>> mangle("Bank", "transfer", [INT, ADDRESS])
    'Bank$transfer$Int_Address'
    """
    parts = []
    for entry in parameter_types:
        type_ref, inout = entry if isinstance(entry, tuple) else (entry, False)
        parts.append(type_ref.compact() + ("&" if inout else ""))
    return f"{type_name}${function_name}${'_'.join(parts)}"


def function_symbol(function: FunctionInfo) -> str:
    if function.runtime_name:
        return function.runtime_name
    if function.kind == "getter":
        return mangle(function.owner, function.name, [])
    return mangle(function.owner, function.name, [(p.type, p.is_inout) for p in function.parameters])


def struct_layout(env: Environment, name: str) -> List[Tuple[str, int, TypeRef]]:
    fields = []
    offset = 0
    for prop in env.structures[name].properties:
        fields.append((prop.name, offset, prop.type))
        offset += env.type_words(prop.type)
    return fields


def storage_layout(env: Environment, contract: ContractInfo) -> List[Tuple[str, int, TypeRef]]:
    """Declaration-order slots; structs and fixed arrays inline, collections one head slot"""
    layout = []
    slot = 0
    for prop in contract.properties:
        layout.append((prop.name, slot, prop.type))
        slot += env.type_words(prop.type)
    return layout


def abi_name(env: Environment, type_ref: TypeRef) -> str:
    if env.is_enum(type_ref):
        return "uint256"
    return abi_type_name(type_ref)


@dataclass
class Value:
    """A word, or a reference when mem (the isMem flag operand) is set"""
    word: str
    mem: Optional[str] = None


@dataclass
class Location:
    """Register location when mem is None, else a storage or memory address"""
    addr: str
    mem: Optional[str] = None


@dataclass
class Binding:
    reg: str
    type: TypeRef
    is_ref: bool


def _literal(operand: str) -> bool:
    return not operand.startswith("%")


class FunctionLowerer:
    """Lowers one function body to IR instructions"""

    def __init__(self, lowerer: "Lowerer", owner: TypeInfo, function: FunctionInfo):
        self.lowerer = lowerer
        self.env = lowerer.env
        self.owner = owner
        self.function = function
        self.typer = ExpressionTyper(self.env)
        self.ctx = CheckContext(self.env, owner, None)
        self.bindings: List[Dict[str, Binding]] = [{}]
        self.body: List[IRInstr] = []
        self.n_temporary = 0
        self.n_label = 0
        self.local_counts: Dict[str, int] = {}

    # --- emission helpers --------------------------------------------------------

    def add_instruction(self, op: str, *args, dest: Optional[str] = None) -> Optional[str]:
        self.body.append(IRInstr(op, dest, [str(a) for a in args]))
        return dest

    def new_temporary(self) -> str:
        register = f"%{self.n_temporary}"
        self.n_temporary += 1
        return register

    def new_label(self) -> str:
        label = f"L{self.n_label}"
        self.n_label += 1
        return label

    def emit_value(self, op: str, *args) -> str:
        return self.add_instruction(op, *args, dest=self.new_temporary())

    def fresh_local(self, name: str) -> str:
        count = self.local_counts.get(name, 0)
        self.local_counts[name] = count + 1
        return f"%{name}" if count == 0 else f"%{name}.{count}"

    def push(self):
        self.ctx.push()
        self.bindings.append({})

    def pop(self):
        self.ctx.pop()
        self.bindings.pop()

    def bind(self, name: str, type_ref: TypeRef, is_constant: bool, kind: str = "local",
             is_inout: bool = False) -> Binding:
        binding = Binding(self.fresh_local(name), type_ref, self.is_ref(type_ref))
        self.ctx.declare(LocalInfo(name, type_ref, is_constant, kind=kind, is_inout=is_inout))
        self.bindings[-1][name] = binding
        return binding

    def lookup(self, name: str) -> Optional[Binding]:
        for scope in reversed(self.bindings):
            if name in scope:
                return scope[name]
        return None

    def is_ref(self, type_ref: TypeRef) -> bool:
        return self.env.is_reference_type(type_ref)

    def type_of(self, expression) -> TypeRef:
        result = self.typer.type_of(expression, self.ctx)
        if result.is_error:
            raise InternalCompilerError(f"Cannot lower an expression that failed to type check at {expression.span}")
        return result

    def allocate(self, type_ref: TypeRef) -> str:
        return self.emit_value("allocateMemory", self.env.type_words(type_ref) * WORD_BYTES)

    @property
    def in_struct(self) -> bool:
        return not self.owner.is_contract

    # --- functions ---------------------------------------------------------------

    def lower(self) -> IRFunction:
        function = self.function
        self.ctx.function = function
        params: List[Tuple[str, TypeRef]] = []
        if self.in_struct:
            params += [("%self", named(self.owner.name)), ("%self$mem", BOOL)]
        payable_param = None
        for parameter in function.parameters:
            binding = self.bind(parameter.name, parameter.type, False, "parameter", parameter.is_inout)
            params.append((binding.reg, parameter.type))
            if binding.is_ref:
                params.append((binding.reg + "$mem", BOOL))
            if parameter.is_implicit and function.is_payable:
                payable_param = binding.reg

        behaviour = function.behaviour
        if behaviour is not None and behaviour.caller_binding:
            binding = self.bind(behaviour.caller_binding, ADDRESS, True, "caller")
            self.add_instruction("caller", dest=binding.reg)

        if function.is_init:
            self.store_defaults()
        if function.kind == "getter":
            location = self.property_location(function.getter_property)
            self.add_instruction("return", self.load(location))
        elif function.body is not None:
            self.lower_block(function.body, scoped=False)
        if not self.body or self.body[-1].op not in ("return", "revert"):
            self.add_instruction("return")

        lowered = IRFunction(
            name=function_symbol(function), kind=function.kind, params=params,
            returns=function.return_type if function.return_type != VOID else None,
            public=function.is_public, payable_param=payable_param, body=self.body,
        )
        if self.owner.is_contract and not function.is_init:
            lowered.states = self.lowerer.state_ordinals(self.owner, function)
            lowered.checks = self.lowerer.entry_checks(self.owner, function)
        return lowered

    def store_defaults(self):
        for prop in self.owner.properties:
            if prop.default is not None:
                self.assign_value(self.property_location(prop.name), prop.type, prop.default)

    # --- statements --------------------------------------------------------------

    def lower_block(self, statements: list, scoped: bool = True):
        if scoped:
            self.push()
        for statement in statements:
            self.lower_statement(statement)
        if scoped:
            self.pop()

    def lower_statement(self, statement):
        if isinstance(statement, VariableDeclaration):
            self.declare_local(statement)
        elif isinstance(statement, ReturnStatement):
            self.lower_return(statement)
        elif isinstance(statement, BecomeStatement):
            self.add_instruction("becomeState", self.lowerer.typestate_ordinals(self.owner)[statement.state.name])
        elif isinstance(statement, EmitStatement):
            values = [self.value(argument.expression).word for argument in statement.call.arguments]
            self.add_instruction("emitEvent", statement.call.name.name, *values)
        elif isinstance(statement, IfStatement):
            self.lower_if(statement)
        elif isinstance(statement, ForStatement):
            self.lower_for(statement)
        elif isinstance(statement, BinaryExpression) and statement.is_assignment:
            self.lower_assignment(statement)
        else:
            self.value(statement)

    def declare_local(self, declaration: VariableDeclaration):
        declared = declaration.type_annotation
        value = unwrap(declaration.value) if declaration.value is not None else None
        if self.is_ref(declared):
            if value is None or isinstance(value, (ArrayLiteral, DictionaryLiteral)):
                reference = Value(self.allocate(declared), "1")
            elif is_lvalue(value):
                reference = self.copy_to_memory(self.value(value), declared)
            else:
                reference = self.value(value)
            binding = self.bind(declaration.name.name, declared, declaration.is_constant)
            self.add_instruction("mov", reference.word, dest=binding.reg)
            self.add_instruction("mov", reference.mem, dest=binding.reg + "$mem")
        else:
            word = self.value(value).word if value is not None else "0"
            binding = self.bind(declaration.name.name, declared, declaration.is_constant)
            self.add_instruction("mov", word, dest=binding.reg)

    def lower_return(self, statement: ReturnStatement):
        if statement.value is None:
            self.add_instruction("return")
            return
        result = self.value(statement.value)
        if result.mem is not None:
            result = self.copy_to_memory(result, self.function.return_type)
        self.add_instruction("return", result.word)

    def lower_if(self, statement: IfStatement):
        condition = self.value(statement.condition).word
        then_label, else_label, end_label = self.new_label(), self.new_label(), self.new_label()
        self.add_instruction("branch", condition, then_label, else_label)
        self.add_instruction("label", then_label)
        self.lower_block(statement.body)
        self.add_instruction("jump", end_label)
        self.add_instruction("label", else_label)
        if statement.else_body is not None:
            self.lower_block(statement.else_body)
        self.add_instruction("label", end_label)

    def lower_for(self, statement: ForStatement):
        variable = statement.variable
        iterable = unwrap(statement.iterable)
        condition_label, body_label, exit_label = self.new_label(), self.new_label(), self.new_label()
        counter = self.new_temporary()

        if isinstance(iterable, RangeExpression):
            start = self.value(iterable.start).word
            end = self.add_instruction("mov", self.value(iterable.end).word, dest=self.new_temporary())
            self.add_instruction("mov", start, dest=counter)
            self.add_instruction("label", condition_label)
            test = self.emit_value("le" if iterable.closed else "lt", counter, end)
            self.add_instruction("branch", test, body_label, exit_label)
            self.add_instruction("label", body_label)
            self.push()
            binding = self.bind(variable.name.name, INT, True)
            self.add_instruction("mov", counter, dest=binding.reg)
            self.lower_block(statement.body)
            self.pop()
            increment_label = self.new_label()
            more = self.emit_value("lt", counter, end)
            self.add_instruction("branch", more, increment_label, exit_label)
            self.add_instruction("label", increment_label)
            self.add_instruction("add", counter, 1, dest=counter)
            self.add_instruction("jump", condition_label)
            self.add_instruction("label", exit_label)
            return

        collection = self.type_of(iterable)
        base = self.locate(iterable, for_write=False)
        element = collection.element
        words = self.env.type_words(element)
        if collection.kind == TypeKind.FIXED_ARRAY:
            length = str(collection.size)
        else:
            length = self.emit_value("load", base.addr, base.mem)
        self.add_instruction("mov", 0, dest=counter)
        self.add_instruction("label", condition_label)
        test = self.emit_value("lt", counter, length)
        self.add_instruction("branch", test, body_label, exit_label)
        self.add_instruction("label", body_label)
        if collection.kind == TypeKind.ARRAY:
            address = self.emit_value("call", ARRAY_ELEMENT, base.addr, base.mem, counter, words, 0)
        elif collection.kind == TypeKind.FIXED_ARRAY:
            address = self.emit_value("call", FIXED_ELEMENT, base.addr, base.mem, counter, words, collection.size)
        else:
            key = self.emit_value("call", DICT_KEY_AT, base.addr, base.mem, counter)
            address = self.emit_value("call", DICT_ENTRY, base.addr, base.mem, key, 0)
        self.push()
        binding = self.bind(variable.name.name, variable.type_annotation, True)
        if binding.is_ref:
            # loop variables refer to the elements themselves
            self.add_instruction("mov", address, dest=binding.reg)
            self.add_instruction("mov", base.mem, dest=binding.reg + "$mem")
        else:
            self.add_instruction("load", address, base.mem, dest=binding.reg)
        self.lower_block(statement.body)
        self.pop()
        self.add_instruction("add", counter, 1, dest=counter)
        self.add_instruction("jump", condition_label)
        self.add_instruction("label", exit_label)

    def lower_assignment(self, statement: BinaryExpression):
        target_type = self.type_of(statement.lhs)
        if statement.op == "=":
            if self.is_ref(target_type):
                source = unwrap(statement.rhs)
                if isinstance(source, (ArrayLiteral, DictionaryLiteral)):
                    target = self.locate(statement.lhs, for_write=True)
                    self.add_instruction("clear", target.addr, target.mem, target_type.compact())
                    return
                value = self.value(source)
                target = self.locate(statement.lhs, for_write=True)
                self.add_instruction("copy", target.addr, target.mem, value.word, value.mem, target_type.compact())
                return
            value = self.value(statement.rhs)
            self.store(self.locate(statement.lhs, for_write=True), value.word)
            return
        target = self.locate(statement.lhs, for_write=True)
        current = self.load(target)
        operand = self.value(statement.rhs).word
        self.store(target, self.emit_value(COMPOUND_OPCODES[statement.op], current, operand))

    def assign_value(self, target: Location, type_ref: TypeRef, expression):
        expression = unwrap(expression)
        if self.is_ref(type_ref):
            if isinstance(expression, (ArrayLiteral, DictionaryLiteral)):
                self.add_instruction("clear", target.addr, target.mem, type_ref.compact())
            else:
                value = self.value(expression)
                self.add_instruction("copy", target.addr, target.mem, value.word, value.mem, type_ref.compact())
        else:
            self.store(target, self.value(expression).word)

    # --- locations -----------------------------------------------------------------

    def store(self, location: Location, word: str):
        if location.mem is None:
            self.add_instruction("mov", word, dest=location.addr)
        else:
            self.add_instruction("store", location.addr, word, location.mem)

    def load(self, location: Location) -> str:
        if location.mem is None:
            return location.addr
        return self.emit_value("load", location.addr, location.mem)

    def offset_location(self, base: Location, words: int) -> Location:
        if words == 0:
            return base
        if _literal(base.addr) and _literal(base.mem):
            scale = WORD_BYTES if base.mem == "1" else 1
            return Location(str(int(base.addr) + words * scale), base.mem)
        return Location(self.emit_value("offset", base.addr, words, base.mem), base.mem)

    def property_location(self, name: str) -> Location:
        if self.owner.is_contract:
            return Location(str(self.lowerer.slot_of(self.owner, name)), "0")
        for field_name, offset, _ in self.lowerer.layout_of(self.owner.name):
            if field_name == name:
                return self.offset_location(Location("%self", "%self$mem"), offset)
        raise InternalCompilerError(f"'{self.owner.name}' has no property '{name}'")

    def locate(self, expression, for_write: bool) -> Location:
        expression = unwrap(expression)
        if isinstance(expression, InOutExpression):
            return self.locate(expression.expression, for_write)
        if isinstance(expression, Identifier):
            binding = self.lookup(expression.name)
            if binding is not None:
                return Location(binding.reg, binding.reg + "$mem") if binding.is_ref else Location(binding.reg)
            return self.property_location(expression.name)
        if isinstance(expression, SelfExpression) and self.in_struct:
            return Location("%self", "%self$mem")
        if isinstance(expression, MemberAccess) and self.typer.enum_case(expression, self.ctx) is None:
            if isinstance(unwrap(expression.base), SelfExpression):
                return self.property_location(expression.member.name)
            base_type = self.type_of(expression.base)
            base = self.locate(expression.base, for_write)
            for field_name, offset, _ in self.lowerer.layout_of(base_type.name):
                if field_name == expression.member.name:
                    return self.offset_location(base, offset)
            raise InternalCompilerError(f"'{base_type.display()}' has no member '{expression.member.name}'")
        if isinstance(expression, SubscriptExpression):
            base_type = self.type_of(expression.base)
            base = self.locate(expression.base, for_write)
            index = self.value(expression.index).word
            words = self.env.type_words(base_type.element)
            flag = 1 if for_write else 0
            if base_type.kind == TypeKind.ARRAY:
                address = self.emit_value("call", ARRAY_ELEMENT, base.addr, base.mem, index, words, flag)
            elif base_type.kind == TypeKind.FIXED_ARRAY:
                address = self.emit_value("call", FIXED_ELEMENT, base.addr, base.mem, index, words, base_type.size)
            else:
                address = self.emit_value("call", DICT_ENTRY, base.addr, base.mem, index, flag)
            return Location(address, base.mem)
        value = self.value(expression)
        if value.mem is None:
            raise InternalCompilerError(f"Expression at {expression.span} has no location")
        return Location(value.word, value.mem)

    # --- values --------------------------------------------------------------------

    def copy_to_memory(self, value: Value, type_ref: TypeRef) -> Value:
        target = self.allocate(type_ref)
        self.add_instruction("copy", target, "1", value.word, value.mem, type_ref.compact())
        return Value(target, "1")

    def value(self, expression) -> Value:
        expression = unwrap(expression)
        if isinstance(expression, IntLiteral):
            return Value(str(expression.value))
        if isinstance(expression, AddressLiteral):
            return Value(str(expression.value))
        if isinstance(expression, BoolLiteral):
            return Value("1" if expression.value else "0")
        if isinstance(expression, StringLiteral):
            return Value(str(string_to_word(expression.value)))
        if isinstance(expression, (ArrayLiteral, DictionaryLiteral)):
            return Value(self.emit_value("allocateMemory", WORD_BYTES), "1")
        if isinstance(expression, InOutExpression):
            location = self.locate(expression.expression, for_write=True)
            return Value(location.addr, location.mem)
        if isinstance(expression, BinaryExpression):
            return self.binary(expression)
        if isinstance(expression, FunctionCall):
            return self.call(expression, checked=False)
        if isinstance(expression, AttemptExpression):
            return self.call(expression.call, checked=True)
        if isinstance(expression, MemberAccess):
            case = self.typer.enum_case(expression, self.ctx)
            if case is not None:
                return Value(str(case[1]))
            if expression.member.name == "size":
                base_type = self.type_of(expression.base)
                if base_type.kind == TypeKind.FIXED_ARRAY:
                    return Value(str(base_type.size))
                if base_type.kind in (TypeKind.ARRAY, TypeKind.DICTIONARY):
                    base = self.locate(expression.base, for_write=False)
                    return Value(self.emit_value("load", base.addr, base.mem))
        if isinstance(expression, (Identifier, SelfExpression, MemberAccess, SubscriptExpression)):
            type_ref = self.type_of(expression)
            location = self.locate(expression, for_write=False)
            if self.is_ref(type_ref):
                return Value(location.addr, location.mem)
            return Value(self.load(location))
        raise InternalCompilerError(f"Cannot lower expression {type(expression).__name__}")

    def binary(self, expression: BinaryExpression) -> Value:
        if expression.is_assignment:
            self.lower_assignment(expression)
            return Value("0")
        if expression.op in ("&&", "||"):
            result = self.new_temporary()
            rhs_label, end_label = self.new_label(), self.new_label()
            self.add_instruction("mov", self.value(expression.lhs).word, dest=result)
            if expression.op == "&&":
                self.add_instruction("branch", result, rhs_label, end_label)
            else:
                self.add_instruction("branch", result, end_label, rhs_label)
            self.add_instruction("label", rhs_label)
            self.add_instruction("mov", self.value(expression.rhs).word, dest=result)
            self.add_instruction("label", end_label)
            return Value(result)
        lhs = self.value(expression.lhs).word
        rhs = self.value(expression.rhs).word
        return Value(self.emit_value(BINARY_OPCODES[expression.op], lhs, rhs))

    # --- calls ---------------------------------------------------------------------

    def call(self, call: FunctionCall, checked: bool) -> Value:
        resolution = self.typer.resolve_call(call, self.ctx)
        function = resolution.function
        if function is None:
            raise InternalCompilerError(f"Unresolved call to '{call.name.name}' at {call.span}")
        arguments: List[str] = []
        result_reference = None
        if resolution.category == "init":
            result_reference = self.allocate(named(function.owner))
            arguments += [result_reference, "1"]
        elif resolution.category == "self" and self.in_struct:
            arguments += ["%self", "%self$mem"]
        elif resolution.category == "method":
            receiver = self.locate(call.receiver, for_write=function.is_mutating)
            arguments += [receiver.addr, receiver.mem]
        arguments += self.arguments(function, call)

        op = "callChecked" if checked and resolution.category == "self" and not self.in_struct else "call"
        symbol = function_symbol(function)
        if result_reference is not None:
            self.add_instruction(op, symbol, *arguments)
            if self.env.is_currency(named(function.owner)):
                self.add_instruction("trackAsset", result_reference, "1")
            return Value(result_reference, "1")
        if function.return_type == VOID:
            self.add_instruction(op, symbol, *arguments)
            return Value("0")
        result = self.add_instruction(op, symbol, *arguments, dest=self.new_temporary())
        if self.is_ref(function.return_type):
            return Value(result, "1")
        return Value(result)

    def arguments(self, function: FunctionInfo, call: FunctionCall) -> List[str]:
        words: List[str] = []
        supplied = [argument.expression for argument in call.arguments]
        index = 0
        for parameter in function.parameters:
            if parameter.is_implicit:
                if self.is_ref(parameter.type):
                    # internal calls to payable functions attach no value
                    words += [self.allocate(parameter.type), "1"]
                else:
                    words.append("0")
                continue
            if index < len(supplied):
                expression = supplied[index]
                index += 1
            else:
                expression = parameter.default
            if parameter.is_inout:
                location = self.locate(expression, for_write=True)
                words += [location.addr, location.mem]
            elif self.is_ref(parameter.type):
                inner = unwrap(expression)
                value = self.value(inner)
                if is_lvalue(inner):
                    value = self.copy_to_memory(value, parameter.type)
                words += [value.word, value.mem]
            else:
                words.append(self.value(expression).word)
        return words


class Lowerer:
    def __init__(self, module: SourceModule, env: Environment):
        self.module = module
        self.env = env
        self.layouts: Dict[str, List[Tuple[str, int, TypeRef]]] = {}

    def layout_of(self, struct_name: str) -> List[Tuple[str, int, TypeRef]]:
        if struct_name not in self.layouts:
            self.layouts[struct_name] = struct_layout(self.env, struct_name)
        return self.layouts[struct_name]

    def slot_of(self, contract: ContractInfo, name: str) -> int:
        for prop, slot, _ in storage_layout(self.env, contract):
            if prop == name:
                return slot
        raise InternalCompilerError(f"'{contract.name}' has no property '{name}'")

    @staticmethod
    def typestate_ordinals(contract: ContractInfo) -> Dict[str, int]:
        """Declared states from 1; 0 is the state before initialisation"""
        return {name: index + 1 for index, name in enumerate(contract.typestates)}

    def state_ordinals(self, contract: ContractInfo, function: FunctionInfo) -> List[int]:
        ordinals = self.typestate_ordinals(contract)
        return sorted(ordinals[state] for state in function.required_states)

    def entry_checks(self, contract: ContractInfo, function: FunctionInfo) -> List[IRInstr]:
        """typestateCheck then protectionCheck, run on external and try entries"""
        checks = []
        states = self.state_ordinals(contract, function)
        if states:
            checks.append(IRInstr("typestateCheck", None, [str(s) for s in states]))
        behaviour = function.behaviour
        if behaviour is None or behaviour.admits_any:
            return checks
        operands = []
        for protection in behaviour.protections:
            if protection.kind == ProtectionKind.ADDRESS_PROPERTY:
                operands.append(f"address:{self.slot_of(contract, protection.name)}")
            elif protection.kind == ProtectionKind.ADDRESS_LIST_PROPERTY:
                prop = contract.property_named(protection.name)
                slot = self.slot_of(contract, protection.name)
                if prop.type.kind == TypeKind.FIXED_ARRAY:
                    operands.append(f"fixed:{slot}:{prop.type.size}")
                else:
                    operands.append(f"list:{slot}")
            elif protection.kind == ProtectionKind.PREDICATE:
                predicate = [
                    f for f in contract.functions_named(protection.name)
                    if len(f.external_parameters) == 1 and f.return_type == BOOL
                ][0]
                operands.append(f"predicate:{function_symbol(predicate)}")
        if len(operands) != len(behaviour.protection_names):
            raise InternalCompilerError(f"Unresolved caller protection on '{function.name}' in '{contract.name}'")
        checks.append(IRInstr("protectionCheck", None, operands))
        return checks

    # --- whole program -------------------------------------------------------------

    def lower_function(self, owner: TypeInfo, function: FunctionInfo) -> IRFunction:
        return FunctionLowerer(self, owner, function).lower()

    def struct_functions(self) -> List[IRFunction]:
        functions = []
        for struct in self.env.structures.values():
            for function in self.env.initialisers_of(struct.name) + struct.functions:
                if function.body is None and function.decl is not None:
                    continue
                functions.append(self.lower_function(struct, function))
        return functions

    def dispatch_table(self, contract: ContractInfo) -> Dict[str, DispatchEntry]:
        table: Dict[str, DispatchEntry] = {}
        for function in contract.functions:
            if not function.is_public or function.kind not in ("func", "getter"):
                continue
            abi_types = [abi_name(self.env, p.type) for p in function.external_parameters]
            signature = f"{function.name}({','.join(abi_types)})"
            selector = "0x" + compute_selector(signature).hex()
            if selector in table:
                raise SelectorCollisionError(contract.name, table[selector].signature, signature, selector)
            returns = abi_name(self.env, function.return_type) if function.return_type != VOID else ""
            table[selector] = DispatchEntry(selector, function_symbol(function), signature, abi_types, returns)
        return table

    def lower_contract(self, contract: ContractInfo, shared: List[IRFunction]) -> IRContract:
        own = [self.lower_function(contract, f) for f in contract.all_functions() if f.kind == "getter" or f.body is not None]
        ir_contract = IRContract(
            name=contract.name,
            storage_layout=storage_layout(self.env, contract),
            typestates=self.typestate_ordinals(contract),
            completed_state=len(contract.typestates) + 1,
            struct_layouts={name: self.layout_of(name) for name in self.env.structures},
            events={name: list(event.fields) for name, event in contract.events.items()},
            dispatch=self.dispatch_table(contract),
        )
        initialiser = contract.public_initialiser
        if initialiser is None:
            raise InternalCompilerError(f"Contract '{contract.name}' has no public initialiser")
        ir_contract.initialiser = function_symbol(initialiser)
        if contract.fallbacks:
            ir_contract.fallback = function_symbol(contract.fallbacks[0])
        ordered = own + shared + runtime_helpers(self.env)
        ir_contract.functions = prune(ordered, ir_contract)
        return ir_contract

    def lower(self) -> IRProgram:
        shared = self.struct_functions()
        program = IRProgram([self.lower_contract(c, shared) for c in self.env.contracts.values()])
        logger.debug("lowered %d contracts", len(program.contracts))
        return program


def prune(functions: List[IRFunction], contract: IRContract) -> List[IRFunction]:
    """Keep functions reachable from dispatch, the initialiser, the fallback and their callees"""
    by_name = {f.name: f for f in functions}
    pending = [e.function for e in contract.dispatch.values()]
    pending += [name for name in (contract.initialiser, contract.fallback) if name]
    reachable: Set[str] = set()
    while pending:
        name = pending.pop()
        if name in reachable:
            continue
        if name not in by_name:
            raise InternalCompilerError(f"Call to unknown IR function '{name}'")
        reachable.add(name)
        pending.extend(by_name[name].callees())
    return [f for f in functions if f.name in reachable]


# --- runtime helpers -------------------------------------------------------------

def _instructions(lines: List[str]) -> List[IRInstr]:
    return [parse_instruction(line) for line in lines]


def runtime_helpers(env: Environment) -> List[IRFunction]:
    """flint$ functions, emitted after the structure functions"""
    raw_value_offset = 0
    if CURRENCY_TYPE in env.structures:
        raw_value_offset = struct_layout(env, CURRENCY_TYPE)[0][1]
    send_body = []
    if raw_value_offset:
        send_body.append(f"%raw = offset %value, {raw_value_offset}, %value$mem")
    else:
        send_body.append("%raw = mov %value")
    send_body += [
        "%amount = load %raw, %value$mem",
        "store %raw, 0, %value$mem",
        "sendWei %address, %amount",
        "return",
    ]
    currency = named(CURRENCY_TYPE)
    return [
        IRFunction("flint$send", "runtime", [("%address", ADDRESS), ("%value", currency), ("%value$mem", BOOL)],
                   body=_instructions(send_body)),
        IRFunction("flint$fatalError", "runtime", body=_instructions(["revert fatalError"])),
        IRFunction("flint$assert", "runtime", [("%condition", BOOL)], body=_instructions([
            "branch %condition, L1, L0", "L0:", "revert assertion", "L1:", "return",
        ])),
        IRFunction("flint$recordMint", "runtime", [("%amount", INT)], body=_instructions([
            "mint %amount", "return",
        ])),
        IRFunction(ARRAY_ELEMENT, "runtime",
                   [("%head", INT), ("%head$mem", BOOL), ("%index", INT), ("%words", INT), ("%forWrite", BOOL)],
                   INT, body=_instructions([
                       "%length = load %head, %head$mem",
                       "%inside = lt %index, %length",
                       "branch %inside, L1, L0",
                       "L0:",
                       "branch %forWrite, L2, L3",
                       "L2:",
                       "%appending = eq %index, %length",
                       "branch %appending, L4, L3",
                       "L3:",
                       "revert out-of-bounds",
                       "L4:",
                       "%grown = add %index, 1",
                       "store %head, %grown, %head$mem",
                       "L1:",
                       "%base = keccakSlot %head$mem, %head",
                       "%words = mul %index, %words",
                       "%address = offset %base, %words, %head$mem",
                       "return %address",
                   ])),
        IRFunction(FIXED_ELEMENT, "runtime",
                   [("%base", INT), ("%base$mem", BOOL), ("%index", INT), ("%words", INT), ("%size", INT)],
                   INT, body=_instructions([
                       "%inside = lt %index, %size",
                       "branch %inside, L1, L0",
                       "L0:",
                       "revert out-of-bounds",
                       "L1:",
                       "%words = mul %index, %words",
                       "%address = offset %base, %words, %base$mem",
                       "return %address",
                   ])),
        IRFunction(DICT_ENTRY, "runtime",
                   [("%head", INT), ("%head$mem", BOOL), ("%key", INT), ("%forWrite", BOOL)],
                   INT, body=_instructions([
                       "%entry = keccakSlot %head$mem, %key, %head",
                       "branch %forWrite, L1, L0",
                       "L1:",
                       "%keys = keccakSlot %head$mem, %head",
                       "%markerAddress = keccakSlot %head$mem, %key, %keys",
                       "%marker = load %markerAddress, %head$mem",
                       "%known = ne %marker, 0",
                       "branch %known, L0, L2",
                       "L2:",
                       "%count = load %head, %head$mem",
                       "%keySlot = offset %keys, %count, %head$mem",
                       "store %keySlot, %key, %head$mem",
                       "%count = add %count, 1",
                       "store %head, %count, %head$mem",
                       "store %markerAddress, %count, %head$mem",
                       "L0:",
                       "return %entry",
                   ])),
        IRFunction(DICT_KEY_AT, "runtime",
                   [("%head", INT), ("%head$mem", BOOL), ("%index", INT)],
                   INT, body=_instructions([
                       "%keys = keccakSlot %head$mem, %head",
                       "%keySlot = offset %keys, %index, %head$mem",
                       "%key = load %keySlot, %head$mem",
                       "return %key",
                   ])),
    ]


def lower(module: SourceModule, env: Environment) -> IRProgram:
    """IR for every contract of an analysed module"""
    return Lowerer(module, env).lower()
