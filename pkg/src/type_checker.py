"""
Flint type checker
Gives every expression a type under structural equality and resolves calls
to overloads; the expression typer is shared with the other passes
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from diagnostics import Diagnostic, Note, PASS_TYPES, error, warning
from environment import Environment, FunctionInfo, TypeInfo
from flint_ast import (
    AddressLiteral, ArrayLiteral, AttemptExpression, BecomeStatement, BinaryExpression, BoolLiteral,
    BracketedExpression, DecimalLiteral, DictionaryLiteral, EmitStatement, ForStatement, FunctionCall,
    Identifier, IfStatement, InOutExpression, IntLiteral, MemberAccess, RangeExpression,
    ReturnStatement, SelfExpression, SourceModule, StringLiteral, SubscriptExpression,
    VariableDeclaration, NO_SPAN,
)
from flint_lexer import Span
from flint_types import (
    ADDRESS, BOOL, EMPTY_ARRAY, EMPTY_DICTIONARY, ERROR, INT, RANGE, STRING, VOID, TypeKind,
    TypeRef, named, types_compatible,
)
from stdlib import RUNTIME_PREFIX

logger = logging.getLogger(__name__)

ARITHMETIC_OPERATORS = ("+", "-", "*", "/", "**", "&+", "&-", "&*")
COMPARISON_OPERATORS = ("<", "<=", ">", ">=")
EQUALITY_OPERATORS = ("==", "!=")
LOGICAL_OPERATORS = ("&&", "||")
MAX_STRING_BYTES = 32


@dataclass
class LocalInfo:
    name: str
    type: TypeRef
    is_constant: bool
    span: Span = NO_SPAN
    kind: str = "local"
    is_inout: bool = False
    has_value: bool = True


class CheckContext:
    """Enclosing type and function plus the local symbol table of one body"""

    def __init__(self, env: Environment, owner: Optional[TypeInfo], function: Optional[FunctionInfo] = None):
        self.env = env
        self.owner = owner
        self.function = function
        self.scopes: List[Dict[str, LocalInfo]] = [{}]
        if function is not None:
            behaviour = function.behaviour
            if behaviour is not None and behaviour.caller_binding:
                self.scopes[0][behaviour.caller_binding] = LocalInfo(
                    behaviour.caller_binding, ADDRESS, True, behaviour.span, kind="caller",
                )
            for parameter in function.parameters:
                self.scopes[0][parameter.name] = LocalInfo(
                    parameter.name, parameter.type, False, parameter.span, kind="parameter",
                    is_inout=parameter.is_inout,
                )

    @property
    def is_contract(self) -> bool:
        return self.owner is not None and self.owner.is_contract

    @property
    def is_stdlib(self) -> bool:
        return self.function is not None and self.function.origin == "stdlib"

    def push(self):
        self.scopes.append({})

    def pop(self):
        self.scopes.pop()

    def declare(self, local: LocalInfo) -> Optional[LocalInfo]:
        """Add a local to the innermost scope; returns a clashing local of that scope"""
        previous = self.scopes[-1].get(local.name)
        self.scopes[-1][local.name] = local
        return previous

    def lookup(self, name: str) -> Optional[LocalInfo]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def property_named(self, name: str):
        return self.owner.property_named(name) if self.owner is not None else None


@dataclass
class CallResolution:
    function: Optional[FunctionInfo]
    category: str
    candidates: List[FunctionInfo]
    receiver_type: Optional[TypeRef] = None


def unwrap(expression):
    while isinstance(expression, BracketedExpression):
        expression = expression.expression
    return expression


def storage_root(expression, ctx: CheckContext) -> Optional[str]:
    """Name of the state property an lvalue is rooted at, if any"""
    expression = unwrap(expression)
    if isinstance(expression, InOutExpression):
        return storage_root(expression.expression, ctx)
    if isinstance(expression, Identifier):
        if ctx.lookup(expression.name) is None and ctx.property_named(expression.name) is not None:
            return expression.name
        return None
    if isinstance(expression, SelfExpression):
        return "self" if ctx.owner is not None else None
    if isinstance(expression, MemberAccess):
        if isinstance(unwrap(expression.base), SelfExpression):
            return expression.member.name
        return storage_root(expression.base, ctx)
    if isinstance(expression, SubscriptExpression):
        return storage_root(expression.base, ctx)
    return None


def local_root(expression, ctx: CheckContext) -> Optional[LocalInfo]:
    expression = unwrap(expression)
    if isinstance(expression, InOutExpression):
        return local_root(expression.expression, ctx)
    if isinstance(expression, Identifier):
        return ctx.lookup(expression.name)
    if isinstance(expression, (MemberAccess, SubscriptExpression)):
        return local_root(expression.base, ctx)
    return None


def is_lvalue(expression) -> bool:
    expression = unwrap(expression)
    if isinstance(expression, (Identifier, SelfExpression)):
        return True
    if isinstance(expression, MemberAccess):
        return expression.member.name != "size" and is_lvalue(expression.base)
    if isinstance(expression, SubscriptExpression):
        return is_lvalue(expression.base)
    return False


def element_type(iterable_type: TypeRef) -> Optional[TypeRef]:
    if iterable_type.kind in (TypeKind.ARRAY, TypeKind.FIXED_ARRAY, TypeKind.DICTIONARY, TypeKind.RANGE):
        return iterable_type.element
    return None


class ExpressionTyper:
    """Types expressions; reports only when constructed with reporting=True"""

    def __init__(self, env: Environment, reporting: bool = False):
        self.env = env
        self.reporting = reporting
        self.diagnostics: List[Diagnostic] = []

    def report(self, diagnostic: Diagnostic):
        if self.reporting:
            diagnostic.pass_index = PASS_TYPES
            self.diagnostics.append(diagnostic)

    def type_of(self, expression, ctx: CheckContext) -> TypeRef:
        if isinstance(expression, Identifier):
            return self._identifier(expression, ctx)
        if isinstance(expression, IntLiteral):
            return INT
        if isinstance(expression, DecimalLiteral):
            self.report(error(
                "E-TYPE-006", f"Fractional literal '{expression.text}' is not supported; there is no fixed-point type.",
                expression.span,
            ))
            return ERROR
        if isinstance(expression, BoolLiteral):
            return BOOL
        if isinstance(expression, StringLiteral):
            if len(expression.value.encode("utf-8")) > MAX_STRING_BYTES:
                self.report(error(
                    "E-TYPE-005", f"String literal is longer than {MAX_STRING_BYTES} bytes.", expression.span,
                ))
            return STRING
        if isinstance(expression, AddressLiteral):
            return ADDRESS
        if isinstance(expression, ArrayLiteral):
            return EMPTY_ARRAY
        if isinstance(expression, DictionaryLiteral):
            return EMPTY_DICTIONARY
        if isinstance(expression, SelfExpression):
            if ctx.owner is None:
                self.report(error("E-DECL-004", "Use of undeclared identifier 'self'.", expression.span))
                return ERROR
            return named(ctx.owner.name)
        if isinstance(expression, InOutExpression):
            self.report(error(
                "E-TYPE-008", "'&' can only be used on an argument passed to an inout parameter.", expression.span,
            ))
            return self.type_of(expression.expression, ctx)
        if isinstance(expression, BracketedExpression):
            return self.type_of(expression.expression, ctx)
        if isinstance(expression, BinaryExpression):
            return self._binary(expression, ctx)
        if isinstance(expression, MemberAccess):
            return self._member(expression, ctx)
        if isinstance(expression, SubscriptExpression):
            return self._subscript(expression, ctx)
        if isinstance(expression, FunctionCall):
            return self.call_type(expression, ctx)
        if isinstance(expression, AttemptExpression):
            return self.call_type(expression.call, ctx)
        if isinstance(expression, RangeExpression):
            for bound in (expression.start, expression.end):
                bound_type = self.type_of(bound, ctx)
                if not types_compatible(INT, bound_type):
                    self.report(error(
                        "E-TYPE-005", f"Range bounds must be of type Int, found '{bound_type.display()}'.", bound.span,
                    ))
            return RANGE
        if isinstance(expression, VariableDeclaration):
            return VOID
        return ERROR

    # --- names and members ---------------------------------------------------

    def _identifier(self, identifier: Identifier, ctx: CheckContext) -> TypeRef:
        local = ctx.lookup(identifier.name)
        if local is not None:
            return local.type
        prop = ctx.property_named(identifier.name)
        if prop is not None:
            return prop.type
        self.report(error("E-DECL-004", f"Use of undeclared identifier '{identifier.name}'.", identifier.span))
        return ERROR

    def enum_case(self, expression: MemberAccess, ctx: CheckContext) -> Optional[Tuple[str, int]]:
        """(enum name, ordinal) when the member access names an enumeration case"""
        base = expression.base
        if not isinstance(base, Identifier) or base.name not in self.env.enums:
            return None
        if ctx.lookup(base.name) is not None or ctx.property_named(base.name) is not None:
            return None
        cases = self.env.enums[base.name].cases
        if expression.member.name not in cases:
            return base.name, -1
        return base.name, cases.index(expression.member.name)

    def _member(self, expression: MemberAccess, ctx: CheckContext) -> TypeRef:
        case = self.enum_case(expression, ctx)
        if case is not None:
            if case[1] < 0:
                self.report(error(
                    "E-DECL-004", f"Enumeration '{case[0]}' has no case '{expression.member.name}'.",
                    expression.member.span,
                ))
                return ERROR
            return named(case[0])
        base_type = self.type_of(expression.base, ctx)
        if base_type.is_error:
            return ERROR
        member = expression.member.name
        if member == "size" and base_type.kind in (TypeKind.ARRAY, TypeKind.FIXED_ARRAY, TypeKind.DICTIONARY):
            return INT
        if base_type.kind == TypeKind.NAMED:
            info = self.env.type_info(base_type.name)
            prop = info.property_named(member) if info else None
            if prop is not None:
                return prop.type
        self.report(error(
            "E-DECL-004", f"Value of type '{base_type.display()}' has no member '{member}'.", expression.member.span,
        ))
        return ERROR

    def _subscript(self, expression: SubscriptExpression, ctx: CheckContext) -> TypeRef:
        base_type = self.type_of(expression.base, ctx)
        index_type = self.type_of(expression.index, ctx)
        if base_type.is_error:
            return ERROR
        if base_type.kind in (TypeKind.ARRAY, TypeKind.FIXED_ARRAY):
            if not types_compatible(INT, index_type):
                self.report(error(
                    "E-TYPE-005", f"Subscript index must be of type Int, found '{index_type.display()}'.",
                    expression.index.span,
                ))
            return base_type.element
        if base_type.kind == TypeKind.DICTIONARY:
            key = base_type.key
            if not types_compatible(key, index_type):
                if {key, index_type} == {INT, ADDRESS}:
                    self.report(warning(
                        "W-TYPE-009",
                        f"Dictionary key of type '{key.display()}' used with a value of type '{index_type.display()}'.",
                        expression.index.span,
                    ))
                else:
                    self.report(error(
                        "E-TYPE-005",
                        f"Cannot use a value of type '{index_type.display()}' as a key of type '{key.display()}'.",
                        expression.index.span,
                    ))
            return base_type.element
        self.report(error(
            "E-TYPE-005", f"Value of type '{base_type.display()}' cannot be subscripted.", expression.span,
        ))
        return ERROR

    # --- operators -----------------------------------------------------------

    def _binary(self, expression: BinaryExpression, ctx: CheckContext) -> TypeRef:
        op = expression.op
        lhs = self.type_of(expression.lhs, ctx)
        rhs = self.type_of(expression.rhs, ctx)
        if expression.is_assignment:
            if not is_lvalue(expression.lhs):
                self.report(error("E-TYPE-003", "Cannot assign to this expression.", expression.lhs.span))
            elif op == "=":
                if not types_compatible(lhs, rhs):
                    self.report(error(
                        "E-TYPE-003",
                        f"Incompatible assignment between values of type {lhs.display()} and {rhs.display()}.",
                        expression.span,
                    ))
            elif not (types_compatible(INT, lhs) and types_compatible(INT, rhs)):
                self.report(error(
                    "E-TYPE-003",
                    f"Incompatible assignment between values of type {lhs.display()} and {rhs.display()}.",
                    expression.span,
                ))
            return VOID
        if lhs.is_error or rhs.is_error:
            return BOOL if op in COMPARISON_OPERATORS + EQUALITY_OPERATORS + LOGICAL_OPERATORS else (
                INT if op in ARITHMETIC_OPERATORS else ERROR)
        if op in ARITHMETIC_OPERATORS or op in COMPARISON_OPERATORS:
            valid = lhs == INT and rhs == INT
            result = INT if op in ARITHMETIC_OPERATORS else BOOL
        elif op in EQUALITY_OPERATORS:
            valid = lhs == rhs and (lhs.is_basic or self.env.is_enum(lhs)) and lhs != VOID
            result = BOOL
        elif op in LOGICAL_OPERATORS:
            valid = lhs == BOOL and rhs == BOOL
            result = BOOL
        else:
            valid, result = False, ERROR
        if not valid:
            self.report(error(
                "E-TYPE-005",
                f"Binary operator '{op}' cannot be applied to operands of type '{lhs.display()}' and '{rhs.display()}'.",
                expression.span,
            ))
        return result

    # --- calls ---------------------------------------------------------------

    def candidates(self, call: FunctionCall, ctx: CheckContext) -> Tuple[List[FunctionInfo], str, Optional[TypeRef]]:
        name = call.name.name
        if call.receiver is not None:
            receiver_type = self.type_of(call.receiver, ctx)
            if receiver_type.kind == TypeKind.NAMED:
                info = self.env.type_info(receiver_type.name)
                if info is not None:
                    return info.functions_named(name), "method", receiver_type
            return [], "method", receiver_type
        if name in self.env.structures:
            return self.env.initialisers_of(name), "init", None
        if name in self.env.globals:
            return [self.env.globals[name]], "global", None
        if name.startswith(RUNTIME_PREFIX):
            if ctx.is_stdlib and name in self.env.runtime_functions:
                return [self.env.runtime_functions[name]], "runtime", None
            return [], "runtime", None
        if ctx.owner is not None:
            return ctx.owner.functions_named(name), "self", None
        return [], "self", None

    def argument_type(self, argument_expression, ctx: CheckContext) -> TypeRef:
        if isinstance(argument_expression, InOutExpression):
            return self.type_of(argument_expression.expression, ctx)
        return self.type_of(argument_expression, ctx)

    @staticmethod
    def mismatch(function: FunctionInfo, call: FunctionCall, argument_types: List[TypeRef]):
        """None when the call fits the function, else a reason tuple"""
        parameters = function.external_parameters
        arguments = call.arguments
        if len(arguments) > len(parameters):
            return ("arity",)
        if any(p.default is None for p in parameters[len(arguments):]):
            return ("arity",)
        for argument, parameter, actual in zip(arguments, parameters, argument_types):
            if argument.label is not None and argument.label != parameter.name:
                return ("label", argument, parameter)
            if isinstance(argument.expression, InOutExpression) != parameter.is_inout:
                return ("inout", argument, parameter)
            if not types_compatible(parameter.type, actual):
                return ("type", argument, parameter, actual)
        return None

    def resolve_call(self, call: FunctionCall, ctx: CheckContext) -> CallResolution:
        candidates, category, receiver_type = self.candidates(call, ctx)
        argument_types = [self.argument_type(a.expression, ctx) for a in call.arguments]
        for argument, argument_type in zip(call.arguments, argument_types):
            if isinstance(argument.expression, InOutExpression):
                self._check_inout(argument.expression, argument_type)
        if receiver_type is not None and receiver_type.is_error:
            return CallResolution(None, category, candidates, receiver_type)
        if not candidates:
            if category == "method":
                self.report(error(
                    "E-DECL-004", f"Value of type '{receiver_type.display()}' has no function '{call.name.name}'.",
                    call.name.span,
                ))
            return CallResolution(None, category, candidates, receiver_type)
        reasons = []
        for function in candidates:
            reason = self.mismatch(function, call, argument_types)
            if reason is None:
                return CallResolution(function, category, candidates, receiver_type)
            reasons.append(reason)
        if any(t.is_error for t in argument_types):
            return CallResolution(None, category, candidates, receiver_type)
        self._report_mismatch(call, candidates, reasons, argument_types)
        return CallResolution(None, category, candidates, receiver_type)

    def _check_inout(self, expression: InOutExpression, inner_type: TypeRef):
        if inner_type.is_error:
            return
        if not is_lvalue(expression.expression):
            self.report(error(
                "E-TYPE-008", "Only variables, properties and their elements can be passed inout.", expression.span,
            ))
        elif not self.env.is_reference_type(inner_type):
            self.report(error(
                "E-TYPE-008",
                f"Cannot pass expression of type '{inner_type.display()}' by reference; only dynamic types can be passed inout.",
                expression.span,
            ))

    def _report_mismatch(self, call: FunctionCall, candidates: List[FunctionInfo], reasons: list,
                         argument_types: List[TypeRef]):
        same_arity = [r for r in reasons if r[0] != "arity"]
        if len(same_arity) == 1 and same_arity[0][0] == "type":
            _, argument, parameter, actual = same_arity[0]
            self.report(error(
                "E-TYPE-004",
                f"Cannot convert expression of type {actual.display()} to expected argument type {parameter.type.display()}",
                argument.expression.span,
            ))
            return
        shown = ", ".join(t.display() for t in argument_types)
        self.report(error(
            "E-TYPE-004", f"Cannot call '{call.name.name}' with arguments ({shown}).", call.span,
            [Note(f"Candidate: {c.describe()}", c.span) for c in candidates if c.span.line],
        ))

    def call_type(self, call: FunctionCall, ctx: CheckContext) -> TypeRef:
        resolution = self.resolve_call(call, ctx)
        function = resolution.function
        if function is None:
            return ERROR
        if function.is_init:
            return named(function.owner)
        return function.return_type

    def event_fields(self, call: FunctionCall, ctx: CheckContext):
        if ctx.owner is None or not ctx.owner.is_contract:
            return None
        event = ctx.owner.events.get(call.name.name)
        return event.fields if event else None


class TypeChecker:
    def __init__(self, module: SourceModule, env: Environment):
        self.module = module
        self.env = env
        self.typer = ExpressionTyper(env, reporting=True)

    @property
    def diagnostics(self) -> List[Diagnostic]:
        return self.typer.diagnostics

    def report(self, diagnostic: Diagnostic):
        self.typer.report(diagnostic)

    def check(self) -> List[Diagnostic]:
        for info in list(self.env.contracts.values()) + list(self.env.structures.values()):
            self._check_defaults(info)
            for function in info.all_functions():
                if function.decl is not None and function.body is not None:
                    self.check_function(info, function)
        return self.diagnostics

    def _check_defaults(self, info):
        ctx = CheckContext(self.env, info)
        for prop in info.properties:
            if prop.default is None:
                continue
            actual = self.typer.type_of(prop.default, ctx)
            if not types_compatible(prop.type, actual):
                self.report(error(
                    "E-TYPE-007",
                    f"Cannot convert expression of type '{actual.display()}' to expected type '{prop.type.display()}'.",
                    prop.default.span,
                ))

    def check_function(self, owner, function: FunctionInfo):
        ctx = CheckContext(self.env, owner, function)
        for parameter in function.parameters:
            if parameter.default is not None:
                actual = self.typer.type_of(parameter.default, ctx)
                if not types_compatible(parameter.type, actual):
                    self.report(error(
                        "E-TYPE-007",
                        f"Cannot convert expression of type '{actual.display()}' to expected type '{parameter.type.display()}'.",
                        parameter.default.span,
                    ))
        self.check_block(function.body, ctx)
        if function.return_type != VOID and not block_terminates(function.body, self.env):
            self.report(error(
                "E-TYPE-001", f"Missing return in function expected to return '{function.return_type.display()}'.",
                function.span,
            ))

    def check_block(self, statements: list, ctx: CheckContext):
        ctx.push()
        for statement in statements:
            self.check_statement(statement, ctx)
        ctx.pop()

    def check_statement(self, statement, ctx: CheckContext):
        if isinstance(statement, VariableDeclaration):
            self.declare_local(statement, ctx)
        elif isinstance(statement, ReturnStatement):
            self._return(statement, ctx)
        elif isinstance(statement, BecomeStatement):
            typestates = ctx.owner.typestates if ctx.is_contract else []
            if statement.state.name not in typestates:
                owner = ctx.owner.name if ctx.owner else "<global>"
                self.report(error(
                    "E-STATE-001", f"Typestate '{statement.state.name}' is undefined in '{owner}'.",
                    statement.state.span,
                ))
        elif isinstance(statement, EmitStatement):
            self._emit(statement, ctx)
        elif isinstance(statement, ForStatement):
            self._for(statement, ctx)
        elif isinstance(statement, IfStatement):
            condition = self.typer.type_of(statement.condition, ctx)
            if not types_compatible(BOOL, condition):
                self.report(error(
                    "E-TYPE-005", f"Condition of type '{condition.display()}' is not a Bool.", statement.condition.span,
                ))
            self.check_block(statement.body, ctx)
            if statement.else_body is not None:
                self.check_block(statement.else_body, ctx)
        else:
            self.typer.type_of(statement, ctx)

    def declare_local(self, declaration: VariableDeclaration, ctx: CheckContext):
        declared = declaration.type_annotation
        if not self.env.is_known_type(declared):
            self.report(error("E-DECL-005", f"Use of undeclared type '{declared.display()}'.", declaration.span))
            declared = ERROR
        if declaration.value is not None:
            actual = self.typer.type_of(declaration.value, ctx)
            if not types_compatible(declared, actual):
                self.report(error(
                    "E-TYPE-007",
                    f"Cannot convert expression of type '{actual.display()}' to expected type '{declared.display()}'.",
                    declaration.value.span,
                ))
        previous = ctx.declare(LocalInfo(
            declaration.name.name, declared, declaration.is_constant, declaration.name.span,
            has_value=declaration.value is not None,
        ))
        if previous is not None and previous.kind == "local":
            self.report(error(
                "E-DECL-001", f"Invalid redeclaration of '{declaration.name.name}'.", declaration.name.span,
                [Note(f"Previous declaration on line {previous.span.line}, column {previous.span.column}.", previous.span)],
            ))

    def _return(self, statement: ReturnStatement, ctx: CheckContext):
        expected = ctx.function.return_type if ctx.function else VOID
        if statement.value is None:
            if expected != VOID:
                self.report(error(
                    "E-TYPE-002", f"Missing return value in function expected to return '{expected.display()}'.",
                    statement.span,
                ))
            return
        actual = self.typer.type_of(statement.value, ctx)
        if expected == VOID:
            self.report(error(
                "E-TYPE-002", f"Unexpected return value of type '{actual.display()}' in function returning 'Void'.",
                statement.value.span,
            ))
        elif not types_compatible(expected, actual):
            self.report(error(
                "E-TYPE-002",
                f"Cannot convert expression of type '{actual.display()}' to expected return type '{expected.display()}'.",
                statement.value.span,
            ))

    def _emit(self, statement: EmitStatement, ctx: CheckContext):
        call = statement.call
        fields = self.typer.event_fields(call, ctx)
        argument_types = [self.typer.type_of(a.expression, ctx) for a in call.arguments]
        if fields is None:
            self.report(error("E-DECL-004", f"Use of undeclared event '{call.name.name}'.", call.name.span))
            return
        if len(fields) != len(call.arguments):
            self.report(error(
                "E-TYPE-004", f"Event '{call.name.name}' expects {len(fields)} arguments, found {len(call.arguments)}.",
                call.span,
            ))
            return
        for (field_name, field_type), argument, actual in zip(fields, call.arguments, argument_types):
            if argument.label is not None and argument.label != field_name:
                self.report(error(
                    "E-TYPE-004", f"Incorrect argument label '{argument.label}', expected '{field_name}'.",
                    argument.expression.span,
                ))
            elif not types_compatible(field_type, actual):
                self.report(error(
                    "E-TYPE-004",
                    f"Cannot convert expression of type {actual.display()} to expected argument type {field_type.display()}",
                    argument.expression.span,
                ))

    def _for(self, statement: ForStatement, ctx: CheckContext):
        iterable = self.typer.type_of(statement.iterable, ctx)
        variable = statement.variable
        bound = element_type(iterable)
        if bound is None and not iterable.is_error:
            self.report(error(
                "E-TYPE-005", f"Cannot iterate over a value of type '{iterable.display()}'.", statement.iterable.span,
            ))
        elif bound is not None and not types_compatible(variable.type_annotation, bound):
            self.report(error(
                "E-TYPE-005",
                f"Loop variable of type '{variable.type_annotation.display()}' cannot bind elements of type '{bound.display()}'.",
                variable.span,
            ))
        ctx.push()
        ctx.declare(LocalInfo(variable.name.name, variable.type_annotation, variable.is_constant, variable.name.span))
        self.check_block(statement.body, ctx)
        ctx.pop()


def is_terminating_call(statement, env: Environment) -> bool:
    call = unwrap(statement)
    if isinstance(call, AttemptExpression):
        call = call.call
    if not isinstance(call, FunctionCall) or call.receiver is not None:
        return False
    function = env.globals.get(call.name.name)
    return function is not None and function.terminates


def statement_terminates(statement, env: Environment) -> bool:
    if isinstance(statement, ReturnStatement):
        return True
    if isinstance(statement, IfStatement):
        return (statement.else_body is not None and block_terminates(statement.body, env)
                and block_terminates(statement.else_body, env))
    return is_terminating_call(statement, env)


def block_terminates(statements: list, env: Environment) -> bool:
    return any(statement_terminates(s, env) for s in statements)


def type_check(module: SourceModule, env: Environment) -> List[Diagnostic]:
    """Type every expression of every function body"""
    diagnostics = TypeChecker(module, env).check()
    logger.debug("type checking produced %d diagnostics", len(diagnostics))
    return diagnostics
