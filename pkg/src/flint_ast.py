"""
Flint abstract syntax tree
Dataclass nodes for declarations, statements and expressions
"""

import copy
import dataclasses
from dataclasses import dataclass, field
from typing import List, Optional, Union

from flint_lexer import Span
from flint_types import TypeRef

NO_SPAN = Span(0, 0, 0)


# --- Expressions -----------------------------------------------------------

@dataclass
class Identifier:
    name: str
    span: Span = NO_SPAN


@dataclass
class IntLiteral:
    value: int
    text: str
    span: Span = NO_SPAN


@dataclass
class DecimalLiteral:
    text: str
    span: Span = NO_SPAN


@dataclass
class BoolLiteral:
    value: bool
    span: Span = NO_SPAN


@dataclass
class StringLiteral:
    value: str
    span: Span = NO_SPAN


@dataclass
class AddressLiteral:
    value: int
    text: str
    span: Span = NO_SPAN


@dataclass
class ArrayLiteral:
    span: Span = NO_SPAN


@dataclass
class DictionaryLiteral:
    span: Span = NO_SPAN


@dataclass
class SelfExpression:
    span: Span = NO_SPAN


@dataclass
class InOutExpression:
    expression: "Expression"
    span: Span = NO_SPAN


@dataclass
class BinaryExpression:
    op: str
    lhs: "Expression"
    rhs: "Expression"
    span: Span = NO_SPAN

    @property
    def is_assignment(self) -> bool:
        return self.op in ASSIGNMENT_OPERATORS


@dataclass
class MemberAccess:
    base: "Expression"
    member: Identifier
    span: Span = NO_SPAN


@dataclass
class SubscriptExpression:
    base: "Expression"
    index: "Expression"
    span: Span = NO_SPAN


@dataclass
class CallArgument:
    label: Optional[str]
    expression: "Expression"


@dataclass
class FunctionCall:
    name: Identifier
    arguments: List[CallArgument]
    receiver: Optional["Expression"] = None
    span: Span = NO_SPAN


@dataclass
class RangeExpression:
    start: "Expression"
    end: "Expression"
    closed: bool
    span: Span = NO_SPAN


@dataclass
class BracketedExpression:
    expression: "Expression"
    span: Span = NO_SPAN


@dataclass
class AttemptExpression:
    call: FunctionCall
    span: Span = NO_SPAN


@dataclass
class VariableDeclaration:
    """State property, struct field or local variable"""
    name: Identifier
    type_annotation: TypeRef
    is_constant: bool = False
    modifiers: List[str] = field(default_factory=list)
    value: Optional["Expression"] = None
    span: Span = NO_SPAN

    @property
    def is_public(self) -> bool:
        return "public" in self.modifiers

    @property
    def is_visible(self) -> bool:
        return "visible" in self.modifiers or "public" in self.modifiers


Expression = Union[
    Identifier, IntLiteral, DecimalLiteral, BoolLiteral, StringLiteral, AddressLiteral,
    ArrayLiteral, DictionaryLiteral, SelfExpression, InOutExpression, BinaryExpression,
    MemberAccess, SubscriptExpression, FunctionCall, RangeExpression, BracketedExpression,
    AttemptExpression, VariableDeclaration,
]

ASSIGNMENT_OPERATORS = ("=", "+=", "-=", "*=", "/=")


# --- Statements ------------------------------------------------------------

@dataclass
class ReturnStatement:
    value: Optional[Expression] = None
    span: Span = NO_SPAN


@dataclass
class BecomeStatement:
    state: Identifier
    span: Span = NO_SPAN


@dataclass
class EmitStatement:
    call: FunctionCall
    span: Span = NO_SPAN


@dataclass
class ForStatement:
    variable: VariableDeclaration
    iterable: Expression
    body: List["Statement"]
    span: Span = NO_SPAN


@dataclass
class IfStatement:
    condition: Expression
    body: List["Statement"]
    else_body: Optional[List["Statement"]] = None
    span: Span = NO_SPAN


Statement = Union[Expression, ReturnStatement, BecomeStatement, EmitStatement, ForStatement, IfStatement]


# --- Declarations ----------------------------------------------------------

@dataclass
class Parameter:
    name: Identifier
    type_annotation: TypeRef
    is_implicit: bool = False
    is_inout: bool = False
    default: Optional[Expression] = None
    span: Span = NO_SPAN


@dataclass
class FunctionDecl:
    name: Identifier
    parameters: List[Parameter]
    return_type: Optional[TypeRef] = None
    body: Optional[List[Statement]] = None
    attributes: List[str] = field(default_factory=list)
    modifiers: List[str] = field(default_factory=list)
    span: Span = NO_SPAN

    @property
    def is_public(self) -> bool:
        return "public" in self.modifiers

    @property
    def is_mutating(self) -> bool:
        return "mutating" in self.modifiers

    @property
    def is_payable(self) -> bool:
        return "payable" in self.attributes


@dataclass
class SpecialDecl:
    """Initialiser or fallback"""
    kind: str
    parameters: List[Parameter]
    body: Optional[List[Statement]] = None
    attributes: List[str] = field(default_factory=list)
    modifiers: List[str] = field(default_factory=list)
    span: Span = NO_SPAN

    @property
    def is_init(self) -> bool:
        return self.kind == "init"

    @property
    def is_public(self) -> bool:
        return "public" in self.modifiers

    @property
    def is_mutating(self) -> bool:
        return "mutating" in self.modifiers

    @property
    def is_payable(self) -> bool:
        return "payable" in self.attributes


@dataclass
class EventDecl:
    name: Identifier
    fields: List[VariableDeclaration]
    span: Span = NO_SPAN


@dataclass
class ContractDecl:
    name: Identifier
    typestates: List[Identifier] = field(default_factory=list)
    conformances: List[Identifier] = field(default_factory=list)
    members: List[Union[VariableDeclaration, EventDecl]] = field(default_factory=list)
    span: Span = NO_SPAN


@dataclass
class BehaviourDecl:
    contract_name: Identifier
    protections: List[Identifier]
    members: List[Union[FunctionDecl, SpecialDecl]] = field(default_factory=list)
    state_group: List[Identifier] = field(default_factory=list)
    caller_binding: Optional[Identifier] = None
    span: Span = NO_SPAN


@dataclass
class StructDecl:
    name: Identifier
    conformances: List[Identifier] = field(default_factory=list)
    members: List[Union[VariableDeclaration, FunctionDecl, SpecialDecl]] = field(default_factory=list)
    span: Span = NO_SPAN


@dataclass
class EnumCase:
    name: Identifier
    value: Optional[Expression] = None
    span: Span = NO_SPAN


@dataclass
class EnumDecl:
    name: Identifier
    cases: List[EnumCase]
    raw_type: Optional[TypeRef] = None
    span: Span = NO_SPAN


@dataclass
class TraitDecl:
    """kind is "struct", "contract" or "" for a bare trait"""
    kind: str
    name: Identifier
    members: List[Union[FunctionDecl, SpecialDecl, EventDecl, BehaviourDecl]] = field(default_factory=list)
    span: Span = NO_SPAN


TopLevelDeclaration = Union[ContractDecl, BehaviourDecl, StructDecl, EnumDecl, TraitDecl]


@dataclass
class SourceModule:
    declarations: List[TopLevelDeclaration] = field(default_factory=list)

    def of_type(self, kind) -> list:
        return [d for d in self.declarations if isinstance(d, kind)]


# --- Helpers ---------------------------------------------------------------

def substitute_self(node, type_name: str):
    """Deep copy of a declaration with every `Self` type replaced by `type_name`"""
    result = copy.deepcopy(node)

    def visit(value):
        if isinstance(value, list):
            for item in value:
                visit(item)
            return
        if not dataclasses.is_dataclass(value) or isinstance(value, (TypeRef, Span)):
            return
        for f in dataclasses.fields(value):
            attr = getattr(value, f.name)
            if isinstance(attr, TypeRef):
                setattr(value, f.name, attr.substitute_self(type_name))
            else:
                visit(attr)

    visit(result)
    return result


def strip_spans(node):
    """Structural view of a node with every span removed, for comparisons"""
    if isinstance(node, list):
        return [strip_spans(item) for item in node]
    if isinstance(node, TypeRef) or not dataclasses.is_dataclass(node):
        return node
    values = {f.name: strip_spans(getattr(node, f.name)) for f in dataclasses.fields(node) if f.name != "span"}
    if isinstance(node, IntLiteral):
        values.pop("text", None)
    return (type(node).__name__, tuple(sorted(values.items(), key=lambda item: item[0])))


def walk_expression(expression):
    """Yield an expression and all nested sub-expressions, outermost first"""
    if expression is None:
        return
    yield expression
    if isinstance(expression, (InOutExpression, BracketedExpression)):
        yield from walk_expression(expression.expression)
    elif isinstance(expression, BinaryExpression):
        yield from walk_expression(expression.lhs)
        yield from walk_expression(expression.rhs)
    elif isinstance(expression, MemberAccess):
        yield from walk_expression(expression.base)
    elif isinstance(expression, SubscriptExpression):
        yield from walk_expression(expression.base)
        yield from walk_expression(expression.index)
    elif isinstance(expression, FunctionCall):
        yield from walk_expression(expression.receiver)
        for argument in expression.arguments:
            yield from walk_expression(argument.expression)
    elif isinstance(expression, RangeExpression):
        yield from walk_expression(expression.start)
        yield from walk_expression(expression.end)
    elif isinstance(expression, AttemptExpression):
        yield from walk_expression(expression.call)
    elif isinstance(expression, VariableDeclaration):
        yield from walk_expression(expression.value)


def statement_expressions(statement) -> List:
    """Top-level expressions that belong to a statement itself (not nested blocks)"""
    if isinstance(statement, ReturnStatement):
        return [statement.value] if statement.value is not None else []
    if isinstance(statement, EmitStatement):
        return [statement.call]
    if isinstance(statement, ForStatement):
        return [statement.iterable]
    if isinstance(statement, IfStatement):
        return [statement.condition]
    if isinstance(statement, BecomeStatement):
        return []
    return [statement]


def nested_blocks(statement) -> List[List]:
    if isinstance(statement, ForStatement):
        return [statement.body]
    if isinstance(statement, IfStatement):
        return [statement.body] + ([statement.else_body] if statement.else_body is not None else [])
    return []


def statement_span(statement) -> Span:
    return getattr(statement, "span", NO_SPAN)
