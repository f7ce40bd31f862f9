"""
Flint pretty-printer
Renders an AST back to source text that reparses to the same tree
"""

from typing import List

from flint_ast import (
    AddressLiteral, ArrayLiteral, AttemptExpression, BecomeStatement, BehaviourDecl,
    BinaryExpression, BoolLiteral, BracketedExpression, ContractDecl, DecimalLiteral,
    DictionaryLiteral, EmitStatement, EnumDecl, EventDecl, ForStatement, FunctionCall,
    FunctionDecl, Identifier, IfStatement, InOutExpression, IntLiteral, MemberAccess,
    Parameter, RangeExpression, ReturnStatement, SelfExpression, SourceModule, SpecialDecl,
    StringLiteral, StructDecl, SubscriptExpression, TraitDecl, VariableDeclaration,
)

INDENT = "  "


def print_expression(expression) -> str:
    if isinstance(expression, Identifier):
        return expression.name
    if isinstance(expression, IntLiteral):
        return expression.text
    if isinstance(expression, DecimalLiteral):
        return expression.text
    if isinstance(expression, BoolLiteral):
        return "true" if expression.value else "false"
    if isinstance(expression, StringLiteral):
        return f'"{expression.value}"'
    if isinstance(expression, AddressLiteral):
        return expression.text
    if isinstance(expression, ArrayLiteral):
        return "[]"
    if isinstance(expression, DictionaryLiteral):
        return "[:]"
    if isinstance(expression, SelfExpression):
        return "self"
    if isinstance(expression, InOutExpression):
        return "&" + print_expression(expression.expression)
    if isinstance(expression, BinaryExpression):
        return f"{print_expression(expression.lhs)} {expression.op} {print_expression(expression.rhs)}"
    if isinstance(expression, MemberAccess):
        return f"{print_expression(expression.base)}.{expression.member.name}"
    if isinstance(expression, SubscriptExpression):
        return f"{print_expression(expression.base)}[{print_expression(expression.index)}]"
    if isinstance(expression, FunctionCall):
        arguments = ", ".join(
            (f"{a.label}: " if a.label else "") + print_expression(a.expression) for a in expression.arguments
        )
        prefix = print_expression(expression.receiver) + "." if expression.receiver is not None else ""
        return f"{prefix}{expression.name.name}({arguments})"
    if isinstance(expression, RangeExpression):
        op = "..." if expression.closed else "..<"
        return f"({print_expression(expression.start)}{op}{print_expression(expression.end)})"
    if isinstance(expression, BracketedExpression):
        return f"({print_expression(expression.expression)})"
    if isinstance(expression, AttemptExpression):
        return "try " + print_expression(expression.call)
    if isinstance(expression, VariableDeclaration):
        return _variable(expression)
    raise TypeError(f"Cannot print {type(expression).__name__}")


def _variable(declaration: VariableDeclaration) -> str:
    modifiers = "".join(m + " " for m in declaration.modifiers)
    keyword = "let" if declaration.is_constant else "var"
    text = f"{modifiers}{keyword} {declaration.name.name}: {declaration.type_annotation.display()}"
    if declaration.value is not None:
        text += " = " + print_expression(declaration.value)
    return text


def _block(statements: List, depth: int) -> List[str]:
    lines = []
    for statement in statements:
        lines.extend(_statement(statement, depth))
    return lines


def _statement(statement, depth: int) -> List[str]:
    pad = INDENT * depth
    if isinstance(statement, ReturnStatement):
        if statement.value is None:
            return [pad + "return"]
        return [pad + "return " + print_expression(statement.value)]
    if isinstance(statement, BecomeStatement):
        return [pad + "become " + statement.state.name]
    if isinstance(statement, EmitStatement):
        return [pad + "emit " + print_expression(statement.call)]
    if isinstance(statement, ForStatement):
        head = f"{pad}for {_variable(statement.variable)} in {print_expression(statement.iterable)} {{"
        return [head] + _block(statement.body, depth + 1) + [pad + "}"]
    if isinstance(statement, IfStatement):
        return _if(statement, depth, pad + "if ")
    return [pad + print_expression(statement)]


def _if(statement: IfStatement, depth: int, prefix: str) -> List[str]:
    pad = INDENT * depth
    lines = [f"{prefix}{print_expression(statement.condition)} {{"] + _block(statement.body, depth + 1)
    if statement.else_body is None:
        return lines + [pad + "}"]
    if len(statement.else_body) == 1 and isinstance(statement.else_body[0], IfStatement):
        return lines + _if(statement.else_body[0], depth, pad + "} else if ")
    return lines + [pad + "} else {"] + _block(statement.else_body, depth + 1) + [pad + "}"]


def _parameter(parameter: Parameter) -> str:
    text = "implicit " if parameter.is_implicit else ""
    text += f"{parameter.name.name}: "
    text += "inout " if parameter.is_inout else ""
    text += parameter.type_annotation.display()
    if parameter.default is not None:
        text += " = " + print_expression(parameter.default)
    return text


def _function(declaration, depth: int) -> List[str]:
    pad = INDENT * depth
    lines = [pad + "@" + attribute for attribute in declaration.attributes]
    modifiers = "".join(m + " " for m in declaration.modifiers)
    parameters = ", ".join(_parameter(p) for p in declaration.parameters)
    if isinstance(declaration, FunctionDecl):
        head = f"{pad}{modifiers}func {declaration.name.name}({parameters})"
        if declaration.return_type is not None:
            head += " -> " + declaration.return_type.display()
    else:
        head = f"{pad}{modifiers}{declaration.kind}({parameters})"
    if declaration.body is None:
        return lines + [head]
    return lines + [head + " {"] + _block(declaration.body, depth + 1) + [pad + "}"]


def _event(declaration: EventDecl, depth: int) -> List[str]:
    pad = INDENT * depth
    fields = [INDENT * (depth + 1) + _variable(f) for f in declaration.fields]
    return [f"{pad}event {declaration.name.name} {{"] + fields + [pad + "}"]


def _member(member, depth: int) -> List[str]:
    if isinstance(member, VariableDeclaration):
        return [INDENT * depth + _variable(member)]
    if isinstance(member, EventDecl):
        return _event(member, depth)
    if isinstance(member, BehaviourDecl):
        return _behaviour(member, depth)
    return _function(member, depth)


def _names(identifiers) -> str:
    return ", ".join(i.name for i in identifiers)


def _behaviour(declaration: BehaviourDecl, depth: int) -> List[str]:
    pad = INDENT * depth
    head = pad + declaration.contract_name.name
    if declaration.state_group:
        head += f" @({_names(declaration.state_group)})"
    head += " :: "
    if declaration.caller_binding is not None:
        head += declaration.caller_binding.name + " <- "
    head += f"({_names(declaration.protections)}) {{"
    body = []
    for member in declaration.members:
        body.extend(_member(member, depth + 1))
    return [head] + body + [pad + "}"]


def print_declaration(declaration) -> str:
    if isinstance(declaration, ContractDecl):
        head = "contract " + declaration.name.name
        if declaration.typestates:
            head += f" ({_names(declaration.typestates)})"
        if declaration.conformances:
            head += ": " + _names(declaration.conformances)
        lines = [head + " {"]
        for member in declaration.members:
            lines.extend(_member(member, 1))
        return "\n".join(lines + ["}"])
    if isinstance(declaration, BehaviourDecl):
        return "\n".join(_behaviour(declaration, 0))
    if isinstance(declaration, StructDecl):
        head = "struct " + declaration.name.name
        if declaration.conformances:
            head += ": " + _names(declaration.conformances)
        lines = [head + " {"]
        for member in declaration.members:
            lines.extend(_member(member, 1))
        return "\n".join(lines + ["}"])
    if isinstance(declaration, EnumDecl):
        head = "enum " + declaration.name.name
        if declaration.raw_type is not None:
            head += ": " + declaration.raw_type.display()
        lines = [head + " {"]
        for case in declaration.cases:
            text = INDENT + "case " + case.name.name
            if case.value is not None:
                text += " = " + print_expression(case.value)
            lines.append(text)
        return "\n".join(lines + ["}"])
    if isinstance(declaration, TraitDecl):
        head = (declaration.kind + " " if declaration.kind else "") + "trait " + declaration.name.name
        lines = [head + " {"]
        for member in declaration.members:
            lines.extend(_member(member, 1))
        return "\n".join(lines + ["}"])
    raise TypeError(f"Cannot print {type(declaration).__name__}")


def print_module(module: SourceModule) -> str:
    return "\n\n".join(print_declaration(d) for d in module.declarations) + "\n"
