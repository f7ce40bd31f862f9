"""
Flint parser
Hand-written recursive descent parser with precedence climbing for binary
expressions; recovers from syntax errors by skipping to the next top-level
declaration
"""

from typing import List, Optional, Tuple

from diagnostics import Diagnostic, PASS_PARSE, error
from flint_ast import (
    AddressLiteral, ArrayLiteral, ASSIGNMENT_OPERATORS, AttemptExpression, BecomeStatement,
    BehaviourDecl, BinaryExpression, BoolLiteral, BracketedExpression, CallArgument,
    ContractDecl, DecimalLiteral, DictionaryLiteral, EmitStatement, EnumCase, EnumDecl,
    EventDecl, ForStatement, FunctionCall, FunctionDecl, Identifier, IfStatement,
    InOutExpression, IntLiteral, MemberAccess, Parameter, RangeExpression, ReturnStatement,
    SelfExpression, SourceModule, SpecialDecl, StringLiteral, StructDecl, SubscriptExpression,
    TraitDecl, VariableDeclaration,
)
from flint_lexer import Span, Token, TokenKind, tokenize
from flint_types import (
    SELF, TypeKind, TypeRef, array_of, basic_type, dictionary_of, fixed_array_of, named,
)

# Binding power, loosest to tightest; member access, subscripts and calls bind tighter still
PRECEDENCE = {
    "=": 1, "+=": 1, "-=": 1, "*=": 1, "/=": 1,
    "||": 2,
    "&&": 3,
    "==": 4, "!=": 4,
    "<": 5, "<=": 5, ">": 5, ">=": 5,
    "+": 6, "-": 6, "&+": 6, "&-": 6,
    "*": 7, "/": 7, "&*": 7,
    "**": 8,
}
RIGHT_ASSOCIATIVE = {"**"} | set(ASSIGNMENT_OPERATORS)

DECLARATION_MODIFIERS = ("public", "visible", "mutating")
TOP_LEVEL_KEYWORDS = ("contract", "struct", "enum", "trait")


class ParseError(Exception):
    def __init__(self, message: str, span: Span):
        super().__init__(message)
        self.message = message
        self.span = span


class FlintParser:
    def __init__(self, tokens: List[Token], file_name: str = ""):
        self.file_name = file_name
        self.diagnostics: List[Diagnostic] = []
        self.tokens = self._merge_invalid_tokens(list(tokens))
        self.pos = 0
        last = self.tokens[-1].span if self.tokens else Span(1, 1, 0, file_name)
        self._eof = Token(TokenKind.NEWLINE, "", Span(last.line, last.column + last.length, 0, last.file or file_name))

    # --- token plumbing ------------------------------------------------------

    def _report(self, message: str, span: Span, code: str = "E-PARSE-001"):
        self.diagnostics.append(error(code, message, span, pass_index=PASS_PARSE))

    def _merge_invalid_tokens(self, tokens: List[Token]) -> List[Token]:
        """Glue `my$Func` back into one identifier and report the bad characters"""
        merged: List[Token] = []
        i = 0
        while i < len(tokens):
            token = tokens[i]
            if token.kind == TokenKind.INVALID and token.text == "$":
                group = []
                if merged and merged[-1].kind == TokenKind.IDENTIFIER and \
                        merged[-1].offset + len(merged[-1].text) == token.offset:
                    group.append(merged.pop())
                group.append(token)
                j = i + 1
                while j < len(tokens) and tokens[j].offset == group[-1].offset + len(group[-1].text) and \
                        (tokens[j].kind in (TokenKind.IDENTIFIER, TokenKind.KEYWORD, TokenKind.NUMBER)
                         or (tokens[j].kind == TokenKind.INVALID and tokens[j].text == "$")):
                    group.append(tokens[j])
                    j += 1
                word = "".join(t.text for t in group)
                first = group[0]
                span = Span(first.span.line, first.span.column, len(word), first.span.file)
                self._report(f"Use of invalid character '$' in '{word}'.", span, "E-LEX-001")
                merged.append(Token(TokenKind.IDENTIFIER, word, span, first.offset))
                i = j
                continue
            if token.kind == TokenKind.INVALID:
                if token.text.startswith('"'):
                    self._report("Unterminated string literal.", token.span)
                else:
                    self._report(f"Use of invalid character '{token.text}'.", token.span, "E-LEX-001")
                i += 1
                continue
            merged.append(token)
            i += 1
        return merged

    @property
    def current(self) -> Token:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else self._eof

    def peek(self, offset: int = 1) -> Token:
        index = self.pos + offset
        return self.tokens[index] if index < len(self.tokens) else self._eof

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def advance(self) -> Token:
        token = self.current
        if not self.at_end():
            self.pos += 1
        return token

    def at_symbol(self, text: str) -> bool:
        return self.current.is_symbol(text)

    def at_keyword(self, text: str) -> bool:
        return self.current.is_keyword(text)

    def at_newline(self) -> bool:
        return not self.at_end() and self.current.kind == TokenKind.NEWLINE

    def skip_newlines(self):
        while self.at_newline():
            self.advance()

    def skip_terminators(self):
        while self.at_newline() or self.at_symbol(";"):
            self.advance()

    def _describe(self, token: Token) -> str:
        if token is self._eof:
            return "end of file"
        if token.kind == TokenKind.NEWLINE:
            return "newline"
        return f"'{token.text}'"

    def expect_symbol(self, text: str) -> Token:
        if not self.at_symbol(text):
            raise ParseError(f"Expected '{text}', found {self._describe(self.current)}.", self.current.span)
        return self.advance()

    def expect_keyword(self, text: str) -> Token:
        if not self.at_keyword(text):
            raise ParseError(f"Expected '{text}', found {self._describe(self.current)}.", self.current.span)
        return self.advance()

    def expect_identifier(self) -> Identifier:
        token = self.current
        if token.kind != TokenKind.IDENTIFIER:
            raise ParseError(f"Expected identifier, found {self._describe(token)}.", token.span)
        self.advance()
        return Identifier(token.text, token.span)

    def _starts_top_level(self) -> bool:
        token = self.current
        if token.kind == TokenKind.KEYWORD and token.text in TOP_LEVEL_KEYWORDS:
            return True
        return token.kind == TokenKind.IDENTIFIER and (self.peek().is_symbol("::") or self.peek().is_symbol("@"))

    def synchronize(self):
        self.advance()
        while not self.at_end():
            previous = self.tokens[self.pos - 1]
            if previous.kind == TokenKind.NEWLINE and self._starts_top_level():
                return
            self.advance()

    # --- declarations --------------------------------------------------------

    def parse_module(self) -> SourceModule:
        declarations = []
        while True:
            self.skip_terminators()
            if self.at_end():
                break
            try:
                declarations.append(self.parse_top_level())
            except ParseError as exc:
                self._report(exc.message, exc.span)
                self.synchronize()
        return SourceModule(declarations)

    def parse_top_level(self):
        token = self.current
        if token.is_keyword("contract"):
            if self.peek().is_keyword("trait"):
                return self.parse_trait()
            return self.parse_contract()
        if token.is_keyword("struct"):
            if self.peek().is_keyword("trait"):
                return self.parse_trait()
            return self.parse_struct()
        if token.is_keyword("enum"):
            return self.parse_enum()
        if token.is_keyword("trait"):
            return self.parse_trait()
        if token.kind == TokenKind.IDENTIFIER:
            return self.parse_behaviour()
        raise ParseError(f"Expected a top-level declaration, found {self._describe(token)}.", token.span)

    def _identifier_group(self) -> List[Identifier]:
        self.expect_symbol("(")
        names = []
        if not self.at_symbol(")"):
            names.append(self.expect_identifier())
            while self.at_symbol(","):
                self.advance()
                names.append(self.expect_identifier())
        self.expect_symbol(")")
        return names

    def _conformances(self) -> List[Identifier]:
        names = []
        if self.at_symbol(":"):
            self.advance()
            names.append(self.expect_identifier())
            while self.at_symbol(","):
                self.advance()
                names.append(self.expect_identifier())
        return names

    def parse_contract(self) -> ContractDecl:
        start = self.expect_keyword("contract")
        name = self.expect_identifier()
        typestates = self._identifier_group() if self.at_symbol("(") else []
        conformances = self._conformances()
        self.skip_newlines()
        self.expect_symbol("{")
        members = []
        while True:
            self.skip_terminators()
            if self.at_symbol("}"):
                break
            if self.at_keyword("event"):
                members.append(self.parse_event())
            else:
                members.append(self.parse_variable_declaration(self._modifiers()))
        self.expect_symbol("}")
        return ContractDecl(name, typestates, conformances, members, start.span)

    def _modifiers(self) -> List[str]:
        modifiers = []
        while self.current.kind == TokenKind.KEYWORD and self.current.text in DECLARATION_MODIFIERS:
            modifiers.append(self.advance().text)
        return modifiers

    def _attributes(self) -> List[str]:
        attributes = []
        while self.at_symbol("@"):
            self.advance()
            attributes.append(self.expect_identifier().name)
            self.skip_newlines()
        return attributes

    def parse_variable_declaration(self, modifiers: Optional[List[str]] = None) -> VariableDeclaration:
        token = self.current
        if not (token.is_keyword("var") or token.is_keyword("let")):
            raise ParseError(f"Expected 'var' or 'let', found {self._describe(token)}.", token.span)
        self.advance()
        name = self.expect_identifier()
        self.expect_symbol(":")
        type_annotation = self.parse_type()
        value = None
        if self.at_symbol("="):
            self.advance()
            value = self.parse_expression_tree(PRECEDENCE["||"])
        return VariableDeclaration(name, type_annotation, token.text == "let", list(modifiers or []), value, token.span)

    def parse_event(self) -> EventDecl:
        start = self.expect_keyword("event")
        name = self.expect_identifier()
        fields = []
        if self.at_symbol("("):
            self.advance()
            while not self.at_symbol(")"):
                field_name = self.expect_identifier()
                self.expect_symbol(":")
                fields.append(VariableDeclaration(field_name, self.parse_type(), True, [], None, field_name.span))
                if not self.at_symbol(")"):
                    self.expect_symbol(",")
            self.expect_symbol(")")
            return EventDecl(name, fields, start.span)
        self.skip_newlines()
        self.expect_symbol("{")
        while True:
            self.skip_terminators()
            if self.at_symbol("}"):
                break
            fields.append(self.parse_variable_declaration())
        self.expect_symbol("}")
        return EventDecl(name, fields, start.span)

    def parse_behaviour(self) -> BehaviourDecl:
        contract_name = self.expect_identifier()
        state_group = []
        if self.at_symbol("@"):
            self.advance()
            state_group = self._identifier_group()
        self.expect_symbol("::")
        caller_binding = None
        if self.current.kind == TokenKind.IDENTIFIER and self.peek().is_symbol("<-"):
            caller_binding = self.expect_identifier()
            self.advance()
        protections = self._identifier_group()
        if not protections:
            raise ParseError("Expected at least one caller protection.", self.current.span)
        self.skip_newlines()
        self.expect_symbol("{")
        members = []
        while True:
            self.skip_terminators()
            if self.at_symbol("}"):
                break
            members.append(self.parse_function_like(allow_signature=False))
        self.expect_symbol("}")
        return BehaviourDecl(contract_name, protections, members, state_group, caller_binding, contract_name.span)

    def parse_function_like(self, allow_signature: bool):
        start = self.current
        attributes = self._attributes()
        modifiers = self._modifiers()
        token = self.current
        if token.is_keyword("func"):
            self.advance()
            name = self.expect_identifier()
            parameters = self.parse_parameters()
            return_type = None
            if self.at_symbol("->"):
                self.advance()
                return_type = self.parse_type()
            body = self._optional_body(allow_signature)
            return FunctionDecl(name, parameters, return_type, body, attributes, modifiers, start.span)
        if token.is_keyword("init") or token.is_keyword("fallback"):
            self.advance()
            parameters = self.parse_parameters()
            body = self._optional_body(allow_signature and token.text == "init")
            return SpecialDecl(token.text, parameters, body, attributes, modifiers, start.span)
        raise ParseError(f"Expected 'func', 'init' or 'fallback', found {self._describe(token)}.", token.span)

    def _optional_body(self, allow_signature: bool):
        if self.at_symbol("{"):
            return self.parse_code_block()
        if allow_signature:
            return None
        raise ParseError(f"Expected '{{' to begin function body, found {self._describe(self.current)}.",
                         self.current.span)

    def parse_parameters(self) -> List[Parameter]:
        self.expect_symbol("(")
        parameters = []
        self.skip_newlines()
        while not self.at_symbol(")"):
            start = self.current
            is_implicit = is_inout = False
            while self.at_keyword("implicit") or self.at_keyword("inout"):
                if self.advance().text == "implicit":
                    is_implicit = True
                else:
                    is_inout = True
            name = self.expect_identifier()
            self.expect_symbol(":")
            if self.at_keyword("inout"):
                self.advance()
                is_inout = True
            type_annotation = self.parse_type()
            default = None
            if self.at_symbol("="):
                self.advance()
                default = self.parse_expression_tree(PRECEDENCE["||"])
            parameters.append(Parameter(name, type_annotation, is_implicit, is_inout, default, start.span))
            self.skip_newlines()
            if not self.at_symbol(")"):
                self.expect_symbol(",")
                self.skip_newlines()
        self.expect_symbol(")")
        return parameters

    def parse_struct(self) -> StructDecl:
        start = self.expect_keyword("struct")
        name = self.expect_identifier()
        conformances = self._conformances()
        self.skip_newlines()
        self.expect_symbol("{")
        members = []
        while True:
            self.skip_terminators()
            if self.at_symbol("}"):
                break
            members.append(self._struct_member())
        self.expect_symbol("}")
        return StructDecl(name, conformances, members, start.span)

    def _struct_member(self):
        saved = self.pos
        modifiers = self._modifiers()
        if self.at_keyword("var") or self.at_keyword("let"):
            return self.parse_variable_declaration(modifiers)
        self.pos = saved
        return self.parse_function_like(allow_signature=False)

    def parse_enum(self) -> EnumDecl:
        start = self.expect_keyword("enum")
        name = self.expect_identifier()
        raw_type = None
        if self.at_symbol(":"):
            self.advance()
            raw_type = self.parse_type()
        self.skip_newlines()
        self.expect_symbol("{")
        cases = []
        while True:
            self.skip_terminators()
            if self.at_symbol("}"):
                break
            case_token = self.expect_keyword("case")
            case_name = self.expect_identifier()
            value = None
            if self.at_symbol("="):
                self.advance()
                value = self.parse_expression_tree(PRECEDENCE["||"])
            cases.append(EnumCase(case_name, value, case_token.span))
        self.expect_symbol("}")
        return EnumDecl(name, cases, raw_type, start.span)

    def parse_trait(self) -> TraitDecl:
        start = self.current
        kind = ""
        if self.at_keyword("struct") or self.at_keyword("contract"):
            kind = self.advance().text
        self.expect_keyword("trait")
        name = self.expect_identifier()
        self.skip_newlines()
        self.expect_symbol("{")
        members = []
        while True:
            self.skip_terminators()
            if self.at_symbol("}"):
                break
            if self.at_keyword("event"):
                members.append(self.parse_event())
            elif self.current.kind == TokenKind.IDENTIFIER and (self.peek().is_symbol("::") or self.peek().is_symbol("@")):
                members.append(self.parse_behaviour())
            else:
                members.append(self.parse_function_like(allow_signature=True))
        self.expect_symbol("}")
        return TraitDecl(kind, name, members, start.span)

    # --- types ---------------------------------------------------------------

    def parse_type(self) -> TypeRef:
        token = self.current
        if self.at_symbol("["):
            self.advance()
            first = self.parse_type()
            if self.at_symbol(":"):
                self.advance()
                result = dictionary_of(first, self.parse_type())
            else:
                result = array_of(first)
            self.expect_symbol("]")
        elif token.kind == TokenKind.IDENTIFIER:
            self.advance()
            if token.text == "Self":
                result = SELF
            else:
                result = basic_type(token.text) or named(token.text)
            if self.at_symbol("<"):
                self.advance()
                args = [self.parse_type()]
                while self.at_symbol(","):
                    self.advance()
                    args.append(self.parse_type())
                self.expect_symbol(">")
                result = TypeRef(TypeKind.NAMED, token.text, tuple(args))
        else:
            raise ParseError(f"Expected type, found {self._describe(token)}.", token.span)
        while self.at_symbol("[") and self.peek().kind == TokenKind.NUMBER:
            self.advance()
            size = int(self.advance().text)
            self.expect_symbol("]")
            result = fixed_array_of(result, size)
        return result

    # --- statements ----------------------------------------------------------

    def parse_code_block(self) -> list:
        self.expect_symbol("{")
        statements = []
        while True:
            self.skip_terminators()
            if self.at_symbol("}"):
                break
            statements.append(self.parse_statement())
            if not (self.at_newline() or self.at_symbol(";") or self.at_symbol("}")):
                raise ParseError(f"Expected end of statement, found {self._describe(self.current)}.",
                                 self.current.span)
        self.expect_symbol("}")
        return statements

    def parse_statement(self):
        token = self.current
        if token.is_keyword("return"):
            self.advance()
            if self.at_newline() or self.at_symbol(";") or self.at_symbol("}") or self.at_end():
                return ReturnStatement(None, token.span)
            return ReturnStatement(self.parse_expression_tree(0), token.span)
        if token.is_keyword("become"):
            self.advance()
            return BecomeStatement(self.expect_identifier(), token.span)
        if token.is_keyword("emit"):
            self.advance()
            call = self.parse_expression_tree(0)
            if not isinstance(call, FunctionCall) or call.receiver is not None:
                raise ParseError("Expected event call after 'emit'.", token.span)
            return EmitStatement(call, token.span)
        if token.is_keyword("for"):
            return self.parse_for()
        if token.is_keyword("if"):
            return self.parse_if()
        return self.parse_expression_tree(0, allow_assignment=True)

    def parse_for(self) -> ForStatement:
        start = self.expect_keyword("for")
        variable = self.parse_variable_declaration()
        if variable.value is not None:
            raise ParseError("Loop variables cannot have an initial value.", variable.span)
        self.expect_keyword("in")
        iterable = self.parse_expression_tree(0)
        body = self.parse_code_block()
        return ForStatement(variable, iterable, body, start.span)

    def parse_if(self) -> IfStatement:
        start = self.expect_keyword("if")
        condition = self.parse_expression_tree(0)
        body = self.parse_code_block()
        else_body = None
        saved = self.pos
        self.skip_newlines()
        if self.at_keyword("else"):
            self.advance()
            if self.at_keyword("if"):
                else_body = [self.parse_if()]
            else:
                else_body = self.parse_code_block()
        else:
            self.pos = saved
        return IfStatement(condition, body, else_body, start.span)

    # --- expressions ---------------------------------------------------------

    def parse_expression_tree(self, min_precedence: int = 0, allow_assignment: bool = False):
        lhs = self.parse_unary()
        while True:
            token = self.current
            if token.kind != TokenKind.OPERATOR or token.text not in PRECEDENCE:
                return lhs
            precedence = PRECEDENCE[token.text]
            if precedence < min_precedence:
                return lhs
            is_assignment = token.text in ASSIGNMENT_OPERATORS
            if is_assignment and not allow_assignment:
                return lhs
            self.advance()
            self.skip_newlines()
            next_min = precedence if token.text in RIGHT_ASSOCIATIVE else precedence + 1
            rhs = self.parse_expression_tree(next_min, allow_assignment=is_assignment)
            lhs = BinaryExpression(token.text, lhs, rhs, _span_of(lhs, token))

    def parse_unary(self):
        token = self.current
        if token.is_symbol("&"):
            self.advance()
            return InOutExpression(self.parse_unary(), token.span)
        if token.is_keyword("try"):
            self.advance()
            call = self.parse_unary()
            if not isinstance(call, FunctionCall):
                raise ParseError("Expected function call after 'try'.", token.span)
            return AttemptExpression(call, token.span)
        return self.parse_postfix(self.parse_primary())

    def parse_postfix(self, expression):
        while True:
            if self.at_symbol("."):
                self.advance()
                member = self.expect_identifier()
                if self.at_symbol("("):
                    arguments = self.parse_arguments()
                    expression = FunctionCall(member, arguments, expression, _span_of(expression, None))
                else:
                    expression = MemberAccess(expression, member, _span_of(expression, None))
            elif self.at_symbol("["):
                self.advance()
                self.skip_newlines()
                index = self.parse_expression_tree(0)
                self.skip_newlines()
                self.expect_symbol("]")
                expression = SubscriptExpression(expression, index, _span_of(expression, None))
            else:
                return expression

    def parse_arguments(self) -> List[CallArgument]:
        self.expect_symbol("(")
        arguments = []
        self.skip_newlines()
        while not self.at_symbol(")"):
            label = None
            if self.current.kind == TokenKind.IDENTIFIER and self.peek().is_symbol(":"):
                label = self.advance().text
                self.advance()
            arguments.append(CallArgument(label, self.parse_expression_tree(PRECEDENCE["||"])))
            self.skip_newlines()
            if not self.at_symbol(")"):
                self.expect_symbol(",")
                self.skip_newlines()
        self.expect_symbol(")")
        return arguments

    def parse_primary(self):
        token = self.current
        kind = token.kind
        if kind == TokenKind.IDENTIFIER:
            self.advance()
            identifier = Identifier(token.text, token.span)
            if self.at_symbol("("):
                return FunctionCall(identifier, self.parse_arguments(), None, token.span)
            return identifier
        if token.is_keyword("self"):
            self.advance()
            return SelfExpression(token.span)
        if token.is_keyword("var") or token.is_keyword("let"):
            return self.parse_variable_declaration()
        if kind == TokenKind.NUMBER:
            self.advance()
            if "." in token.text:
                return DecimalLiteral(token.text, token.span)
            return IntLiteral(int(token.text), token.text, token.span)
        if kind == TokenKind.ADDRESS:
            self.advance()
            if len(token.text) != 42:
                self._report("Address literals must have exactly 40 hexadecimal digits.", token.span)
            value = int(token.text[2:], 16) if len(token.text) > 2 else 0
            return AddressLiteral(value, token.text, token.span)
        if kind == TokenKind.STRING:
            self.advance()
            return StringLiteral(token.text[1:-1], token.span)
        if kind == TokenKind.BOOLEAN:
            self.advance()
            return BoolLiteral(token.text == "true", token.span)
        if token.is_symbol("["):
            self.advance()
            if self.at_symbol("]"):
                self.advance()
                return ArrayLiteral(token.span)
            if self.at_symbol(":") and self.peek().is_symbol("]"):
                self.advance()
                self.advance()
                return DictionaryLiteral(token.span)
            raise ParseError("Only empty array '[]' and dictionary '[:]' literals are supported.", token.span)
        if token.is_symbol("("):
            self.advance()
            self.skip_newlines()
            inner = self.parse_expression_tree(0)
            self.skip_newlines()
            if self.at_symbol("..<") or self.at_symbol("..."):
                closed = self.advance().text == "..."
                end = self.parse_expression_tree(0)
                self.skip_newlines()
                self.expect_symbol(")")
                return RangeExpression(inner, end, closed, token.span)
            self.expect_symbol(")")
            return BracketedExpression(inner, token.span)
        raise ParseError(f"Expected expression, found {self._describe(token)}.", token.span)


def _span_of(expression, fallback: Optional[Token]) -> Span:
    span = getattr(expression, "span", None)
    if span is not None and span.line:
        return span
    return fallback.span if fallback else Span(0, 0, 0)


def parse(tokens: List[Token], file_name: str = "") -> Tuple[SourceModule, List[Diagnostic]]:
    """Parse a token list into a module plus syntax diagnostics"""
    parser = FlintParser(tokens, file_name)
    module = parser.parse_module()
    return module, parser.diagnostics


def parse_expression(tokens: List[Token], min_precedence: int = 0) -> Tuple[Optional[object], List[Diagnostic]]:
    """Parse a single expression; assignment is accepted at the outermost level"""
    parser = FlintParser([t for t in tokens if t.kind != TokenKind.NEWLINE])
    try:
        expression = parser.parse_expression_tree(min_precedence, allow_assignment=min_precedence <= 1)
        if not parser.at_end():
            raise ParseError(f"Unexpected {parser._describe(parser.current)} after expression.", parser.current.span)
    except ParseError as exc:
        parser._report(exc.message, exc.span)
        return None, parser.diagnostics
    return expression, parser.diagnostics


def parse_source(source: str, file_name: str = "", allow_dollar: bool = False) -> Tuple[SourceModule, List[Diagnostic]]:
    return parse(tokenize(source, allow_dollar=allow_dollar, file_name=file_name), file_name)
