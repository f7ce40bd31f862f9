#!/usr/bin/env python3
"""
Tests for the Flint frontend
Tokeniser, parser, expression precedence and the round-trip printer
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from flint_ast import (
    AttemptExpression, BehaviourDecl, BinaryExpression, BracketedExpression, ContractDecl,
    FunctionCall, InOutExpression, RangeExpression, StructDecl, strip_spans,
)
from flint_lexer import TokenKind, tokenize
from flint_parser import parse, parse_expression, parse_source
from flint_printer import print_module

CONTRACTS_DIR = os.path.join(os.path.dirname(__file__), 'contracts')


def read_contract(name: str) -> str:
    with open(os.path.join(CONTRACTS_DIR, name), encoding='utf-8') as handle:
        return handle.read()


def expression(text: str):
    tree, diagnostics = parse_expression(tokenize(text))
    assert diagnostics == [], diagnostics
    return tree


def test_tokenize_variable_declaration():
    """`var x: Int = 0` scans to six tokens"""
    tokens = tokenize("var x: Int = 0")
    assert [t.text for t in tokens] == ["var", "x", ":", "Int", "=", "0"]
    assert [t.kind for t in tokens] == [
        TokenKind.KEYWORD, TokenKind.IDENTIFIER, TokenKind.PUNCTUATION,
        TokenKind.IDENTIFIER, TokenKind.OPERATOR, TokenKind.NUMBER,
    ]
    assert tokens[1].span.line == 1 and tokens[1].span.column == 5
    print("✅ variable declaration tokens")


def test_tokenize_empty_source():
    assert tokenize("") == []
    assert tokenize("// only a comment") == []
    print("✅ empty source")


def test_tokens_reconstruct_source():
    source = "contract C {\n  var a: [Address: Int] = [:]\n}\n"
    tokens = tokenize(source)
    rebuilt = "".join(t.text for t in tokens)
    assert rebuilt == source.replace(" ", "")
    for token in tokens:
        assert source[token.offset:token.offset + len(token.text)] == token.text
    print("✅ token offsets cover the source")


def test_dollar_is_an_invalid_token():
    tokens = tokenize("my$Func")
    assert [(t.kind, t.text) for t in tokens] == [
        (TokenKind.IDENTIFIER, "my"), (TokenKind.INVALID, "$"), (TokenKind.IDENTIFIER, "Func"),
    ]
    allowed = tokenize("flint$send", allow_dollar=True)
    assert [t.text for t in allowed] == ["flint$send"]
    print("✅ '$' only inside library identifiers")


def test_dollar_reported_once_with_the_whole_word():
    source = "contract C {}\nC :: (any) {\n  public init() {}\n  func my$Func() {}\n}\n"
    module, diagnostics = parse_source(source, "dollar.flint")
    assert [d.code for d in diagnostics] == ["E-LEX-001"]
    assert diagnostics[0].message == "Use of invalid character '$' in 'my$Func'."
    assert diagnostics[0].line == 4
    assert len(module.declarations) == 2
    print("✅ invalid character diagnostic")


def test_literal_tokens():
    tokens = tokenize('0x00000000000000000000000000000000000000aa "hi" true 42')
    assert [t.kind for t in tokens] == [
        TokenKind.ADDRESS, TokenKind.STRING, TokenKind.BOOLEAN, TokenKind.NUMBER,
    ]
    print("✅ literal tokens")


def test_minimal_contract():
    module, diagnostics = parse_source("contract C {}\nC :: (any) {\n  public init() {}\n}\n")
    assert diagnostics == []
    contract, behaviour = module.declarations
    assert isinstance(contract, ContractDecl) and contract.typestates == []
    assert isinstance(behaviour, BehaviourDecl)
    assert [p.name for p in behaviour.protections] == ["any"]
    print("✅ minimal contract")


def test_simple_dao_shape():
    module, diagnostics = parse_source(read_contract("simple_dao.flint"), "simple_dao.flint")
    assert diagnostics == []
    structs = module.of_type(StructDecl)
    contracts = module.of_type(ContractDecl)
    behaviours = module.of_type(BehaviourDecl)
    assert [s.name.name for s in structs] == ["Proposal"]
    assert len(contracts) == 1
    assert [t.name for t in contracts[0].typestates] == ["Join", "Propose", "Vote"]
    assert len(behaviours) == 6

    join = behaviours[1]
    assert [s.name for s in join.state_group] == ["Join"]
    assert join.caller_binding.name == "caller"
    assert [p.name for p in join.protections] == ["any"]
    print("✅ SimpleDAO parses into 1 struct, 1 contract, 6 behaviours")


def test_precedence():
    tree = expression("a + b * c")
    assert isinstance(tree, BinaryExpression) and tree.op == "+"
    assert isinstance(tree.rhs, BinaryExpression) and tree.rhs.op == "*"

    tree = expression("a || b && c == d")
    assert tree.op == "||"
    assert tree.rhs.op == "&&"
    assert tree.rhs.rhs.op == "=="

    tree = expression("a - b - c")
    assert tree.op == "-" and tree.lhs.op == "-"

    tree = expression("a ** b ** c")
    assert tree.op == "**" and isinstance(tree.rhs, BinaryExpression)

    tree = expression("x = y + 1")
    assert tree.op == "=" and tree.rhs.op == "+"
    print("✅ binary precedence and associativity")


def test_expression_forms():
    assert isinstance(expression("(0..<10)"), RangeExpression)
    closed = expression("(1...n)")
    assert isinstance(closed, RangeExpression) and closed.closed
    assert isinstance(expression("(a + b)"), BracketedExpression)
    attempt = expression("try f(1)")
    assert isinstance(attempt, AttemptExpression)
    call = expression("balances[to].transfer(source: &balances[from], amount: 3)")
    assert isinstance(call, FunctionCall)
    assert [a.label for a in call.arguments] == ["source", "amount"]
    assert isinstance(call.arguments[0].expression, InOutExpression)
    print("✅ ranges, brackets, try and labelled calls")


def test_syntax_errors_recover_per_declaration():
    source = (
        "contract A {\n  var x: Int = \n}\n"
        "contract B {}\n"
        "B :: (any) {\n  public init() {}\n  func f( {\n}\n"
        "contract C {}\n"
    )
    module, diagnostics = parse_source(source, "broken.flint")
    assert len(diagnostics) >= 2
    assert all(d.code == "E-PARSE-001" for d in diagnostics)
    names = [d.name.name for d in module.of_type(ContractDecl)]
    assert "B" in names and "C" in names
    print("✅ parser recovers at the next top-level declaration")


def test_only_empty_collection_literals():
    tree, diagnostics = parse_expression(tokenize("[1, 2]"))
    assert tree is None
    assert diagnostics[0].code == "E-PARSE-001"
    print("✅ non-empty collection literals rejected")


def test_print_round_trip():
    for name in ("bank.flint", "simple_dao.flint", "valid_kotet.flint", "callers.flint", "states.flint"):
        original, diagnostics = parse_source(read_contract(name), name)
        assert diagnostics == []
        printed = print_module(original)
        reparsed, diagnostics = parse(tokenize(printed))
        assert diagnostics == [], (name, diagnostics)
        assert strip_spans(reparsed.declarations) == strip_spans(original.declarations), name
        assert print_module(reparsed) == printed
    print("✅ printer output reparses to the same tree")


def main():
    print("🧪 FLINT FRONTEND TESTS")
    print("=" * 30)
    tests = [
        test_tokenize_variable_declaration, test_tokenize_empty_source, test_tokens_reconstruct_source,
        test_dollar_is_an_invalid_token, test_dollar_reported_once_with_the_whole_word, test_literal_tokens,
        test_minimal_contract, test_simple_dao_shape, test_precedence, test_expression_forms,
        test_syntax_errors_recover_per_declaration, test_only_empty_collection_literals, test_print_round_trip,
    ]
    for test in tests:
        test()
    print("\n🎉 ALL FRONTEND TESTS PASSED!")
    return True


if __name__ == "__main__":
    sys.exit(0 if main() else 1)
