#!/usr/bin/env python3
"""
Tests for the Flint analysis passes
Environment, caller protections, typestates, mutation, initialisation,
types, traits and diagnostic rendering
"""

import json
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from compiler import FlintCompiler
from diagnostics import (
    Note, Severity, diagnostic_from_dict, diagnostic_to_dict, error, render, render_all,
    sort_diagnostics, warning,
)
from environment import ProtectionKind, resolve_protection
from flint_ast import Identifier
from flint_lexer import Span

CONTRACTS_DIR = os.path.join(os.path.dirname(__file__), 'contracts')
CASE_FILE = "case.flint"

BASE = """contract C {
  var owner: Address
  var count: Int = 0
  var keyed: [Int: Int] = [:]
}

C :: caller <- (any) {
  public init() {
    owner = caller
  }
%s
}
%s
"""

STATES = """contract S (Open, Closed) {
  var n: Int = 0
}

S @(any) :: (any) {
  public init() {
    become Open
  }

  public func peek() {
    step()
  }
}

S @(Open) :: (any) {
  public mutating func close() {
    become Closed
    step()
  }
}

S @(Closed) :: (any) {
  mutating func step() {
    n += 1
  }
}
"""


def compile_contract(name: str):
    with open(os.path.join(CONTRACTS_DIR, name), encoding='utf-8') as handle:
        return FlintCompiler().compile_source(handle.read(), name)


def compile_case(text: str):
    return FlintCompiler().compile_source(text, CASE_FILE)


def case(functions: str = "", blocks: str = ""):
    return compile_case(BASE % (functions, blocks))


def user_diagnostics(result):
    return [d for d in result.diagnostics if d.span.file == CASE_FILE]


def user_codes(result):
    return [d.code for d in user_diagnostics(result)]


def find(result, code):
    matches = [d for d in user_diagnostics(result) if d.code == code]
    assert matches, f"expected {code}, got {user_codes(result)}"
    return matches[0]


# Each entry: (description, functions in the (any) block, extra top-level blocks, expected code, expected line,
# (functions, blocks) of a corrected program with no diagnostics)
GOLDEN_CASES = [
    ("mutation in a nonmutating function",
     "  public func bump() {\n    count += 1\n  }\n", "", "E-MUT-001", 12,
     ("  public mutating func bump() {\n    count += 1\n  }\n", "")),
    ("unnecessary mutating",
     "  public mutating func get() -> Int {\n    return count\n  }\n", "", "W-MUT-002", 11,
     ("  public func get() -> Int {\n    return count\n  }\n", "")),
    ("let reassignment",
     "  public func f() -> Int {\n    let x: Int = 1\n    x = 2\n    return x\n  }\n", "", "E-MUT-003", 13,
     ("  public func f() -> Int {\n    var x: Int = 1\n    x = 2\n    return x\n  }\n", "")),
    ("discarded result",
     "  public func g() -> Int {\n    return 1\n  }\n  public func f() {\n    g()\n  }\n", "", "E-RES-001", 15,
     ("  public func g() -> Int {\n    return 1\n  }\n  public func f() -> Int {\n    return g()\n  }\n", "")),
    ("code after return",
     "  public func f() -> Int {\n    return 1\n    let y: Int = 2\n  }\n", "", "W-FLOW-001", 13,
     ("  public func f() -> Int {\n    return 1\n  }\n", "")),
    ("missing return",
     "  public func f() -> Int {\n    let y: Int = 2\n  }\n", "", "E-TYPE-001", 11,
     ("  public func f() -> Int {\n    let y: Int = 2\n    return y\n  }\n", "")),
    ("wrong return type",
     "  public func f() -> Int {\n    return true\n  }\n", "", "E-TYPE-002", 12,
     ("  public func f() -> Bool {\n    return true\n  }\n", "")),
    ("incompatible assignment",
     "  public mutating func f() {\n    count = true\n  }\n", "", "E-TYPE-003", 12,
     ("  public mutating func f() {\n    count = 1\n  }\n", "")),
    ("incompatible argument",
     "  func g(a: Int) {\n  }\n  public func f() {\n    g(a: true)\n  }\n", "", "E-TYPE-004", 14,
     ("  func g(a: Int) {\n  }\n  public func f() {\n    g(a: 1)\n  }\n", "")),
    ("invalid operand",
     "  public func f() -> Bool {\n    return 1 && true\n  }\n", "", "E-TYPE-005", 12,
     ("  public func f() -> Bool {\n    return false && true\n  }\n", "")),
    ("fractional literal",
     "  public func f() -> Int {\n    return 1.5\n  }\n", "", "E-TYPE-006", 12,
     ("  public func f() -> Int {\n    return 15\n  }\n", "")),
    ("incompatible initialiser",
     "  public func f() {\n    let b: Bool = 1\n  }\n", "", "E-TYPE-007", 12,
     ("  public func f() {\n    let b: Bool = true\n  }\n", "")),
    ("Int passed inout",
     "  func g(a: inout Int) {\n  }\n  public func f() {\n    var x: Int = 1\n    g(a: &x)\n  }\n", "",
     "E-TYPE-008", 15,
     ("  func g(a: inout Wei) {\n  }\n  public func f() {\n    var w: Wei = Wei(0)\n    g(a: &w)\n  }\n", "")),
    ("Address used as an Int key",
     "  public func f() -> Int {\n    return keyed[caller]\n  }\n", "", "W-TYPE-009", 12,
     ("  public func f() -> Int {\n    return keyed[count]\n  }\n", "")),
    ("undeclared identifier",
     "  public func f() -> Int {\n    return missing\n  }\n", "", "E-DECL-004", 12,
     ("  public func f() -> Int {\n    return count\n  }\n", "")),
    ("unknown type",
     "  public func f() {\n    let t: Unknown = 1\n  }\n", "", "E-DECL-005", 12,
     ("  public func f() {\n    let t: Int = 1\n  }\n", "")),
    ("dynamic public parameter",
     "  public func f(a: [Int]) {\n  }\n", "", "E-DECL-003", 11,
     ("  func f(a: [Int]) {\n  }\n", "")),
    ("function redeclaration",
     "  public func f() {\n  }\n  public func f() {\n  }\n", "", "E-DECL-001", 13,
     ("  public func f() {\n  }\n  public func g() {\n  }\n", "")),
    ("behaviour without contract",
     "", "D :: (any) {\n}\n", "E-DECL-002", 13,
     ("", "C :: (any) {\n}\n")),
    ("undefined protection",
     "", "C :: (admin) {\n}\n", "E-PROT-001", 13,
     ("", "C :: (owner) {\n}\n")),
    ("protection-incompatible call",
     "  public func f() {\n    h()\n  }\n", "C :: (owner) {\n  func h() {\n  }\n}\n", "E-PROT-002", 12,
     ("  public func f() {\n    h()\n  }\n", "C :: (any) {\n  func h() {\n  }\n}\n")),
    ("unknown function",
     "  public func f() {\n    nothing()\n  }\n", "", "E-PROT-003", 12,
     ("  public func f() {\n    g()\n  }\n  func g() {\n  }\n", "")),
    ("undefined typestate in become",
     "  public mutating func f() {\n    become Nowhere\n  }\n", "", "E-STATE-001", 12,
     ("  public mutating func f() {\n    count = 1\n  }\n", "")),
    ("second public initialiser",
     "  public init(x: Int) {\n    owner = caller\n  }\n", "", "E-INIT-004", 11,
     ("", "")),
    ("payable without currency",
     "  @payable\n  public func f() {\n  }\n", "", "E-PAY-001", 12,
     ("  @payable\n  public func f(implicit v: Wei) {\n  }\n", "")),
    ("implicit outside payable",
     "  public func f(implicit v: Wei) {\n  }\n", "", "E-PAY-003", 11,
     ("  @payable\n  public func f(implicit v: Wei) {\n  }\n", "")),
    ("mutating fallback",
     "  public mutating fallback() {\n  }\n", "", "W-MUT-004", 11,
     ("  public fallback() {\n  }\n", "")),
    ("fallback changing state",
     "  public fallback() {\n    count = 1\n  }\n", "", "E-MUT-005", 12,
     ("  public fallback() {\n  }\n", "")),
]


def test_fixtures_compile():
    for name in ("bank.flint", "simple_dao.flint", "valid_kotet.flint", "callers.flint", "states.flint"):
        result = compile_contract(name)
        assert result.ok, (name, [render(d) for d in result.errors])
        assert result.program is not None
    print("✅ example contracts compile")


def test_base_case_is_clean():
    result = case("  public func get() -> Int {\n    return count\n  }\n")
    assert result.ok
    assert user_diagnostics(result) == []
    print("✅ base program has no diagnostics")


def test_golden_cases():
    for description, functions, blocks, code, line, fixed in GOLDEN_CASES:
        result = case(functions, blocks)
        errors = [(d.code, d.span.line) for d in user_diagnostics(result) if d.severity == Severity.ERROR]
        if code.startswith("E-"):
            assert errors == [(code, line)], (description, errors)
            assert not result.ok, description
        else:
            warnings = [(d.code, d.span.line) for d in user_diagnostics(result) if d.severity == Severity.WARNING]
            assert errors == [], (description, errors)
            assert warnings == [(code, line)], (description, warnings)

        repaired = case(*fixed)
        assert repaired.ok and user_codes(repaired) == [], (description, user_codes(repaired))
        print(f"   {code:<12} line {line:<3} {description}")
    print(f"✅ {len(GOLDEN_CASES)} golden diagnostics, each with a clean corrected program")


def test_golden_messages():
    result = case("  public func bump() {\n    count += 1\n  }\n")
    assert find(result, "E-MUT-001").message == "Use of mutating statement in a nonmutating function."

    result = case("  public func g() -> Int {\n    return 1\n  }\n  public func f() {\n    g()\n  }\n")
    assert find(result, "E-RES-001").message == "Result of function call to 'g' is unused."

    result = case("", "C :: (admin) {\n}\n")
    assert find(result, "E-PROT-001").message == (
        "Caller protection 'admin' is undefined in 'C', or has incompatible type.")

    result = case("", "D :: (any) {\n}\n")
    assert find(result, "E-DECL-002").message == (
        "Contract behaviour declaration for 'D' has no associated contract declaration.")

    result = case("  public func f() {\n    h()\n  }\n", "C :: (owner) {\n  func h() {\n  }\n}\n")
    diagnostic = find(result, "E-PROT-002")
    assert diagnostic.message == (
        "Function 'h' is not in scope or cannot be called using caller protection '(any)'.")
    assert diagnostic.notes[0].message == (
        "Perhaps you meant this function, which requires caller protection '(owner)'.")
    print("✅ diagnostic messages")


POINT_STRUCT = "struct Point {\n  var x: Int\n  var y: Int = 0\n\n  init(x: Int) {\n    self.x = x\n  }\n}\n"


def test_let_struct_members_are_constant():
    frozen = case("  public func f() -> Int {\n    let p: Point = Point(1)\n    p.x = 2\n    return p.x\n  }\n",
                  POINT_STRUCT)
    assert not frozen.ok
    assert [(d.code, d.span.line) for d in frozen.errors if d.span.file == CASE_FILE] == [("E-MUT-003", 13)]

    compound = case("  public func f() -> Int {\n    let p: Point = Point(1)\n    p.y += 1\n    return p.y\n  }\n",
                    POINT_STRUCT)
    assert "E-MUT-003" in user_codes(compound)

    mutable = case("  public func f() -> Int {\n    var p: Point = Point(1)\n    p.x = 2\n    return p.x\n  }\n",
                   POINT_STRUCT)
    assert mutable.ok and user_codes(mutable) == [], user_codes(mutable)
    print("✅ members of a let struct cannot be assigned")


def test_attempted_call_is_not_checked_statically():
    result = case("  public func f() {\n    try h()\n  }\n", "C :: (owner) {\n  func h() {\n  }\n}\n")
    assert "E-PROT-002" not in user_codes(result)
    assert result.ok
    print("✅ 'try' calls are left to the runtime check")


def test_matching_protections_are_compatible():
    blocks = "C :: (owner) {\n  public func f() {\n    h()\n  }\n  func h() {\n  }\n}\n"
    result = case("", blocks)
    assert result.ok, user_codes(result)
    print("✅ same-protection calls pass")


def test_typestate_incompatible_calls():
    result = compile_case(STATES)
    codes = user_codes(result)
    assert codes.count("E-STATE-003") == 2, codes
    messages = [d.message for d in user_diagnostics(result) if d.code == "E-STATE-003"]
    assert "Function 'step' cannot be called in typestate '(any)'." in messages
    assert "Function 'step' cannot be called in typestate '(Open)'." in messages
    print("✅ typestate-incompatible calls")


def test_typestate_property_collision():
    result = compile_case(
        "contract S (Open) {\n  var Open: Int = 0\n}\n"
        "S :: (any) {\n  public init() {\n  }\n}\n"
    )
    assert "E-STATE-002" in user_codes(result)
    print("✅ typestate/property collision")


def test_initialiser_rules():
    # no initialiser at all
    result = compile_case("contract N {\n  var owner: Address\n}\nN :: (any) {\n  public func f() {\n  }\n}\n")
    codes = user_codes(result)
    assert "E-INIT-003" in codes and "E-INIT-001" in codes
    assert find(result, "E-INIT-001").message == (
        "State property 'owner' needs to be assigned a value, as no initialiser was declared.")

    # initialiser that leaves owner unset
    result = compile_case("contract N {\n  var owner: Address\n}\nN :: (any) {\n  public init() {\n  }\n}\n")
    diagnostic = find(result, "E-INIT-002")
    assert diagnostic.message == "Return from initialiser without initialising all properties."
    assert diagnostic.notes[0].message == "'owner' is uninitialised."

    # initialiser assigning on one branch only
    result = compile_case(
        "contract N {\n  var owner: Address\n}\n"
        "N :: caller <- (any) {\n  public init(flag: Bool) {\n    if flag {\n      owner = caller\n    }\n  }\n}\n"
    )
    assert "E-INIT-002" in user_codes(result)

    # private initialiser only
    result = compile_case("contract N {\n  var n: Int = 0\n}\nN :: (any) {\n  init() {\n  }\n}\n")
    assert user_codes(result) == ["E-INIT-003"]

    # public initialiser under a restrictive protection
    result = compile_case(
        "contract N {\n  var owner: Address = 0x0000000000000000000000000000000000000001\n}\n"
        "N :: (owner) {\n  public init() {\n  }\n}\n"
    )
    assert "E-INIT-005" in user_codes(result)
    print("✅ initialiser rules")


def test_trait_conformance():
    traits = (
        "struct trait Named {\n  func label() -> Int\n}\n\n"
        "struct Tag: Named {\n  var x: Int = 0\n}\n\n"
    )
    result = compile_case(traits + BASE % ("", ""))
    diagnostic = find(result, "E-TRAIT-001")
    assert diagnostic.message == "'Tag' does not implement 'label()' required by trait 'Named'."

    result = compile_case("struct Tag: Missing {\n  var x: Int = 0\n}\n\n" + BASE % ("", ""))
    assert find(result, "E-TRAIT-003").message == "Use of undeclared trait 'Missing'."

    implemented = (
        "struct trait Named {\n  func label() -> Int\n}\n\n"
        "struct Tag: Named {\n  var x: Int = 0\n\n  func label() -> Int {\n    return x\n  }\n}\n\n"
    )
    assert compile_case(implemented + BASE % ("", "")).ok
    print("✅ trait conformance")


def test_protection_resolution():
    bank = compile_contract("bank.flint")
    protection, diagnostics = resolve_protection(bank.env, "Bank", Identifier("manager"))
    assert diagnostics == [] and protection.kind == ProtectionKind.ADDRESS_PROPERTY
    protection, _ = resolve_protection(bank.env, "Bank", Identifier("accounts"))
    assert protection.kind == ProtectionKind.ADDRESS_LIST_PROPERTY
    protection, _ = resolve_protection(bank.env, "Bank", Identifier("any"))
    assert protection.kind == ProtectionKind.ANY
    protection, diagnostics = resolve_protection(bank.env, "Bank", Identifier("lastIndex"))
    assert protection is None and diagnostics[0].code == "E-PROT-001"

    dao = compile_contract("simple_dao.flint")
    protection, _ = resolve_protection(dao.env, "SimpleDAO", Identifier("tokenHolder"))
    assert protection.kind == ProtectionKind.PREDICATE
    print("✅ caller protections resolve to property, list and predicate kinds")


def test_environment_shapes():
    dao = compile_contract("simple_dao.flint")
    info = dao.env.contracts["SimpleDAO"]
    assert info.typestates == ["Join", "Propose", "Vote"]
    assert "Proposal" in dao.env.structures
    assert dao.env.is_currency(dao.env.contracts["SimpleDAO"].property_named("balances").type.element)
    print("✅ environment records typestates, structures and currencies")


def test_render_human_and_json():
    span = Span(3, 7, 4, "bank.flint")
    diagnostic = error("E-DECL-001", "Invalid redeclaration of 'f'.", span,
                       [Note("Previous declaration on line 2, column 5.", Span(2, 5, 1, "bank.flint"))])
    assert render(diagnostic) == (
        "error: Invalid redeclaration of 'f'.\n  Note: Previous declaration on line 2, column 5.")
    assert render(diagnostic, with_location=True).startswith("bank.flint:3:7: error:")

    data = json.loads(render(diagnostic, "json"))
    assert data["code"] == "E-DECL-001" and data["line"] == 3 and data["column"] == 7
    restored = diagnostic_from_dict(diagnostic_to_dict(diagnostic))
    assert restored == diagnostic

    assert json.loads(render_all([diagnostic], "json"))[0]["severity"] == "error"
    print("✅ human and JSON rendering")


def test_sort_and_deduplicate():
    late = warning("W-FLOW-001", "late", Span(9, 1, 1, "a.flint"))
    early = error("E-TYPE-002", "early", Span(2, 3, 1, "a.flint"))
    other_file = error("E-TYPE-002", "other", Span(1, 1, 1, "b.flint"))
    ordered = sort_diagnostics([other_file, late, early, early], ["a.flint", "b.flint"])
    assert [d.message for d in ordered] == ["early", "late", "other"]
    assert ordered[1].severity == Severity.WARNING
    print("✅ diagnostics sorted by file, line and column")


def test_compilation_is_deterministic():
    text = BASE % ("  public func bump() {\n    count += 1\n  }\n", "C :: (admin) {\n}\n")
    first = [diagnostic_to_dict(d) for d in compile_case(text).diagnostics]
    second = [diagnostic_to_dict(d) for d in compile_case(text).diagnostics]
    assert first == second
    print("✅ identical input gives identical diagnostics")


def main():
    print("🧪 FLINT ANALYSIS TESTS")
    print("=" * 30)
    tests = [
        test_fixtures_compile, test_base_case_is_clean, test_golden_cases, test_golden_messages,
        test_attempted_call_is_not_checked_statically, test_matching_protections_are_compatible,
        test_typestate_incompatible_calls, test_typestate_property_collision, test_initialiser_rules,
        test_trait_conformance, test_protection_resolution, test_environment_shapes,
        test_render_human_and_json, test_sort_and_deduplicate, test_compilation_is_deterministic,
        test_let_struct_members_are_constant,
    ]
    for test in tests:
        test()
    print("\n🎉 ALL ANALYSIS TESTS PASSED!")
    return True


if __name__ == "__main__":
    sys.exit(0 if main() else 1)
