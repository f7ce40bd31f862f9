"""
Flint standard library
Embedded Flint source for the Asset trait and the Wei currency, plus the
schemas of the global functions and the runtime hooks the library may call
"""

from typing import List, Tuple

from diagnostics import Diagnostic
from flint_ast import SourceModule
from flint_parser import parse_source

STDLIB_FILE_NAME = "<stdlib>/Asset.flint"
CURRENCY_TYPE = "Wei"
ASSET_TRAIT = "Asset"
RUNTIME_PREFIX = "flint$"

ASSET_SOURCE = """\
// Value-carrying types conform to Asset. Conformers implement the raw value
// accessors and the initialisers; the transfers come from the trait.
struct trait Asset {
  // Creates the asset from an integer amount.
  init(unsafeRawValue: Int)

  // Moves `amount` out of `source`; fails when `source` holds less.
  init(source: inout Self, amount: Int)

  // Moves everything out of `source`.
  init(source: inout Self)

  mutating func transfer(source: inout Self, amount: Int) {
    if source.getRawValue() < amount {
      fatalError()
    }

    let unused1: Int = source.setRawValue(value: source.getRawValue() - amount)
    let unused2: Int = setRawValue(value: getRawValue() + amount)
  }

  mutating func transfer(source: inout Self) {
    transfer(source: &source, amount: source.getRawValue())
  }

  // Stores a new raw value and returns it.
  mutating func setRawValue(value: Int) -> Int

  func getRawValue() -> Int
}

struct Wei: Asset {
  var rawValue: Int = 0

  init(unsafeRawValue: Int) {
    self.rawValue = unsafeRawValue
    flint$recordMint(unsafeRawValue)
  }

  init(source: inout Wei, amount: Int) {
    transfer(source: &source, amount: amount)
  }

  init(source: inout Wei) {
    let amount: Int = source.getRawValue()
    transfer(source: &source, amount: amount)
  }

  mutating func setRawValue(value: Int) -> Int {
    rawValue = value
    return rawValue
  }

  func getRawValue() -> Int {
    return rawValue
  }
}
"""

# Global functions available to every program
GLOBAL_FUNCTION_SCHEMAS = [
    {
        "name": "send",
        "description": "Send the Wei held by value to address and clear value",
        "parameters": [
            {"name": "address", "type": "Address"},
            {"name": "value", "type": "Wei", "inout": True},
        ],
        "returns": "Void",
        "runtime": "flint$send",
    },
    {
        "name": "fatalError",
        "description": "Abort the transaction and revert every state change",
        "parameters": [],
        "returns": "Void",
        "runtime": "flint$fatalError",
        "terminates": True,
    },
    {
        "name": "assert",
        "description": "Abort the transaction when condition is false",
        "parameters": [{"name": "condition", "type": "Bool"}],
        "returns": "Void",
        "runtime": "flint$assert",
    },
]

# Hooks only stdlib-origin code may call
RUNTIME_FUNCTION_SCHEMAS = [
    {
        "name": "flint$recordMint",
        "description": "Account for Wei created from an integer amount",
        "parameters": [{"name": "amount", "type": "Int"}],
        "returns": "Void",
        "runtime": "flint$recordMint",
    },
]


def is_stdlib_file(file_name: str) -> bool:
    return file_name.startswith("<stdlib>")


def load_stdlib() -> Tuple[SourceModule, List[Diagnostic]]:
    return parse_source(ASSET_SOURCE, STDLIB_FILE_NAME, allow_dollar=True)
