"""
Flint type references
Basic types, arrays, dictionaries and named (struct, contract, enum, trait) types
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple


class TypeKind(Enum):
    ADDRESS = "Address"
    INT = "Int"
    BOOL = "Bool"
    STRING = "String"
    VOID = "Void"
    FIXED_ARRAY = "fixed-array"
    ARRAY = "array"
    DICTIONARY = "dictionary"
    NAMED = "named"
    SELF = "Self"
    RANGE = "range"
    EMPTY_ARRAY = "empty-array"
    EMPTY_DICTIONARY = "empty-dictionary"
    ERROR = "<error>"


BASIC_KINDS = (TypeKind.ADDRESS, TypeKind.INT, TypeKind.BOOL, TypeKind.STRING, TypeKind.VOID)

BASIC_TYPE_NAMES = {
    "Address": TypeKind.ADDRESS,
    "Int": TypeKind.INT,
    "Bool": TypeKind.BOOL,
    "String": TypeKind.STRING,
    "Void": TypeKind.VOID,
}

# Canonical ABI names for externally visible parameter types
ABI_TYPE_NAMES = {
    TypeKind.INT: "uint256",
    TypeKind.ADDRESS: "address",
    TypeKind.BOOL: "bool",
    TypeKind.STRING: "string",
}


@dataclass(frozen=True)
class TypeRef:
    kind: TypeKind
    name: str = ""
    args: Tuple["TypeRef", ...] = ()
    size: int = 0

    @property
    def element(self) -> "TypeRef":
        return self.args[-1]

    @property
    def key(self) -> "TypeRef":
        return self.args[0]

    @property
    def is_basic(self) -> bool:
        return self.kind in BASIC_KINDS

    @property
    def is_error(self) -> bool:
        return self.kind == TypeKind.ERROR

    @property
    def is_dynamic(self) -> bool:
        """Struct, array and dictionary values are handled by reference"""
        return self.kind in (TypeKind.FIXED_ARRAY, TypeKind.ARRAY, TypeKind.DICTIONARY,
                             TypeKind.NAMED, TypeKind.SELF,
                             TypeKind.EMPTY_ARRAY, TypeKind.EMPTY_DICTIONARY)

    def display(self) -> str:
        if self.kind in BASIC_KINDS or self.kind in (TypeKind.SELF, TypeKind.ERROR):
            return self.kind.value
        if self.kind == TypeKind.NAMED:
            if self.args:
                return f"{self.name}<{', '.join(a.display() for a in self.args)}>"
            return self.name
        if self.kind == TypeKind.ARRAY:
            return f"[{self.element.display()}]"
        if self.kind == TypeKind.FIXED_ARRAY:
            return f"{self.element.display()}[{self.size}]"
        if self.kind == TypeKind.DICTIONARY:
            return f"[{self.key.display()}: {self.element.display()}]"
        if self.kind == TypeKind.RANGE:
            return "Range<Int>"
        if self.kind == TypeKind.EMPTY_ARRAY:
            return "[]"
        return "[:]"

    def compact(self) -> str:
        """Display form without spaces, used in mangled names and the IR"""
        return self.display().replace(" ", "")

    def substitute_self(self, name: str) -> "TypeRef":
        if self.kind == TypeKind.SELF:
            return named(name)
        if self.args:
            return TypeRef(self.kind, self.name, tuple(a.substitute_self(name) for a in self.args), self.size)
        return self

    def __str__(self) -> str:
        return self.display()


ADDRESS = TypeRef(TypeKind.ADDRESS)
INT = TypeRef(TypeKind.INT)
BOOL = TypeRef(TypeKind.BOOL)
STRING = TypeRef(TypeKind.STRING)
VOID = TypeRef(TypeKind.VOID)
SELF = TypeRef(TypeKind.SELF)
ERROR = TypeRef(TypeKind.ERROR)
RANGE = TypeRef(TypeKind.RANGE, args=(INT,))
EMPTY_ARRAY = TypeRef(TypeKind.EMPTY_ARRAY)
EMPTY_DICTIONARY = TypeRef(TypeKind.EMPTY_DICTIONARY)


def named(name: str) -> TypeRef:
    return TypeRef(TypeKind.NAMED, name=name)


def array_of(element: TypeRef) -> TypeRef:
    return TypeRef(TypeKind.ARRAY, args=(element,))


def fixed_array_of(element: TypeRef, size: int) -> TypeRef:
    return TypeRef(TypeKind.FIXED_ARRAY, args=(element,), size=size)


def dictionary_of(key: TypeRef, value: TypeRef) -> TypeRef:
    return TypeRef(TypeKind.DICTIONARY, args=(key, value))


def basic_type(name: str) -> Optional[TypeRef]:
    kind = BASIC_TYPE_NAMES.get(name)
    return TypeRef(kind) if kind else None


def types_compatible(expected: TypeRef, actual: TypeRef) -> bool:
    """Structural identity, with the empty literals fitting any collection
    and error types accepted silently (already reported)"""
    if expected.is_error or actual.is_error:
        return True
    if actual.kind == TypeKind.EMPTY_ARRAY:
        return expected.kind in (TypeKind.ARRAY, TypeKind.EMPTY_ARRAY)
    if actual.kind == TypeKind.EMPTY_DICTIONARY:
        return expected.kind in (TypeKind.DICTIONARY, TypeKind.EMPTY_DICTIONARY)
    return expected == actual


def abi_type_name(type_ref: TypeRef) -> str:
    if type_ref.kind in ABI_TYPE_NAMES:
        return ABI_TYPE_NAMES[type_ref.kind]
    if type_ref.kind == TypeKind.ARRAY:
        return abi_type_name(type_ref.element) + "[]"
    if type_ref.kind == TypeKind.FIXED_ARRAY:
        return f"{abi_type_name(type_ref.element)}[{type_ref.size}]"
    raise ValueError(f"Type '{type_ref.display()}' has no ABI representation")


class _TypeTextReader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def read(self) -> TypeRef:
        if self.text.startswith("[", self.pos):
            self.pos += 1
            first = self.read()
            if self.text.startswith(":", self.pos):
                self.pos += 1
                second = self.read()
                self._expect("]")
                result = dictionary_of(first, second)
            else:
                self._expect("]")
                result = array_of(first)
        else:
            start = self.pos
            while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] in "_$"):
                self.pos += 1
            word = self.text[start:self.pos]
            if not word:
                raise ValueError(f"Malformed type text '{self.text}'")
            result = basic_type(word) or (SELF if word == "Self" else named(word))
        while self.text.startswith("[", self.pos) and self.pos + 1 < len(self.text) and self.text[self.pos + 1].isdigit():
            end = self.text.index("]", self.pos)
            result = fixed_array_of(result, int(self.text[self.pos + 1:end]))
            self.pos = end + 1
        return result

    def _expect(self, char: str):
        if not self.text.startswith(char, self.pos):
            raise ValueError(f"Malformed type text '{self.text}'")
        self.pos += 1


def parse_type_text(text: str) -> TypeRef:
    """Inverse of TypeRef.compact for storable types"""
    reader = _TypeTextReader(text.replace(" ", ""))
    result = reader.read()
    if reader.pos != len(reader.text):
        raise ValueError(f"Malformed type text '{text}'")
    return result


# Word counts for struct layouts are computed by callers that know the structs
def storage_words(type_ref: TypeRef, struct_sizes: Dict[str, int]) -> int:
    if type_ref.kind == TypeKind.FIXED_ARRAY:
        return type_ref.size * storage_words(type_ref.element, struct_sizes)
    if type_ref.kind == TypeKind.NAMED and type_ref.name in struct_sizes:
        return struct_sizes[type_ref.name]
    return 1
