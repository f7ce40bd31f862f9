"""
Flint tokeniser
Turns source text into tokens with spans; never fails, malformed characters
become INVALID tokens that the parser reports
"""

from dataclasses import dataclass
from enum import Enum
from typing import List


class TokenKind(Enum):
    KEYWORD = "keyword"
    IDENTIFIER = "identifier"
    NUMBER = "numeric-literal"
    ADDRESS = "address-literal"
    STRING = "string-literal"
    BOOLEAN = "boolean-literal"
    PUNCTUATION = "punctuation"
    OPERATOR = "operator"
    NEWLINE = "newline"
    INVALID = "invalid"


KEYWORDS = {
    "contract", "struct", "enum", "trait", "event", "case",
    "var", "let", "func", "init", "fallback",
    "public", "visible", "mutating", "implicit", "inout",
    "return", "become", "emit", "for", "in", "if", "else", "self", "try",
}

# Longest spellings first so that the scanner is greedy
PUNCTUATION = ["..<", "...", "::", "->", "<-", "(", ")", "{", "}", "[", "]", ",", ":", ";", "@", "."]
OPERATORS = ["**", "&+", "&-", "&*", "==", "!=", "+=", "-=", "*=", "/=", "||", "&&", "<=", ">=",
             "+", "-", "*", "/", "=", "<", ">", "&"]

SYMBOLS = sorted(
    [(text, TokenKind.PUNCTUATION) for text in PUNCTUATION] + [(text, TokenKind.OPERATOR) for text in OPERATORS],
    key=lambda entry: -len(entry[0]),
)

HEX_DIGITS = "0123456789abcdefABCDEF"


@dataclass(frozen=True)
class Span:
    line: int
    column: int
    length: int = 1
    file: str = ""

    def describe(self) -> str:
        return f"line {self.line}, column {self.column}"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    span: Span
    offset: int = 0

    def is_symbol(self, text: str) -> bool:
        return self.kind in (TokenKind.PUNCTUATION, TokenKind.OPERATOR) and self.text == text

    def is_keyword(self, text: str) -> bool:
        return self.kind == TokenKind.KEYWORD and self.text == text


def _is_identifier_start(char: str) -> bool:
    return char.isalpha() or char == "_"


def _is_identifier_char(char: str, allow_dollar: bool) -> bool:
    return char.isalnum() or char == "_" or (allow_dollar and char == "$")


def tokenize(source: str, allow_dollar: bool = False, file_name: str = "") -> List[Token]:
    """Scan the whole source; `$` inside identifiers is only legal in stdlib text"""
    tokens: List[Token] = []
    pos = 0
    line = 1
    line_start = 0
    length = len(source)

    def make(kind: TokenKind, start: int, end: int) -> Token:
        return Token(kind, source[start:end], Span(line, start - line_start + 1, end - start, file_name), start)

    while pos < length:
        char = source[pos]

        if char == "\n":
            tokens.append(make(TokenKind.NEWLINE, pos, pos + 1))
            pos += 1
            line += 1
            line_start = pos
            continue
        if char in " \t\r":
            pos += 1
            continue
        if source.startswith("//", pos):
            while pos < length and source[pos] != "\n":
                pos += 1
            continue

        start = pos
        if _is_identifier_start(char):
            while pos < length and _is_identifier_char(source[pos], allow_dollar):
                pos += 1
            word = source[start:pos]
            if word in ("true", "false"):
                kind = TokenKind.BOOLEAN
            elif word in KEYWORDS:
                kind = TokenKind.KEYWORD
            else:
                kind = TokenKind.IDENTIFIER
            tokens.append(make(kind, start, pos))
            continue

        if char.isdigit():
            if source.startswith(("0x", "0X"), pos):
                end = pos + 2
                while end < length and source[end] in HEX_DIGITS:
                    end += 1
                tokens.append(make(TokenKind.ADDRESS, start, end))
                pos = end
                continue
            while pos < length and source[pos].isdigit():
                pos += 1
            # fractional literal: number "." number, rejected later by the type checker
            if pos + 1 < length and source[pos] == "." and source[pos + 1].isdigit():
                pos += 1
                while pos < length and source[pos].isdigit():
                    pos += 1
            tokens.append(make(TokenKind.NUMBER, start, pos))
            continue

        if char == '"':
            pos += 1
            while pos < length and source[pos] not in '"\n':
                pos += 1
            if pos < length and source[pos] == '"':
                pos += 1
                tokens.append(make(TokenKind.STRING, start, pos))
            else:
                tokens.append(make(TokenKind.INVALID, start, pos))
            continue

        for text, kind in SYMBOLS:
            if source.startswith(text, pos):
                tokens.append(make(kind, start, pos + len(text)))
                pos += len(text)
                break
        else:
            tokens.append(make(TokenKind.INVALID, start, pos + 1))
            pos += 1

    return tokens
