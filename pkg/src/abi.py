"""
ABI encoding for external calls
Function selectors are the first 4 bytes of keccak-256 of the canonical
signature; arguments follow as 32-byte big-endian words
"""

from typing import List, Sequence

import eth_abi
from Crypto.Hash import keccak
from eth_abi.exceptions import DecodingError, EncodingError

from errors import Revert, RevertReason
from flint_types import TypeRef, abi_type_name
from uint256 import MAX_UINT256

SELECTOR_SIZE = 4
WORD_SIZE = 32


def keccak256(data: bytes) -> bytes:
    digest = keccak.new(digest_bits=256)
    digest.update(data)
    return digest.digest()


def keccak_word(*words: int) -> int:
    """Hash of the concatenated 32-byte words, as a word"""
    data = b"".join(word.to_bytes(WORD_SIZE, "big") for word in words)
    return int.from_bytes(keccak256(data), "big")


def compute_selector(signature: str) -> bytes:
    """
    First 4 bytes of keccak-256 over the canonical signature text.

    >>> compute_selector("transfer(address,uint256)").hex()
    'a9059cbb'
    """
    return keccak256(signature.encode("ascii"))[:SELECTOR_SIZE]


def canonical_signature(name: str, parameter_types: Sequence[TypeRef]) -> str:
    return f"{name}({','.join(abi_type_name(t) for t in parameter_types)})"


def signature_types(signature: str) -> List[str]:
    """ABI type names listed in a canonical signature"""
    if "(" not in signature or not signature.endswith(")"):
        raise ValueError(f"Malformed signature '{signature}'")
    inner = signature[signature.index("(") + 1:-1]
    return [t for t in inner.split(",") if t]


# --- word <-> ABI value conversion ---------------------------------------------

def string_to_word(text: str) -> int:
    data = text.encode("utf-8")
    if len(data) > WORD_SIZE:
        raise ValueError(f"String '{text}' is longer than {WORD_SIZE} bytes")
    return int.from_bytes(data.ljust(WORD_SIZE, b"\0"), "big")


def word_to_string(word: int) -> str:
    return word.to_bytes(WORD_SIZE, "big").rstrip(b"\0").decode("utf-8", errors="replace")


def word_to_value(abi_type: str, word: int):
    if abi_type == "bool":
        return word != 0
    if abi_type == "address":
        return (word % (1 << 160)).to_bytes(20, "big")
    if abi_type == "string":
        return word_to_string(word)
    return word


def value_to_word(abi_type: str, value) -> int:
    if abi_type == "bool":
        return 1 if value else 0
    if abi_type == "address":
        if isinstance(value, (bytes, bytearray)):
            return int.from_bytes(value, "big")
        return int(value, 16) if isinstance(value, str) else int(value)
    if abi_type == "string":
        return string_to_word(value) if isinstance(value, str) else int(value)
    if not 0 <= int(value) <= MAX_UINT256:
        raise ValueError(f"value out of range: {value}")
    return int(value)


# --- encoding ----------------------------------------------------------------

def encode_arguments(abi_types: Sequence[str], words: Sequence[int]) -> bytes:
    if len(abi_types) != len(words):
        raise ValueError(f"Expected {len(abi_types)} arguments, got {len(words)}")
    values = [word_to_value(t, w) for t, w in zip(abi_types, words)]
    return eth_abi.encode(list(abi_types), values)


def decode_arguments(abi_types: Sequence[str], data: bytes) -> List[int]:
    values = eth_abi.decode(list(abi_types), data)
    return [value_to_word(t, v) for t, v in zip(abi_types, values)]


def abi_encode(signature: str, words: Sequence[int]) -> bytes:
    """Selector followed by the encoded arguments"""
    return compute_selector(signature) + encode_arguments(signature_types(signature), words)


def abi_decode(data: bytes, signature: str) -> List[int]:
    """Arguments of call data for `signature`; a malformed payload reverts as an unknown call"""
    if data[:SELECTOR_SIZE] != compute_selector(signature):
        raise Revert(RevertReason.UNKNOWN_SELECTOR, f"selector 0x{data[:SELECTOR_SIZE].hex()} is not {signature}")
    abi_types = signature_types(signature)
    payload = data[SELECTOR_SIZE:]
    if not abi_types:
        if payload:
            raise Revert(RevertReason.UNKNOWN_SELECTOR, f"unexpected arguments for {signature}")
        return []
    if all(t != "string" for t in abi_types) and len(payload) != WORD_SIZE * len(abi_types):
        raise Revert(RevertReason.UNKNOWN_SELECTOR, f"argument length mismatch for {signature}")
    try:
        return decode_arguments(abi_types, payload)
    except (DecodingError, EncodingError, ValueError) as exc:
        raise Revert(RevertReason.UNKNOWN_SELECTOR, f"malformed arguments for {signature}: {exc}") from exc
