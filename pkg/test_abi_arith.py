#!/usr/bin/env python3
"""
Tests for selectors, ABI encoding and 256-bit arithmetic
"""

import os
import random
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from abi import abi_decode, abi_encode, compute_selector, keccak256, string_to_word, word_to_string
from errors import ArithmeticTrap, Revert, RevertReason
from uint256 import MAX_UINT256, MODULUS, checked_arith, wrapping_arith


def expect_trap(op, a, b, reason):
    try:
        checked_arith(op, a, b)
    except ArithmeticTrap as exc:
        assert exc.reason == reason, exc.reason
        return
    raise AssertionError(f"{op}({a}, {b}) should trap")


def test_keccak_and_selectors():
    assert keccak256(b"").hex() == "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470"
    assert compute_selector("transfer(address,uint256)").hex() == "a9059cbb"
    assert compute_selector("balanceOf(address)").hex() == "70a08231"
    print("✅ keccak-256 selectors")


def test_encode_words():
    data = abi_encode("f(uint256,bool)", [100, 1])
    assert data[:4] == compute_selector("f(uint256,bool)")
    assert len(data) == 4 + 64
    assert data[4:36] == (100).to_bytes(32, "big")
    assert data[36:68] == (1).to_bytes(32, "big")
    print("✅ arguments encode as 32-byte big-endian words")


def test_decode_inverts_encode():
    signature = "transfer(uint256,address)"
    words = [120, int("22" * 20, 16)]
    assert abi_decode(abi_encode(signature, words), signature) == words
    assert abi_decode(abi_encode("register()", []), "register()") == []
    print("✅ decode(encode(words)) == words")


def test_random_tuples_survive_encoding():
    rng = random.Random(2026)
    sizes = {"uint256": 256, "address": 160}
    for _ in range(500):
        abi_types = [rng.choice(("uint256", "address", "bool")) for _ in range(rng.randint(0, 4))]
        words = [rng.getrandbits(sizes[t]) if t in sizes else rng.randint(0, 1) for t in abi_types]
        signature = f"f({','.join(abi_types)})"
        assert abi_decode(abi_encode(signature, words), signature) == words, (signature, words)
    print("✅ 500 random (uint256|address|bool) tuples decode to their words")


def test_decode_rejects_foreign_calls():
    data = abi_encode("deposit()", [])
    for signature, payload in (("withdraw(uint256)", data), ("deposit()", data + b"\x00" * 32)):
        try:
            abi_decode(payload, signature)
        except Revert as exc:
            assert exc.reason == RevertReason.UNKNOWN_SELECTOR
        else:
            raise AssertionError(signature)
    print("✅ wrong selector or payload length reverts")


def test_short_strings():
    assert word_to_string(string_to_word("hello")) == "hello"
    try:
        string_to_word("x" * 33)
    except ValueError:
        pass
    else:
        raise AssertionError("33-byte string accepted")
    print("✅ strings of at most 32 bytes fit one word")


def test_checked_arithmetic_edges():
    assert checked_arith("add", MAX_UINT256 - 1, 1) == MAX_UINT256
    expect_trap("add", MAX_UINT256, 1, RevertReason.OVERFLOW)
    expect_trap("sub", 0, 1, RevertReason.OVERFLOW)
    expect_trap("mul", 1 << 128, 1 << 128, RevertReason.OVERFLOW)
    expect_trap("div", 7, 0, RevertReason.DIVISION_BY_ZERO)
    assert checked_arith("div", 7, 2) == 3
    assert checked_arith("exp", 2, 255) == 1 << 255
    expect_trap("exp", 2, 256, RevertReason.OVERFLOW)
    assert checked_arith("exp", 0, 0) == 1
    assert checked_arith("exp", 1, 10 ** 30) == 1
    print("✅ checked operators trap outside 256 bits")


def test_wrapping_arithmetic_edges():
    assert wrapping_arith("wadd", MAX_UINT256, 1) == 0
    assert wrapping_arith("wsub", 0, 1) == MAX_UINT256
    assert wrapping_arith("wmul", 1 << 255, 2) == 0
    print("✅ wrapping operators reduce modulo 2^256")


def test_checked_agrees_with_wrapping():
    rng = random.Random(2018)
    pairs = (("add", "wadd"), ("sub", "wsub"), ("mul", "wmul"))
    exact = {"add": lambda a, b: a + b, "sub": lambda a, b: a - b, "mul": lambda a, b: a * b}
    trapped = 0
    for _ in range(1000):
        checked, wrapping = rng.choice(pairs)
        a = rng.getrandbits(rng.choice((8, 128, 255, 256)))
        b = rng.getrandbits(rng.choice((8, 128, 255, 256)))
        value = exact[checked](a, b)
        if 0 <= value < MODULUS:
            assert checked_arith(checked, a, b) == wrapping_arith(wrapping, a, b) == value
        else:
            expect_trap(checked, a, b, RevertReason.OVERFLOW)
            assert wrapping_arith(wrapping, a, b) == value % MODULUS
            trapped += 1
    assert trapped > 0
    print(f"✅ 1000 random operations agree ({trapped} trapped)")


def main():
    print("🧪 ABI AND ARITHMETIC TESTS")
    print("=" * 30)
    tests = [
        test_keccak_and_selectors, test_encode_words, test_decode_inverts_encode, test_random_tuples_survive_encoding,
        test_decode_rejects_foreign_calls, test_short_strings, test_checked_arithmetic_edges,
        test_wrapping_arithmetic_edges, test_checked_agrees_with_wrapping,
    ]
    for test in tests:
        test()
    print("\n🎉 ALL ABI AND ARITHMETIC TESTS PASSED!")
    return True


if __name__ == "__main__":
    sys.exit(0 if main() else 1)
