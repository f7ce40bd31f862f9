"""
256-bit unsigned arithmetic
Checked operators trap outside [0, 2^256); wrapping operators reduce modulo 2^256
"""

from errors import ArithmeticTrap, RevertReason

MODULUS = 1 << 256
MAX_UINT256 = MODULUS - 1

CHECKED_OPERATORS = ("add", "sub", "mul", "div", "exp")
WRAPPING_OPERATORS = ("wadd", "wsub", "wmul")


def in_range(value: int) -> bool:
    return 0 <= value < MODULUS


def _require_word(value: int):
    if not isinstance(value, int) or isinstance(value, bool) or not in_range(value):
        raise ValueError(f"value out of range: {value}")


def checked_arith(op: str, a: int, b: int) -> int:
    """
    Exact result of `a op b` when it fits in 256 bits.

    Raises ArithmeticTrap with reason OVERFLOW on overflow or subtraction
    underflow, and DIVISION_BY_ZERO for a zero divisor. Division floors.
    """
    _require_word(a)
    _require_word(b)
    if op == "add":
        result = a + b
    elif op == "sub":
        if b > a:
            raise ArithmeticTrap(RevertReason.OVERFLOW, f"{a} - {b} underflows")
        return a - b
    elif op == "mul":
        result = a * b
    elif op == "div":
        if b == 0:
            raise ArithmeticTrap(RevertReason.DIVISION_BY_ZERO, f"{a} / 0")
        return a // b
    elif op == "exp":
        if a in (0, 1) or b == 0:
            return 1 if b == 0 else a
        # 2^256 already overflows, so larger exponents never fit
        if b >= 256:
            raise ArithmeticTrap(RevertReason.OVERFLOW, f"{a} ** {b} overflows")
        result = a ** b
    else:
        raise ValueError(f"Unknown checked operator '{op}'")
    if result > MAX_UINT256:
        raise ArithmeticTrap(RevertReason.OVERFLOW, f"{op}({a}, {b}) overflows")
    return result


def wrapping_arith(op: str, a: int, b: int) -> int:
    _require_word(a)
    _require_word(b)
    if op == "wadd":
        return (a + b) % MODULUS
    if op == "wsub":
        return (a - b) % MODULUS
    if op == "wmul":
        return (a * b) % MODULUS
    raise ValueError(f"Unknown wrapping operator '{op}'")


def to_word(value) -> int:
    """Bools become 0/1; ints must already be 256-bit words"""
    if isinstance(value, bool):
        return int(value)
    _require_word(value)
    return value
