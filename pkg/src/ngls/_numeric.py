"""Small numeric helpers: exact/float logs, rational parsing, integer roots."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

from .errors import ConfigError

Number = Union[Fraction, float, int]


def log_number(x: Number) -> float:
    """Natural log of a positive int, Fraction or float without overflow.

    Fractions are split into numerator and denominator so that huge
    integers (Lüroth digits near 2**60, products of ratios) never pass
    through a float.
    """
    if isinstance(x, Fraction):
        if x <= 0:
            return -math.inf
        return math.log(x.numerator) - math.log(x.denominator)
    if x <= 0:
        return -math.inf
    return math.log(x)


def xlogx(x: Number) -> float:
    """x log x with the convention 0 log 0 = 0."""
    if x == 0:
        return 0.0
    return float(x) * log_number(x)


def parse_number(value, path=None, *, exact=True) -> Number:
    """Parse ``"p/q"``, ints, decimal strings or floats.

    Strings are converted exactly (``"0.1"`` is 1/10). Floats are kept
    as floats unless ``exact`` is set, in which case their decimal repr is
    used, so 0.5 becomes 1/2.
    """
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}", path)
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ConfigError(f"non-finite number {value!r}", path)
        return Fraction(repr(value)) if exact else value
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"malformed rational {value!r}", path) from None
    raise ConfigError(f"expected a number, got {value!r}", path)


def format_number(x: Number) -> Union[str, float]:
    """Serialise exact values as ``"p/q"`` strings, floats as floats."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, int):
        return str(x)
    return float(x)


def ceil_root(value: int, q: int) -> int:
    """Smallest integer c >= 0 with c**q >= value (exact)."""
    if value <= 0:
        return 0
    c = int(math.ceil(math.exp(math.log(value) / q))) if value.bit_length() < 1000 else 1 << -(-value.bit_length() // q)
    while c > 0 and (c - 1) ** q >= value:
        c -= 1
    while c ** q < value:
        c += 1
    return c


def ceil_power(base: int, exponent: Fraction) -> int:
    """Exact ceil(base ** exponent) for integer base >= 1 and exponent >= 0."""
    exponent = Fraction(exponent)
    p, q = exponent.numerator, exponent.denominator
    return ceil_root(base ** p, q)
