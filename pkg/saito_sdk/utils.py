"""
Some useful functions to manipulate exact rationals
Author: Saito SDK developers
Copyright 2024
"""
import os
from fractions import Fraction
from math import gcd, isqrt

BACKEND = "python"

if os.environ.get("SAITO_NOGMPY", "0") == "0":
    try:
        import gmpy2

        BACKEND = "gmpy"
    except ImportError:  # pragma: no cover - depends on the environment
        gmpy2 = None

if BACKEND == "gmpy":
    MPQ = gmpy2.mpq
    MPQ_TYPES = (type(gmpy2.mpq(0)),)
else:
    MPQ = Fraction
    MPQ_TYPES = (Fraction,)

ZERO = MPQ(0)
ONE = MPQ(1)


def toRational(value):
    """
    Converts a number to the active rational backend.
    Accepts int, Fraction, mpq/mpz and strings of the form "a" or "a/b"

    Params
    --
    value: [int|str|Fraction|mpq] Number to convert

    Returns
    --
    [MPQ] exact rational in lowest terms
    """
    if isinstance(value, MPQ_TYPES):
        return value
    if isinstance(value, bool):
        raise TypeError("Refusing to convert a boolean to a rational")
    if isinstance(value, int):
        return MPQ(value)
    if isinstance(value, str):
        num, _, den = value.strip().partition("/")
        return MPQ(int(num), int(den)) if den else MPQ(int(num))
    if isinstance(value, float):
        raise TypeError("Floating point values are not exact: {!r}".format(value))
    # Fraction, mpz, mpq from the other backend
    return MPQ(int(value.numerator), int(value.denominator))


def rationalSqrt(value):
    """
    Exact square root of a non-negative rational, or None if it is not a square
    """
    q = toRational(value)
    if q < 0:
        return None
    num = int(q.numerator)
    den = int(q.denominator)
    rn = isqrt(num)
    rd = isqrt(den)
    if rn * rn != num or rd * rd != den:
        return None
    return MPQ(rn, rd)


def lcmDenominators(values):
    """
    Least common multiple of the denominators of an iterable of rationals
    """
    lcm = 1
    for v in values:
        d = int(v.denominator)
        if d != 1:
            lcm = lcm * d // gcd(lcm, d)
    return lcm
