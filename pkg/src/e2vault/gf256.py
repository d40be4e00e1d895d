"""GF(256) arithmetic with the 0x11B reduction polynomial.

Addition is XOR; multiplication uses log/antilog tables built at import
time. Table-free reference arithmetic lives in the test suite as an
independent oracle.
"""

from __future__ import annotations

from typing import Sequence

REDUCTION_POLY = 0x11B

_EXP = [0] * 510
_LOG = [0] * 256


def _slow_mul(a: int, b: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        if a & 0x100:
            a ^= REDUCTION_POLY
        b >>= 1
    return r


def _build_tables() -> None:
    x = 1
    for i in range(255):
        _EXP[i] = x
        _LOG[x] = i
        x = _slow_mul(x, 3)
    for i in range(255, 510):
        _EXP[i] = _EXP[i - 255]


_build_tables()

# read-only table views for hot loops elsewhere in the package
EXP_TABLE = tuple(_EXP)
LOG_TABLE = tuple(_LOG)


def gf_add(a: int, b: int) -> int:
    return a ^ b


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return _EXP[_LOG[a] + _LOG[b]]


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("no inverse of 0 in GF(256)")
    return _EXP[255 - _LOG[a]]


def gf_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("division by 0 in GF(256)")
    if a == 0:
        return 0
    return _EXP[_LOG[a] + 255 - _LOG[b]]


def gf_poly_eval(coeffs: Sequence[int], x: int) -> int:
    """Evaluate a polynomial (constant term first) at x, Horner's rule."""
    acc = 0
    for c in reversed(coeffs):
        acc = gf_mul(acc, x) ^ c
    return acc


def gf_interpolate_at_zero(points: Sequence[tuple[int, int]]) -> int:
    """Lagrange interpolation of f(0) from (x, y) points with distinct x."""
    result = 0
    for i, (xi, yi) in enumerate(points):
        num = 1
        den = 1
        for j, (xj, _) in enumerate(points):
            if i == j:
                continue
            num = gf_mul(num, xj)
            den = gf_mul(den, xi ^ xj)
        result ^= gf_mul(yi, gf_div(num, den))
    return result
