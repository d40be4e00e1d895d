"""Schnorr signatures over edwards25519 keyed by a Montgomery (X25519) identity.

Identities in this package are X25519 keypairs, so signatures must verify
under the 32-byte Montgomery u-coordinate. The signer maps its clamped
scalar to the twisted Edwards curve and negates it if needed so that the
derived Edwards public key always has a zero sign bit; the verifier maps
the Montgomery u to the Edwards y via y = (u-1)/(u+1) and decompresses with
sign 0. Signatures are 64 bytes (R || s), verification is deterministic,
and the nonce is derived deterministically from the secret and message.

The point arithmetic is plain extended-coordinate twisted Edwards math; it
is cross-checked in tests against the backend X25519 implementation (the
Edwards public key converted back to Montgomery must match the backend's
public key for the same scalar).
"""

from __future__ import annotations

import hashlib
from functools import lru_cache

P = 2**255 - 19
GROUP_ORDER = 2**252 + 27742317777372353535851937790883648493
_D = (-121665 * pow(121666, P - 2, P)) % P
_SQRT_M1 = pow(2, (P - 1) // 4, P)

_BASE_Y = (4 * pow(5, P - 2, P)) % P
_BASE_X = 15112221349535400772501151409588531511454012693041857206046113283949847762202

Point = tuple[int, int, int, int]  # extended coordinates (X, Y, Z, T)

_IDENTITY: Point = (0, 1, 1, 0)
_BASE: Point = (_BASE_X, _BASE_Y, 1, (_BASE_X * _BASE_Y) % P)

SIGNATURE_LEN = 64


def _add(p: Point, q: Point) -> Point:
    x1, y1, z1, t1 = p
    x2, y2, z2, t2 = q
    a = (y1 - x1) * (y2 - x2) % P
    b = (y1 + x1) * (y2 + x2) % P
    c = t1 * 2 * _D * t2 % P
    d = z1 * 2 * z2 % P
    e = b - a
    f = d - c
    g = d + c
    h = b + a
    return (e * f % P, g * h % P, f * g % P, e * h % P)


def _negate(p: Point) -> Point:
    x, y, z, t = p
    return ((-x) % P, y, z, (-t) % P)


def _scalar_mult(s: int, p: Point) -> Point:
    q = _IDENTITY
    while s > 0:
        if s & 1:
            q = _add(q, p)
        p = _add(p, p)
        s >>= 1
    return q


# Precomputed doublings of the base point; base multiplications become
# ~127 additions on average instead of 255 doublings plus additions.
_BASE_POW: list[Point] = []
_pt = _BASE
for _ in range(256):
    _BASE_POW.append(_pt)
    _pt = _add(_pt, _pt)
del _pt


def _base_mult(s: int) -> Point:
    q = _IDENTITY
    i = 0
    while s > 0:
        if s & 1:
            q = _add(q, _BASE_POW[i])
        s >>= 1
        i += 1
    return q


def _compress(p: Point) -> bytes:
    x, y, z, _ = p
    zi = pow(z, P - 2, P)
    x = x * zi % P
    y = y * zi % P
    return (y | ((x & 1) << 255)).to_bytes(32, "little")


def _decompress(data: bytes) -> Point | None:
    if len(data) != 32:
        return None
    val = int.from_bytes(data, "little")
    sign = val >> 255
    y = val & ((1 << 255) - 1)
    if y >= P:
        return None
    y2 = y * y % P
    u = (y2 - 1) % P
    v = (_D * y2 + 1) % P
    x = (u * pow(v, P - 2, P)) % P
    x = pow(x, (P + 3) // 8, P)
    if (x * x - u * pow(v, P - 2, P)) % P != 0:
        x = x * _SQRT_M1 % P
    if (x * x * v - u) % P != 0:
        return None
    if x == 0 and sign == 1:
        return None
    if x & 1 != sign:
        x = P - x
    return (x, y, 1, x * y % P)


def _points_equal(p: Point, q: Point) -> bool:
    x1, y1, z1, _ = p
    x2, y2, z2, _ = q
    return (x1 * z2 - x2 * z1) % P == 0 and (y1 * z2 - y2 * z1) % P == 0


def _clamp(scalar: bytes) -> int:
    a = bytearray(scalar)
    a[0] &= 248
    a[31] &= 127
    a[31] |= 64
    return int.from_bytes(a, "little")


@lru_cache(maxsize=1024)
def _signing_state(secret_scalar: bytes) -> tuple[int, bytes]:
    """Effective scalar (mod group order, adjusted for sign) and the
    compressed Edwards public key with sign bit forced to zero."""
    a = _clamp(secret_scalar)
    point = _base_mult(a)
    enc = _compress(point)
    a_eff = a % GROUP_ORDER
    if enc[31] >> 7:
        a_eff = GROUP_ORDER - a_eff
        enc = _compress(_negate(point))
    return a_eff, enc


@lru_cache(maxsize=4096)
def montgomery_to_edwards(public_u: bytes) -> bytes | None:
    """Map an X25519 public key to the compressed Edwards point with sign 0.

    Returns None for keys that do not correspond to a curve point usable
    for verification (e.g. u == p-1, or a y off the curve).
    """
    if len(public_u) != 32:
        return None
    u = int.from_bytes(public_u, "little") & ((1 << 255) - 1)
    u %= P
    if u == P - 1:
        return None
    y = (u - 1) * pow(u + 1, P - 2, P) % P
    enc = y.to_bytes(32, "little")
    if _decompress(enc) is None:
        return None
    return enc


def edwards_to_montgomery(edwards_enc: bytes) -> bytes:
    """Inverse map, used by tests to cross-check against the X25519 backend."""
    y = int.from_bytes(edwards_enc, "little") & ((1 << 255) - 1)
    u = (1 + y) * pow(1 - y, P - 2, P) % P
    return u.to_bytes(32, "little")


def public_edwards_from_scalar(secret_scalar: bytes) -> bytes:
    return _signing_state(bytes(secret_scalar))[1]


def sign(secret_scalar: bytes, message: bytes) -> bytes:
    """Produce a 64-byte signature verifiable under the X25519 public key."""
    a_eff, pub = _signing_state(bytes(secret_scalar))
    h = hashlib.sha512(b"e2v/sig-nonce" + secret_scalar + pub + message).digest()
    r = int.from_bytes(h, "little") % GROUP_ORDER
    r_enc = _compress(_base_mult(r))
    k = int.from_bytes(hashlib.sha512(r_enc + pub + message).digest(), "little") % GROUP_ORDER
    s = (r + k * a_eff) % GROUP_ORDER
    return r_enc + s.to_bytes(32, "little")


def verify(public_u: bytes, message: bytes, signature: bytes) -> bool:
    if len(signature) != SIGNATURE_LEN:
        return False
    pub = montgomery_to_edwards(bytes(public_u))
    if pub is None:
        return False
    a_point = _decompress(pub)
    r_point = _decompress(signature[:32])
    if a_point is None or r_point is None:
        return False
    s = int.from_bytes(signature[32:], "little")
    if s >= GROUP_ORDER:
        return False
    k = int.from_bytes(hashlib.sha512(signature[:32] + pub + message).digest(), "little")
    k %= GROUP_ORDER
    lhs = _base_mult(s)
    rhs = _add(r_point, _scalar_mult(k, a_point))
    return _points_equal(lhs, rhs)
