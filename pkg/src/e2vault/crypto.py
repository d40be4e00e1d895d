"""Primitive layer: keypairs, pairwise key agreement, AEAD, MAC, password KDF.

Fixed sizes (everything above this layer depends on them being stable):

    symmetric keys    32 bytes
    AEAD nonce        24 bytes (random per seal)
    AEAD tag          16 bytes
    MAC tag           32 bytes (HMAC-SHA256)
    KDF salt          16 bytes

SealedBox wire layout:       nonce(24) || body || tag(16)
PasswordEnvelope wire layout: "PWE1" || salt(16) || iterations(u32 LE) ||
                              reserved(u32 LE) || SealedBox

All functions are pure or take an explicit `rng`; there is no shared
mutable state, so everything here is safe to call from multiple threads.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import struct
from dataclasses import dataclass
from typing import Callable

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from ._chacha import xchacha20poly1305_decrypt, xchacha20poly1305_encrypt
from .errors import (
    AuthenticationError,
    FormatError,
    InvalidPeerKeyError,
    KdfParameterError,
)

Rng = Callable[[int], bytes]

KEY_LEN = 32
NONCE_LEN = 24
TAG_LEN = 16
MAC_LEN = 32
SALT_LEN = 16
FINGERPRINT_LEN = 16

SEALED_OVERHEAD = NONCE_LEN + TAG_LEN

MIN_KDF_ITERATIONS = 1_000
DEFAULT_KDF_ITERATIONS = 600_000

PASSWORD_ENVELOPE_MAGIC = b"PWE1"

_SHARED_CONTEXT_PREFIX = b"e2ee-vault/v1/"


def clamp_scalar(raw: bytes) -> bytes:
    if len(raw) != KEY_LEN:
        raise ValueError("scalar must be 32 bytes")
    a = bytearray(raw)
    a[0] &= 248
    a[31] &= 127
    a[31] |= 64
    return bytes(a)


def public_from_secret(secret_scalar: bytes) -> bytes:
    priv = X25519PrivateKey.from_private_bytes(secret_scalar)
    return priv.public_key().public_bytes_raw()


@dataclass(frozen=True)
class KeyPair:
    """Long-term Curve25519 identity: clamped scalar plus public point."""

    secret_scalar: bytes
    public_point: bytes

    @classmethod
    def generate(cls, rng: Rng = secrets.token_bytes) -> "KeyPair":
        return cls.from_secret(rng(KEY_LEN))

    @classmethod
    def from_secret(cls, raw: bytes) -> "KeyPair":
        scalar = clamp_scalar(raw)
        return cls(secret_scalar=scalar, public_point=public_from_secret(scalar))


def generate_keypair(rng: Rng = secrets.token_bytes) -> KeyPair:
    return KeyPair.generate(rng)


def generate_master_key(rng: Rng = secrets.token_bytes) -> bytes:
    return rng(KEY_LEN)


def fingerprint(public_point: bytes) -> bytes:
    """16-byte identifier for a public key (hash truncation)."""
    return hashlib.sha256(public_point).digest()[:FINGERPRINT_LEN]


def derive_shared_key(my_secret: bytes, their_public: bytes, purpose: str | bytes) -> bytes:
    """Pairwise symmetric key via X25519 plus a KDF over a symmetric context.

    The context binds a fixed protocol label, the purpose label, and both
    public keys sorted lexicographically, so both sides derive the same key
    and different purposes ("share", "transport", ...) never collide. The
    raw curve output is never used directly.
    """
    if len(their_public) != KEY_LEN:
        raise InvalidPeerKeyError("peer public key must be 32 bytes")
    try:
        priv = X25519PrivateKey.from_private_bytes(my_secret)
        raw = priv.exchange(X25519PublicKey.from_public_bytes(their_public))
    except ValueError as exc:
        raise InvalidPeerKeyError(str(exc)) from exc
    if raw == bytes(KEY_LEN):
        raise InvalidPeerKeyError("degenerate shared secret (low-order peer key)")
    mine = priv.public_key().public_bytes_raw()
    if isinstance(purpose, str):
        purpose = purpose.encode()
    lo, hi = sorted((mine, their_public))
    context = _SHARED_CONTEXT_PREFIX + purpose + lo + hi
    return _hkdf(raw, context)


def derive_subkey(key: bytes, label: bytes) -> bytes:
    """Domain-separated 32-byte subkey of an existing symmetric key."""
    return _hkdf(key, b"e2ee-vault/v1/subkey/" + label)


def _hkdf(ikm: bytes, info: bytes) -> bytes:
    return HKDF(algorithm=hashes.SHA256(), length=KEY_LEN, salt=None, info=info).derive(ikm)


@dataclass(frozen=True)
class SealedBox:
    """Authenticated ciphertext: nonce || body || tag, body same length as
    the plaintext."""

    nonce: bytes
    body: bytes
    tag: bytes

    def to_bytes(self) -> bytes:
        return self.nonce + self.body + self.tag

    @classmethod
    def from_bytes(cls, data: bytes) -> "SealedBox":
        if len(data) < SEALED_OVERHEAD:
            raise FormatError("sealed box shorter than nonce plus tag")
        return cls(
            nonce=data[:NONCE_LEN],
            body=data[NONCE_LEN:-TAG_LEN],
            tag=data[-TAG_LEN:],
        )


def aead_seal(key: bytes, plaintext: bytes, aad: bytes = b"", rng: Rng = secrets.token_bytes) -> SealedBox:
    nonce = rng(NONCE_LEN)
    out = xchacha20poly1305_encrypt(key, nonce, plaintext, aad)
    return SealedBox(nonce=nonce, body=out[:-TAG_LEN], tag=out[-TAG_LEN:])


def aead_open(key: bytes, box: SealedBox, aad: bytes = b"") -> bytes:
    try:
        return xchacha20poly1305_decrypt(key, box.nonce, box.body + box.tag, aad)
    except InvalidTag as exc:
        raise AuthenticationError("authentication failed") from exc


def mac_sign(key: bytes, message: bytes) -> bytes:
    return hmac.new(key, message, hashlib.sha256).digest()


def mac_verify(key: bytes, message: bytes, tag: bytes) -> bool:
    return hmac.compare_digest(mac_sign(key, message), tag)


def kdf_password(password: str, salt: bytes, iterations: int) -> bytes:
    if not password:
        raise KdfParameterError("password must not be empty")
    if len(salt) != SALT_LEN:
        raise KdfParameterError("salt must be 16 bytes")
    if iterations < MIN_KDF_ITERATIONS:
        raise KdfParameterError(f"iteration count below minimum ({MIN_KDF_ITERATIONS})")
    return hashlib.pbkdf2_hmac("sha256", password.encode(), salt, iterations, dklen=KEY_LEN)


@dataclass(frozen=True)
class PasswordEnvelope:
    """A secret sealed under a password-derived key."""

    salt: bytes
    iterations: int
    sealed: SealedBox

    def to_bytes(self) -> bytes:
        params = struct.pack("<II", self.iterations, 0)
        return PASSWORD_ENVELOPE_MAGIC + self.salt + params + self.sealed.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "PasswordEnvelope":
        header = len(PASSWORD_ENVELOPE_MAGIC) + SALT_LEN + 8
        if len(data) < header + SEALED_OVERHEAD:
            raise FormatError("password envelope truncated")
        if data[:4] != PASSWORD_ENVELOPE_MAGIC:
            raise FormatError("not a password envelope")
        salt = data[4 : 4 + SALT_LEN]
        iterations, _reserved = struct.unpack("<II", data[4 + SALT_LEN : header])
        return cls(salt=salt, iterations=iterations, sealed=SealedBox.from_bytes(data[header:]))


def seal_with_password(
    password: str,
    payload: bytes,
    rng: Rng = secrets.token_bytes,
    iterations: int = DEFAULT_KDF_ITERATIONS,
) -> PasswordEnvelope:
    salt = rng(SALT_LEN)
    key = kdf_password(password, salt, iterations)
    return PasswordEnvelope(
        salt=salt,
        iterations=iterations,
        sealed=aead_seal(key, payload, aad=PASSWORD_ENVELOPE_MAGIC, rng=rng),
    )


def open_with_password(envelope: PasswordEnvelope, password: str) -> bytes:
    key = kdf_password(password, envelope.salt, envelope.iterations)
    return aead_open(key, envelope.sealed, aad=PASSWORD_ENVELOPE_MAGIC)
