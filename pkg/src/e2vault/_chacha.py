"""Extended-nonce ChaCha20-Poly1305 (XChaCha20-Poly1305, IETF construction).

The backend library ships the 12-byte-nonce ChaCha20-Poly1305 AEAD but not
the 24-byte-nonce variant, so the HChaCha20 subkey derivation is done here:

    subkey     = HChaCha20(key, nonce[0:16])
    ciphertext = ChaCha20-Poly1305(subkey, 0x00000000 || nonce[16:24], aad, pt)

HChaCha20 runs the 20-round ChaCha permutation over (constants, key, input)
and returns state words 0..3 and 12..15 without the feed-forward addition.
The permutation is cross-checked in tests against the backend's ChaCha20
keystream, which embeds the same permutation plus feed-forward.
"""

from __future__ import annotations

import struct

from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

_SIGMA = struct.unpack("<4I", b"expand 32-byte k")

_MASK = 0xFFFFFFFF


def _quarter_round(st: list[int], a: int, b: int, c: int, d: int) -> None:
    st[a] = (st[a] + st[b]) & _MASK
    st[d] ^= st[a]
    st[d] = ((st[d] << 16) | (st[d] >> 16)) & _MASK
    st[c] = (st[c] + st[d]) & _MASK
    st[b] ^= st[c]
    st[b] = ((st[b] << 12) | (st[b] >> 20)) & _MASK
    st[a] = (st[a] + st[b]) & _MASK
    st[d] ^= st[a]
    st[d] = ((st[d] << 8) | (st[d] >> 24)) & _MASK
    st[c] = (st[c] + st[d]) & _MASK
    st[b] ^= st[c]
    st[b] = ((st[b] << 7) | (st[b] >> 25)) & _MASK


def chacha_permute(state: list[int]) -> list[int]:
    """20-round ChaCha permutation over 16 little-endian words, no feed-forward."""
    st = list(state)
    for _ in range(10):
        _quarter_round(st, 0, 4, 8, 12)
        _quarter_round(st, 1, 5, 9, 13)
        _quarter_round(st, 2, 6, 10, 14)
        _quarter_round(st, 3, 7, 11, 15)
        _quarter_round(st, 0, 5, 10, 15)
        _quarter_round(st, 1, 6, 11, 12)
        _quarter_round(st, 2, 7, 8, 13)
        _quarter_round(st, 3, 4, 9, 14)
    return st


def hchacha20(key: bytes, inp: bytes) -> bytes:
    if len(key) != 32 or len(inp) != 16:
        raise ValueError("hchacha20 needs a 32-byte key and 16-byte input")
    state = list(_SIGMA) + list(struct.unpack("<8I", key)) + list(struct.unpack("<4I", inp))
    out = chacha_permute(state)
    return struct.pack("<8I", *(out[i] for i in (0, 1, 2, 3, 12, 13, 14, 15)))


def _subcipher(key: bytes, nonce24: bytes) -> tuple[ChaCha20Poly1305, bytes]:
    subkey = hchacha20(key, nonce24[:16])
    return ChaCha20Poly1305(subkey), b"\x00\x00\x00\x00" + nonce24[16:24]


def xchacha20poly1305_encrypt(key: bytes, nonce24: bytes, plaintext: bytes, aad: bytes) -> bytes:
    """Returns ciphertext || 16-byte tag."""
    cipher, nonce12 = _subcipher(key, nonce24)
    return cipher.encrypt(nonce12, plaintext, aad)


def xchacha20poly1305_decrypt(key: bytes, nonce24: bytes, data: bytes, aad: bytes) -> bytes:
    """Raises cryptography.exceptions.InvalidTag on authentication failure."""
    cipher, nonce12 = _subcipher(key, nonce24)
    return cipher.decrypt(nonce12, data, aad)
