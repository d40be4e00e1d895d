"""Encrypted file container with sealed per-user access blocks.

Wire layout (all integers little-endian):

    "E2EF"(4) || version=0x01(1) || N x 128-byte sealed user blocks
              || SealedBox(content) || signature(32)

Each sealed user block is a SealedBox over an 88-byte plaintext:

    user_id(16) || fek(32) || x_key(32) || content_offset(u64)

so every block is exactly 24 + 88 + 16 = 128 bytes regardless of the
permission granted. `fek` decrypts the content; `x_key` is either the file
signing key (write granted) or fresh random bytes of the same length
(read-only), which keeps read and read-write blocks byte-indistinguishable.
The signature is an FSK-keyed MAC over the sealed content.

The owner's block comes first and is sealed under a key derived from the
owner's master key; grantee blocks are sealed under the pairwise shared key
between owner and grantee. Readers find their block by trial decryption:
an authentication success marks the block as theirs (the embedded user_id
is a redundant confirmation). Nothing in the file identifies who holds
access, so a parser without key material can only treat everything after
the preamble as opaque; block count is not recoverable without a key.

Grant and revoke rebuild the whole header, which requires attributing
every existing block to a grantee. The owner does this by trial-decrypting
blocks against a caller-supplied set of candidate public keys (the contact
book). A block that matches no candidate aborts the operation rather than
silently destroying someone's access.
"""

from __future__ import annotations

import enum
import secrets
import struct
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from . import crypto
from .crypto import Rng, SealedBox
from .errors import (
    AuthenticationError,
    DuplicateGranteeError,
    FormatError,
    GranteeNotFoundError,
    NoWriteCapabilityError,
    NotAuthorizedError,
    TamperError,
    UnknownGranteeBlockError,
)

MAGIC = b"E2EF"
VERSION = 1
PREAMBLE = MAGIC + bytes([VERSION])
PREAMBLE_LEN = 5
BLOCK_PLAIN_LEN = 88
BLOCK_LEN = crypto.SEALED_OVERHEAD + BLOCK_PLAIN_LEN  # 128
SIGNATURE_LEN = 32
CONTENT_MIN = crypto.SEALED_OVERHEAD  # empty plaintext still costs 40 bytes
MIN_FILE_LEN = PREAMBLE_LEN + BLOCK_LEN + CONTENT_MIN + SIGNATURE_LEN

FILE_EXTENSION = ".e2ef"

_OWNER_BLOCK_LABEL = b"owner-block"


class Permission(enum.Enum):
    READ = "read"
    READ_WRITE = "read-write"


@dataclass(frozen=True)
class FileKeys:
    fek: bytes
    fsk: bytes

    @classmethod
    def generate(cls, rng: Rng = secrets.token_bytes) -> "FileKeys":
        fek = rng(crypto.KEY_LEN)
        fsk = rng(crypto.KEY_LEN)
        while fsk == fek:
            fsk = rng(crypto.KEY_LEN)
        return cls(fek=fek, fsk=fsk)


@dataclass(frozen=True)
class UserBlock:
    user_id: bytes
    fek: bytes
    x_key: bytes
    content_offset: int

    def pack(self) -> bytes:
        return self.user_id + self.fek + self.x_key + struct.pack("<Q", self.content_offset)

    @classmethod
    def unpack(cls, data: bytes) -> "UserBlock":
        if len(data) != BLOCK_PLAIN_LEN:
            raise FormatError("user block plaintext must be 88 bytes")
        return cls(
            user_id=data[:16],
            fek=data[16:48],
            x_key=data[48:80],
            content_offset=struct.unpack("<Q", data[80:88])[0],
        )


@dataclass(frozen=True)
class GrantInfo:
    public_point: bytes
    permission: Permission


@dataclass(frozen=True)
class EncryptedFile:
    """Parsed container: version plus the opaque bytes after the preamble."""

    version: int
    body: bytes

    def serialize(self) -> bytes:
        return MAGIC + bytes([self.version]) + self.body

    @classmethod
    def parse(cls, data: bytes) -> "EncryptedFile":
        if len(data) < MIN_FILE_LEN:
            raise FormatError("encrypted file truncated")
        if data[:4] != MAGIC:
            raise FormatError("not an encrypted file (bad magic)")
        if data[4] != VERSION:
            raise FormatError(f"unsupported version {data[4]}")
        return cls(version=data[4], body=data[PREAMBLE_LEN:])

    @property
    def signature(self) -> bytes:
        return self.body[-SIGNATURE_LEN:]


def owner_block_key(master_key: bytes, owner_public: bytes) -> bytes:
    """Key sealing the owner's own block; everything else uses pairwise keys."""
    return crypto.derive_subkey(master_key, _OWNER_BLOCK_LABEL + owner_public)


def grantee_block_key(my_secret: bytes, owner_public: bytes) -> bytes:
    return crypto.derive_shared_key(my_secret, owner_public, "share")


# ---------------------------------------------------------------------------
# block scanning


def _iter_sealed_blocks(body: bytes) -> Iterator[tuple[int, bytes]]:
    # Blocks can extend at most to len(body) - 72: the content box needs at
    # least 40 bytes and the signature 32. Beyond the real header this walks
    # into ciphertext, where trial opens simply fail.
    limit = len(body) - CONTENT_MIN - SIGNATURE_LEN
    offset = 0
    index = 0
    while offset + BLOCK_LEN <= limit:
        yield index, body[offset : offset + BLOCK_LEN]
        offset += BLOCK_LEN
        index += 1


def _try_open_block(key: bytes, sealed: bytes, body_len: int) -> UserBlock | None:
    try:
        plain = crypto.aead_open(key, SealedBox.from_bytes(sealed), aad=PREAMBLE)
    except AuthenticationError:
        return None
    block = UserBlock.unpack(plain)
    header_len = block.content_offset - PREAMBLE_LEN
    if (
        block.content_offset < PREAMBLE_LEN + BLOCK_LEN
        or header_len % BLOCK_LEN != 0
        or header_len + CONTENT_MIN + SIGNATURE_LEN > body_len
    ):
        raise TamperError("user block carries an impossible content offset")
    return block


def _find_block(file: EncryptedFile, key: bytes) -> tuple[int, UserBlock] | None:
    for index, sealed in _iter_sealed_blocks(file.body):
        block = _try_open_block(key, sealed, len(file.body))
        if block is not None:
            return index, block
    return None


def _content_box_bytes(file: EncryptedFile, content_offset: int) -> bytes:
    return file.body[content_offset - PREAMBLE_LEN : -SIGNATURE_LEN]


# ---------------------------------------------------------------------------
# building


def _seal_block(key: bytes, block: UserBlock, rng: Rng) -> bytes:
    return crypto.aead_seal(key, block.pack(), aad=PREAMBLE, rng=rng).to_bytes()


def _dummy_key(rng: Rng, fsk: bytes) -> bytes:
    dummy = rng(crypto.KEY_LEN)
    while dummy == fsk or dummy == bytes(crypto.KEY_LEN):
        dummy = rng(crypto.KEY_LEN)
    return dummy


def _assemble(
    owner: crypto.KeyPair,
    master_key: bytes,
    keys: FileKeys,
    grants: Sequence[GrantInfo],
    content_box: bytes,
    signature: bytes,
    rng: Rng,
) -> EncryptedFile:
    count = 1 + len(grants)
    offset = PREAMBLE_LEN + count * BLOCK_LEN
    blocks = [
        _seal_block(
            owner_block_key(master_key, owner.public_point),
            UserBlock(crypto.fingerprint(owner.public_point), keys.fek, keys.fsk, offset),
            rng,
        )
    ]
    for grant_info in grants:
        x_key = keys.fsk if grant_info.permission is Permission.READ_WRITE else _dummy_key(rng, keys.fsk)
        blocks.append(
            _seal_block(
                grantee_block_key(owner.secret_scalar, grant_info.public_point),
                UserBlock(crypto.fingerprint(grant_info.public_point), keys.fek, x_key, offset),
                rng,
            )
        )
    return EncryptedFile(version=VERSION, body=b"".join(blocks) + content_box + signature)


def create_encrypted_file(
    content: bytes,
    owner: crypto.KeyPair,
    master_key: bytes,
    rng: Rng = secrets.token_bytes,
) -> EncryptedFile:
    """Fresh file with a single (owner) block."""
    keys = FileKeys.generate(rng)
    content_box = crypto.aead_seal(keys.fek, content, aad=PREAMBLE, rng=rng).to_bytes()
    signature = crypto.mac_sign(keys.fsk, content_box)
    return _assemble(owner, master_key, keys, (), content_box, signature, rng)


# ---------------------------------------------------------------------------
# owner-side header surgery


def _open_owner_block(file: EncryptedFile, owner: crypto.KeyPair, master_key: bytes) -> UserBlock:
    found = _find_block(file, owner_block_key(master_key, owner.public_point))
    if found is None:
        raise NotAuthorizedError("owner block does not open; wrong master key or not the owner")
    _, block = found
    if block.user_id != crypto.fingerprint(owner.public_point):
        raise TamperError("owner block user id mismatch")
    return block


def _discover_grants_within_header(
    file: EncryptedFile,
    owner: crypto.KeyPair,
    owner_block: UserBlock,
    candidates: Iterable[bytes],
) -> list[GrantInfo]:
    """Attribute every non-owner block to a candidate public key by trial
    decryption. The owner's block reveals the real header length, so the
    scan never wanders into ciphertext."""
    header_blocks = (owner_block.content_offset - PREAMBLE_LEN) // BLOCK_LEN
    keys = {
        bytes(pk): grantee_block_key(owner.secret_scalar, pk)
        for pk in candidates
        if bytes(pk) != owner.public_point
    }
    grants: list[GrantInfo] = []
    for index, sealed in _iter_sealed_blocks(file.body):
        if index >= header_blocks:
            break
        if index == 0:
            continue
        matched = None
        for pk, key in keys.items():
            block = _try_open_block(key, sealed, len(file.body))
            if block is None:
                continue
            if block.user_id != crypto.fingerprint(pk):
                raise TamperError("grantee block user id mismatch")
            matched = GrantInfo(
                public_point=pk,
                permission=Permission.READ_WRITE if block.x_key == owner_block.x_key else Permission.READ,
            )
            break
        if matched is None:
            raise UnknownGranteeBlockError(f"header block {index} matches no candidate public key")
        grants.append(matched)
    return grants


def audit_grants(
    file: EncryptedFile,
    owner: crypto.KeyPair,
    master_key: bytes,
    candidates: Iterable[bytes],
) -> list[GrantInfo]:
    """Owner's view of who holds access and at what permission."""
    owner_block = _open_owner_block(file, owner, master_key)
    return _discover_grants_within_header(file, owner, owner_block, candidates)


def grant(
    file: EncryptedFile,
    owner: crypto.KeyPair,
    master_key: bytes,
    grantee_public: bytes,
    permission: Permission,
    rng: Rng = secrets.token_bytes,
    candidates: Iterable[bytes] = (),
) -> EncryptedFile:
    """Append a user block for `grantee_public`; content and signature are
    untouched, but every block is re-sealed with the new content offset."""
    owner_block = _open_owner_block(file, owner, master_key)
    keys = FileKeys(fek=owner_block.fek, fsk=owner_block.x_key)
    if crypto.fingerprint(grantee_public) == owner_block.user_id:
        raise DuplicateGranteeError("grantee is the owner")
    all_candidates = list(candidates) + [bytes(grantee_public)]
    existing = _discover_grants_within_header(file, owner, owner_block, all_candidates)
    if any(g.public_point == bytes(grantee_public) for g in existing):
        raise DuplicateGranteeError("grantee already holds a block")
    content_box = _content_box_bytes(file, owner_block.content_offset)
    new_grants = existing + [GrantInfo(public_point=bytes(grantee_public), permission=permission)]
    return _assemble(owner, master_key, keys, new_grants, content_box, file.signature, rng)


def revoke(
    file: EncryptedFile,
    owner: crypto.KeyPair,
    master_key: bytes,
    revoked_public: bytes,
    rng: Rng = secrets.token_bytes,
    candidates: Iterable[bytes] = (),
) -> EncryptedFile:
    """Drop a grantee and rotate both file keys, re-encrypting the content.

    Without rotation the revoked user would keep a working content key
    forever; remaining grantees keep their exact prior permission.
    """
    owner_block = _open_owner_block(file, owner, master_key)
    old_keys = FileKeys(fek=owner_block.fek, fsk=owner_block.x_key)
    all_candidates = list(candidates) + [bytes(revoked_public)]
    existing = _discover_grants_within_header(file, owner, owner_block, all_candidates)
    remaining = [g for g in existing if g.public_point != bytes(revoked_public)]
    if len(remaining) == len(existing):
        raise GranteeNotFoundError("revoked user holds no block in this file")

    content_box = SealedBox.from_bytes(_content_box_bytes(file, owner_block.content_offset))
    try:
        content = crypto.aead_open(old_keys.fek, content_box, aad=PREAMBLE)
    except AuthenticationError as exc:
        raise TamperError("content does not authenticate under the current key") from exc

    new_keys = FileKeys.generate(rng)
    while new_keys.fek == old_keys.fek or new_keys.fsk == old_keys.fsk:
        new_keys = FileKeys.generate(rng)
    new_box = crypto.aead_seal(new_keys.fek, content, aad=PREAMBLE, rng=rng).to_bytes()
    signature = crypto.mac_sign(new_keys.fsk, new_box)
    return _assemble(owner, master_key, new_keys, remaining, new_box, signature, rng)


# ---------------------------------------------------------------------------
# reading and writing


def _read_with_key(
    file: EncryptedFile,
    block_key: bytes,
    expected_user_id: bytes,
    owner_view: bool = False,
) -> tuple[bytes, Permission]:
    found = _find_block(file, block_key)
    if found is None:
        raise NotAuthorizedError("no user block opens with this key")
    _, block = found
    if block.user_id != expected_user_id:
        raise TamperError("user block carries a foreign user id")
    content_box_raw = _content_box_bytes(file, block.content_offset)
    writable = crypto.mac_verify(block.x_key, content_box_raw, file.signature)
    if owner_view and not writable:
        # The owner's x_key is the authentic signing key, so a MAC failure
        # means the signature itself was tampered with.
        raise TamperError("file signature does not verify under the signing key")
    try:
        content = crypto.aead_open(block.fek, SealedBox.from_bytes(content_box_raw), aad=PREAMBLE)
    except AuthenticationError as exc:
        raise TamperError("encrypted content failed authentication") from exc
    return content, Permission.READ_WRITE if writable else Permission.READ


def read(file: EncryptedFile, my_secret: bytes, owner_public: bytes) -> tuple[bytes, Permission]:
    """Grantee read: locate my block under the pairwise key, decrypt, and
    report the permission my x_key actually grants."""
    me = crypto.public_from_secret(my_secret)
    return _read_with_key(
        file,
        grantee_block_key(my_secret, owner_public),
        crypto.fingerprint(me),
    )


def owner_read(file: EncryptedFile, master_key: bytes, owner_public: bytes) -> tuple[bytes, Permission]:
    return _read_with_key(
        file,
        owner_block_key(master_key, owner_public),
        crypto.fingerprint(owner_public),
        owner_view=True,
    )


def _write_with_key(
    file: EncryptedFile,
    block_key: bytes,
    expected_user_id: bytes,
    new_content: bytes,
    rng: Rng,
) -> EncryptedFile:
    found = _find_block(file, block_key)
    if found is None:
        raise NotAuthorizedError("no user block opens with this key")
    _, block = found
    if block.user_id != expected_user_id:
        raise TamperError("user block carries a foreign user id")
    current_box = _content_box_bytes(file, block.content_offset)
    if not crypto.mac_verify(block.x_key, current_box, file.signature):
        raise NoWriteCapabilityError("block does not carry the signing key; write refused")
    new_box = crypto.aead_seal(block.fek, new_content, aad=PREAMBLE, rng=rng).to_bytes()
    signature = crypto.mac_sign(block.x_key, new_box)
    header = file.body[: block.content_offset - PREAMBLE_LEN]
    return EncryptedFile(version=file.version, body=header + new_box + signature)


def write(
    file: EncryptedFile,
    my_secret: bytes,
    owner_public: bytes,
    new_content: bytes,
    rng: Rng = secrets.token_bytes,
) -> EncryptedFile:
    """Replace the content; requires proving possession of the signing key
    by verifying the existing signature first."""
    me = crypto.public_from_secret(my_secret)
    return _write_with_key(
        file,
        grantee_block_key(my_secret, owner_public),
        crypto.fingerprint(me),
        new_content,
        rng,
    )


def owner_write(
    file: EncryptedFile,
    master_key: bytes,
    owner_public: bytes,
    new_content: bytes,
    rng: Rng = secrets.token_bytes,
) -> EncryptedFile:
    return _write_with_key(
        file,
        owner_block_key(master_key, owner_public),
        crypto.fingerprint(owner_public),
        new_content,
        rng,
    )
