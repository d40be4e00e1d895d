"""Recovery-protocol data structures and wire messages.

Signed structures (signatures are 64 bytes under the owner's identity key,
see eddsa; every signed payload carries a distinct domain prefix so
messages of different kinds can never be confused for one another):

    ShardEnvelope  one shard plus the owner's signature over
                   (index || shard || owner_pk)
    PeerList       the signed roster mapping peers to shard indices, the
                   threshold, and the secret commitment
    SecretCommitment  salt || SHA-256(salt || secret); verifies a candidate
                   secret without revealing anything about it

Wire messages (length-prefixed on the wire, sealed under the pairwise
"transport" key after the HELLO handshake):

    HELLO          {pk, display name, display email}
    SHARD_OFFER    {ShardEnvelope}
    SHARD_ACK      {index}
    SHARD_REQUEST  {owner_pk, nonce, sig}
    SHARD_RESPONSE {ShardEnvelope}
    REBIND         {old_pk, new_pk, endorsement}
    REBIND_ACK     {}
"""

from __future__ import annotations

import hashlib
import secrets
import struct
from dataclasses import dataclass

from . import eddsa
from .crypto import KeyPair, Rng
from .errors import FormatError

_ENVELOPE_DOMAIN = b"e2v/shard-envelope"
_PEERLIST_DOMAIN = b"e2v/peer-list"
_REQUEST_DOMAIN = b"e2v/shard-request"
_REBIND_DOMAIN = b"e2v/rebind"

COMMITMENT_SALT_LEN = 16
REQUEST_NONCE_LEN = 16


# ---------------------------------------------------------------------------
# commitments


@dataclass(frozen=True)
class SecretCommitment:
    salt: bytes
    digest: bytes

    def to_bytes(self) -> bytes:
        return self.salt + self.digest

    @classmethod
    def from_bytes(cls, data: bytes) -> "SecretCommitment":
        if len(data) != COMMITMENT_SALT_LEN + 32:
            raise FormatError("bad commitment length")
        return cls(salt=data[:COMMITMENT_SALT_LEN], digest=data[COMMITMENT_SALT_LEN:])


def make_commitment(secret: bytes, rng: Rng = secrets.token_bytes) -> SecretCommitment:
    salt = rng(COMMITMENT_SALT_LEN)
    return SecretCommitment(salt=salt, digest=hashlib.sha256(salt + secret).digest())


def verify_commitment(commitment: SecretCommitment, candidate: bytes) -> bool:
    return hashlib.sha256(commitment.salt + candidate).digest() == commitment.digest


# ---------------------------------------------------------------------------
# shard envelopes


@dataclass(frozen=True)
class ShardEnvelope:
    index: int
    shard: bytes
    owner_pk: bytes
    signature: bytes

    def signed_payload(self) -> bytes:
        return _ENVELOPE_DOMAIN + bytes([self.index]) + self.shard + self.owner_pk

    def verify(self, owner_pk: bytes) -> bool:
        return self.owner_pk == owner_pk and eddsa.verify(
            owner_pk, self.signed_payload(), self.signature
        )

    def to_bytes(self) -> bytes:
        return (
            bytes([self.index])
            + struct.pack("<I", len(self.shard))
            + self.shard
            + self.owner_pk
            + self.signature
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "ShardEnvelope":
        if len(data) < 1 + 4 + 32 + 64:
            raise FormatError("shard envelope truncated")
        index = data[0]
        (shard_len,) = struct.unpack("<I", data[1:5])
        end = 5 + shard_len
        if len(data) != end + 32 + 64:
            raise FormatError("shard envelope length mismatch")
        return cls(
            index=index,
            shard=data[5:end],
            owner_pk=data[end : end + 32],
            signature=data[end + 32 :],
        )


def make_shard_envelope(owner: KeyPair, index: int, shard: bytes) -> ShardEnvelope:
    env = ShardEnvelope(index=index, shard=shard, owner_pk=owner.public_point, signature=b"\x00" * 64)
    sig = eddsa.sign(owner.secret_scalar, env.signed_payload())
    return ShardEnvelope(index=index, shard=shard, owner_pk=owner.public_point, signature=sig)


# ---------------------------------------------------------------------------
# peer list


@dataclass(frozen=True)
class PeerList:
    owner_pk: bytes
    records: tuple[tuple[bytes, int], ...]  # (peer_pk, shard index)
    threshold: int
    commitment: SecretCommitment
    signature: bytes

    def signed_payload(self) -> bytes:
        body = _PEERLIST_DOMAIN + self.owner_pk + bytes([self.threshold, len(self.records)])
        for peer_pk, index in self.records:
            body += peer_pk + bytes([index])
        return body + self.commitment.to_bytes()

    def verify(self) -> bool:
        indices = [i for _, i in self.records]
        if len(set(indices)) != len(indices):
            return False
        return eddsa.verify(self.owner_pk, self.signed_payload(), self.signature)

    def to_bytes(self) -> bytes:
        out = b"PLS1" + self.owner_pk + bytes([self.threshold, len(self.records)])
        for peer_pk, index in self.records:
            out += peer_pk + bytes([index])
        return out + self.commitment.to_bytes() + self.signature

    @classmethod
    def from_bytes(cls, data: bytes) -> "PeerList":
        if len(data) < 4 + 32 + 2 or data[:4] != b"PLS1":
            raise FormatError("not a peer list")
        owner_pk = data[4:36]
        threshold = data[36]
        count = data[37]
        pos = 38
        records = []
        for _ in range(count):
            if pos + 33 > len(data):
                raise FormatError("peer list truncated")
            records.append((data[pos : pos + 32], data[pos + 32]))
            pos += 33
        if len(data) != pos + 48 + 64:
            raise FormatError("peer list length mismatch")
        commitment = SecretCommitment.from_bytes(data[pos : pos + 48])
        return cls(
            owner_pk=owner_pk,
            records=tuple(records),
            threshold=threshold,
            commitment=commitment,
            signature=data[pos + 48 :],
        )


def make_peer_list(
    owner: KeyPair,
    records: list[tuple[bytes, int]],
    threshold: int,
    commitment: SecretCommitment,
) -> PeerList:
    unsigned = PeerList(
        owner_pk=owner.public_point,
        records=tuple(records),
        threshold=threshold,
        commitment=commitment,
        signature=b"\x00" * 64,
    )
    sig = eddsa.sign(owner.secret_scalar, unsigned.signed_payload())
    return PeerList(
        owner_pk=owner.public_point,
        records=tuple(records),
        threshold=threshold,
        commitment=commitment,
        signature=sig,
    )


# ---------------------------------------------------------------------------
# request / rebind signatures


def sign_shard_request(owner: KeyPair, nonce: bytes) -> bytes:
    return eddsa.sign(owner.secret_scalar, _REQUEST_DOMAIN + owner.public_point + nonce)


def verify_shard_request(owner_pk: bytes, nonce: bytes, signature: bytes) -> bool:
    return eddsa.verify(owner_pk, _REQUEST_DOMAIN + owner_pk + nonce, signature)


def sign_rebind(old: KeyPair, new_pk: bytes) -> bytes:
    return eddsa.sign(old.secret_scalar, _REBIND_DOMAIN + old.public_point + new_pk)


def verify_rebind(old_pk: bytes, new_pk: bytes, endorsement: bytes) -> bool:
    return eddsa.verify(old_pk, _REBIND_DOMAIN + old_pk + new_pk, endorsement)


# ---------------------------------------------------------------------------
# wire messages


def _pack_str(value: str) -> bytes:
    raw = value.encode()
    return struct.pack("<H", len(raw)) + raw


def _unpack_str(data: bytes, pos: int) -> tuple[str, int]:
    (length,) = struct.unpack("<H", data[pos : pos + 2])
    end = pos + 2 + length
    return data[pos + 2 : end].decode(), end


@dataclass(frozen=True)
class Hello:
    pk: bytes
    name: str
    email: str

    TYPE = 1

    def pack_body(self) -> bytes:
        return self.pk + _pack_str(self.name) + _pack_str(self.email)

    @classmethod
    def unpack_body(cls, data: bytes) -> "Hello":
        pk = data[:32]
        name, pos = _unpack_str(data, 32)
        email, _ = _unpack_str(data, pos)
        return cls(pk=pk, name=name, email=email)


@dataclass(frozen=True)
class ShardOffer:
    envelope: ShardEnvelope

    TYPE = 2

    def pack_body(self) -> bytes:
        return self.envelope.to_bytes()

    @classmethod
    def unpack_body(cls, data: bytes) -> "ShardOffer":
        return cls(envelope=ShardEnvelope.from_bytes(data))


@dataclass(frozen=True)
class ShardAck:
    index: int

    TYPE = 3

    def pack_body(self) -> bytes:
        return bytes([self.index])

    @classmethod
    def unpack_body(cls, data: bytes) -> "ShardAck":
        return cls(index=data[0])


@dataclass(frozen=True)
class ShardRequest:
    owner_pk: bytes
    nonce: bytes
    signature: bytes

    TYPE = 4

    def pack_body(self) -> bytes:
        return self.owner_pk + self.nonce + self.signature

    @classmethod
    def unpack_body(cls, data: bytes) -> "ShardRequest":
        if len(data) != 32 + REQUEST_NONCE_LEN + 64:
            raise FormatError("bad shard request")
        return cls(owner_pk=data[:32], nonce=data[32:48], signature=data[48:])


@dataclass(frozen=True)
class ShardResponse:
    envelope: ShardEnvelope

    TYPE = 5

    def pack_body(self) -> bytes:
        return self.envelope.to_bytes()

    @classmethod
    def unpack_body(cls, data: bytes) -> "ShardResponse":
        return cls(envelope=ShardEnvelope.from_bytes(data))


@dataclass(frozen=True)
class Rebind:
    old_pk: bytes
    new_pk: bytes
    endorsement: bytes

    TYPE = 6

    def pack_body(self) -> bytes:
        return self.old_pk + self.new_pk + self.endorsement

    @classmethod
    def unpack_body(cls, data: bytes) -> "Rebind":
        if len(data) != 32 + 32 + 64:
            raise FormatError("bad rebind message")
        return cls(old_pk=data[:32], new_pk=data[32:64], endorsement=data[64:])


@dataclass(frozen=True)
class RebindAck:
    TYPE = 7

    def pack_body(self) -> bytes:
        return b""

    @classmethod
    def unpack_body(cls, data: bytes) -> "RebindAck":
        return cls()


_MESSAGE_TYPES = {
    cls.TYPE: cls
    for cls in (Hello, ShardOffer, ShardAck, ShardRequest, ShardResponse, Rebind, RebindAck)
}

Message = Hello | ShardOffer | ShardAck | ShardRequest | ShardResponse | Rebind | RebindAck


def pack_message(msg: Message) -> bytes:
    return bytes([msg.TYPE]) + msg.pack_body()


def unpack_message(data: bytes) -> Message:
    if not data:
        raise FormatError("empty message")
    cls = _MESSAGE_TYPES.get(data[0])
    if cls is None:
        raise FormatError(f"unknown message type {data[0]}")
    return cls.unpack_body(data[1:])
