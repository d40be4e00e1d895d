"""Peer-side state machine for the shard distribution and recovery protocol.

A peer holds at most one shard record per owner. On an accepted offer it
seals the envelope under a subkey of its own master key, uploads the
ciphertext (prefixed with the owner's public key) to the store, and
remembers the blob id; the plaintext shard is never persisted anywhere. At
recovery time the peer fetches the blob back from the store, decrypts it,
and serves it only to a requester that is connected as, and has signed as,
the owner currently bound to the record.

Key rotation is a three-step exchange inside one session: the owner proves
possession of the old key (REBIND), receives the current envelope back
(SHARD_RESPONSE), and returns the same shard re-signed under the new key
(SHARD_OFFER). Only when that offer checks out does the peer atomically
swap the record to the new public key and answer REBIND_ACK; afterwards
the old key gets nothing.

Refusals are silent: `handle` returns None and the transport closes the
session, so a probing client cannot distinguish "no record" from "bad
signature".
"""

from __future__ import annotations

import base64
from dataclasses import dataclass

from . import crypto
from .crypto import KeyPair
from .errors import AuthenticationError, BlobNotFoundError, FormatError
from .protocol import (
    Message,
    Rebind,
    RebindAck,
    ShardAck,
    ShardEnvelope,
    ShardOffer,
    ShardRequest,
    ShardResponse,
    verify_rebind,
    verify_shard_request,
)
from .store import BlobStore
from .transport import PeerInfo

_SHARD_SEAL_LABEL = b"peer-shard-seal"
_SHARD_AAD = b"peer-shard"

ESCROW_MAGIC = b"ESC1"


@dataclass
class ShardRecord:
    blob_id: str
    index: int


class PeerNode:
    def __init__(
        self,
        keypair: KeyPair,
        master_key: bytes,
        name: str,
        email: str,
        store: BlobStore,
    ):
        self.keypair = keypair
        self.name = name
        self.email = email
        self.store = store
        self.records: dict[bytes, ShardRecord] = {}
        self._seal_key = crypto.derive_subkey(master_key, _SHARD_SEAL_LABEL)
        self.on_records_changed = None  # optional callback for persistence

    @property
    def info(self) -> PeerInfo:
        return PeerInfo(pk=self.keypair.public_point, name=self.name, email=self.email)

    # -- persistence hooks ---------------------------------------------------

    def export_records(self) -> dict[str, dict]:
        return {pk.hex(): {"blob_id": r.blob_id, "index": r.index} for pk, r in self.records.items()}

    def import_records(self, state: dict[str, dict]) -> None:
        self.records = {
            bytes.fromhex(pk): ShardRecord(blob_id=rec["blob_id"], index=rec["index"])
            for pk, rec in state.items()
        }

    def _records_changed(self) -> None:
        if self.on_records_changed is not None:
            self.on_records_changed(self)

    # -- message handling ------------------------------------------------------

    def handle(self, msg: Message, sender_pk: bytes, session_state: dict) -> Message | None:
        if isinstance(msg, ShardOffer):
            if "pending_rebind" in session_state:
                return self._complete_rebind(msg.envelope, sender_pk, session_state)
            return self._accept_offer(msg.envelope, sender_pk)
        if isinstance(msg, ShardRequest):
            return self._serve_request(msg, sender_pk)
        if isinstance(msg, Rebind):
            return self._start_rebind(msg, sender_pk, session_state)
        return None

    def _seal_envelope(self, envelope: ShardEnvelope) -> bytes:
        sealed = crypto.aead_seal(self._seal_key, envelope.to_bytes(), aad=_SHARD_AAD)
        return envelope.owner_pk + sealed.to_bytes()

    def _store_envelope(self, envelope: ShardEnvelope, existing: ShardRecord | None) -> ShardRecord:
        blob = self._seal_envelope(envelope)
        if existing is not None:
            self.store.replace(existing.blob_id, blob)
            return ShardRecord(blob_id=existing.blob_id, index=envelope.index)
        return ShardRecord(blob_id=self.store.put("shard", blob), index=envelope.index)

    def _load_envelope(self, owner_pk: bytes) -> ShardEnvelope | None:
        record = self.records.get(owner_pk)
        if record is None:
            return None
        try:
            blob = self.store.get(record.blob_id)
        except BlobNotFoundError:
            return None
        if blob[:32] != owner_pk:
            return None
        try:
            plain = crypto.aead_open(self._seal_key, crypto.SealedBox.from_bytes(blob[32:]), aad=_SHARD_AAD)
            return ShardEnvelope.from_bytes(plain)
        except (AuthenticationError, FormatError):
            return None

    def _accept_offer(self, envelope: ShardEnvelope, sender_pk: bytes) -> Message | None:
        if envelope.owner_pk != sender_pk:
            return None
        if not envelope.verify(sender_pk):
            return None
        self.records[envelope.owner_pk] = self._store_envelope(
            envelope, self.records.get(envelope.owner_pk)
        )
        self._records_changed()
        return ShardAck(index=envelope.index)

    def _serve_request(self, msg: ShardRequest, sender_pk: bytes) -> Message | None:
        if msg.owner_pk != sender_pk:
            return None
        if msg.owner_pk not in self.records:
            return None
        if not verify_shard_request(msg.owner_pk, msg.nonce, msg.signature):
            return None
        envelope = self._load_envelope(msg.owner_pk)
        if envelope is None:
            return None
        return ShardResponse(envelope=envelope)

    def _start_rebind(self, msg: Rebind, sender_pk: bytes, session_state: dict) -> Message | None:
        if msg.new_pk != sender_pk:
            return None
        if msg.old_pk not in self.records:
            return None
        if not verify_rebind(msg.old_pk, msg.new_pk, msg.endorsement):
            return None
        envelope = self._load_envelope(msg.old_pk)
        if envelope is None:
            return None
        session_state["pending_rebind"] = (msg.old_pk, msg.new_pk, envelope)
        return ShardResponse(envelope=envelope)

    def _complete_rebind(self, new_env: ShardEnvelope, sender_pk: bytes, session_state: dict) -> Message | None:
        old_pk, new_pk, old_env = session_state.pop("pending_rebind")
        if new_env.owner_pk != new_pk or sender_pk != new_pk:
            return None
        if not new_env.verify(new_pk):
            return None
        if new_env.index != old_env.index or new_env.shard != old_env.shard:
            return None
        record = self.records[old_pk]
        self.records[new_pk] = self._store_envelope(new_env, record)
        del self.records[old_pk]
        self._records_changed()
        return RebindAck()

    # -- escrow ---------------------------------------------------------------

    def escrow_export(self, owner_pk: bytes) -> str:
        """Decrypt the held shard and emit it as a printable blob (the
        out-of-band hand-over; a QR code in spirit)."""
        envelope = self._load_envelope(owner_pk)
        if envelope is None:
            raise BlobNotFoundError("no shard held for that owner")
        return base64.b64encode(ESCROW_MAGIC + envelope.to_bytes()).decode("ascii")


def parse_escrow_export(blob: str) -> ShardEnvelope:
    try:
        raw = base64.b64decode(blob.strip(), validate=True)
    except Exception as exc:
        raise FormatError("escrow blob is not valid base64") from exc
    if len(raw) < 4 or raw[:4] != ESCROW_MAGIC:
        raise FormatError("not an escrow export")
    return ShardEnvelope.from_bytes(raw[4:])
