"""Owner-side drivers for the master-secret lifecycle.

Covers password backup to the store, shard distribution over a transport
with mandatory per-peer confirmation, threshold recovery checked against a
secret commitment, identity-key rotation across peers, and escrow joins
from out-of-band shard exports.

Trust decisions live here, not in the transport: the peer list downloaded
from the store is only honored if its signature verifies under the owner's
own identity, every returned envelope must be signed by that identity and
carry the exact index the roster assigned to the peer (which also keeps
shards from different distribution rounds from being mixed), and the
reconstructed secret is accepted only when it matches the commitment. The
signatures filter bad peers cheaply; the commitment is the final arbiter.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass
from typing import Callable, Sequence

from . import crypto
from .crypto import KeyPair, Rng
from .errors import (
    DistributionFailedError,
    EscrowJoinError,
    RebindFailedError,
    RecoveryFailedError,
    TransportError,
)
from .peer import parse_escrow_export
from .protocol import (
    REQUEST_NONCE_LEN,
    PeerList,
    Rebind,
    RebindAck,
    ShardAck,
    ShardOffer,
    ShardRequest,
    ShardResponse,
    make_commitment,
    make_peer_list,
    make_shard_envelope,
    sign_rebind,
    sign_shard_request,
    verify_commitment,
)
from .shamir import Shard, ThresholdParams, join, split
from .store import BlobStore
from .transport import PeerInfo

ConfirmCallback = Callable[[PeerInfo], bool]


# ---------------------------------------------------------------------------
# password backup


def password_backup(
    master_secret: bytes,
    password: str,
    store: BlobStore,
    rng: Rng = secrets.token_bytes,
    iterations: int = crypto.DEFAULT_KDF_ITERATIONS,
) -> str:
    envelope = crypto.seal_with_password(password, master_secret, rng=rng, iterations=iterations)
    return store.put("envelope", envelope.to_bytes())


def password_restore(store: BlobStore, blob_id: str, password: str) -> bytes:
    # a missing blob raises BlobNotFoundError; a wrong password raises
    # AuthenticationError -- deliberately distinguishable, since only the
    # former should push the user toward social recovery
    envelope = crypto.PasswordEnvelope.from_bytes(store.get(blob_id))
    return crypto.open_with_password(envelope, password)


# ---------------------------------------------------------------------------
# distribution


@dataclass(frozen=True)
class DistributionResult:
    peer_list: PeerList
    blob_id: str


def distribute(
    master_secret: bytes,
    params: ThresholdParams,
    transport,
    confirm: ConfirmCallback,
    owner: KeyPair,
    store: BlobStore,
    rng: Rng = secrets.token_bytes,
    ack_timeout: float = 5.0,
) -> DistributionResult:
    """Place n shards with confirmed peers; upload the signed roster only
    after every shard is acknowledged.

    Candidates are proposed one at a time; a rejected candidate is never
    contacted, an unresponsive one is skipped and the shard re-offered to
    the next candidate. Candidates are consumed without replacement: when
    the discovery list runs out before n placements, the whole distribution
    fails and no peer list is persisted.
    """
    shards = split(master_secret, params, rng=rng)
    records: list[tuple[bytes, int]] = []
    used: set[bytes] = set()
    next_index = 1
    for info in transport.discover():
        if next_index > params.n:
            break
        if info.pk == owner.public_point or info.pk in used:
            continue
        if not confirm(info):
            continue
        envelope = make_shard_envelope(owner, next_index, shards[next_index].value)
        try:
            session = transport.session(info.pk)
            session.send(ShardOffer(envelope=envelope))
            reply = session.recv(timeout=ack_timeout)
            session.close()
        except TransportError:
            continue
        if not isinstance(reply, ShardAck) or reply.index != next_index:
            continue
        used.add(info.pk)
        records.append((info.pk, next_index))
        next_index += 1
    if len(records) < params.n:
        raise DistributionFailedError(
            f"placed {len(records)} of {params.n} shards before running out of confirmable peers"
        )
    commitment = make_commitment(master_secret, rng=rng)
    peer_list = make_peer_list(owner, records, params.k, commitment)
    blob_id = store.put("peerlist", peer_list.to_bytes())
    return DistributionResult(peer_list=peer_list, blob_id=blob_id)


# ---------------------------------------------------------------------------
# recovery


def recover(
    peer_list: PeerList,
    transport,
    owner: KeyPair,
    rng: Rng = secrets.token_bytes,
    timeout: float = 5.0,
) -> bytes:
    if peer_list.owner_pk != owner.public_point or not peer_list.verify():
        raise RecoveryFailedError("peer list is not signed by this identity", valid_shards=0)
    collected: dict[int, Shard] = {}
    shard_len: int | None = None
    for peer_pk, index in peer_list.records:
        try:
            session = transport.session(peer_pk)
            nonce = rng(REQUEST_NONCE_LEN)
            session.send(
                ShardRequest(
                    owner_pk=owner.public_point,
                    nonce=nonce,
                    signature=sign_shard_request(owner, nonce),
                )
            )
            reply = session.recv(timeout=timeout)
            session.close()
        except TransportError:
            continue
        if not isinstance(reply, ShardResponse):
            continue
        envelope = reply.envelope
        if envelope.index != index:
            continue
        if not envelope.verify(owner.public_point):
            continue
        if shard_len is None:
            shard_len = len(envelope.shard)
        elif len(envelope.shard) != shard_len:
            continue
        collected[index] = Shard(index=envelope.index, value=envelope.shard)
        if len(collected) >= peer_list.threshold:
            candidate = join(collected.values())
            if verify_commitment(peer_list.commitment, candidate):
                return candidate
    raise RecoveryFailedError(
        f"no commitment match after contacting all peers ({len(collected)} valid shards)",
        valid_shards=len(collected),
    )


# ---------------------------------------------------------------------------
# identity rotation


@dataclass(frozen=True)
class RebindResult:
    peer_list: PeerList
    blob_id: str
    unreachable: tuple[bytes, ...]


def update_owner_pk(
    peer_list: PeerList,
    old: KeyPair,
    new: KeyPair,
    transport,
    store: BlobStore,
    timeout: float = 5.0,
) -> RebindResult:
    """Rebind every reachable peer's shard record to the new identity.

    The transport must be bound to the new identity; the endorsement signed
    by the old key authorizes the swap. Each peer returns its envelope,
    which is re-signed under the new key and offered back; the peer swaps
    atomically at acknowledgment time. Peers that stay unreachable remain
    bound to the old key and are reported.
    """
    if peer_list.owner_pk != old.public_point or not peer_list.verify():
        raise RebindFailedError("peer list is not signed by the old identity")
    endorsement = sign_rebind(old, new.public_point)
    rebound: list[bytes] = []
    unreachable: list[bytes] = []
    for peer_pk, index in peer_list.records:
        try:
            session = transport.session(peer_pk)
            session.send(Rebind(old_pk=old.public_point, new_pk=new.public_point, endorsement=endorsement))
            reply = session.recv(timeout=timeout)
            if not isinstance(reply, ShardResponse):
                raise RebindFailedError("peer refused rebind")
            envelope = reply.envelope
            if envelope.index != index or not envelope.verify(old.public_point):
                raise RebindFailedError("peer returned a bad envelope")
            session.send(ShardOffer(envelope=make_shard_envelope(new, index, envelope.shard)))
            ack = session.recv(timeout=timeout)
            session.close()
            if not isinstance(ack, RebindAck):
                raise RebindFailedError("peer did not acknowledge")
            rebound.append(peer_pk)
        except (TransportError, RebindFailedError):
            unreachable.append(peer_pk)
    if not rebound:
        raise RebindFailedError("no peer accepted the rotation; nothing uploaded")
    new_list = make_peer_list(new, list(peer_list.records), peer_list.threshold, peer_list.commitment)
    blob_id = store.put("peerlist", new_list.to_bytes())
    return RebindResult(peer_list=new_list, blob_id=blob_id, unreachable=tuple(unreachable))


# ---------------------------------------------------------------------------
# escrow


def escrow_join(exports: Sequence[str], peer_list: PeerList) -> bytes:
    """Reconstruct the secret from out-of-band shard exports.

    Exports with bad encodings or signatures are excluded rather than
    fatal; the join proceeds only if at least threshold-many distinct,
    validly signed shards remain, and the result must match the roster's
    commitment.
    """
    envelopes = {}
    for blob in exports:
        try:
            envelope = parse_escrow_export(blob)
        except Exception:
            continue
        if not envelope.verify(peer_list.owner_pk):
            continue
        envelopes[envelope.index] = envelope
    lengths = {len(e.shard) for e in envelopes.values()}
    if len(lengths) > 1:
        longest = max(lengths)
        envelopes = {i: e for i, e in envelopes.items() if len(e.shard) == longest}
    if len(envelopes) < peer_list.threshold:
        raise EscrowJoinError(
            f"only {len(envelopes)} valid exports, need {peer_list.threshold}"
        )
    candidate = join(Shard(index=e.index, value=e.shard) for e in envelopes.values())
    if not verify_commitment(peer_list.commitment, candidate):
        raise EscrowJoinError("joined secret does not match the commitment")
    return candidate
