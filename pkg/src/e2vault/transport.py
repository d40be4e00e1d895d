"""Peer transports: an in-process simulator and a TCP loopback channel.

Both present the same contract: `discover()` lists reachable peers as
PeerInfo, and `session(peer_pk)` opens an ordered, reliable message channel
bound to the transport's identity. Sessions begin with a plaintext HELLO
exchange (public identity and display strings only); every subsequent
message is sealed under the pairwise "transport" key with the direction
and sequence number as associated data, so nothing can be reordered or
reflected within a session.

The simulator stands in for a short-range radio link: peers are in-process
objects, and per-peer behaviors (silent, corrupting) exist for fault
injection. The TCP transport runs each peer as a separate process bound to
an explicitly configured endpoint; "in range" becomes "in the endpoint
list".
"""

from __future__ import annotations

import socket
import struct
import threading
from dataclasses import dataclass

from . import crypto
from .crypto import KeyPair
from .errors import (
    FormatError,
    PeerUnreachableError,
    SessionClosedError,
    TransportTimeoutError,
)
from .protocol import Hello, Message, ShardOffer, ShardResponse, pack_message, unpack_message

DEFAULT_TIMEOUT = 5.0


@dataclass(frozen=True)
class PeerInfo:
    pk: bytes
    name: str
    email: str

    def __post_init__(self):
        if not self.name and not self.email:
            raise ValueError("peer display information must not be empty")


class SecureChannel:
    """Seals and unseals messages for one session side."""

    def __init__(self, my_secret: bytes, their_pk: bytes, initiator: bool):
        self._key = crypto.derive_shared_key(my_secret, their_pk, "transport")
        self._send_label = b"i" if initiator else b"r"
        self._recv_label = b"r" if initiator else b"i"
        self._send_seq = 0
        self._recv_seq = 0

    def seal(self, msg: Message) -> bytes:
        aad = self._send_label + struct.pack("<Q", self._send_seq)
        self._send_seq += 1
        return crypto.aead_seal(self._key, pack_message(msg), aad=aad).to_bytes()

    def unseal(self, data: bytes) -> Message:
        aad = self._recv_label + struct.pack("<Q", self._recv_seq)
        self._recv_seq += 1
        plain = crypto.aead_open(self._key, crypto.SealedBox.from_bytes(data), aad=aad)
        return unpack_message(plain)


# ---------------------------------------------------------------------------
# in-process simulator

BEHAVIOR_HONEST = "honest"
BEHAVIOR_SILENT = "silent"
BEHAVIOR_CORRUPT = "corrupt"


class SimPeer:
    """A peer endpoint in the simulator with scriptable faults.

    offer_behavior applies to incoming shard offers during distribution;
    recovery_behavior applies to shard requests. "silent" drops the message
    before the node sees it; "corrupt" flips a byte in the returned shard so
    the envelope signature no longer verifies.
    """

    def __init__(self, node, offer_behavior: str = BEHAVIOR_HONEST, recovery_behavior: str = BEHAVIOR_HONEST):
        self.node = node
        self.offer_behavior = offer_behavior
        self.recovery_behavior = recovery_behavior
        self.offers_seen: list[bytes] = []

    @property
    def info(self) -> PeerInfo:
        return self.node.info

    def process(self, msg: Message, sender_pk: bytes, session_state: dict) -> Message | None:
        from .protocol import ShardRequest  # local to avoid clutter above

        if isinstance(msg, ShardOffer) and "pending_rebind" not in session_state:
            self.offers_seen.append(sender_pk)
            if self.offer_behavior == BEHAVIOR_SILENT:
                return None
        if isinstance(msg, ShardRequest):
            if self.recovery_behavior == BEHAVIOR_SILENT:
                return None
        reply = self.node.handle(msg, sender_pk, session_state)
        if (
            isinstance(msg, ShardRequest)
            and isinstance(reply, ShardResponse)
            and self.recovery_behavior == BEHAVIOR_CORRUPT
        ):
            env = reply.envelope
            bad_shard = bytes([env.shard[0] ^ 0xFF]) + env.shard[1:]
            from .protocol import ShardEnvelope

            reply = ShardResponse(
                envelope=ShardEnvelope(
                    index=env.index, shard=bad_shard, owner_pk=env.owner_pk, signature=env.signature
                )
            )
        return reply


class _SimSession:
    def __init__(self, transport: "SimTransport", peer: SimPeer):
        identity = transport.identity
        self._transport = transport
        self._peer = peer
        self._client = SecureChannel(identity.secret_scalar, peer.node.keypair.public_point, initiator=True)
        self._server = SecureChannel(peer.node.keypair.secret_scalar, identity.public_point, initiator=False)
        self._sender_pk = identity.public_point
        self._state: dict = {}
        self._inbox: list[bytes] = []
        self._closed = False
        self.peer_pk = peer.node.keypair.public_point

    def send(self, msg: Message) -> None:
        if self._closed:
            raise SessionClosedError("session closed")
        if (
            isinstance(msg, ShardOffer)
            and "pending_rebind" not in self._state
            and self._transport.require_confirmation
        ):
            assert self.peer_pk in self._transport.confirmed_pks, "shard offered to an unconfirmed peer"
        frame = self._client.seal(msg)
        incoming = self._server.unseal(frame)
        reply = self._peer.process(incoming, self._sender_pk, self._state)
        if reply is None:
            # peer refuses or stays silent; nothing will arrive
            return
        self._inbox.append(self._server.seal(reply))

    def recv(self, timeout: float | None = None) -> Message:
        if not self._inbox:
            raise TransportTimeoutError("no reply from peer")
        return self._client.unseal(self._inbox.pop(0))

    def close(self) -> None:
        self._closed = True


class SimTransport:
    """Synchronous in-process transport over a set of SimPeer endpoints."""

    def __init__(self, identity: KeyPair, peers: list[SimPeer], require_confirmation: bool = False):
        self.identity = identity
        self.peers = {p.node.keypair.public_point: p for p in peers}
        self.require_confirmation = require_confirmation
        self.confirmed_pks: set[bytes] = set()

    def make_confirm(self, inner):
        """Wrap a confirm callback so the simulator can assert that shards
        only ever travel to peers the owner accepted."""
        self.require_confirmation = True

        def confirm(info: PeerInfo) -> bool:
            accepted = inner(info)
            if accepted:
                self.confirmed_pks.add(info.pk)
            return accepted

        return confirm

    def discover(self) -> list[PeerInfo]:
        return [p.info for p in self.peers.values()]

    def session(self, peer_pk: bytes) -> _SimSession:
        peer = self.peers.get(peer_pk)
        if peer is None:
            raise PeerUnreachableError("peer not in range")
        return _SimSession(self, peer)


# ---------------------------------------------------------------------------
# TCP loopback transport


def _write_frame(sock: socket.socket, payload: bytes) -> None:
    sock.sendall(struct.pack("<I", len(payload)) + payload)


def _read_frame(sock: socket.socket) -> bytes:
    header = _read_exact(sock, 4)
    (length,) = struct.unpack("<I", header)
    if length > 64 * 1024 * 1024:
        raise FormatError("frame too large")
    return _read_exact(sock, length)


def _read_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        try:
            chunk = sock.recv(n - len(buf))
        except socket.timeout as exc:
            raise TransportTimeoutError("peer timed out") from exc
        if not chunk:
            raise SessionClosedError("peer closed the connection")
        buf += chunk
    return buf


class _TcpSession:
    def __init__(self, sock: socket.socket, channel: SecureChannel, peer_pk: bytes):
        self._sock = sock
        self._channel = channel
        self.peer_pk = peer_pk

    def send(self, msg: Message) -> None:
        _write_frame(self._sock, self._channel.seal(msg))

    def recv(self, timeout: float | None = None) -> Message:
        self._sock.settimeout(timeout if timeout is not None else DEFAULT_TIMEOUT)
        return self._channel.unseal(_read_frame(self._sock))

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


class TcpTransport:
    def __init__(
        self,
        identity: KeyPair,
        endpoints: list[tuple[str, int]],
        name: str = "owner",
        email: str = "",
        timeout: float = DEFAULT_TIMEOUT,
    ):
        self.identity = identity
        self.endpoints = list(endpoints)
        self.name = name
        self.email = email
        self.timeout = timeout
        self._directory: dict[bytes, tuple[str, int]] = {}

    def _handshake(self, endpoint: tuple[str, int]) -> tuple[socket.socket, Hello]:
        try:
            sock = socket.create_connection(endpoint, timeout=self.timeout)
        except OSError as exc:
            raise PeerUnreachableError(f"cannot connect to {endpoint[0]}:{endpoint[1]}") from exc
        sock.settimeout(self.timeout)
        hello = Hello(pk=self.identity.public_point, name=self.name, email=self.email)
        _write_frame(sock, pack_message(hello))
        reply = unpack_message(_read_frame(sock))
        if not isinstance(reply, Hello):
            sock.close()
            raise FormatError("peer did not introduce itself")
        return sock, reply

    def discover(self) -> list[PeerInfo]:
        found = []
        for endpoint in self.endpoints:
            try:
                sock, hello = self._handshake(endpoint)
                sock.close()
            except (TransportTimeoutError, PeerUnreachableError, SessionClosedError, FormatError):
                continue
            self._directory[hello.pk] = endpoint
            found.append(PeerInfo(pk=hello.pk, name=hello.name, email=hello.email))
        return found

    def session(self, peer_pk: bytes) -> _TcpSession:
        endpoint = self._directory.get(peer_pk)
        if endpoint is None:
            self.discover()
            endpoint = self._directory.get(peer_pk)
        if endpoint is None:
            raise PeerUnreachableError("no endpoint known for peer")
        sock, hello = self._handshake(endpoint)
        if hello.pk != peer_pk:
            sock.close()
            raise PeerUnreachableError("endpoint now serves a different identity")
        channel = SecureChannel(self.identity.secret_scalar, peer_pk, initiator=True)
        return _TcpSession(sock, channel, peer_pk)


class PeerServer:
    """Serves a peer node over TCP; one thread per connection."""

    def __init__(self, node, host: str = "127.0.0.1", port: int = 0):
        self.node = node
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(16)
        self.address = self._listener.getsockname()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def start(self) -> None:
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()

    def serve_forever(self) -> None:
        self._listener.settimeout(0.2)
        while not self._stop.is_set():
            try:
                conn, _addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            threading.Thread(target=self._serve_connection, args=(conn,), daemon=True).start()

    def _serve_connection(self, conn: socket.socket) -> None:
        try:
            conn.settimeout(DEFAULT_TIMEOUT)
            hello = unpack_message(_read_frame(conn))
            if not isinstance(hello, Hello):
                return
            mine = Hello(pk=self.node.keypair.public_point, name=self.node.name, email=self.node.email)
            _write_frame(conn, pack_message(mine))
            channel = SecureChannel(self.node.keypair.secret_scalar, hello.pk, initiator=False)
            session_state: dict = {}
            while True:
                msg = channel.unseal(_read_frame(conn))
                reply = self.node.handle(msg, hello.pk, session_state)
                if reply is None:
                    return  # refusal: close without a word
                _write_frame(conn, channel.seal(reply))
        except (SessionClosedError, TransportTimeoutError, FormatError, OSError):
            pass
        finally:
            try:
                conn.close()
            except OSError:
                pass

    def stop(self) -> None:
        self._stop.set()
        try:
            self._listener.close()
        except OSError:
            pass
        if self._thread is not None:
            self._thread.join(timeout=2)
