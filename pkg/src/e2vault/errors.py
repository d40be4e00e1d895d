"""Exception hierarchy for the vault library.

Every error raised by this package derives from VaultError so callers can
catch one base class at CLI or service boundaries.
"""


class VaultError(Exception):
    """Base class for all vault errors."""


class CryptoError(VaultError):
    pass


class AuthenticationError(CryptoError):
    """AEAD open or envelope decryption failed: wrong key or tampered data."""


class InvalidPeerKeyError(CryptoError):
    """Peer public key is invalid or produced a degenerate shared secret."""


class KdfParameterError(CryptoError):
    """Password KDF inputs are unacceptable (empty password, weak cost, bad salt)."""


class FormatError(VaultError):
    """Serialized structure has a bad magic, version, or is truncated."""


class ThresholdParameterError(VaultError):
    """Sharding parameters out of range: need 1 <= k <= n <= 255."""


class ShardError(VaultError):
    """Shard set unusable: empty, duplicate indices, or mismatched lengths."""


class NotAuthorizedError(VaultError):
    """No user block in the file opens with the supplied key material."""


class NoWriteCapabilityError(VaultError):
    """Caller's block does not carry the signing key; write refused."""


class DuplicateGranteeError(VaultError):
    pass


class GranteeNotFoundError(VaultError):
    pass


class UnknownGranteeBlockError(VaultError):
    """A header block could not be attributed to any candidate public key,
    so the header cannot be rebuilt without destroying someone's access."""


class TamperError(VaultError):
    """Content or signature integrity check failed on an otherwise readable file."""


class ClockRegressionError(VaultError):
    """Refusing to stamp a freshness file earlier than the previous stamp."""


class BlobNotFoundError(VaultError):
    pass


class LinkNotFoundError(VaultError):
    """Unknown or expired link token (indistinguishable by design)."""


class TransportError(VaultError):
    pass


class PeerUnreachableError(TransportError):
    pass


class TransportTimeoutError(TransportError):
    pass


class SessionClosedError(TransportError):
    """Peer closed the session; treated as a refusal."""


class DistributionFailedError(VaultError):
    """Could not place all shards with confirmed peers."""


class RecoveryFailedError(VaultError):
    """Exhausted the peer list without reconstructing a secret that matches
    the commitment."""

    def __init__(self, message: str, valid_shards: int = 0):
        super().__init__(message)
        self.valid_shards = valid_shards


class RebindFailedError(VaultError):
    """No peer accepted the key rotation; old bindings left untouched."""


class EscrowJoinError(VaultError):
    pass


class ProfileError(VaultError):
    pass
