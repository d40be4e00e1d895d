"""e2vault: end-to-end encrypted content vault.

Library layers, bottom up:

    crypto      key generation, pairwise keys, AEAD, MAC, password KDF
    eddsa       64-byte signatures under the X25519 identity keys
    gf256       byte-field arithmetic
    shamir      threshold secret splitting and joining
    fileformat  sealed-header encrypted file: grant, revoke, read, write
    freshness   per-directory hash-tree stamps, rollback detection
    store       directory-backed blob server with anonymous links
    protocol    shard envelopes, peer lists, commitments, wire messages
    transport   in-process simulator and TCP loopback peer channels
    peer        peer-side state machine (holds sealed shards, serves them)
    recovery    distribution, threshold recovery, key rotation, escrow
    profile     sealed on-disk client profile
    cli         command-line front end
"""

__version__ = "0.1.0"
