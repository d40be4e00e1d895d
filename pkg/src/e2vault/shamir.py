"""Threshold splitting of byte-string secrets over GF(256).

Each byte of the secret gets its own fresh random polynomial of degree
k-1 whose constant term is that byte; shard i carries the polynomial
evaluations at x = i. Any k shards reconstruct the secret by Lagrange
interpolation at x = 0.

`join` deliberately does not know k: it interpolates whatever it is
given. Callers that need threshold enforcement must check the result
against an out-of-band commitment (see the recovery protocol).
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass
from typing import Iterable

from .errors import ShardError, ThresholdParameterError
from .gf256 import EXP_TABLE, LOG_TABLE

MAX_SHARDS = 255


@dataclass(frozen=True)
class ThresholdParams:
    n: int
    k: int

    def __post_init__(self):
        if not isinstance(self.n, int) or not isinstance(self.k, int):
            raise ThresholdParameterError("n and k must be integers")
        if not (1 <= self.k <= self.n <= MAX_SHARDS):
            raise ThresholdParameterError(
                f"need 1 <= k <= n <= {MAX_SHARDS}, got n={self.n} k={self.k}"
            )


@dataclass(frozen=True)
class Shard:
    index: int
    value: bytes

    def __post_init__(self):
        if not (1 <= self.index <= MAX_SHARDS):
            raise ShardError(f"shard index must be in 1..{MAX_SHARDS}, got {self.index}")

    def to_bytes(self) -> bytes:
        return bytes([self.index]) + self.value

    @classmethod
    def from_bytes(cls, data: bytes) -> "Shard":
        if len(data) < 2:
            raise ShardError("serialized shard too short")
        return cls(index=data[0], value=data[1:])


def split(secret: bytes, params: ThresholdParams, rng=secrets.token_bytes) -> dict[int, Shard]:
    """Split into n shards with threshold k; returns {index: Shard}."""
    if not secret:
        raise ShardError("secret must not be empty")
    length = len(secret)
    degree = params.k - 1
    # one fresh coefficient block per degree, no reuse across byte positions
    coeff_blocks = [rng(length) for _ in range(degree)]
    # highest-degree coefficient first, per byte position, for Horner's rule
    columns = [
        [blk[j] for blk in reversed(coeff_blocks)] + [secret[j]] for j in range(length)
    ]
    exp, log = EXP_TABLE, LOG_TABLE
    shards: dict[int, Shard] = {}
    for x in range(1, params.n + 1):
        log_x = log[x]
        out = bytearray(length)
        for j, coeffs in enumerate(columns):
            acc = 0
            for c in coeffs:
                if acc:
                    acc = exp[log[acc] + log_x]
                acc ^= c
            out[j] = acc
        shards[x] = Shard(index=x, value=bytes(out))
    return shards


def join(shards: Iterable[Shard]) -> bytes:
    """Interpolate the secret at x = 0 from the provided shards.

    The Lagrange basis evaluated at zero depends only on the shard indices,
    so one weight per shard serves every byte position.
    """
    pool = list(shards)
    if not pool:
        raise ShardError("no shards supplied")
    indices = [s.index for s in pool]
    if len(set(indices)) != len(indices):
        raise ShardError("duplicate shard indices")
    length = len(pool[0].value)
    if any(len(s.value) != length for s in pool):
        raise ShardError("shards have mismatched lengths")
    if length == 0:
        raise ShardError("shards are empty")
    exp, log = EXP_TABLE, LOG_TABLE
    log_weights = []
    for xi in indices:
        num_log = 0
        den_log = 0
        for xj in indices:
            if xi == xj:
                continue
            num_log += log[xj]
            den_log += log[xi ^ xj]
        log_weights.append((num_log - den_log) % 255)
    secret = bytearray(length)
    for shard, log_w in zip(pool, log_weights):
        value = shard.value
        for pos in range(length):
            y = value[pos]
            if y:
                secret[pos] ^= exp[log[y] + log_w]
    return bytes(secret)
