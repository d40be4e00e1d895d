"""Share tickets: the out-of-band bundle a grantee needs to open a file.

A ticket is base64 of "TKT1" || blob_id(32 ascii hex) || owner_public(32).
The blob id locates the encrypted file on the store (or via an anonymous
link); the owner public key is what the grantee's secret key is paired
against to open their user block. Nothing in the ticket is secret, but it
is also never stored server-side, which is what keeps the server blind to
who accesses what.
"""

from __future__ import annotations

import base64
import binascii

from .errors import FormatError

_MAGIC = b"TKT1"
_BLOB_ID_LEN = 32
_PK_LEN = 32


def make_share_ticket(blob_id: str, owner_public: bytes) -> str:
    if len(blob_id) != _BLOB_ID_LEN:
        raise ValueError("blob id must be 32 hex characters")
    if len(owner_public) != _PK_LEN:
        raise ValueError("owner public key must be 32 bytes")
    return base64.b64encode(_MAGIC + blob_id.encode("ascii") + owner_public).decode("ascii")


def parse_share_ticket(ticket: str) -> tuple[str, bytes]:
    try:
        raw = base64.b64decode(ticket.strip(), validate=True)
    except (binascii.Error, ValueError) as exc:
        raise FormatError("share ticket is not valid base64") from exc
    if len(raw) != len(_MAGIC) + _BLOB_ID_LEN + _PK_LEN or raw[:4] != _MAGIC:
        raise FormatError("not a share ticket")
    blob_id = raw[4 : 4 + _BLOB_ID_LEN].decode("ascii")
    return blob_id, raw[4 + _BLOB_ID_LEN :]


def looks_like_ticket(value: str) -> bool:
    try:
        parse_share_ticket(value)
        return True
    except FormatError:
        return False
