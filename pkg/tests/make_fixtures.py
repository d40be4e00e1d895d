"""Builds the golden wire-format fixtures.

Run `python tests/make_fixtures.py` to (re)generate tests/fixtures/.
The acceptance suite rebuilds the same bytes from the same deterministic
inputs and requires equality with the committed files, so any change to a
wire format shows up as a fixture diff, never silently.
"""

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
for entry in (str(ROOT / "src"), str(ROOT)):
    if entry not in sys.path:
        sys.path.insert(0, entry)

import hashlib

from e2vault import crypto, fileformat, freshness
from e2vault.tickets import make_share_ticket
from tests.detrng import StreamRng

FIXTURE_DIR = Path(__file__).resolve().parent / "fixtures"


def build_fixtures() -> dict[str, bytes]:
    owner = crypto.KeyPair.from_secret(StreamRng("fixture-owner-identity")(32))
    grantee = crypto.KeyPair.from_secret(StreamRng("fixture-grantee-identity")(32))
    master_key = StreamRng("fixture-master-key")(32)

    encrypted = fileformat.create_encrypted_file(
        b"golden fixture content: forty-two bytes..",
        owner,
        master_key,
        rng=StreamRng("fixture-file"),
    )
    encrypted = fileformat.grant(
        encrypted,
        owner,
        master_key,
        grantee.public_point,
        fileformat.Permission.READ,
        rng=StreamRng("fixture-grant"),
    )

    fhf = freshness.stamp(
        hashlib.sha256(b"fixture-root").digest(),
        master_key,
        now=1_700_000_000,
    )

    envelope = crypto.seal_with_password(
        "fixture-password",
        StreamRng("fixture-secret")(32),
        rng=StreamRng("fixture-envelope"),
        iterations=10_000,
    )

    ticket = make_share_ticket("ab" * 16, owner.public_point)

    return {
        "encrypted_file.e2ef": encrypted.serialize(),
        "freshness.fhf": fhf.to_bytes(),
        "password_envelope.pwe": envelope.to_bytes(),
        "share_ticket.txt": ticket.encode() + b"\n",
    }


def main() -> None:
    FIXTURE_DIR.mkdir(exist_ok=True)
    for name, data in build_fixtures().items():
        (FIXTURE_DIR / name).write_bytes(data)
        print(f"wrote {name} ({len(data)} bytes)")


if __name__ == "__main__":
    main()
