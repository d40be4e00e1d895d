"""On-disk client profile.

A JSON file with public configuration in the clear (store root, display
strings, contact book, blob ids) and all key material inside a single
sealed blob encrypted under a passphrase-derived key:

    sealed = PasswordEnvelope over JSON {"secret_scalar": hex|null,
                                         "master_key": hex|null}

A null master_key models the "lost" state that social recovery repairs.
No key material ever leaves this file unsealed.
"""

from __future__ import annotations

import json
import os
import secrets
from dataclasses import dataclass, field
from pathlib import Path

from . import crypto
from .crypto import KeyPair
from .errors import AuthenticationError, ProfileError

PROFILE_VERSION = 1


@dataclass
class Profile:
    path: Path
    store_root: str
    display_name: str
    display_email: str
    keypair: KeyPair | None
    master_key: bytes | None
    contacts: dict[str, bytes] = field(default_factory=dict)
    peerlist_blob: str | None = None
    envelope_blob: str | None = None
    vault_dir: str | None = None
    peer_records: dict = field(default_factory=dict)
    kdf_iterations: int = crypto.DEFAULT_KDF_ITERATIONS
    _kdf_salt: bytes = b""
    _passphrase: str = ""

    # -- lifecycle ------------------------------------------------------------

    @classmethod
    def create(
        cls,
        path: str | Path,
        passphrase: str,
        store_root: str,
        display_name: str,
        display_email: str,
        kdf_iterations: int | None = None,
        generate_keys: bool = True,
    ) -> "Profile":
        path = Path(path)
        if path.exists():
            raise ProfileError(f"profile already exists at {path}")
        iterations = kdf_iterations or _iterations_from_env()
        profile = cls(
            path=path,
            store_root=store_root,
            display_name=display_name,
            display_email=display_email,
            keypair=KeyPair.generate() if generate_keys else None,
            master_key=crypto.generate_master_key() if generate_keys else None,
            kdf_iterations=iterations,
            _kdf_salt=secrets.token_bytes(crypto.SALT_LEN),
            _passphrase=passphrase,
        )
        profile.save()
        return profile

    @classmethod
    def load(cls, path: str | Path, passphrase: str) -> "Profile":
        path = Path(path)
        if not path.exists():
            raise ProfileError(f"no profile at {path}; run init first")
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ProfileError(f"unreadable profile: {exc}") from exc
        if data.get("version") != PROFILE_VERSION:
            raise ProfileError("unsupported profile version")
        envelope = crypto.PasswordEnvelope.from_bytes(bytes.fromhex(data["sealed"]))
        try:
            secrets_json = json.loads(crypto.open_with_password(envelope, passphrase))
        except AuthenticationError:
            raise AuthenticationError("wrong profile passphrase") from None
        keypair = None
        if secrets_json.get("secret_scalar"):
            keypair = KeyPair.from_secret(bytes.fromhex(secrets_json["secret_scalar"]))
        master_key = None
        if secrets_json.get("master_key"):
            master_key = bytes.fromhex(secrets_json["master_key"])
        return cls(
            path=path,
            store_root=data["store_root"],
            display_name=data.get("display_name", ""),
            display_email=data.get("display_email", ""),
            keypair=keypair,
            master_key=master_key,
            contacts={name: bytes.fromhex(pk) for name, pk in data.get("contacts", {}).items()},
            peerlist_blob=data.get("peerlist_blob"),
            envelope_blob=data.get("envelope_blob"),
            vault_dir=data.get("vault_dir"),
            peer_records=data.get("peer_records", {}),
            kdf_iterations=envelope.iterations,
            _kdf_salt=envelope.salt,
            _passphrase=passphrase,
        )

    def save(self) -> None:
        secrets_json = json.dumps(
            {
                "secret_scalar": self.keypair.secret_scalar.hex() if self.keypair else None,
                "master_key": self.master_key.hex() if self.master_key else None,
            }
        ).encode()
        key = crypto.kdf_password(self._passphrase, self._kdf_salt, self.kdf_iterations)
        envelope = crypto.PasswordEnvelope(
            salt=self._kdf_salt,
            iterations=self.kdf_iterations,
            sealed=crypto.aead_seal(key, secrets_json, aad=crypto.PASSWORD_ENVELOPE_MAGIC),
        )
        data = {
            "version": PROFILE_VERSION,
            "store_root": self.store_root,
            "display_name": self.display_name,
            "display_email": self.display_email,
            "public_key": self.keypair.public_point.hex() if self.keypair else None,
            "contacts": {name: pk.hex() for name, pk in self.contacts.items()},
            "peerlist_blob": self.peerlist_blob,
            "envelope_blob": self.envelope_blob,
            "vault_dir": self.vault_dir,
            "peer_records": self.peer_records,
            "sealed": envelope.to_bytes().hex(),
        }
        tmp = self.path.with_name(self.path.name + f".tmp{secrets.token_hex(4)}")
        tmp.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
        os.replace(tmp, self.path)

    # -- helpers ---------------------------------------------------------------

    def require_identity(self) -> KeyPair:
        if self.keypair is None:
            raise ProfileError("profile has no identity keypair; run keygen")
        return self.keypair

    def require_master_key(self) -> bytes:
        if self.master_key is None:
            raise ProfileError("master key is marked lost; restore or recover it first")
        return self.master_key

    def resolve_contact(self, ref: str) -> bytes:
        """A contact reference is a book name or a 64-char hex public key."""
        if ref in self.contacts:
            return self.contacts[ref]
        try:
            pk = bytes.fromhex(ref)
        except ValueError:
            raise ProfileError(f"unknown contact {ref!r}") from None
        if len(pk) != 32:
            raise ProfileError(f"unknown contact {ref!r}")
        return pk

    def remember_contact(self, pk: bytes, name: str | None = None) -> None:
        if pk in self.contacts.values():
            return
        self.contacts[name or pk.hex()[:8]] = pk


def _iterations_from_env() -> int:
    """Profile KDF cost, overridable for test setups via E2VAULT_KDF_ITERS."""
    raw = os.environ.get("E2VAULT_KDF_ITERS")
    if not raw:
        return crypto.DEFAULT_KDF_ITERATIONS
    value = int(raw)
    return max(value, crypto.MIN_KDF_ITERATIONS)
