"""Directory-backed blob store playing the role of the hosting server.

Layout under the store root:

    index.log    one JSON record per line: put / replace / delete events
    blobs/<id>   payload files, written via temp file + atomic rename
    links.log    anonymous link tokens, one JSON record per line
    access.log   access events; link resolution records only "anonymous"
    .lock        cross-process mutation lock

The store never inspects payloads (it only ever sees ciphertext) and is
deliberately adversary-shaped: `admin_dump` returns every byte it knows,
so tests can assert that a root attacker's complete view contains no
plaintext. Logs are human-readable JSON lines for the same reason.

Blob ids and link tokens are 32 hex characters (128 bits) from the
process CSPRNG. Unknown and expired link tokens fail identically.
"""

from __future__ import annotations

import fcntl
import json
import os
import secrets
import threading
import time
from pathlib import Path

from .errors import BlobNotFoundError, LinkNotFoundError

BLOB_KINDS = ("file", "envelope", "shard", "peerlist", "fhf")


class BlobStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.blob_dir = self.root / "blobs"
        self.index_path = self.root / "index.log"
        self.links_path = self.root / "links.log"
        self.access_path = self.root / "access.log"
        self._lock_path = self.root / ".lock"
        self._mutex = threading.RLock()
        self.blob_dir.mkdir(parents=True, exist_ok=True)
        self._lock_path.touch(exist_ok=True)
        for stale in self.blob_dir.glob(".tmp-*"):
            stale.unlink(missing_ok=True)
        self._records: dict[str, dict] = {}
        self._links: dict[str, dict] = {}
        self._load()

    # -- state loading ------------------------------------------------------

    def _load(self) -> None:
        self._records = {}
        if self.index_path.exists():
            for line in self.index_path.read_text().splitlines():
                if not line.strip():
                    continue
                rec = json.loads(line)
                if rec.get("deleted"):
                    self._records.pop(rec["id"], None)
                else:
                    self._records[rec["id"]] = rec
        self._links = {}
        if self.links_path.exists():
            for line in self.links_path.read_text().splitlines():
                if not line.strip():
                    continue
                rec = json.loads(line)
                self._links[rec["token"]] = rec

    # -- locking ------------------------------------------------------------

    def _locked_append(self, path: Path, record: dict) -> None:
        with open(self._lock_path, "r+") as lockf:
            fcntl.flock(lockf, fcntl.LOCK_EX)
            try:
                with open(path, "a") as f:
                    f.write(json.dumps(record, sort_keys=True) + "\n")
                    f.flush()
                    os.fsync(f.fileno())
            finally:
                fcntl.flock(lockf, fcntl.LOCK_UN)

    # -- blobs --------------------------------------------------------------

    def put(self, kind: str, data: bytes) -> str:
        if kind not in BLOB_KINDS:
            raise ValueError(f"unknown blob kind {kind!r}")
        blob_id = secrets.token_hex(16)
        with self._mutex:
            self._write_blob_file(blob_id, data)
            now = time.time()
            record = {
                "id": blob_id,
                "kind": kind,
                "filename": f"blobs/{blob_id}",
                "created": now,
                "updated": now,
            }
            self._locked_append(self.index_path, record)
            self._records[blob_id] = record
        return blob_id

    def replace(self, blob_id: str, data: bytes) -> None:
        with self._mutex:
            record = self._require(blob_id)
            self._write_blob_file(blob_id, data)
            updated = dict(record, updated=time.time())
            self._locked_append(self.index_path, updated)
            self._records[blob_id] = updated

    def get(self, blob_id: str) -> bytes:
        with self._mutex:
            self._require(blob_id)
            self._log_access("get", blob_id, who="client")
            return (self.blob_dir / blob_id).read_bytes()

    def delete(self, blob_id: str) -> None:
        with self._mutex:
            record = self._require(blob_id)
            self._locked_append(self.index_path, {"id": blob_id, "deleted": True, "time": time.time()})
            self._records.pop(blob_id, None)
            (self.blob_dir / blob_id).unlink(missing_ok=True)
            del record

    def list(self, kind: str | None = None) -> list[str]:
        with self._mutex:
            self._load()
            if kind is None:
                return sorted(self._records)
            return sorted(i for i, r in self._records.items() if r["kind"] == kind)

    def kind_of(self, blob_id: str) -> str:
        with self._mutex:
            return self._require(blob_id)["kind"]

    def _require(self, blob_id: str) -> dict:
        if blob_id not in self._records:
            self._load()
        record = self._records.get(blob_id)
        if record is None or not (self.blob_dir / blob_id).exists():
            raise BlobNotFoundError(f"no blob {blob_id}")
        return record

    def _write_blob_file(self, blob_id: str, data: bytes) -> None:
        # temp file in the same directory, then atomic rename: a crash leaves
        # either the old payload or the new one, never a torn file
        tmp = self.blob_dir / f".tmp-{blob_id}-{secrets.token_hex(4)}"
        with open(tmp, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, self.blob_dir / blob_id)

    # -- anonymous links ----------------------------------------------------

    def create_link(self, blob_id: str, expires_at: float | None = None) -> str:
        with self._mutex:
            self._require(blob_id)
            token = secrets.token_hex(16)
            record = {
                "token": token,
                "blob_id": blob_id,
                "expires_at": expires_at,
                "created": time.time(),
            }
            self._locked_append(self.links_path, record)
            self._links[token] = record
        return token

    def resolve_link(self, token: str, now: float | None = None) -> bytes:
        with self._mutex:
            if token not in self._links:
                self._load()
            record = self._links.get(token)
            self._log_access("resolve", token, who="anonymous")
            if record is None:
                raise LinkNotFoundError("link not found")
            expires = record.get("expires_at")
            if expires is not None and (now if now is not None else time.time()) > expires:
                raise LinkNotFoundError("link not found")
            blob_id = record["blob_id"]
            if blob_id not in self._records or not (self.blob_dir / blob_id).exists():
                raise LinkNotFoundError("link not found")
            return (self.blob_dir / blob_id).read_bytes()

    def _log_access(self, op: str, ref: str, who: str) -> None:
        self._locked_append(self.access_path, {"op": op, "ref": ref, "who": who, "time": time.time()})

    # -- adversary view -----------------------------------------------------

    def admin_dump(self) -> dict[str, bytes]:
        """Everything the server operator can see: all payloads and logs."""
        with self._mutex:
            self._load()
            dump: dict[str, bytes] = {}
            for name in ("index.log", "links.log", "access.log"):
                path = self.root / name
                if path.exists():
                    dump[name] = path.read_bytes()
            for blob in sorted(self.blob_dir.iterdir()):
                if blob.is_file():
                    dump[f"blobs/{blob.name}"] = blob.read_bytes()
            return dump
