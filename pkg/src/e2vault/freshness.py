"""Per-directory freshness stamps defeating header rollback.

Every directory holds a ".fhf" file:

    "FHF1"(4) || root_hash(32) || timestamp(u64 LE, seconds) || tag(32)

The tag is a MAC over root_hash || timestamp under a subkey of the master
key, so only the key owner can mint or verify stamps. The root hash is a
binary hash tree over the directory's tracked files and its immediate
subdirectories:

    file leaf   H(0x00 || name || header_hash)
    dir leaf    H(0x02 || name || child_root)
    inner node  H(0x01 || left || right), odd node promoted unpaired
    empty dir   H(0x00)

Leaves are ordered by name. The header hash covers only the encrypted
file's preamble and user blocks: substituting a stale header (to resurrect
a revoked permission) changes the directory root and every ancestor root,
while ordinary content writes do not require re-stamping. Content
integrity is the file signature's job, not this module's.

Verification recomputes roots bottom-up with recomputed child roots, so a
mismatch surfaces at the affected directory and every ancestor.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from . import crypto, fileformat
from .errors import ClockRegressionError, FormatError, NotAuthorizedError

FHF_MAGIC = b"FHF1"
FHF_FILENAME = ".fhf"
FHF_LEN = 4 + 32 + 8 + 32

_LEAF_FILE = b"\x00"
_NODE = b"\x01"
_LEAF_DIR = b"\x02"

EMPTY_DIR_ROOT = hashlib.sha256(b"\x00").digest()

_FHF_KEY_LABEL = b"fhf"

VIOLATION_ROOT_MISMATCH = "root-mismatch"
VIOLATION_INVALID_TAG = "invalid-tag"
VIOLATION_STALE = "stale-timestamp"
VIOLATION_MISSING = "missing-fhf"

HeaderExtractor = Callable[[Path], bytes]


@dataclass(frozen=True)
class FhfFile:
    root_hash: bytes
    timestamp: int
    tag: bytes

    def to_bytes(self) -> bytes:
        return FHF_MAGIC + self.root_hash + struct.pack("<Q", self.timestamp) + self.tag

    @classmethod
    def from_bytes(cls, data: bytes) -> "FhfFile":
        if len(data) != FHF_LEN or data[:4] != FHF_MAGIC:
            raise FormatError("not a freshness file")
        return cls(
            root_hash=data[4:36],
            timestamp=struct.unpack("<Q", data[36:44])[0],
            tag=data[44:76],
        )


@dataclass(frozen=True)
class DirSnapshot:
    """What a directory looks like for hashing: tracked file headers and
    child directory roots, both keyed by name."""

    path: str
    entries: tuple[tuple[str, bytes], ...]
    children: tuple[tuple[str, bytes], ...]

    def __post_init__(self):
        names = [n for n, _ in self.entries] + [n for n, _ in self.children]
        if len(set(names)) != len(names):
            raise ValueError("duplicate names in directory snapshot")
        object.__setattr__(self, "entries", tuple(sorted(self.entries)))
        object.__setattr__(self, "children", tuple(sorted(self.children)))


@dataclass(frozen=True)
class Violation:
    path: str
    kind: str


def fhf_key(master_key: bytes) -> bytes:
    return crypto.derive_subkey(master_key, _FHF_KEY_LABEL)


def compute_root(snapshot: DirSnapshot) -> bytes:
    leaves = []
    items = [(name, _LEAF_FILE, digest) for name, digest in snapshot.entries]
    items += [(name, _LEAF_DIR, digest) for name, digest in snapshot.children]
    for name, prefix, digest in sorted(items):
        leaves.append(hashlib.sha256(prefix + name.encode() + digest).digest())
    if not leaves:
        return EMPTY_DIR_ROOT
    while len(leaves) > 1:
        paired = [
            hashlib.sha256(_NODE + leaves[i] + leaves[i + 1]).digest()
            for i in range(0, len(leaves) - 1, 2)
        ]
        if len(leaves) % 2:
            paired.append(leaves[-1])
        leaves = paired
    return leaves[0]


def stamp(
    root_hash: bytes,
    master_key: bytes,
    now: int,
    previous_timestamp: int | None = None,
) -> FhfFile:
    if previous_timestamp is not None and now < previous_timestamp:
        raise ClockRegressionError(
            f"refusing to stamp at {now}, previous stamp is {previous_timestamp}"
        )
    tag = crypto.mac_sign(fhf_key(master_key), root_hash + struct.pack("<Q", now))
    return FhfFile(root_hash=root_hash, timestamp=int(now), tag=tag)


def verify_stamp(fhf: FhfFile, master_key: bytes) -> bool:
    payload = fhf.root_hash + struct.pack("<Q", fhf.timestamp)
    return crypto.mac_verify(fhf_key(master_key), payload, fhf.tag)


def header_bytes(file_bytes: bytes, block_key: bytes, expected_user_id: bytes) -> bytes:
    """Preamble plus all user blocks of a serialized encrypted file, located
    by opening one of its blocks."""
    parsed = fileformat.EncryptedFile.parse(file_bytes)
    found = fileformat._find_block(parsed, block_key)
    if found is None:
        raise NotAuthorizedError("cannot determine header length without an openable block")
    _, block = found
    if block.user_id != expected_user_id:
        raise NotAuthorizedError("block belongs to someone else")
    return file_bytes[: block.content_offset]


def owner_header_extractor(master_key: bytes, owner_public: bytes) -> HeaderExtractor:
    key = fileformat.owner_block_key(master_key, owner_public)
    uid = crypto.fingerprint(owner_public)

    def extract(path: Path) -> bytes:
        return header_bytes(path.read_bytes(), key, uid)

    return extract


# ---------------------------------------------------------------------------
# directory tree walking


def _tracked_files(directory: Path) -> list[Path]:
    return sorted(p for p in directory.iterdir() if p.is_file() and p.suffix == fileformat.FILE_EXTENSION)


def _subdirectories(directory: Path) -> list[Path]:
    return sorted(p for p in directory.iterdir() if p.is_dir())


_DAMAGED_PREFIX = b"\x03"


def _compute_roots(
    directory: Path,
    extractor: HeaderExtractor,
    out: dict[Path, bytes],
    tolerate_damage: bool,
) -> bytes:
    children = []
    for sub in _subdirectories(directory):
        children.append((sub.name, _compute_roots(sub, extractor, out, tolerate_damage)))
    entries = []
    for path in _tracked_files(directory):
        try:
            digest = hashlib.sha256(extractor(path)).digest()
        except Exception:
            if not tolerate_damage:
                raise
            # a header that no longer parses or opens cannot match whatever
            # was stamped; hash a sentinel so the mismatch surfaces as a
            # violation instead of an exception
            digest = hashlib.sha256(_DAMAGED_PREFIX + path.name.encode()).digest()
        entries.append((path.name, digest))
    root = compute_root(DirSnapshot(path=str(directory), entries=tuple(entries), children=tuple(children)))
    out[directory] = root
    return root


def compute_tree_roots(
    root_dir: Path,
    extractor: HeaderExtractor,
    tolerate_damage: bool = False,
) -> dict[Path, bytes]:
    """Recomputed root hash for every directory under root_dir (inclusive)."""
    roots: dict[Path, bytes] = {}
    _compute_roots(Path(root_dir), extractor, roots, tolerate_damage)
    return roots


def _load_fhf(directory: Path) -> FhfFile | None:
    path = directory / FHF_FILENAME
    if not path.exists():
        return None
    return FhfFile.from_bytes(path.read_bytes())


def update_tree(
    root_dir: Path,
    master_key: bytes,
    now: int,
    extractor: HeaderExtractor,
    min_interval: int = 0,
) -> list[Path]:
    """Stamp every directory whose root changed or whose stamp is older than
    min_interval. Returns the directories written."""
    roots = compute_tree_roots(Path(root_dir), extractor)
    written = []
    for directory, root in roots.items():
        existing = None
        try:
            existing = _load_fhf(directory)
        except FormatError:
            existing = None
        previous_ts = None
        if existing is not None and verify_stamp(existing, master_key):
            # Only a validly tagged stamp constrains monotonicity; attacker
            # garbage must not be able to wedge future updates.
            previous_ts = existing.timestamp
            if existing.root_hash == root and now - existing.timestamp < min_interval:
                continue
        fhf = stamp(root, master_key, now, previous_timestamp=previous_ts)
        (directory / FHF_FILENAME).write_bytes(fhf.to_bytes())
        written.append(directory)
    return sorted(written)


def verify_tree(
    root_dir: Path,
    master_key: bytes,
    max_age: int,
    now: int,
    extractor: HeaderExtractor,
) -> list[Violation]:
    """Recompute every directory root bottom-up and compare against the
    stored stamps. Violations are data, not exceptions."""
    root_dir = Path(root_dir)
    roots = compute_tree_roots(root_dir, extractor, tolerate_damage=True)
    violations: list[Violation] = []

    def relative(directory: Path) -> str:
        rel = directory.relative_to(root_dir)
        return "." if str(rel) == "." else str(rel)

    for directory, computed in roots.items():
        rel = relative(directory)
        try:
            fhf = _load_fhf(directory)
        except FormatError:
            violations.append(Violation(path=rel, kind=VIOLATION_INVALID_TAG))
            continue
        if fhf is None:
            violations.append(Violation(path=rel, kind=VIOLATION_MISSING))
            continue
        if not verify_stamp(fhf, master_key):
            violations.append(Violation(path=rel, kind=VIOLATION_INVALID_TAG))
            continue
        if fhf.root_hash != computed:
            violations.append(Violation(path=rel, kind=VIOLATION_ROOT_MISMATCH))
        if now - fhf.timestamp > max_age:
            violations.append(Violation(path=rel, kind=VIOLATION_STALE))
    return sorted(violations, key=lambda v: (v.path, v.kind))
