import hashlib
import secrets

import pytest

from e2vault import crypto, fileformat as ff, freshness as fr
from e2vault.errors import ClockRegressionError, FormatError


@pytest.fixture
def owner():
    return crypto.generate_keypair()


@pytest.fixture
def master_key():
    return crypto.generate_master_key()


def snap(entries=(), children=()):
    return fr.DirSnapshot(path="d", entries=tuple(entries), children=tuple(children))


class TestComputeRoot:
    def test_empty_directory_sentinel(self):
        assert fr.compute_root(snap()) == hashlib.sha256(b"\x00").digest()

    def test_single_file_leaf_promotes_to_root(self):
        h = secrets.token_bytes(32)
        expected = hashlib.sha256(b"\x00" + b"a.e2ef" + h).digest()
        assert fr.compute_root(snap(entries=[("a.e2ef", h)])) == expected

    def test_swapping_headers_between_names_changes_root(self):
        h1, h2 = secrets.token_bytes(32), secrets.token_bytes(32)
        r1 = fr.compute_root(snap(entries=[("a.e2ef", h1), ("b.e2ef", h2)]))
        r2 = fr.compute_root(snap(entries=[("a.e2ef", h2), ("b.e2ef", h1)]))
        assert r1 != r2

    def test_child_roots_feed_parent(self):
        child = secrets.token_bytes(32)
        r1 = fr.compute_root(snap(children=[("sub", child)]))
        r2 = fr.compute_root(snap(children=[("sub", secrets.token_bytes(32))]))
        assert r1 != r2

    def test_entry_order_is_canonical(self):
        h1, h2 = secrets.token_bytes(32), secrets.token_bytes(32)
        a = fr.compute_root(snap(entries=[("a.e2ef", h1), ("b.e2ef", h2)]))
        b = fr.compute_root(snap(entries=[("b.e2ef", h2), ("a.e2ef", h1)]))
        assert a == b

    def test_duplicate_names_rejected(self):
        h = secrets.token_bytes(32)
        with pytest.raises(ValueError):
            snap(entries=[("x", h), ("x", h)])

    def test_file_and_dir_leaves_distinct(self):
        h = secrets.token_bytes(32)
        assert fr.compute_root(snap(entries=[("n", h)])) != fr.compute_root(snap(children=[("n", h)]))


class TestStamp:
    def test_stamp_then_verify(self, master_key):
        f = fr.stamp(secrets.token_bytes(32), master_key, 1000)
        assert fr.verify_stamp(f, master_key)

    def test_wrong_key_rejected(self, master_key):
        f = fr.stamp(secrets.token_bytes(32), master_key, 1000)
        assert not fr.verify_stamp(f, crypto.generate_master_key())

    def test_clock_regression(self, master_key):
        with pytest.raises(ClockRegressionError):
            fr.stamp(secrets.token_bytes(32), master_key, 999, previous_timestamp=1000)

    def test_wire_round_trip(self, master_key):
        f = fr.stamp(secrets.token_bytes(32), master_key, 123456)
        wire = f.to_bytes()
        assert len(wire) == 76 and wire[:4] == b"FHF1"
        assert fr.FhfFile.from_bytes(wire) == f

    def test_bad_magic(self):
        with pytest.raises(FormatError):
            fr.FhfFile.from_bytes(b"X" * 76)

    def test_forgery_resistance_random_keys(self, master_key):
        root = secrets.token_bytes(32)
        for _ in range(200):
            forged = fr.stamp(root, crypto.generate_master_key(), 5)
            assert not fr.verify_stamp(forged, master_key)


def build_vault(tmp_path, owner, master_key, layout):
    """layout: {relative_dir: [file names]}; returns {relpath: serialized}"""
    files = {}
    for rel_dir, names in layout.items():
        d = tmp_path / rel_dir if rel_dir != "." else tmp_path
        d.mkdir(parents=True, exist_ok=True)
        for name in names:
            f = ff.create_encrypted_file(secrets.token_bytes(64), owner, master_key)
            (d / name).write_bytes(f.serialize())
            files[f"{rel_dir}/{name}"] = f.serialize()
    return files


class TestTree:
    def test_untouched_tree_verifies_clean(self, tmp_path, owner, master_key):
        build_vault(tmp_path, owner, master_key, {".": ["a.e2ef"], "sub": ["b.e2ef"], "sub/deep": ["c.e2ef"]})
        ext = fr.owner_header_extractor(master_key, owner.public_point)
        fr.update_tree(tmp_path, master_key, now=100, extractor=ext)
        assert fr.verify_tree(tmp_path, master_key, max_age=50, now=120, extractor=ext) == []

    def test_header_rollback_detected_at_dir_and_ancestors(self, tmp_path, owner, master_key):
        build_vault(tmp_path, owner, master_key, {"sub/deep": ["c.e2ef"]})
        ext = fr.owner_header_extractor(master_key, owner.public_point)
        target = tmp_path / "sub" / "deep" / "c.e2ef"
        old_bytes = target.read_bytes()

        # legitimate update: grant someone access, re-stamp
        g = crypto.generate_keypair()
        current = ff.EncryptedFile.parse(old_bytes)
        updated = ff.grant(current, owner, master_key, g.public_point, ff.Permission.READ)
        target.write_bytes(updated.serialize())
        fr.update_tree(tmp_path, master_key, now=200, extractor=ext)
        assert fr.verify_tree(tmp_path, master_key, 1000, 201, ext) == []

        # rollback: put the stale (still validly signed) version back
        target.write_bytes(old_bytes)
        violations = fr.verify_tree(tmp_path, master_key, 1000, 202, ext)
        kinds = {(v.path, v.kind) for v in violations}
        assert ("sub/deep", fr.VIOLATION_ROOT_MISMATCH) in kinds
        assert ("sub", fr.VIOLATION_ROOT_MISMATCH) in kinds
        assert (".", fr.VIOLATION_ROOT_MISMATCH) in kinds

    def test_missing_fhf_reported(self, tmp_path, owner, master_key):
        build_vault(tmp_path, owner, master_key, {".": ["a.e2ef"], "sub": ["b.e2ef"]})
        ext = fr.owner_header_extractor(master_key, owner.public_point)
        fr.update_tree(tmp_path, master_key, now=10, extractor=ext)
        (tmp_path / "sub" / ".fhf").unlink()
        violations = fr.verify_tree(tmp_path, master_key, 100, 11, ext)
        assert fr.Violation("sub", fr.VIOLATION_MISSING) in violations

    def test_stale_timestamp_reported(self, tmp_path, owner, master_key):
        build_vault(tmp_path, owner, master_key, {".": ["a.e2ef"]})
        ext = fr.owner_header_extractor(master_key, owner.public_point)
        fr.update_tree(tmp_path, master_key, now=10, extractor=ext)
        violations = fr.verify_tree(tmp_path, master_key, max_age=5, now=100, extractor=ext)
        assert fr.Violation(".", fr.VIOLATION_STALE) in violations

    def test_foreign_stamp_reported(self, tmp_path, owner, master_key):
        build_vault(tmp_path, owner, master_key, {".": ["a.e2ef"]})
        ext = fr.owner_header_extractor(master_key, owner.public_point)
        fr.update_tree(tmp_path, master_key, now=10, extractor=ext)
        roots = fr.compute_tree_roots(tmp_path, ext)
        forged = fr.stamp(roots[tmp_path], crypto.generate_master_key(), 10)
        (tmp_path / ".fhf").write_bytes(forged.to_bytes())
        violations = fr.verify_tree(tmp_path, master_key, 100, 11, ext)
        assert fr.Violation(".", fr.VIOLATION_INVALID_TAG) in violations

    def test_content_write_does_not_disturb_roots(self, tmp_path, owner, master_key):
        # header hashes exclude content and signature, so a write by an
        # authorized user leaves every root unchanged
        build_vault(tmp_path, owner, master_key, {".": ["a.e2ef"]})
        ext = fr.owner_header_extractor(master_key, owner.public_point)
        before = fr.compute_tree_roots(tmp_path, ext)
        target = tmp_path / "a.e2ef"
        f = ff.EncryptedFile.parse(target.read_bytes())
        target.write_bytes(ff.owner_write(f, master_key, owner.public_point, b"new body").serialize())
        assert fr.compute_tree_roots(tmp_path, ext) == before

    def test_min_interval_skips_rewrite(self, tmp_path, owner, master_key):
        build_vault(tmp_path, owner, master_key, {".": ["a.e2ef"]})
        ext = fr.owner_header_extractor(master_key, owner.public_point)
        assert fr.update_tree(tmp_path, master_key, 100, ext) == [tmp_path]
        assert fr.update_tree(tmp_path, master_key, 150, ext, min_interval=300) == []
        assert fr.update_tree(tmp_path, master_key, 500, ext, min_interval=300) == [tmp_path]

    def test_clock_regression_on_update(self, tmp_path, owner, master_key):
        build_vault(tmp_path, owner, master_key, {".": ["a.e2ef"]})
        ext = fr.owner_header_extractor(master_key, owner.public_point)
        fr.update_tree(tmp_path, master_key, 100, ext)
        g = crypto.generate_keypair()
        target = tmp_path / "a.e2ef"
        f = ff.EncryptedFile.parse(target.read_bytes())
        target.write_bytes(ff.grant(f, owner, master_key, g.public_point, ff.Permission.READ).serialize())
        with pytest.raises(ClockRegressionError):
            fr.update_tree(tmp_path, master_key, 50, ext)

    def test_single_byte_header_mutations_always_detected(self, tmp_path, owner, master_key):
        # any header mutation must flag the directory and all its ancestors
        build_vault(tmp_path, owner, master_key, {"a": ["x.e2ef"], "a/b": ["y.e2ef"]})
        ext = fr.owner_header_extractor(master_key, owner.public_point)
        fr.update_tree(tmp_path, master_key, 10, ext)
        rnd = secrets.SystemRandom()
        ancestors = {"a/x.e2ef": {".", "a"}, "a/b/y.e2ef": {".", "a", "a/b"}}
        for _ in range(500):
            rel = rnd.choice(["a/x.e2ef", "a/b/y.e2ef"])
            target = tmp_path / rel
            original = target.read_bytes()
            mutated = bytearray(original)
            pos = rnd.randrange(5 + 128)  # inside preamble or owner block
            mutated[pos] ^= 1 << rnd.randrange(8)
            target.write_bytes(bytes(mutated))
            violations = fr.verify_tree(tmp_path, master_key, 1000, 11, ext)
            flagged = {v.path for v in violations if v.kind == fr.VIOLATION_ROOT_MISMATCH}
            assert ancestors[rel] <= flagged, f"mutation at {rel} byte {pos} missed {ancestors[rel] - flagged}"
            target.write_bytes(original)
