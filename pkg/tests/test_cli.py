"""CLI integration tests, run as real subprocesses."""

import os
import signal
import socket
import subprocess
import sys
import time
from pathlib import Path

import pytest

SRC = str(Path(__file__).resolve().parent.parent / "src")


def base_env(tmp_path):
    env = dict(os.environ)
    env["PYTHONPATH"] = SRC + os.pathsep + env.get("PYTHONPATH", "")
    env["E2VAULT_KDF_ITERS"] = "1000"
    env["E2VAULT_PASSPHRASE"] = "test-passphrase"
    return env


def run_cli(args, profile, tmp_path, input_text=None, extra_env=None):
    env = base_env(tmp_path)
    env["E2VAULT_PROFILE"] = str(profile)
    if extra_env:
        env.update(extra_env)
    return subprocess.run(
        [sys.executable, "-m", "e2vault", *args],
        input=input_text.encode() if input_text else None,
        capture_output=True,
        env=env,
        timeout=120,
    )


def ok(proc):
    assert proc.returncode == 0, f"exit {proc.returncode}: {proc.stderr.decode()!r}"
    return proc.stdout.decode().strip()


def free_port():
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


@pytest.fixture
def world(tmp_path):
    store = tmp_path / "store"
    owner = tmp_path / "owner.json"
    ok(run_cli(["init", "--store", str(store), "--name", "owner", "--email", "o@corp"], owner, tmp_path))
    return tmp_path, store, owner


def init_peer(tmp_path, store, name):
    profile = tmp_path / f"{name}.json"
    out = ok(run_cli(["init", "--store", str(store), "--name", name, "--email", f"{name}@corp"], profile, tmp_path))
    pk_hex = out.split()[-1]
    assert len(pk_hex) == 64
    return profile, pk_hex


class TestFileCommands:
    def test_encrypt_decrypt_round_trip(self, world):
        tmp_path, store, owner = world
        plain = tmp_path / "f.txt"
        plain.write_bytes(b"the quick brown fox\x00\x01\x02")
        blob_id = ok(run_cli(["encrypt", str(plain)], owner, tmp_path))
        proc = run_cli(["decrypt", blob_id], owner, tmp_path)
        assert proc.returncode == 0
        assert proc.stdout == plain.read_bytes()

    def test_share_ticket_flow(self, world):
        tmp_path, store, owner = world
        grantee, grantee_pk = init_peer(tmp_path, store, "grantee")
        plain = tmp_path / "doc.txt"
        plain.write_bytes(b"confidential payload")
        blob_id = ok(run_cli(["encrypt", str(plain)], owner, tmp_path))
        ticket = ok(run_cli(["share", blob_id, grantee_pk], owner, tmp_path))
        proc = run_cli(["decrypt", ticket], grantee, tmp_path)
        assert proc.returncode == 0
        assert proc.stdout == b"confidential payload"

    def test_read_only_grantee_cannot_write(self, world):
        tmp_path, store, owner = world
        grantee, grantee_pk = init_peer(tmp_path, store, "reader")
        plain = tmp_path / "doc.txt"
        plain.write_bytes(b"v1")
        blob_id = ok(run_cli(["encrypt", str(plain)], owner, tmp_path))
        ticket = ok(run_cli(["share", blob_id, grantee_pk], owner, tmp_path))
        new = tmp_path / "new.txt"
        new.write_bytes(b"v2")
        proc = run_cli(["write", ticket, str(new)], grantee, tmp_path)
        assert proc.returncode == 5
        assert proc.stderr.decode().startswith("error: no-write-capability:")

    def test_write_grantee_updates_content(self, world):
        tmp_path, store, owner = world
        grantee, grantee_pk = init_peer(tmp_path, store, "writer")
        plain = tmp_path / "doc.txt"
        plain.write_bytes(b"v1")
        blob_id = ok(run_cli(["encrypt", str(plain)], owner, tmp_path))
        ticket = ok(run_cli(["share", blob_id, grantee_pk, "--write"], owner, tmp_path))
        new = tmp_path / "new.txt"
        new.write_bytes(b"v2 from grantee")
        ok(run_cli(["write", ticket, str(new)], grantee, tmp_path))
        proc = run_cli(["decrypt", blob_id], owner, tmp_path)
        assert proc.stdout == b"v2 from grantee"

    def test_revoke_locks_out(self, world):
        tmp_path, store, owner = world
        grantee, grantee_pk = init_peer(tmp_path, store, "victim")
        plain = tmp_path / "doc.txt"
        plain.write_bytes(b"payload")
        blob_id = ok(run_cli(["encrypt", str(plain)], owner, tmp_path))
        ticket = ok(run_cli(["share", blob_id, grantee_pk], owner, tmp_path))
        ok(run_cli(["revoke", blob_id, grantee_pk], owner, tmp_path))
        proc = run_cli(["decrypt", ticket], grantee, tmp_path)
        assert proc.returncode == 5

    def test_link_fetch_and_decrypt_file(self, world):
        tmp_path, store, owner = world
        grantee, grantee_pk = init_peer(tmp_path, store, "linkuser")
        plain = tmp_path / "doc.txt"
        plain.write_bytes(b"linked content")
        blob_id = ok(run_cli(["encrypt", str(plain)], owner, tmp_path))
        ticket = ok(run_cli(["share", blob_id, grantee_pk], owner, tmp_path))
        token = ok(run_cli(["link", blob_id], owner, tmp_path))
        fetched = tmp_path / "fetched.e2ef"
        ok(run_cli(["fetch-link", token, "-o", str(fetched)], grantee, tmp_path))
        proc = run_cli(["decrypt", ticket, "--file", str(fetched)], grantee, tmp_path)
        assert proc.returncode == 0
        assert proc.stdout == b"linked content"

    def test_fetch_link_needs_no_profile(self, world):
        tmp_path, store, owner = world
        plain = tmp_path / "doc.txt"
        plain.write_bytes(b"anyone can fetch ciphertext")
        blob_id = ok(run_cli(["encrypt", str(plain)], owner, tmp_path))
        token = ok(run_cli(["link", blob_id], owner, tmp_path))
        # anonymous: nonexistent profile, store passed explicitly
        proc = run_cli(
            ["--store", str(store), "fetch-link", token],
            tmp_path / "does-not-exist.json",
            tmp_path,
        )
        assert proc.returncode == 0
        assert proc.stdout != b"anyone can fetch ciphertext"  # still sealed
        assert len(proc.stdout) > 200

    def test_unknown_blob_exit_code(self, world):
        tmp_path, store, owner = world
        proc = run_cli(["decrypt", "0" * 32], owner, tmp_path)
        assert proc.returncode == 3
        assert proc.stderr.decode().startswith("error: blob-not-found:")
        assert proc.stderr.decode().count("\n") == 1

    def test_wrong_passphrase_exit_code(self, world):
        tmp_path, store, owner = world
        proc = run_cli(["keygen"], owner, tmp_path, extra_env={"E2VAULT_PASSPHRASE": "nope"})
        assert proc.returncode == 4


class TestSecretCommands:
    def test_backup_restore(self, world):
        tmp_path, store, owner = world
        blob_id = ok(run_cli(["secret", "backup", "--password", "hunter22"], owner, tmp_path))
        ok(run_cli(["--insecure-test", "secret", "forget"], owner, tmp_path))
        plain = tmp_path / "f.txt"
        plain.write_bytes(b"x")
        assert run_cli(["encrypt", str(plain)], owner, tmp_path).returncode == 3
        ok(run_cli(["secret", "restore", "--password", "hunter22", "--blob-id", blob_id], owner, tmp_path))
        assert run_cli(["encrypt", str(plain)], owner, tmp_path).returncode == 0

    def test_restore_wrong_password(self, world):
        tmp_path, store, owner = world
        blob_id = ok(run_cli(["secret", "backup", "--password", "right-one"], owner, tmp_path))
        proc = run_cli(["secret", "restore", "--password", "wrong-one", "--blob-id", blob_id], owner, tmp_path)
        assert proc.returncode == 4

    def test_split_bounds_usage_error(self, world):
        tmp_path, store, owner = world
        proc = run_cli(["secret", "split", "--n", "3", "--k", "256"], owner, tmp_path)
        assert proc.returncode == 2
        message = proc.stderr.decode()
        assert "[k, 255]" in message and "[1, n]" in message

    def test_split_sim_interactive_reject_all(self, world):
        tmp_path, store, owner = world
        proc = run_cli(
            ["secret", "split", "--n", "2", "--k", "2", "--transport", "sim", "--sim-peers", "3"],
            owner,
            tmp_path,
            input_text="n\nn\nn\n",
        )
        assert proc.returncode == 7
        # prompts share stderr; the machine-parsable error is the last line
        assert proc.stderr.decode().strip().splitlines()[-1].startswith("error: distribution-failed:")

    def test_split_sim_interactive_accept(self, world):
        tmp_path, store, owner = world
        out = ok(
            run_cli(
                ["secret", "split", "--n", "2", "--k", "2", "--transport", "sim", "--sim-peers", "3"],
                owner,
                tmp_path,
                input_text="y\ny\ny\n",
            )
        )
        assert len(out.splitlines()[-1]) == 32  # peer list blob id

    def test_yes_all_requires_insecure_test(self, world):
        tmp_path, store, owner = world
        proc = run_cli(["--yes-all", "secret", "split", "--n", "2", "--k", "2"], owner, tmp_path)
        assert proc.returncode == 2


class PeerDaemon:
    def __init__(self, profile, tmp_path, port):
        env = base_env(tmp_path)
        env["E2VAULT_PROFILE"] = str(profile)
        self.port = port
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "e2vault", "peerd", "--listen", f"127.0.0.1:{port}"],
            env=env,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
        )
        deadline = time.time() + 15
        while time.time() < deadline:
            try:
                with socket.create_connection(("127.0.0.1", port), timeout=0.3):
                    return
            except OSError:
                if self.proc.poll() is not None:
                    raise RuntimeError(f"peerd died: {self.proc.stderr.read().decode()}")
                time.sleep(0.1)
        raise RuntimeError("peerd did not come up")

    def stop(self):
        self.proc.send_signal(signal.SIGTERM)
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.proc.kill()


@pytest.mark.slow
class TestEndToEndRecovery:
    def test_split_forget_recover_across_peerd_processes(self, world):
        tmp_path, store, owner = world
        peers = []
        daemons = []
        try:
            for i in range(3):
                profile, _pk = init_peer(tmp_path, store, f"peer{i}")
                peers.append(profile)
            ports = [free_port() for _ in range(3)]
            daemons = [PeerDaemon(p, tmp_path, port) for p, port in zip(peers, ports)]
            endpoints = ",".join(f"127.0.0.1:{port}" for port in ports)

            plain = tmp_path / "f.txt"
            plain.write_bytes(b"survives recovery")
            blob_id = ok(run_cli(["encrypt", str(plain)], owner, tmp_path))

            ok(
                run_cli(
                    [
                        "--insecure-test", "--yes-all",
                        "secret", "split", "--n", "3", "--k", "2",
                        "--transport", "tcp", "--endpoints", endpoints,
                    ],
                    owner,
                    tmp_path,
                )
            )
            ok(run_cli(["--insecure-test", "secret", "forget"], owner, tmp_path))
            assert run_cli(["decrypt", blob_id], owner, tmp_path).returncode == 3

            ok(run_cli(["secret", "recover", "--transport", "tcp", "--endpoints", endpoints], owner, tmp_path))
            proc = run_cli(["decrypt", blob_id], owner, tmp_path)
            assert proc.returncode == 0
            assert proc.stdout == b"survives recovery"
        finally:
            for daemon in daemons:
                daemon.stop()

    def test_rebind_then_recover_and_escrow(self, world):
        tmp_path, store, owner = world
        peers = []
        daemons = []
        try:
            for i in range(3):
                profile, _pk = init_peer(tmp_path, store, f"rpeer{i}")
                peers.append(profile)
            ports = [free_port() for _ in range(3)]
            daemons = [PeerDaemon(p, tmp_path, port) for p, port in zip(peers, ports)]
            endpoints = ",".join(f"127.0.0.1:{port}" for port in ports)

            ok(
                run_cli(
                    [
                        "--insecure-test", "--yes-all",
                        "secret", "split", "--n", "3", "--k", "2",
                        "--transport", "tcp", "--endpoints", endpoints,
                    ],
                    owner,
                    tmp_path,
                )
            )
            new_pk_hex = ok(
                run_cli(
                    ["secret", "rebind", "--transport", "tcp", "--endpoints", endpoints],
                    owner,
                    tmp_path,
                )
            ).splitlines()[-1]
            assert len(new_pk_hex) == 64

            # recovery with the rotated identity still works
            ok(run_cli(["--insecure-test", "secret", "forget"], owner, tmp_path))
            ok(run_cli(["secret", "recover", "--transport", "tcp", "--endpoints", endpoints], owner, tmp_path))

            # escrow: two peers export, the exports rejoin to the master key
            import base64
            import json

            exports = []
            for peer_profile in peers[:2]:
                out = ok(run_cli(["escrow", "export", "--owner", new_pk_hex], peer_profile, tmp_path))
                exports.append(out.splitlines()[-1])
            joined_b64 = ok(run_cli(["escrow", "join", *exports], owner, tmp_path)).splitlines()[-1]

            from e2vault.profile import Profile

            os.environ["E2VAULT_KDF_ITERS"] = "1000"
            owner_profile = Profile.load(owner, "test-passphrase")
            assert base64.b64decode(joined_b64) == owner_profile.master_key
        finally:
            for daemon in daemons:
                daemon.stop()


class TestFreshnessCommands:
    def test_update_verify_and_rollback_detection(self, world):
        tmp_path, store, owner = world
        vault_dir = tmp_path / "vault"
        vault_dir.mkdir()
        plain = tmp_path / "doc.txt"
        plain.write_bytes(b"tracked")
        blob_id = ok(run_cli(["encrypt", str(plain), "--dir", str(vault_dir)], owner, tmp_path))
        local = vault_dir / "doc.txt.e2ef"
        assert local.exists()
        old_copy = local.read_bytes()

        ok(run_cli(["fhf", "update", "--dir", str(vault_dir)], owner, tmp_path))
        out = ok(run_cli(["fhf", "verify", "--dir", str(vault_dir), "--max-age", "600"], owner, tmp_path))
        assert out == "ok"

        # legitimate header change (share) then re-stamp
        grantee, grantee_pk = init_peer(tmp_path, store, "fhfpeer")
        ok(run_cli(["share", blob_id, grantee_pk], owner, tmp_path))
        from e2vault.store import BlobStore

        local.write_bytes(BlobStore(store).get(blob_id))
        ok(run_cli(["fhf", "update", "--dir", str(vault_dir)], owner, tmp_path))
        ok(run_cli(["fhf", "verify", "--dir", str(vault_dir), "--max-age", "600"], owner, tmp_path))

        # rollback the header: verification must fail with a violation
        local.write_bytes(old_copy)
        proc = run_cli(["fhf", "verify", "--dir", str(vault_dir), "--max-age", "600"], owner, tmp_path)
        assert proc.returncode == 6
        assert "root-mismatch" in proc.stdout.decode()
