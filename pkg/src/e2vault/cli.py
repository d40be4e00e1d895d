"""Command-line front end.

Every command exits 0 on success and nonzero with a single-line error on
stderr otherwise (see EXIT_CODES); stack traces never reach the user. All
prompts read from stdin so the whole surface is scriptable.

Exit codes:

    2  usage error (bad flags, out-of-range parameters)
    3  missing object (blob, link, profile, contact, revoke target)
    4  authentication failure (wrong password or passphrase)
    5  not authorized / missing write capability
    6  integrity problem (tampering, rollback violations, clock regression)
    7  protocol failure (distribution, recovery, rebind, escrow, transport)
    8  malformed input (bad magic, truncated file, bad ticket)
    9  any other vault error
"""

from __future__ import annotations

import base64
import sys
import time
from pathlib import Path

import click

from . import crypto, fileformat, freshness, recovery
from .errors import (
    AuthenticationError,
    BlobNotFoundError,
    ClockRegressionError,
    DistributionFailedError,
    DuplicateGranteeError,
    EscrowJoinError,
    FormatError,
    GranteeNotFoundError,
    KdfParameterError,
    LinkNotFoundError,
    NotAuthorizedError,
    NoWriteCapabilityError,
    ProfileError,
    RebindFailedError,
    RecoveryFailedError,
    ShardError,
    TamperError,
    ThresholdParameterError,
    TransportError,
    UnknownGranteeBlockError,
    VaultError,
)
from .peer import PeerNode, parse_escrow_export
from .profile import Profile
from .protocol import PeerList
from .shamir import MAX_SHARDS, ThresholdParams
from .store import BlobStore
from .tickets import looks_like_ticket, make_share_ticket, parse_share_ticket
from .transport import PeerServer, SimPeer, SimTransport, TcpTransport

EXIT_CODES = [
    ((BlobNotFoundError, LinkNotFoundError, GranteeNotFoundError, ProfileError), 3),
    ((AuthenticationError, KdfParameterError), 4),
    ((NotAuthorizedError, NoWriteCapabilityError, DuplicateGranteeError, UnknownGranteeBlockError), 5),
    ((TamperError, ClockRegressionError), 6),
    (
        (
            DistributionFailedError,
            RecoveryFailedError,
            RebindFailedError,
            EscrowJoinError,
            TransportError,
        ),
        7,
    ),
    ((FormatError, ThresholdParameterError, ShardError), 8),
    ((VaultError,), 9),
]


def _exit_code(exc: VaultError) -> int:
    for classes, code in EXIT_CODES:
        if isinstance(exc, classes):
            return code
    return 9


def _slug(exc: Exception) -> str:
    name = type(exc).__name__
    if name.endswith("Error"):
        name = name[:-5]
    out = []
    for ch in name:
        if ch.isupper() and out:
            out.append("-")
        out.append(ch.lower())
    return "".join(out)


@click.group()
@click.option(
    "--profile",
    "profile_path",
    envvar="E2VAULT_PROFILE",
    default="~/.e2vault/profile.json",
    show_default=True,
    help="Path to the profile file.",
)
@click.option(
    "--passphrase",
    envvar="E2VAULT_PASSPHRASE",
    default=None,
    help="Profile passphrase (prompted when omitted).",
)
@click.option("--store", "store_override", envvar="E2VAULT_STORE", default=None, help="Override the store root.")
@click.option("--insecure-test", is_flag=True, hidden=True)
@click.option("--yes-all", is_flag=True, help="Accept every peer proposal (needs --insecure-test).")
@click.pass_context
def cli(ctx, profile_path, passphrase, store_override, insecure_test, yes_all):
    """End-to-end encrypted content vault."""
    if yes_all and not insecure_test:
        raise click.UsageError("--yes-all is only available together with --insecure-test")
    ctx.obj = {
        "profile_path": Path(profile_path).expanduser(),
        "passphrase": passphrase,
        "store_override": store_override,
        "insecure_test": insecure_test,
        "yes_all": yes_all,
    }


def _finish_prompt_line() -> None:
    # piped stdin does not echo the newline the user "typed"; keep stderr
    # line-clean so the final error line stays machine-parsable
    if not sys.stdin.isatty():
        click.echo("", err=True)


def _prompt(text: str, **kwargs) -> str:
    value = click.prompt(text, err=True, **kwargs)
    _finish_prompt_line()
    return value


def _passphrase(ctx, confirm=False) -> str:
    if ctx.obj["passphrase"] is not None:
        return ctx.obj["passphrase"]
    return _prompt("Profile passphrase", hide_input=True, confirmation_prompt=confirm)


def _load_profile(ctx) -> Profile:
    return Profile.load(ctx.obj["profile_path"], _passphrase(ctx))


def _open_store(ctx, profile: Profile) -> BlobStore:
    root = ctx.obj["store_override"] or profile.store_root
    return BlobStore(root)


def _parse_endpoints(raw: str) -> list[tuple[str, int]]:
    endpoints = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        host, _, port = part.rpartition(":")
        if not host or not port.isdigit():
            raise click.UsageError(f"bad endpoint {part!r}, expected host:port")
        endpoints.append((host, int(port)))
    if not endpoints:
        raise click.UsageError("no endpoints given")
    return endpoints


def _build_transport(ctx, profile: Profile, transport_kind: str, endpoints: str | None, sim_peers: int, store):
    identity = profile.require_identity()
    if transport_kind == "tcp":
        if not endpoints:
            raise click.UsageError("--endpoints is required with --transport tcp")
        return TcpTransport(
            identity, _parse_endpoints(endpoints), name=profile.display_name, email=profile.display_email
        )
    peers = [
        SimPeer(
            PeerNode(
                keypair=crypto.generate_keypair(),
                master_key=crypto.generate_master_key(),
                name=f"sim-peer-{i}",
                email=f"sim-peer-{i}@local",
                store=store,
            )
        )
        for i in range(sim_peers)
    ]
    return SimTransport(identity, peers)


def _confirm_callback(ctx):
    if ctx.obj["yes_all"]:
        return lambda info: True

    def confirm(info) -> bool:
        click.echo(
            f"proposed peer: name={info.name!r} email={info.email!r} pk={info.pk.hex()[:16]}...",
            err=True,
        )
        accepted = click.confirm("confirm this person is physically present?", default=False, err=True)
        _finish_prompt_line()
        return accepted

    return confirm


def _load_peer_list(store: BlobStore, blob_id: str) -> PeerList:
    return PeerList.from_bytes(store.get(blob_id))


# ---------------------------------------------------------------------------
# profile commands


@cli.command()
@click.option("--store", "store_root", required=True, help="Store root directory.")
@click.option("--name", required=True, help="Display name shown to peers.")
@click.option("--email", default="", help="Display email shown to peers.")
@click.option("--vault-dir", default=None, help="Local directory of .e2ef copies for freshness tracking.")
@click.pass_context
def init(ctx, store_root, name, email, vault_dir):
    """Create a profile with a fresh identity and master key."""
    path = ctx.obj["profile_path"]
    path.parent.mkdir(parents=True, exist_ok=True)
    profile = Profile.create(
        path,
        _passphrase(ctx, confirm=ctx.obj["passphrase"] is None),
        store_root=store_root,
        display_name=name,
        display_email=email,
    )
    if vault_dir:
        profile.vault_dir = vault_dir
        Path(vault_dir).mkdir(parents=True, exist_ok=True)
        profile.save()
    BlobStore(store_root)  # materialize the store layout early
    click.echo(f"profile created; public key {profile.keypair.public_point.hex()}")


@cli.command()
@click.option("--force", is_flag=True, help="Replace an existing identity (peers keep the old binding).")
@click.pass_context
def keygen(ctx, force):
    """Create (or with --force replace) the identity keypair."""
    profile = _load_profile(ctx)
    if profile.keypair is not None and not force:
        raise ProfileError("identity already exists; use `secret rebind` to rotate, or --force")
    profile.keypair = crypto.KeyPair.generate()
    if profile.master_key is None:
        profile.master_key = crypto.generate_master_key()
    profile.save()
    click.echo(profile.keypair.public_point.hex())


# ---------------------------------------------------------------------------
# file commands


@cli.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--dir", "local_dir", default=None, help="Also write a local .e2ef copy here.")
@click.pass_context
def encrypt(ctx, path, local_dir):
    """Encrypt a file and upload it; prints the blob id."""
    profile = _load_profile(ctx)
    store = _open_store(ctx, profile)
    owner = profile.require_identity()
    encrypted = fileformat.create_encrypted_file(
        path.read_bytes(), owner, profile.require_master_key()
    )
    blob_id = store.put("file", encrypted.serialize())
    target_dir = local_dir or profile.vault_dir
    if target_dir:
        local = Path(target_dir) / (path.name + fileformat.FILE_EXTENSION)
        local.parent.mkdir(parents=True, exist_ok=True)
        local.write_bytes(encrypted.serialize())
    click.echo(blob_id)


def _fetch_encrypted(store, target: str, local_file: Path | None = None):
    """Resolve a blob id or share ticket to (file, blob_id, owner_pk or None)."""
    owner_pk = None
    blob_id = target
    if looks_like_ticket(target):
        blob_id, owner_pk = parse_share_ticket(target)
    raw = local_file.read_bytes() if local_file else store.get(blob_id)
    return fileformat.EncryptedFile.parse(raw), blob_id, owner_pk


@cli.command()
@click.argument("target")
@click.option("-o", "--output", type=click.Path(path_type=Path), default=None)
@click.option("--file", "local_file", type=click.Path(exists=True, path_type=Path), default=None,
              help="Read the encrypted bytes from a local file (e.g. after fetch-link).")
@click.pass_context
def decrypt(ctx, target, output, local_file):
    """Decrypt a blob id (own file) or share ticket (shared file)."""
    profile = _load_profile(ctx)
    store = _open_store(ctx, profile)
    encrypted, _blob_id, owner_pk = _fetch_encrypted(store, target, local_file)
    if owner_pk is None or owner_pk == profile.require_identity().public_point:
        content, perm = fileformat.owner_read(
            encrypted, profile.require_master_key(), profile.require_identity().public_point
        )
    else:
        content, perm = fileformat.read(encrypted, profile.require_identity().secret_scalar, owner_pk)
    if output:
        output.write_bytes(content)
        click.echo(f"wrote {len(content)} bytes ({perm.value})", err=True)
    else:
        sys.stdout.buffer.write(content)
        sys.stdout.buffer.flush()


@cli.command()
@click.argument("blob_id")
@click.argument("contact")
@click.option("--write", "give_write", is_flag=True, help="Grant write access as well.")
@click.pass_context
def share(ctx, blob_id, contact, give_write):
    """Grant a contact access to a file; prints the share ticket."""
    profile = _load_profile(ctx)
    store = _open_store(ctx, profile)
    owner = profile.require_identity()
    grantee_pk = profile.resolve_contact(contact)
    encrypted = fileformat.EncryptedFile.parse(store.get(blob_id))
    permission = fileformat.Permission.READ_WRITE if give_write else fileformat.Permission.READ
    updated = fileformat.grant(
        encrypted,
        owner,
        profile.require_master_key(),
        grantee_pk,
        permission,
        candidates=list(profile.contacts.values()),
    )
    store.replace(blob_id, updated.serialize())
    profile.remember_contact(grantee_pk, None if contact == grantee_pk.hex() else contact)
    profile.save()
    click.echo(make_share_ticket(blob_id, owner.public_point))


@cli.command(name="write")
@click.argument("target")
@click.argument("path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.pass_context
def write_cmd(ctx, target, path):
    """Overwrite a file's content (owner via blob id, grantee via ticket)."""
    profile = _load_profile(ctx)
    store = _open_store(ctx, profile)
    encrypted, blob_id, owner_pk = _fetch_encrypted(store, target)
    new_content = path.read_bytes()
    if owner_pk is None or owner_pk == profile.require_identity().public_point:
        updated = fileformat.owner_write(
            encrypted, profile.require_master_key(), profile.require_identity().public_point, new_content
        )
    else:
        updated = fileformat.write(
            encrypted, profile.require_identity().secret_scalar, owner_pk, new_content
        )
    store.replace(blob_id, updated.serialize())
    click.echo(blob_id)


@cli.command()
@click.argument("blob_id")
@click.argument("contact")
@click.pass_context
def revoke(ctx, blob_id, contact):
    """Remove a contact's access and rotate the file keys."""
    profile = _load_profile(ctx)
    store = _open_store(ctx, profile)
    owner = profile.require_identity()
    revoked_pk = profile.resolve_contact(contact)
    encrypted = fileformat.EncryptedFile.parse(store.get(blob_id))
    updated = fileformat.revoke(
        encrypted,
        owner,
        profile.require_master_key(),
        revoked_pk,
        candidates=list(profile.contacts.values()),
    )
    store.replace(blob_id, updated.serialize())
    click.echo(blob_id)


@cli.command()
@click.argument("blob_id")
@click.option("--expires-in", type=float, default=None, help="Seconds until the link expires.")
@click.pass_context
def link(ctx, blob_id, expires_in):
    """Create an anonymous access link token for a blob."""
    profile = _load_profile(ctx)
    store = _open_store(ctx, profile)
    expires_at = time.time() + expires_in if expires_in else None
    click.echo(store.create_link(blob_id, expires_at=expires_at))


@cli.command(name="fetch-link")
@click.argument("token")
@click.option("-o", "--output", type=click.Path(path_type=Path), default=None)
@click.pass_context
def fetch_link(ctx, token, output):
    """Fetch encrypted bytes through an anonymous link token."""
    # no identity is needed to resolve a link; only fall back to the
    # profile when the store location is not given explicitly
    if ctx.obj["store_override"]:
        store = BlobStore(ctx.obj["store_override"])
    else:
        store = _open_store(ctx, _load_profile(ctx))
    data = store.resolve_link(token)
    if output:
        output.write_bytes(data)
        click.echo(f"wrote {len(data)} bytes", err=True)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()


# ---------------------------------------------------------------------------
# master-secret commands


@cli.group()
def secret():
    """Master-secret backup, recovery, and rotation."""


@secret.command(name="backup")
@click.option("--password", default=None, help="Backup password (prompted when omitted).")
@click.pass_context
def secret_backup(ctx, password):
    """Password-protected master key backup to the store."""
    profile = _load_profile(ctx)
    store = _open_store(ctx, profile)
    if password is None:
        password = _prompt("Backup password", hide_input=True, confirmation_prompt=True)
    blob_id = recovery.password_backup(profile.require_master_key(), password, store)
    profile.envelope_blob = blob_id
    profile.save()
    click.echo(blob_id)


@secret.command(name="restore")
@click.option("--password", default=None, help="Backup password (prompted when omitted).")
@click.option("--blob-id", default=None, help="Envelope blob id (defaults to the one in the profile).")
@click.pass_context
def secret_restore(ctx, password, blob_id):
    """Restore the master key from the password backup."""
    profile = _load_profile(ctx)
    store = _open_store(ctx, profile)
    blob_id = blob_id or profile.envelope_blob
    if not blob_id:
        raise BlobNotFoundError("no envelope blob recorded; pass --blob-id")
    if password is None:
        password = _prompt("Backup password", hide_input=True)
    profile.master_key = recovery.password_restore(store, blob_id, password)
    profile.save()
    click.echo("master key restored")


@secret.command(name="split")
@click.option("--n", "n", type=int, required=True, help="Number of shards.")
@click.option("--k", "k", type=int, required=True, help="Recovery threshold.")
@click.option("--transport", "transport_kind", type=click.Choice(["sim", "tcp"]), default="sim")
@click.option("--endpoints", default=None, help="Comma-separated host:port peer endpoints (tcp).")
@click.option("--sim-peers", type=int, default=0, help="Ephemeral in-process peers (sim).")
@click.pass_context
def secret_split(ctx, n, k, transport_kind, endpoints, sim_peers):
    """Split the master key into shards held by confirmed peers."""
    try:
        params = ThresholdParams(n=n, k=k)
    except ThresholdParameterError:
        raise click.UsageError(
            f"illegal shard parameters: n must be in [k, {MAX_SHARDS}] and k in [1, n]; got n={n} k={k}"
        )
    profile = _load_profile(ctx)
    store = _open_store(ctx, profile)
    transport = _build_transport(ctx, profile, transport_kind, endpoints, sim_peers or max(n, 3), store)
    result = recovery.distribute(
        profile.require_master_key(),
        params,
        transport,
        _confirm_callback(ctx),
        profile.require_identity(),
        store,
    )
    profile.peerlist_blob = result.blob_id
    profile.save()
    click.echo(result.blob_id)


@secret.command(name="recover")
@click.option("--transport", "transport_kind", type=click.Choice(["sim", "tcp"]), default="tcp")
@click.option("--endpoints", default=None, help="Comma-separated host:port peer endpoints (tcp).")
@click.option("--peerlist-id", default=None, help="Peer list blob id (defaults to the profile's).")
@click.pass_context
def secret_recover(ctx, transport_kind, endpoints, peerlist_id):
    """Recover the master key from peer-held shards."""
    profile = _load_profile(ctx)
    store = _open_store(ctx, profile)
    blob_id = peerlist_id or profile.peerlist_blob
    if not blob_id:
        raise BlobNotFoundError("no peer list recorded; pass --peerlist-id")
    peer_list = _load_peer_list(store, blob_id)
    transport = _build_transport(ctx, profile, transport_kind, endpoints, 0, store)
    profile.master_key = recovery.recover(peer_list, transport, profile.require_identity())
    profile.save()
    click.echo("master key recovered")


@secret.command(name="rebind")
@click.option("--transport", "transport_kind", type=click.Choice(["sim", "tcp"]), default="tcp")
@click.option("--endpoints", default=None, help="Comma-separated host:port peer endpoints (tcp).")
@click.option("--peerlist-id", default=None)
@click.pass_context
def secret_rebind(ctx, transport_kind, endpoints, peerlist_id):
    """Rotate the identity keypair and rebind all peer shard records."""
    profile = _load_profile(ctx)
    store = _open_store(ctx, profile)
    blob_id = peerlist_id or profile.peerlist_blob
    if not blob_id:
        raise BlobNotFoundError("no peer list recorded; pass --peerlist-id")
    peer_list = _load_peer_list(store, blob_id)
    old = profile.require_identity()
    new = crypto.KeyPair.generate()
    # sessions run under the new identity; the endorsement proves the old one
    temp_profile_identity = profile.keypair
    profile.keypair = new
    try:
        transport = _build_transport(ctx, profile, transport_kind, endpoints, 0, store)
        result = recovery.update_owner_pk(peer_list, old, new, transport, store)
    except VaultError:
        profile.keypair = temp_profile_identity
        raise
    profile.peerlist_blob = result.blob_id
    profile.save()
    if result.unreachable:
        click.echo(f"warning: {len(result.unreachable)} peer(s) unreachable, still bound to the old key", err=True)
    click.echo(new.public_point.hex())


@secret.command(name="forget")
@click.pass_context
def secret_forget(ctx):
    """Drop the local master key (test plumbing for the loss scenario)."""
    if not ctx.obj["insecure_test"]:
        raise click.UsageError("secret forget requires --insecure-test")
    profile = _load_profile(ctx)
    profile.master_key = None
    profile.save()
    click.echo("master key dropped")


# ---------------------------------------------------------------------------
# escrow commands


@cli.group()
def escrow():
    """Out-of-band shard release for lawful recovery."""


@escrow.command(name="export")
@click.option("--owner", "owner_ref", required=True, help="Owner public key (hex) whose shard to export.")
@click.pass_context
def escrow_export(ctx, owner_ref):
    """Run on a peer: decrypt and print the held shard envelope."""
    profile = _load_profile(ctx)
    store = _open_store(ctx, profile)
    node = PeerNode(
        keypair=profile.require_identity(),
        master_key=profile.require_master_key(),
        name=profile.display_name,
        email=profile.display_email,
        store=store,
    )
    node.import_records(profile.peer_records)
    click.echo(node.escrow_export(bytes.fromhex(owner_ref)))


@escrow.command(name="join")
@click.argument("blobs", nargs=-1, required=True)
@click.option("--peerlist-id", default=None, help="Peer list blob id (default: search the store).")
@click.pass_context
def escrow_join(ctx, blobs, peerlist_id):
    """Join exported shards back into the master secret."""
    profile = _load_profile(ctx)
    store = _open_store(ctx, profile)
    exports = []
    for blob in blobs:
        path = Path(blob)
        exports.append(path.read_text().strip() if path.exists() else blob)
    if peerlist_id:
        candidates = [_load_peer_list(store, peerlist_id)]
    else:
        owner_pks = set()
        for item in exports:
            try:
                owner_pks.add(parse_escrow_export(item).owner_pk)
            except (FormatError, ShardError):
                continue
        candidates = [
            pl
            for pl in (_load_peer_list(store, cid) for cid in store.list("peerlist"))
            if pl.owner_pk in owner_pks and pl.verify()
        ]
        if not candidates:
            raise EscrowJoinError("no matching peer list found in the store")
    # an owner may have uploaded several rosters over time; the commitment
    # check inside the join decides which one these exports belong to
    last_error: EscrowJoinError | None = None
    for peer_list in candidates:
        try:
            secret_bytes = recovery.escrow_join(exports, peer_list)
            break
        except EscrowJoinError as exc:
            last_error = exc
    else:
        raise last_error
    click.echo(base64.b64encode(secret_bytes).decode())


# ---------------------------------------------------------------------------
# freshness commands


@cli.group()
def fhf():
    """Freshness stamps over the local vault directory."""


def _vault_dir(ctx, profile, directory) -> Path:
    target = directory or profile.vault_dir
    if not target:
        raise click.UsageError("no vault directory configured; pass --dir or set it at init")
    return Path(target)


@fhf.command(name="update")
@click.option(
    "--interval",
    type=int,
    default=300,
    show_default=True,
    help="Skip re-stamping unchanged roots younger than this many seconds.",
)
@click.option("--dir", "directory", default=None, help="Vault directory (default: profile's).")
@click.pass_context
def fhf_update(ctx, interval, directory):
    """Recompute and stamp every directory root (cron-friendly)."""
    profile = _load_profile(ctx)
    root = _vault_dir(ctx, profile, directory)
    extractor = freshness.owner_header_extractor(
        profile.require_master_key(), profile.require_identity().public_point
    )
    written = freshness.update_tree(root, profile.require_master_key(), int(time.time()), extractor, interval)
    click.echo(f"stamped {len(written)} directorie(s)")


@fhf.command(name="verify")
@click.option("--max-age", type=int, default=600, show_default=True, help="Stale threshold in seconds.")
@click.option("--dir", "directory", default=None, help="Vault directory (default: profile's).")
@click.pass_context
def fhf_verify(ctx, max_age, directory):
    """Check every directory against its stamp; violations exit nonzero."""
    profile = _load_profile(ctx)
    root = _vault_dir(ctx, profile, directory)
    extractor = freshness.owner_header_extractor(
        profile.require_master_key(), profile.require_identity().public_point
    )
    violations = freshness.verify_tree(
        root, profile.require_master_key(), max_age, int(time.time()), extractor
    )
    for violation in violations:
        click.echo(f"violation: {violation.kind} {violation.path}")
    if violations:
        sys.exit(6)
    click.echo("ok")


# ---------------------------------------------------------------------------
# peer daemon


@cli.command()
@click.option("--listen", required=True, help="host:port to serve on.")
@click.pass_context
def peerd(ctx, listen):
    """Serve this profile as a shard-holding peer endpoint."""
    profile = _load_profile(ctx)
    store = _open_store(ctx, profile)
    host, _, port = listen.rpartition(":")
    if not host or not port.isdigit():
        raise click.UsageError("--listen expects host:port")
    node = PeerNode(
        keypair=profile.require_identity(),
        master_key=profile.require_master_key(),
        name=profile.display_name,
        email=profile.display_email,
        store=store,
    )
    node.import_records(profile.peer_records)

    def persist(n: PeerNode) -> None:
        profile.peer_records = n.export_records()
        profile.save()

    node.on_records_changed = persist
    server = PeerServer(node, host, int(port))
    click.echo(f"serving on {server.address[0]}:{server.address[1]}", err=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()


def main() -> None:
    try:
        cli(standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"error: usage: {exc.format_message()}", err=True)
        sys.exit(2)
    except click.exceptions.Abort:
        click.echo("error: aborted", err=True)
        sys.exit(130)
    except click.ClickException as exc:
        click.echo(f"error: cli: {exc.format_message()}", err=True)
        sys.exit(2)
    except VaultError as exc:
        click.echo(f"error: {_slug(exc)}: {exc}", err=True)
        sys.exit(_exit_code(exc))
    except Exception as exc:  # noqa: BLE001 - the CLI contract is one line, never a traceback
        click.echo(f"error: internal: {type(exc).__name__}: {exc}", err=True)
        sys.exit(10)


if __name__ == "__main__":
    main()
