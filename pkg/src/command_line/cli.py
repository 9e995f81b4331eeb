"""
Command Line Interface
Single entry point wiring key management, binding, verification, trust and notaries
"""

import argparse
import base64
import binascii
import json
import logging
import sys
from datetime import timedelta
from pathlib import Path
from typing import Callable, List, Optional

from binding_descriptor.descriptor import (
    BEGIN_MARKER,
    armor,
    build_descriptor,
    descriptor_digest,
    parse_armored,
    sign_descriptor,
)
from core.crypto import is_hex_fingerprint
from core.errors import KeyFileError, OnionBindingError
from core.settings import Settings, load_settings
from core.timeutil import utc_now
from notary_service.notary_api import DEFAULT_INTERVAL, serve_notary
from notary_service.notary_client import NotaryClient
from notary_service.notary_log import NotaryLog, load_targets, query_history
from notary_service.quorum import QuorumKind, quorum_verdict
from onion_identity.onion_id import ServiceIdentity, generate_identity, validate_onion_address
from onion_identity.vanity import DEFAULT_MAX_TRIALS, vanity_candidates, vanity_search
from output_processor.output_formatter import OutputFormatter
from simulated_network.loopback import LoopbackServer, LoopbackTransport, publish_manifest
from simulated_network.sim_net import Channel, SimNetwork
from verification.verifier import EXIT_CODES, TlsBinding, VerdictKind, Verifier, verify_tls_binding
from web_of_trust.trust_store import OwnerTrust, TrustStore

from command_line.demo import build_demo, demo_trust_store

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

QUORUM_EXIT_CODES = {
    QuorumKind.AGREED: 0,
    QuorumKind.NO_QUORUM: 30,
    QuorumKind.CONFLICT: 31,
}

DEFAULT_NOTARY_PORT = 8480
LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


class CommandContext:
    """Settings, formatter and trust store shared by one dispatched command"""

    def __init__(self, settings: Settings, formatter: OutputFormatter):
        self.settings = settings
        self.formatter = formatter

    def emit(self, text: str) -> None:
        print(text)

    def open_store(self) -> TrustStore:
        return TrustStore.open(self.settings.store_path)

    def transport(self) -> LoopbackTransport:
        return LoopbackTransport(self.settings.simnet_url)


def _hex_bytes(text: str) -> bytes:
    try:
        return bytes.fromhex(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a hex string: {text!r}")


def _fingerprint(text: str) -> str:
    text = text.strip().lower()
    if not is_hex_fingerprint(text):
        raise argparse.ArgumentTypeError(f"not a 64-character hex fingerprint: {text!r}")
    return text


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {text}")
    return value


def read_public_key(path: Path) -> bytes:
    """Public key from a key file, an armored descriptor, or a bare hex file"""
    text = Path(path).read_text(encoding="utf-8").strip()
    try:
        if text.startswith(BEGIN_MARKER):
            return parse_armored(text).signer_public_key
        if text.startswith("{"):
            return bytes.fromhex(json.loads(text)["public_key"])
        return bytes.fromhex(text)
    except (ValueError, KeyError) as e:
        raise KeyFileError(f"No public key found in {path}: {e}") from e


# Key management

def cmd_keygen(args, ctx: CommandContext) -> int:
    identity = generate_identity(args.seed)
    out = args.out or ctx.settings.keys_dir / f"{identity.fingerprint}.json"
    identity.save(out)
    ctx.emit(ctx.formatter.format_record('identity', {
        'onion_address': str(identity.onion_address),
        'public_key': identity.public_key.hex(),
        'fingerprint': identity.fingerprint,
        'key_file': str(out),
    }, title='Generated service identity'))
    return EXIT_OK


def cmd_vanity(args, ctx: CommandContext) -> int:
    if args.candidates:
        found = vanity_candidates(args.prefix, args.candidates, args.max_trials, args.seed)
    else:
        found = [vanity_search(args.prefix, args.max_trials, args.seed, args.jobs)]
    for index, (identity, trials) in enumerate(found):
        out = args.out if args.out and index == 0 else ctx.settings.keys_dir / f"{identity.fingerprint}.json"
        identity.save(out)
        ctx.emit(ctx.formatter.format_record('vanity', {
            'onion_address': str(identity.onion_address),
            'public_key': identity.public_key.hex(),
            'fingerprint': identity.fingerprint,
            'trials': trials,
            'key_file': str(out),
        }, title=f'Vanity match for {args.prefix!r}'))
    return EXIT_OK


# Descriptors

def cmd_bind(args, ctx: CommandContext) -> int:
    identity = ServiceIdentity.load(args.key)
    days = args.days if args.days is not None else ctx.settings.lifetime_days
    descriptor = build_descriptor(args.clearnet, args.onion, utc_now(), timedelta(days=days), args.tls_fp)
    signed = sign_descriptor(descriptor, identity)
    block = armor(signed)
    if args.out:
        Path(args.out).write_text(block, encoding="utf-8")
        logger.info(f"Wrote descriptor to {args.out}")
    if ctx.formatter.machine:
        ctx.emit(ctx.formatter.format_record('descriptor', {
            'armored': block,
            'descriptor_digest': descriptor_digest(descriptor),
            'signer_fingerprint': identity.fingerprint,
        }))
    else:
        ctx.emit(block.rstrip("\n"))
    return EXIT_OK


# Trust store

def cmd_trust_add_key(args, ctx: CommandContext) -> int:
    store = ctx.open_store()
    fpr = store.add_key(read_public_key(args.file))
    if args.trust:
        store.set_owner_trust(fpr, OwnerTrust(args.trust))
    store.save()
    ctx.emit(ctx.formatter.format_record('trust_add', {'fingerprint': fpr}, title='Added key'))
    return EXIT_OK


def cmd_trust_set(args, ctx: CommandContext) -> int:
    store = ctx.open_store()
    store.set_owner_trust(args.fpr, OwnerTrust(args.level))
    store.save()
    ctx.emit(ctx.formatter.format_record('trust_set', {'fingerprint': args.fpr, 'owner_trust': args.level},
                                         title='Owner trust updated'))
    return EXIT_OK


def cmd_trust_certify(args, ctx: CommandContext) -> int:
    key_file = args.key or ctx.settings.keys_dir / f"{args.certifier}.json"
    certifier = ServiceIdentity.load(key_file)
    if certifier.fingerprint != args.certifier:
        raise KeyFileError(f"{key_file} holds {certifier.fingerprint}, not {args.certifier}")
    store = ctx.open_store()
    cert = store.certify(certifier, args.subject)
    store.save()
    ctx.emit(ctx.formatter.format_record('certification', {
        'subject': args.subject,
        'certifier': cert.certifier_fingerprint,
        'signature': base64.b64encode(cert.signature).decode('ascii'),
    }, title='Certified key'))
    return EXIT_OK


def cmd_trust_import_cert(args, ctx: CommandContext) -> int:
    try:
        signature = base64.b64decode(args.signature, validate=True)
    except (binascii.Error, ValueError) as e:
        raise KeyFileError(f"Certification signature is not base64: {e}") from e
    store = ctx.open_store()
    applied = store.import_certification(args.subject, args.certifier, signature)
    store.save()
    ctx.emit(ctx.formatter.format_record('certification_import', {
        'subject': args.subject,
        'certifier': args.certifier,
        'status': 'applied' if applied else 'pending',
    }, title='Imported certification'))
    return EXIT_OK


def cmd_trust_status(args, ctx: CommandContext) -> int:
    store = ctx.open_store()
    validity = store.key_validity(args.fpr)
    data = {'fingerprint': args.fpr, 'validity': validity.value}
    if args.fpr in store:
        record = store.get(args.fpr)
        data['owner_trust'] = record.owner_trust.value
        data['certifiers'] = sorted(c.certifier_fingerprint for c in record.certifications)
    else:
        data['owner_trust'] = None
        data['certifiers'] = []
    ctx.emit(ctx.formatter.format_record('trust_status', data, title='Key status'))
    return EXIT_OK


def cmd_trust_list(args, ctx: CommandContext) -> int:
    store = ctx.open_store()
    ctx.emit(ctx.formatter.format_trust_status(store.list_keys(), store.validities()))
    return EXIT_OK


def cmd_trust_remove(args, ctx: CommandContext) -> int:
    store = ctx.open_store()
    store.remove_key(args.fpr)
    store.save()
    ctx.emit(ctx.formatter.format_record('trust_remove', {'fingerprint': args.fpr}, title='Removed key'))
    return EXIT_OK


# Verification

def cmd_verify(args, ctx: CommandContext) -> int:
    verifier = Verifier(ctx.transport(), ctx.open_store(), utc_now, Channel(args.channel),
                        timedelta(seconds=ctx.settings.skew_seconds))
    report = verifier.verify_pair(args.target)
    tls_binding = verify_tls_binding(report, args.tls_fp) if args.tls_fp else None
    ctx.emit(ctx.formatter.format_report(report, tls_binding))
    if tls_binding is TlsBinding.NOT_BOUND:
        return EXIT_CODES[VerdictKind.MISMATCH]
    return report.exit_code


def cmd_simnet_serve(args, ctx: CommandContext) -> int:
    net = SimNetwork()
    count = publish_manifest(net, args.sites) if args.sites else 0
    port = args.port if args.port is not None else _port_of(ctx.settings.simnet_url)
    server = LoopbackServer(net, args.host, port)
    ctx.emit(ctx.formatter.format_system_message(
        f"Simnet serving {count} documents on {server.base_url}", 'success'))
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        logger.info("Simnet server interrupted")
    finally:
        server.stop()
    return EXIT_OK


def _port_of(url: str) -> int:
    tail = url.rsplit(":", 1)[-1].split("/")[0]
    return int(tail) if tail.isdigit() else 80


# Notary

def _notary_identity(args, ctx: CommandContext) -> ServiceIdentity:
    key_file = args.key or ctx.settings.notary_key or ctx.settings.keys_dir / "notary.json"
    if Path(key_file).exists():
        return ServiceIdentity.load(key_file)
    identity = generate_identity()
    identity.save(key_file)
    logger.warning(f"Generated a new notary key at {key_file}")
    return identity


def cmd_notary_serve(args, ctx: CommandContext) -> int:
    identity = _notary_identity(args, ctx)
    log_path = args.log or ctx.settings.notary_log
    log = NotaryLog.open(identity, log_path) if log_path else NotaryLog(identity)
    targets = load_targets(args.targets)
    ctx.emit(ctx.formatter.format_system_message(
        f"Notary {identity.fingerprint[:16]} watching {len(targets)} pairs on port {args.port}", 'success'))
    serve_notary(log, ctx.transport(), ctx.open_store(), targets, args.host, args.port, args.interval)
    return EXIT_OK


def cmd_notary_query(args, ctx: CommandContext) -> int:
    address = validate_onion_address(args.onion)
    urls = [u.strip() for u in args.notaries.split(",") if u.strip()]
    now = utc_now()
    reports = []
    for url in urls:
        answer = NotaryClient(url).history(address)
        change = answer.key_change
        summary = {
            'reachable': answer.error is None,
            'verified': bool(answer.check) if answer.check is not None else False,
            'reason': answer.error or (answer.check.reason if answer.check is not None else ''),
            'key_change': change.kind.value,
            'key_change_seq': change.at_seq,
            'staleness_seconds': answer.staleness_seconds(now),
        }
        ctx.emit(ctx.formatter.format_history(url, [o.to_dict() for o in answer.observations], summary))
        reports.append((url, answer.latest))
    result = quorum_verdict(reports, args.quorum)
    ctx.emit(ctx.formatter.format_quorum(result.to_dict()))
    return QUORUM_EXIT_CODES[result.kind]


def cmd_notary_log(args, ctx: CommandContext) -> int:
    identity = _notary_identity(args, ctx)
    log_path = args.log or ctx.settings.notary_log
    if not log_path:
        raise KeyFileError("No notary log configured (use --log or ONION_BINDING_NOTARY_LOG)")
    log = NotaryLog.open(identity, log_path)
    check = log.verify()
    entries = query_history(log, args.onion) if args.onion else log.snapshot()[0]
    summary = {
        'verified': check.accepted,
        'first_bad_seq': check.first_bad_seq,
        'head_seq': log.head.seq,
    }
    ctx.emit(ctx.formatter.format_history(str(log_path), [o.to_dict() for o in entries], summary))
    return EXIT_OK if check else EXIT_FAILURE


# Demo

def cmd_demo(args, ctx: CommandContext) -> int:
    setup = build_demo()
    store = demo_trust_store(setup)
    with LoopbackServer(setup.net, '127.0.0.1', args.port) as server:
        ctx.emit(ctx.formatter.format_system_message(f"Demo simnet on {server.base_url}", 'info'))
        verifier = Verifier(LoopbackTransport(server.base_url), store)
        honest = verifier.verify_pair(setup.honest.clearnet_url)
        ctx.emit(ctx.formatter.format_report(honest))
        attacked = verifier.verify_pair(setup.attacked.clearnet_url)
        ctx.emit(ctx.formatter.format_report(attacked))
    ctx.emit(ctx.formatter.get_session_summary())
    ok = honest.verdict is VerdictKind.AUTHENTIC and attacked.verdict is VerdictKind.ADDRESS_KEY_MISMATCH
    ctx.emit(ctx.formatter.format_system_message(
        "Honest pair authenticated, attacked pair rejected" if ok else "Demo outcome unexpected",
        'success' if ok else 'error'))
    return EXIT_OK if ok else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    """Create the argument parser with every subcommand"""
    # shared flags accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--store', type=Path, default=argparse.SUPPRESS, help='Trust store path')
    common.add_argument('--format', choices=['text', 'machine'], default=argparse.SUPPRESS,
                        help='Output format')
    common.add_argument('--simnet-url', default=argparse.SUPPRESS, help='Loopback simnet base URL')
    common.add_argument('--keys-dir', type=Path, default=argparse.SUPPRESS, help='Key file directory')
    common.add_argument('--log-level', default=argparse.SUPPRESS, help='Logging level')

    parser = argparse.ArgumentParser(prog='onion-binding', parents=[common],
                                     description='Onion-service website authentication')
    commands = parser.add_subparsers(dest='command', metavar='COMMAND')
    commands.required = True

    def leaf(group, name: str, handler: Callable, help_text: str) -> argparse.ArgumentParser:
        sub = group.add_parser(name, parents=[common], help=help_text)
        sub.set_defaults(handler=handler)
        return sub

    p = leaf(commands, 'keygen', cmd_keygen, 'Generate a service identity')
    p.add_argument('--seed', type=_hex_bytes, help='32-byte seed as hex (deterministic)')
    p.add_argument('--out', type=Path, help='Key file to write')

    p = leaf(commands, 'vanity', cmd_vanity, 'Search for an address with a prefix')
    p.add_argument('prefix')
    p.add_argument('--max-trials', type=_positive_int, default=DEFAULT_MAX_TRIALS)
    p.add_argument('--jobs', type=_positive_int, default=1)
    p.add_argument('--candidates', type=_positive_int, help='Collect this many matches')
    p.add_argument('--seed', type=_hex_bytes, help='Seed for a reproducible search')
    p.add_argument('--out', type=Path, help='Key file for the (first) match')

    p = leaf(commands, 'bind', cmd_bind, 'Create a signed binding descriptor')
    p.add_argument('--clearnet', required=True)
    p.add_argument('--onion', required=True)
    p.add_argument('--key', required=True, type=Path, help='Signing key file')
    p.add_argument('--tls-fp', type=_fingerprint)
    p.add_argument('--days', type=_positive_int)
    p.add_argument('--out', type=Path, help='Also write the armored block here')

    trust = commands.add_parser('trust', help='Manage the trust store')
    trust_commands = trust.add_subparsers(dest='trust_command', metavar='ACTION')
    trust_commands.required = True
    p = leaf(trust_commands, 'add-key', cmd_trust_add_key, 'Add a signer key')
    p.add_argument('file', type=Path)
    p.add_argument('--trust', choices=[t.value for t in OwnerTrust])
    p = leaf(trust_commands, 'set', cmd_trust_set, 'Set owner trust')
    p.add_argument('level', choices=[t.value for t in OwnerTrust])
    p.add_argument('fpr', type=_fingerprint)
    p = leaf(trust_commands, 'certify', cmd_trust_certify, 'Certify a key')
    p.add_argument('--as', dest='certifier', required=True, type=_fingerprint)
    p.add_argument('--key', type=Path, help='Certifier key file')
    p.add_argument('subject', type=_fingerprint)
    p = leaf(trust_commands, 'import-cert', cmd_trust_import_cert, 'Import a certification')
    p.add_argument('subject', type=_fingerprint)
    p.add_argument('certifier', type=_fingerprint)
    p.add_argument('signature', help='Base64 signature')
    p = leaf(trust_commands, 'status', cmd_trust_status, 'Show key validity')
    p.add_argument('fpr', type=_fingerprint)
    leaf(trust_commands, 'list', cmd_trust_list, 'List keys')
    p = leaf(trust_commands, 'remove', cmd_trust_remove, 'Remove a key')
    p.add_argument('fpr', type=_fingerprint)

    p = leaf(commands, 'verify', cmd_verify, 'Verify a clearnet/onion pair')
    p.add_argument('target', metavar='URL_OR_ONION')
    p.add_argument('--channel', choices=[c.value for c in Channel], default=Channel.ONION_CIRCUIT.value)
    p.add_argument('--tls-fp', type=_fingerprint, help='Observed TLS certificate fingerprint')

    simnet = commands.add_parser('simnet', help='Simulated network')
    simnet_commands = simnet.add_subparsers(dest='simnet_command', metavar='ACTION')
    simnet_commands.required = True
    p = leaf(simnet_commands, 'serve', cmd_simnet_serve, 'Serve sites on loopback HTTP')
    p.add_argument('--sites', type=Path, help='JSON site manifest')
    p.add_argument('--host', default='127.0.0.1')
    p.add_argument('--port', type=int)

    notary = commands.add_parser('notary', help='Notary operation')
    notary_commands = notary.add_subparsers(dest='notary_command', metavar='ACTION')
    notary_commands.required = True
    p = leaf(notary_commands, 'serve', cmd_notary_serve, 'Crawl targets and serve history')
    p.add_argument('--targets', required=True, type=Path)
    p.add_argument('--host', default='127.0.0.1')
    p.add_argument('--port', type=int, default=DEFAULT_NOTARY_PORT)
    p.add_argument('--interval', type=float, default=DEFAULT_INTERVAL)
    p.add_argument('--key', type=Path, help='Notary key file')
    p.add_argument('--log', type=Path, help='Notary log file')
    p = leaf(notary_commands, 'query', cmd_notary_query, 'Query notaries about an address')
    p.add_argument('--notaries', required=True, help='Comma-separated notary URLs')
    p.add_argument('--onion', required=True)
    p.add_argument('--quorum', type=int)
    p = leaf(notary_commands, 'log', cmd_notary_log, 'Print and verify a local notary log')
    p.add_argument('--key', type=Path, help='Notary key file')
    p.add_argument('--log', type=Path, help='Notary log file')
    p.add_argument('--onion', help='Only this address')

    p = leaf(commands, 'demo', cmd_demo, 'Verify an honest and an attacked pair on a loopback simnet')
    p.add_argument('--port', type=int, default=0)

    return parser


def _configure_logging(level: str) -> None:
    logging.basicConfig(stream=sys.stderr, format=LOG_FORMAT)
    logging.getLogger().setLevel(getattr(logging, level, logging.WARNING))


def dispatch(argv: Optional[List[str]] = None) -> int:
    """
    Parse argv and run the selected command

    Returns:
        int: Process exit code (2 for usage errors)
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    overrides = {
        'store': getattr(args, 'store', None),
        'format': getattr(args, 'format', None),
        'simnet_url': getattr(args, 'simnet_url', None),
        'keys_dir': getattr(args, 'keys_dir', None),
        'log_level': getattr(args, 'log_level', None),
    }
    try:
        settings = load_settings(overrides)
    except ValueError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_USAGE
    _configure_logging(settings.log_level)
    ctx = CommandContext(settings, OutputFormatter(settings.output_format))

    try:
        return args.handler(args, ctx)
    except OnionBindingError as e:
        logger.error(f"{args.command} failed: {e}")
        print(ctx.formatter.format_error(str(e), type(e).__name__), file=sys.stderr)
        return EXIT_FAILURE
    except (OSError, ValueError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(ctx.formatter.format_error(str(e)), file=sys.stderr)
        return EXIT_FAILURE
