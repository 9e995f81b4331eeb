"""
Tests for the command-line interface and settings resolution
"""

import base64
import io
import json
import os
import sys
import tempfile
import threading
import unittest
from contextlib import redirect_stderr, redirect_stdout
from datetime import timedelta
from pathlib import Path
from unittest import mock

from werkzeug.serving import make_server

# Add src directory to path
sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'src'))

from binding_descriptor.descriptor import (
    WELL_KNOWN_PATH,
    armor,
    build_descriptor,
    load_descriptor_file,
    sign_descriptor,
    verify_signature,
)
from command_line.cli import dispatch, read_public_key
from command_line.demo import build_demo, demo_trust_store
from core.errors import KeyFileError
from core.settings import load_settings
from core.timeutil import utc_now
from notary_service.notary_api import create_app
from notary_service.notary_log import NotaryLog, SitePair
from onion_identity.onion_id import generate_identity
from simulated_network.loopback import LoopbackServer
from verification.verifier import VerdictKind
from web_of_trust.trust_store import OwnerTrust, TrustStore

SEED0 = "00" * 32
TLS_FP = "92fbe2b1a4d7330a01d9a13e511c3a4da2d1c7e482646922c8adfcc916dbe279"
HONEST_CHECKS = ["FetchEntry", "ParseEntry", "FetchCounterpart", "ParseCounterpart",
                 "CrossMatch", "SignatureValid", "SelfAuth", "Freshness", "Trust"]


class CliTestCase(unittest.TestCase):
    """Isolated config, store and key directory per test"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)
        env = {
            'ONION_BINDING_CONFIG': str(self.dir / 'absent.env'),
            'XDG_CONFIG_HOME': str(self.dir / 'config'),
            'NO_PROXY': '127.0.0.1,localhost',
            'no_proxy': '127.0.0.1,localhost',
        }
        patcher = mock.patch.dict(os.environ, env)
        patcher.start()
        self.addCleanup(patcher.stop)
        for name in [k for k in os.environ if k.startswith('ONION_BINDING_') and k not in env]:
            del os.environ[name]
        self.store = self.dir / 'store.txt'
        self.keys = self.dir / 'keys'

    def run_cli(self, *argv):
        out, err = io.StringIO(), io.StringIO()
        with redirect_stdout(out), redirect_stderr(err):
            code = dispatch([str(a) for a in argv])
        return code, out.getvalue()

    def run_machine(self, *argv):
        code, out = self.run_cli(*argv, '--format', 'machine', '--store', self.store, '--keys-dir', self.keys)
        return code, [json.loads(line) for line in out.splitlines() if line.strip()]


class TestUsage(CliTestCase):
    """Argument parsing"""

    def test_no_arguments(self):
        code, _ = self.run_cli()
        self.assertEqual(code, 2)

    def test_unknown_command(self):
        self.assertEqual(self.run_cli('frobnicate')[0], 2)

    def test_help(self):
        self.assertEqual(self.run_cli('--help')[0], 0)

    def test_bad_flag_values(self):
        self.assertEqual(self.run_cli('keygen', '--seed', 'xyz')[0], 2)
        self.assertEqual(self.run_cli('trust', 'status', 'not-a-fingerprint')[0], 2)
        self.assertEqual(self.run_cli('trust', 'set', 'sometimes', '00' * 32)[0], 2)
        self.assertEqual(self.run_cli('vanity', 'a', '--max-trials', '0')[0], 2)

    def test_invalid_format_in_environment(self):
        with mock.patch.dict(os.environ, {'ONION_BINDING_FORMAT': 'xml'}):
            self.assertEqual(self.run_cli('trust', 'list', '--store', self.store)[0], 2)


class TestKeyCommands(CliTestCase):
    """keygen, vanity and bind"""

    def test_keygen_oracle(self):
        out_file = self.dir / 'svc.json'
        code, lines = self.run_machine('keygen', '--seed', SEED0, '--out', out_file)
        self.assertEqual(code, 0)
        self.assertEqual(lines[0]['type'], 'identity')
        self.assertEqual(lines[0]['onion_address'], 'wzqxrefdkh3u6vsl.onion')
        self.assertEqual(lines[0]['public_key'],
                         '3b6a27bcceb6a42d62a3a8d02a6f0d73653215771de243a63ac048a18b59da29')
        self.assertEqual(lines[0]['fingerprint'],
                         '139e3940e64b5491722088d9a0d741628fc826e09475d341a780acde3c4b8070')
        self.assertEqual(out_file.stat().st_mode & 0o777, 0o600)

    def test_keygen_default_location(self):
        code, lines = self.run_machine('keygen')
        self.assertEqual(code, 0)
        self.assertTrue((self.keys / f"{lines[0]['fingerprint']}.json").exists())

    def test_keygen_wrong_seed_length(self):
        self.assertEqual(self.run_machine('keygen', '--seed', '00' * 31)[0], 1)

    def test_vanity(self):
        code, lines = self.run_machine('vanity', 'a', '--seed', SEED0, '--max-trials', 5000)
        self.assertEqual(code, 0)
        self.assertTrue(lines[0]['onion_address'].startswith('a'))
        self.assertGreaterEqual(lines[0]['trials'], 1)
        self.assertTrue(Path(lines[0]['key_file']).exists())

    def test_vanity_candidates(self):
        code, lines = self.run_machine('vanity', 'b', '--candidates', 2, '--seed', SEED0,
                                       '--max-trials', 5000)
        self.assertEqual(code, 0)
        self.assertEqual(len(lines), 2)
        self.assertNotEqual(lines[0]['onion_address'], lines[1]['onion_address'])

    def test_vanity_errors(self):
        self.assertEqual(self.run_machine('vanity', '1')[0], 1)
        self.assertEqual(self.run_machine('vanity', 'abcdef', '--max-trials', 10)[0], 1)

    def test_bind(self):
        key_file = self.dir / 'svc.json'
        self.run_machine('keygen', '--seed', SEED0, '--out', key_file)
        out_file = self.dir / 'binding.txt'
        code, text = self.run_cli('bind', '--clearnet', 'https://cupcakebridge.example',
                                  '--onion', 'wzqxrefdkh3u6vsl.onion', '--key', key_file,
                                  '--days', 30, '--tls-fp', TLS_FP, '--out', out_file)
        self.assertEqual(code, 0)
        self.assertEqual(text.rstrip('\n'), out_file.read_text().rstrip('\n'))
        signed = load_descriptor_file(out_file)
        self.assertTrue(verify_signature(signed))
        self.assertEqual(signed.descriptor.tls_fingerprint, TLS_FP)
        self.assertEqual(signed.descriptor.expires_at - signed.descriptor.issued_at, timedelta(days=30))

    def test_bind_machine(self):
        key_file = self.dir / 'svc.json'
        self.run_machine('keygen', '--seed', SEED0, '--out', key_file)
        code, lines = self.run_machine('bind', '--clearnet', 'https://cupcakebridge.example',
                                       '--onion', 'wzqxrefdkh3u6vsl.onion', '--key', key_file)
        self.assertEqual(code, 0)
        self.assertEqual(lines[0]['type'], 'descriptor')
        self.assertEqual(len(lines[0]['descriptor_digest']), 64)
        self.assertTrue(lines[0]['armored'].startswith('-----BEGIN ONION BINDING-----'))

    def test_bind_rejects_bad_input(self):
        key_file = self.dir / 'svc.json'
        self.run_machine('keygen', '--seed', SEED0, '--out', key_file)
        self.assertEqual(self.run_machine('bind', '--clearnet', 'ftp://x.example',
                                          '--onion', 'wzqxrefdkh3u6vsl.onion', '--key', key_file)[0], 1)
        self.assertEqual(self.run_machine('bind', '--clearnet', 'https://x.example',
                                          '--onion', 'wzqxrefdkh3u6vsl.onion',
                                          '--key', self.dir / 'absent.json')[0], 1)


class TestTrustCommands(CliTestCase):
    """The trust subcommands against one store file"""

    def setUp(self):
        super().setUp()
        self.ids = [generate_identity(bytes([n]) * 32) for n in (1, 2, 3)]
        self.files = []
        for identity in self.ids:
            self.files.append(identity.save(self.keys / f"{identity.fingerprint}.json"))

    def test_trust_flow(self):
        root, site, other = self.ids
        self.assertEqual(self.run_machine('trust', 'add-key', self.files[0], '--trust', 'ultimate')[0], 0)
        self.assertEqual(self.run_machine('trust', 'add-key', self.files[1])[0], 0)

        code, lines = self.run_machine('trust', 'status', site.fingerprint)
        self.assertEqual(lines[0]['validity'], 'Unknown')

        code, lines = self.run_machine('trust', 'certify', '--as', root.fingerprint, site.fingerprint)
        self.assertEqual(code, 0)
        self.assertEqual(lines[0]['certifier'], root.fingerprint)

        code, lines = self.run_machine('trust', 'status', site.fingerprint)
        self.assertEqual(lines[0]['validity'], 'Valid')
        self.assertEqual(lines[0]['owner_trust'], 'none')
        self.assertEqual(lines[0]['certifiers'], [root.fingerprint])

        self.assertEqual(self.run_machine('trust', 'set', 'full', site.fingerprint)[0], 0)
        self.assertEqual(TrustStore.load(self.store).get(site.fingerprint).owner_trust, OwnerTrust.FULL)

        code, lines = self.run_machine('trust', 'list')
        self.assertEqual(sorted(line['fingerprint'] for line in lines), sorted([root.fingerprint, site.fingerprint]))

        self.assertEqual(self.run_machine('trust', 'remove', root.fingerprint)[0], 0)
        code, lines = self.run_machine('trust', 'status', site.fingerprint)
        self.assertEqual(lines[0]['validity'], 'Unknown')

    def test_import_certification(self):
        root, site, other = self.ids
        self.run_machine('trust', 'add-key', self.files[0], '--trust', 'ultimate')
        self.run_machine('trust', 'add-key', self.files[1])
        signature = base64.b64encode(root.sign(site.public_key)).decode()
        code, lines = self.run_machine('trust', 'import-cert', site.fingerprint, root.fingerprint, signature)
        self.assertEqual(code, 0)
        self.assertEqual(lines[0]['status'], 'applied')

        pending = base64.b64encode(other.sign(site.public_key)).decode()
        code, lines = self.run_machine('trust', 'import-cert', site.fingerprint, other.fingerprint, pending)
        self.assertEqual(lines[0]['status'], 'pending')

        forged = base64.b64encode(other.sign(b'something else')).decode()
        self.assertEqual(self.run_machine('trust', 'import-cert', site.fingerprint, root.fingerprint,
                                          forged)[0], 1)
        self.assertEqual(self.run_machine('trust', 'import-cert', site.fingerprint, root.fingerprint,
                                          'not base64!')[0], 1)

    def test_unknown_key_errors(self):
        fpr = self.ids[0].fingerprint
        self.assertEqual(self.run_machine('trust', 'set', 'full', fpr)[0], 1)
        self.assertEqual(self.run_machine('trust', 'remove', fpr)[0], 1)
        code, lines = self.run_machine('trust', 'status', fpr)
        self.assertEqual(code, 0)
        self.assertEqual(lines[0]['validity'], 'Unknown')
        self.assertIsNone(lines[0]['owner_trust'])

    def test_certify_with_wrong_key_file(self):
        self.run_machine('trust', 'add-key', self.files[0])
        self.run_machine('trust', 'add-key', self.files[1])
        code, _ = self.run_machine('trust', 'certify', '--as', self.ids[0].fingerprint,
                                   '--key', self.files[2], self.ids[1].fingerprint)
        self.assertEqual(code, 1)

    def test_read_public_key_forms(self):
        identity = self.ids[0]
        hex_file = self.dir / 'key.hex'
        hex_file.write_text(identity.public_key.hex() + '\n')
        self.assertEqual(read_public_key(hex_file), identity.public_key)
        self.assertEqual(read_public_key(self.files[0]), identity.public_key)

        descriptor = build_descriptor('https://shop.example', identity.onion_address, utc_now())
        armored = self.dir / 'binding.txt'
        armored.write_text(armor(sign_descriptor(descriptor, identity)))
        self.assertEqual(read_public_key(armored), identity.public_key)

        junk = self.dir / 'junk.txt'
        junk.write_text('hello')
        with self.assertRaises(KeyFileError):
            read_public_key(junk)


class TestVerifyCommand(CliTestCase):
    """verify against a loopback demo network"""

    def setUp(self):
        super().setUp()
        self.setup = build_demo(seed=bytes(32))
        demo_trust_store(self.setup, self.store).save()
        self.server = LoopbackServer(self.setup.net).start()
        self.addCleanup(self.server.stop)

    def verify(self, *argv):
        return self.run_machine('verify', *argv, '--simnet-url', self.server.base_url)

    def test_honest_pair(self):
        code, lines = self.verify(self.setup.honest.clearnet_url)
        self.assertEqual(code, 0)
        report = lines[0]
        self.assertEqual(set(report), {'verdict', 'pair', 'signer_fingerprint', 'assurance',
                                       'evidence', 'checked_at'})
        self.assertEqual(report['verdict'], 'Authentic')
        self.assertEqual(report['assurance'], 'Full')
        self.assertEqual(report['pair']['onion_address'], str(self.setup.honest.onion_address))
        self.assertEqual(report['signer_fingerprint'], self.setup.honest.identity.fingerprint)
        self.assertEqual([e['check'] for e in report['evidence']], HONEST_CHECKS)

    def test_onion_entry(self):
        self.assertEqual(self.verify(str(self.setup.honest.onion_address))[0], 0)

    def test_attacked_pair(self):
        code, lines = self.verify(self.setup.attacked.clearnet_url)
        self.assertEqual(code, 22)
        self.assertEqual(lines[0]['verdict'], 'AddressKeyMismatch')

    def test_tor2web_downgrade(self):
        code, lines = self.verify(self.setup.honest.clearnet_url, '--channel', 'tor2web')
        self.assertEqual(code, 11)
        self.assertEqual(lines[0]['assurance'], 'Downgraded')

    def test_untrusted_store(self):
        code, _ = self.run_cli('verify', self.setup.honest.clearnet_url, '--simnet-url',
                               self.server.base_url, '--store', self.dir / 'empty.txt')
        self.assertEqual(code, 10)

    def test_missing_site(self):
        self.assertEqual(self.verify('https://nowhere.example')[0], 24)

    def test_tls_binding(self):
        code, lines = self.verify(self.setup.honest.clearnet_url, '--tls-fp', TLS_FP)
        self.assertEqual(code, 0)
        self.assertEqual(lines[0]['tls_binding'], 'NoClaim')

        identity = generate_identity(bytes([42]) * 32)
        descriptor = build_descriptor('https://tls.example', identity.onion_address, utc_now(),
                                      timedelta(days=30), TLS_FP)
        body = armor(sign_descriptor(descriptor, identity)).encode()
        self.setup.net.register_site('tls.example', WELL_KNOWN_PATH, body)
        self.setup.net.register_site(identity.onion_address, WELL_KNOWN_PATH, body, identity)
        store = TrustStore.load(self.store)
        store.set_owner_trust(store.add_key(identity.public_key), OwnerTrust.ULTIMATE)
        store.save()

        code, lines = self.verify('https://tls.example', '--tls-fp', TLS_FP)
        self.assertEqual(code, 0)
        self.assertEqual(lines[0]['tls_binding'], 'Bound')
        code, lines = self.verify('https://tls.example', '--tls-fp', '00' * 32)
        self.assertEqual(code, 20)
        self.assertEqual(lines[0]['tls_binding'], 'NotBound')

    def test_text_output(self):
        code, text = self.run_cli('verify', self.setup.honest.clearnet_url, '--simnet-url',
                                  self.server.base_url, '--store', self.store)
        self.assertEqual(code, 0)
        self.assertIn('Verdict:   Authentic (exit 0)', text)
        self.assertIn('CrossMatch', text)

    def test_unreachable_simnet(self):
        code, lines = self.run_machine('verify', self.setup.honest.clearnet_url,
                                       '--simnet-url', 'http://127.0.0.1:9')
        self.assertEqual(code, 24)
        self.assertEqual(lines[0]['verdict'], 'Missing')


class TestDemoAndSimnet(CliTestCase):
    """demo and simnet serve"""

    def test_demo(self):
        code, lines = self.run_machine('demo')
        self.assertEqual(code, 0)
        verdicts = [line['verdict'] for line in lines if 'verdict' in line]
        self.assertEqual(verdicts, ['Authentic', 'AddressKeyMismatch'])
        summary = next(line for line in lines if line.get('type') == 'session_summary')
        self.assertEqual(summary['verdicts'], {'AddressKeyMismatch': 1, 'Authentic': 1})

    def test_demo_text(self):
        code, text = self.run_cli('demo')
        self.assertEqual(code, 0)
        self.assertIn('Honest pair authenticated, attacked pair rejected', text)
        self.assertIn('Total verifications: 2', text)

    def test_simnet_serve(self):
        manifest = self.dir / 'sites.json'
        manifest.write_text(json.dumps([{'host': 'shop.example', 'path': '/', 'body': 'hi'}]))
        with mock.patch.object(LoopbackServer, 'serve_forever', side_effect=KeyboardInterrupt):
            code, text = self.run_cli('simnet', 'serve', '--sites', manifest, '--port', 0)
        self.assertEqual(code, 0)
        self.assertIn('Simnet serving 1 documents', text)


class TestNotaryCommands(CliTestCase):
    """notary serve, query and log"""

    def setUp(self):
        super().setUp()
        self.setup = build_demo(seed=bytes(32))
        self.trust = demo_trust_store(self.setup)
        self.pair = SitePair(self.setup.honest.clearnet_url, self.setup.honest.onion_address)

    def notary_log(self, seed, path=None, observations=2):
        log = NotaryLog(generate_identity(bytes([seed]) * 32), path)
        for _ in range(observations):
            log.observe(self.setup.net, self.trust, self.pair)
        return log

    def start_notary(self, log):
        server = make_server('127.0.0.1', 0, create_app(log), threaded=True)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        self.addCleanup(server.server_close)
        self.addCleanup(server.shutdown)
        return f"http://127.0.0.1:{server.server_port}"

    def test_serve_wires_crawler_and_listener(self):
        targets = self.dir / 'targets.json'
        targets.write_text(json.dumps([{'clearnet': self.pair.clearnet_url,
                                        'onion': str(self.pair.onion_address)}]))
        with mock.patch('command_line.cli.serve_notary') as serve:
            code, _ = self.run_machine('notary', 'serve', '--targets', targets, '--port', 9999,
                                       '--interval', 5, '--log', self.dir / 'notary.log')
        self.assertEqual(code, 0)
        log, _, _, loaded_targets, host, port, interval = serve.call_args[0]
        self.assertIsInstance(log, NotaryLog)
        self.assertEqual(loaded_targets, [self.pair])
        self.assertEqual((host, port, interval), ('127.0.0.1', 9999, 5.0))
        self.assertTrue((self.keys / 'notary.json').exists())

    def test_serve_rejects_malformed_targets(self):
        targets = self.dir / 'targets.json'
        for body in ({'clearnet': self.pair.clearnet_url}, [{'clearnet': self.pair.clearnet_url}], ['x']):
            targets.write_text(json.dumps(body))
            with mock.patch('command_line.cli.serve_notary') as serve:
                code, _ = self.run_machine('notary', 'serve', '--targets', targets,
                                           '--log', self.dir / 'notary.log')
            self.assertEqual(code, 1)
            serve.assert_not_called()

    def test_query_agreed(self):
        urls = [self.start_notary(self.notary_log(seed)) for seed in (50, 51)]
        code, lines = self.run_machine('notary', 'query', '--notaries', ','.join(urls),
                                       '--onion', str(self.pair.onion_address))
        self.assertEqual(code, 0)
        histories = [line for line in lines if line['type'] == 'notary_history']
        self.assertEqual(len(histories), 2)
        self.assertTrue(all(h['verified'] for h in histories))
        self.assertEqual(histories[0]['key_change'], 'Stable')
        self.assertEqual([o['verdict'] for o in histories[0]['observations']], ['Authentic'] * 2)
        quorum = lines[-1]
        self.assertEqual(quorum['type'], 'quorum')
        self.assertEqual(quorum['quorum'], 'Agreed')
        self.assertEqual(quorum['signer_fingerprint'], self.setup.honest.identity.fingerprint)

    def test_query_no_quorum_with_unreachable_notary(self):
        urls = [self.start_notary(self.notary_log(50)), 'http://127.0.0.1:9']
        code, lines = self.run_machine('notary', 'query', '--notaries', ','.join(urls),
                                       '--onion', str(self.pair.onion_address), '--quorum', 2)
        self.assertEqual(code, 30)
        self.assertFalse(lines[1]['reachable'])

    def test_query_conflict(self):
        liar = NotaryLog(generate_identity(bytes([52]) * 32))
        liar.append(utc_now(), self.pair.onion_address, self.pair.clearnet_url, 'cd' * 32,
                    self.setup.attacker.fingerprint, VerdictKind.AUTHENTIC)
        urls = [self.start_notary(self.notary_log(50)), self.start_notary(liar)]
        code, lines = self.run_machine('notary', 'query', '--notaries', ','.join(urls),
                                       '--onion', str(self.pair.onion_address), '--quorum', 1)
        self.assertEqual(code, 31)
        self.assertEqual(lines[-1]['quorum'], 'Conflict')

    def test_query_bad_threshold(self):
        url = self.start_notary(self.notary_log(50))
        code, _ = self.run_machine('notary', 'query', '--notaries', url,
                                   '--onion', str(self.pair.onion_address), '--quorum', 2)
        self.assertEqual(code, 1)

    def test_log(self):
        key_file = self.dir / 'notary.json'
        identity = generate_identity(bytes([53]) * 32)
        identity.save(key_file)
        log_file = self.dir / 'notary.log'
        log = NotaryLog(identity, log_file)
        for _ in range(3):
            log.observe(self.setup.net, self.trust, self.pair)

        code, lines = self.run_machine('notary', 'log', '--key', key_file, '--log', log_file)
        self.assertEqual(code, 0)
        self.assertTrue(lines[0]['verified'])
        self.assertEqual(lines[0]['head_seq'], 2)
        self.assertEqual(len(lines[0]['observations']), 3)

        stranger = str(self.setup.attacked.onion_address)
        code, lines = self.run_machine('notary', 'log', '--key', key_file, '--log', log_file,
                                       '--onion', stranger)
        self.assertEqual(code, 0)
        self.assertEqual(lines[0]['observations'], [])

        data = log_file.read_bytes()
        log_file.write_bytes(data.replace(b'seq: 0\n', b'seq: 5\n', 1))
        self.assertEqual(self.run_machine('notary', 'log', '--key', key_file, '--log', log_file)[0], 1)

    def test_log_requires_path(self):
        self.assertEqual(self.run_machine('notary', 'log')[0], 1)


class TestSettings(unittest.TestCase):
    """Flags over environment over config file"""

    def test_precedence(self):
        with tempfile.TemporaryDirectory() as tmp:
            cfg = Path(tmp) / 'config.env'
            cfg.write_text('ONION_BINDING_STORE=/from/file\nONION_BINDING_SKEW_SECONDS=60\n'
                           'ONION_BINDING_FORMAT=machine\n')
            env = {'ONION_BINDING_CONFIG': str(cfg), 'ONION_BINDING_FORMAT': 'text'}
            settings = load_settings({}, env)
            self.assertEqual(settings.store_path, Path('/from/file'))
            self.assertEqual(settings.skew_seconds, 60)
            self.assertEqual(settings.output_format, 'text')

            settings = load_settings({'store': Path('/from/flag'), 'format': None}, env)
            self.assertEqual(settings.store_path, Path('/from/flag'))
            self.assertEqual(settings.output_format, 'text')

    def test_defaults(self):
        with tempfile.TemporaryDirectory() as tmp:
            env = {'ONION_BINDING_CONFIG': str(Path(tmp) / 'none.env'), 'XDG_CONFIG_HOME': tmp}
            with mock.patch.dict(os.environ, {'XDG_CONFIG_HOME': tmp}):
                settings = load_settings({}, env)
            self.assertEqual(settings.store_path, Path(tmp) / 'onion-binding' / 'truststore.txt')
            self.assertEqual(settings.simnet_url, 'http://127.0.0.1:8470')
            self.assertEqual(settings.lifetime_days, 90)
            self.assertEqual(settings.log_level, 'WARNING')
            self.assertIsNone(settings.notary_log)

    def test_invalid_format(self):
        with self.assertRaises(ValueError):
            load_settings({'format': 'xml'}, {'ONION_BINDING_CONFIG': '/nonexistent/config.env'})


if __name__ == '__main__':
    unittest.main(verbosity=2)
