"""
Tests for the web-of-trust store and validity computation
"""

import base64
import functools
import os
import random
import sys
import tempfile
import unittest
from pathlib import Path

# Add src directory to path
sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'src'))

from core.errors import BadCertSignature, InvalidKey, TrustStoreFormatError, UnknownKey
from onion_identity.onion_id import generate_identity
from web_of_trust.trust_store import (
    MAX_CERT_DEPTH,
    OwnerTrust,
    TrustStore,
    Validity,
    compute_validity,
)

RANK = {Validity.UNKNOWN: 0, Validity.MARGINALLY_VALID: 1, Validity.VALID: 2}


def identity(n):
    return generate_identity(bytes([n]) * 32)


def reference_validity(graph):
    """Recursive evaluation of the same rule, used as an independent check"""

    @functools.lru_cache(maxsize=None)
    def valid_within(fpr, depth):
        trust, certifiers = graph[fpr]
        if trust is OwnerTrust.ULTIMATE:
            return True
        if depth == 0:
            return False
        full = marginal = 0
        for c in certifiers:
            if c == fpr or c not in graph or not valid_within(c, depth - 1):
                continue
            if graph[c][0] in (OwnerTrust.ULTIMATE, OwnerTrust.FULL):
                full += 1
            elif graph[c][0] is OwnerTrust.MARGINAL:
                marginal += 1
        return full >= 1 or marginal >= 3

    result = {}
    for fpr, (_, certifiers) in graph.items():
        if valid_within(fpr, MAX_CERT_DEPTH):
            result[fpr] = Validity.VALID
        elif any(c != fpr and c in graph and graph[c][0] is OwnerTrust.MARGINAL
                 and valid_within(c, MAX_CERT_DEPTH - 1) for c in certifiers):
            result[fpr] = Validity.MARGINALLY_VALID
        else:
            result[fpr] = Validity.UNKNOWN
    return result


def random_graph(rng, max_keys=6, edge_probability=0.35):
    keys = [f"k{i}" for i in range(rng.randint(1, max_keys))]
    trusts = list(OwnerTrust)
    graph = {}
    for k in keys:
        certifiers = frozenset(c for c in keys if rng.random() < edge_probability)
        graph[k] = (rng.choice(trusts), certifiers)
    return graph


class TestTrustStoreBasics(unittest.TestCase):
    """Key management and owner trust"""

    def setUp(self):
        self.store = TrustStore()
        self.alice = identity(1)

    def test_add_key_is_idempotent(self):
        fpr = self.store.add_key(self.alice.public_key)
        self.store.set_owner_trust(fpr, OwnerTrust.FULL)
        self.assertEqual(self.store.add_key(self.alice.public_key), fpr)
        self.assertEqual(len(self.store.list_keys()), 1)
        self.assertEqual(self.store.get(fpr).owner_trust, OwnerTrust.FULL)

    def test_fingerprint_oracle(self):
        fpr = self.store.add_key(self.alice.public_key)
        self.assertEqual(fpr, "34750f98bd59fcfc946da45aaabe933be154a4b5094e1c4abf42866505f3c97e")
        self.assertIn(fpr, self.store)

    def test_set_owner_trust(self):
        fpr = self.store.add_key(self.alice.public_key)
        self.assertEqual(self.store.get(fpr).owner_trust, OwnerTrust.NONE)
        self.store.set_owner_trust(fpr, OwnerTrust.FULL)
        self.assertEqual(self.store.get(fpr).owner_trust, OwnerTrust.FULL)

    def test_unknown_key(self):
        with self.assertRaises(UnknownKey):
            self.store.set_owner_trust("00" * 32, OwnerTrust.FULL)
        with self.assertRaises(UnknownKey):
            self.store.get("00" * 32)
        with self.assertRaises(UnknownKey):
            self.store.remove_key("00" * 32)
        self.assertEqual(self.store.key_validity("00" * 32), Validity.UNKNOWN)

    def test_wrong_size_key(self):
        with self.assertRaises(InvalidKey):
            self.store.add_key(b"\x00" * 31)

    def test_get_returns_copy(self):
        fpr = self.store.add_key(self.alice.public_key)
        self.store.get(fpr).certifications.add(None)
        self.assertEqual(self.store.get(fpr).certifications, set())


class TestValidity(unittest.TestCase):
    """Validity through the store, using real certifications"""

    def setUp(self):
        self.store = TrustStore()
        self.ids = [identity(n) for n in range(1, 10)]
        self.fprs = [self.store.add_key(i.public_key) for i in self.ids]

    def test_ultimate_is_valid(self):
        root = self.fprs[0]
        self.store.set_owner_trust(root, OwnerTrust.ULTIMATE)
        self.assertEqual(self.store.key_validity(root), Validity.VALID)

    def test_untrusted_uncertified_is_unknown(self):
        self.assertEqual(self.store.key_validity(self.fprs[1]), Validity.UNKNOWN)

    def test_root_certifies_key(self):
        root, a = self.fprs[0], self.fprs[1]
        self.store.set_owner_trust(root, OwnerTrust.ULTIMATE)
        self.store.certify(self.ids[0], a)
        self.assertEqual(self.store.key_validity(a), Validity.VALID)

    def test_three_marginals_make_valid(self):
        root = self.fprs[0]
        self.store.set_owner_trust(root, OwnerTrust.ULTIMATE)
        marginals = self.fprs[1:4]
        target = self.fprs[4]
        for m in marginals:
            self.store.certify(self.ids[0], m)
            self.store.set_owner_trust(m, OwnerTrust.MARGINAL)
        for i in (1, 2):
            self.store.certify(self.ids[i], target)
        self.assertEqual(self.store.key_validity(target), Validity.MARGINALLY_VALID)
        self.store.certify(self.ids[3], target)
        self.assertEqual(self.store.key_validity(target), Validity.VALID)

    def test_chain_depth_limit(self):
        # root -> k1 -> ... -> k6, every link fully trusted
        self.store.set_owner_trust(self.fprs[0], OwnerTrust.ULTIMATE)
        for i in range(1, 7):
            self.store.certify(self.ids[i - 1], self.fprs[i])
            self.store.set_owner_trust(self.fprs[i], OwnerTrust.FULL)
        validity = self.store.validities()
        for i in range(0, 6):
            self.assertEqual(validity[self.fprs[i]], Validity.VALID, i)
        self.assertEqual(validity[self.fprs[6]], Validity.UNKNOWN)

    def test_untrusted_valid_key_introduces_nobody(self):
        root, a, b = self.fprs[:3]
        self.store.set_owner_trust(root, OwnerTrust.ULTIMATE)
        self.store.certify(self.ids[0], a)
        self.store.certify(self.ids[1], b)
        self.assertEqual(self.store.key_validity(a), Validity.VALID)
        self.assertEqual(self.store.key_validity(b), Validity.UNKNOWN)

    def test_self_certification_is_ignored(self):
        a = self.fprs[1]
        self.store.set_owner_trust(a, OwnerTrust.FULL)
        self.store.certify(self.ids[1], a)
        self.assertEqual(len(self.store.get(a).certifications), 1)
        self.assertEqual(self.store.key_validity(a), Validity.UNKNOWN)

    def test_certification_verifies(self):
        cert = self.store.certify(self.ids[0], self.fprs[1])
        self.assertTrue(self.ids[0].verify(self.ids[1].public_key, cert.signature))
        self.assertEqual(cert.certifier_fingerprint, self.fprs[0])

    def test_certify_requires_both_keys(self):
        outsider = identity(99)
        with self.assertRaises(UnknownKey):
            self.store.certify(outsider, self.fprs[0])
        with self.assertRaises(UnknownKey):
            self.store.certify(self.ids[0], outsider.fingerprint)


class TestImportCertification(unittest.TestCase):
    """Externally supplied certifications"""

    def setUp(self):
        self.store = TrustStore()
        self.root, self.subject = identity(1), identity(2)
        self.root_fpr = self.store.add_key(self.root.public_key)
        self.subject_fpr = self.store.add_key(self.subject.public_key)
        self.store.set_owner_trust(self.root_fpr, OwnerTrust.ULTIMATE)

    def test_valid_import(self):
        signature = self.root.sign(self.subject.public_key)
        self.assertTrue(self.store.import_certification(self.subject_fpr, self.root_fpr, signature))
        self.assertEqual(self.store.key_validity(self.subject_fpr), Validity.VALID)

    def test_forged_import_rejected(self):
        forger = identity(3)
        forged = forger.sign(self.subject.public_key)
        with self.assertRaises(BadCertSignature):
            self.store.import_certification(self.subject_fpr, self.root_fpr, forged)
        self.assertEqual(self.store.key_validity(self.subject_fpr), Validity.UNKNOWN)

    def test_signature_over_other_key_rejected(self):
        wrong = self.root.sign(identity(3).public_key)
        with self.assertRaises(BadCertSignature):
            self.store.import_certification(self.subject_fpr, self.root_fpr, wrong)

    def test_unknown_subject(self):
        with self.assertRaises(UnknownKey):
            self.store.import_certification("11" * 32, self.root_fpr, b"\x00" * 64)

    def test_pending_certifier_promoted_when_added(self):
        introducer = identity(4)
        signature = introducer.sign(self.subject.public_key)
        self.assertFalse(self.store.import_certification(
            self.subject_fpr, introducer.fingerprint, signature))
        self.assertEqual(self.store.get(self.subject_fpr).certifications, set())

        fpr = self.store.add_key(introducer.public_key)
        self.assertEqual(len(self.store.get(self.subject_fpr).certifications), 1)
        self.assertEqual(self.store.pending, {})

        self.store.certify(self.root, fpr)
        self.store.set_owner_trust(fpr, OwnerTrust.FULL)
        self.assertEqual(self.store.key_validity(self.subject_fpr), Validity.VALID)

    def test_bad_pending_certification_dropped(self):
        introducer = identity(4)
        bogus = identity(5).sign(self.subject.public_key)
        self.store.import_certification(self.subject_fpr, introducer.fingerprint, bogus)
        self.store.add_key(introducer.public_key)
        self.assertEqual(self.store.get(self.subject_fpr).certifications, set())
        self.assertEqual(self.store.pending, {})


class TestComputeValidity(unittest.TestCase):
    """Validity over random certification graphs"""

    def test_matches_reference_on_random_graphs(self):
        rng = random.Random(20240601)
        for _ in range(2500):
            graph = random_graph(rng)
            self.assertEqual(compute_validity(graph), reference_validity(graph), graph)

    def test_matches_reference_on_dense_marginal_graphs(self):
        rng = random.Random(7)
        for _ in range(500):
            keys = [f"k{i}" for i in range(6)]
            graph = {
                k: (rng.choice([OwnerTrust.MARGINAL, OwnerTrust.MARGINAL, OwnerTrust.ULTIMATE,
                                OwnerTrust.NONE]),
                    frozenset(c for c in keys if rng.random() < 0.6))
                for k in keys
            }
            self.assertEqual(compute_validity(graph), reference_validity(graph), graph)

    def test_adding_certifications_never_lowers_validity(self):
        rng = random.Random(11)
        for _ in range(1000):
            graph = random_graph(rng)
            before = compute_validity(graph)
            subject = rng.choice(list(graph))
            certifier = rng.choice(list(graph))
            trust, certifiers = graph[subject]
            grown = dict(graph)
            grown[subject] = (trust, certifiers | {certifier})
            after = compute_validity(grown)
            for fpr in graph:
                self.assertGreaterEqual(RANK[after[fpr]], RANK[before[fpr]], (graph, subject, certifier))

    def test_certifier_outside_graph_is_ignored(self):
        graph = {"a": (OwnerTrust.NONE, frozenset({"ghost"}))}
        self.assertEqual(compute_validity(graph), {"a": Validity.UNKNOWN})

    def test_store_agrees_with_graph_evaluation(self):
        rng = random.Random(3)
        ids = [identity(n) for n in range(1, 7)]
        for _ in range(30):
            store = TrustStore()
            fprs = [store.add_key(i.public_key) for i in ids]
            for fpr in fprs:
                store.set_owner_trust(fpr, rng.choice(list(OwnerTrust)))
            for i, certifier in enumerate(ids):
                for fpr in fprs:
                    if rng.random() < 0.3:
                        store.certify(certifier, fpr)
            self.assertEqual(store.validities(), reference_validity(store.snapshot()))


class TestRemovalAndPersistence(unittest.TestCase):
    """Key removal and the store file"""

    def build(self, store, ids, trusts, edges):
        fprs = [store.add_key(i.public_key) for i in ids]
        for fpr, trust in zip(fprs, trusts):
            store.set_owner_trust(fpr, trust)
        for certifier, subject in edges:
            store.certify(ids[certifier], fprs[subject])
        return fprs

    def test_removal_matches_fresh_evaluation(self):
        rng = random.Random(5)
        ids = [identity(n) for n in range(1, 7)]
        for _ in range(20):
            trusts = [rng.choice(list(OwnerTrust)) for _ in ids]
            edges = [(c, s) for c in range(6) for s in range(6) if rng.random() < 0.35]
            victim = rng.randrange(6)

            store = TrustStore()
            fprs = self.build(store, ids, trusts, edges)
            store.remove_key(fprs[victim])

            keep = [i for i in range(6) if i != victim]
            fresh = TrustStore()
            self.build(fresh, [ids[i] for i in keep], [trusts[i] for i in keep],
                       [(keep.index(c), keep.index(s)) for c, s in edges
                        if c != victim and s != victim])
            self.assertEqual(store.validities(), fresh.validities())
            self.assertNotIn(fprs[victim], store.validities())

    def test_removed_certifier_comes_back(self):
        store = TrustStore()
        root, a = identity(1), identity(2)
        root_fpr = store.add_key(root.public_key)
        a_fpr = store.add_key(a.public_key)
        store.set_owner_trust(root_fpr, OwnerTrust.ULTIMATE)
        store.certify(root, a_fpr)
        store.remove_key(root_fpr)
        self.assertEqual(store.key_validity(a_fpr), Validity.UNKNOWN)
        self.assertIn(a_fpr, store.pending)

        store.add_key(root.public_key)
        store.set_owner_trust(root_fpr, OwnerTrust.ULTIMATE)
        self.assertEqual(store.key_validity(a_fpr), Validity.VALID)

    def test_save_and_load(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "trust" / "store.txt"
            store = TrustStore(path)
            ids = [identity(n) for n in range(1, 6)]
            self.build(store, ids,
                       [OwnerTrust.ULTIMATE, OwnerTrust.MARGINAL, OwnerTrust.MARGINAL,
                        OwnerTrust.FULL, OwnerTrust.NONE],
                       [(0, 1), (0, 2), (1, 4), (2, 4), (0, 3), (3, 3)])
            outsider = identity(9)
            store.import_certification(ids[4].fingerprint, outsider.fingerprint,
                                       outsider.sign(ids[4].public_key))
            store.save()

            loaded = TrustStore.load(path)
            self.assertEqual(loaded.snapshot(), store.snapshot())
            self.assertEqual(loaded.validities(), store.validities())
            self.assertEqual(loaded.pending, store.pending)
            self.assertEqual(loaded.key_validity(ids[4].fingerprint), Validity.MARGINALLY_VALID)

    def test_open_missing_file_is_empty(self):
        with tempfile.TemporaryDirectory() as tmp:
            store = TrustStore.open(Path(tmp) / "absent.txt")
            self.assertEqual(store.list_keys(), [])

    def test_save_without_path(self):
        with self.assertRaises(ValueError):
            TrustStore().save()

    def test_load_rejects_bad_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "store.txt"
            path.write_text("not a store\n")
            with self.assertRaises(TrustStoreFormatError):
                TrustStore.load(path)

            store = TrustStore(path)
            a, b = identity(1), identity(2)
            store.add_key(a.public_key)
            store.add_key(b.public_key)
            store.certify(a, b.fingerprint)
            store.save()
            text = path.read_text()

            path.write_text(text.replace(" none\n", " sometimes\n", 1))
            with self.assertRaises(TrustStoreFormatError):
                TrustStore.load(path)

            path.write_text(text + "bogus: line\n")
            with self.assertRaises(TrustStoreFormatError):
                TrustStore.load(path)

            forged = identity(3).sign(b.public_key)
            cert_line = [line for line in text.splitlines() if line.startswith("cert: ")][0]
            prefix = cert_line.rsplit(" ", 1)[0]
            path.write_text(text.replace(cert_line, prefix + " " + base64.b64encode(forged).decode()))
            with self.assertRaises(TrustStoreFormatError):
                TrustStore.load(path)


if __name__ == '__main__':
    unittest.main(verbosity=2)
