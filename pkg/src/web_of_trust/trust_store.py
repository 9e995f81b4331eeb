"""
Web of Trust Module
Signer keys, owner-assigned trust, key-to-key certifications and validity computation
"""

import base64
import binascii
import logging
import os
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple, Union

from core.crypto import DEFAULT_SCHEME, KEY_SIZE, SignatureScheme, fingerprint
from core.errors import BadCertSignature, InvalidKey, TrustStoreFormatError, UnknownKey
from onion_identity.onion_id import ServiceIdentity

logger = logging.getLogger(__name__)

STORE_HEADER = "onion-binding-truststore: 1"

# classic PGP defaults
COMPLETES_NEEDED = 1
MARGINALS_NEEDED = 3
MAX_CERT_DEPTH = 5


class OwnerTrust(Enum):
    ULTIMATE = "ultimate"
    FULL = "full"
    MARGINAL = "marginal"
    NONE = "none"


class Validity(Enum):
    VALID = "Valid"
    MARGINALLY_VALID = "MarginallyValid"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Certification:
    """A certifier's signature over the certified public key"""
    certifier_fingerprint: str
    signature: bytes


@dataclass
class KeyRecord:
    fingerprint: str
    public_key: bytes
    owner_trust: OwnerTrust = OwnerTrust.NONE
    certifications: Set[Certification] = field(default_factory=set)


# fingerprint -> (owner trust, certifier fingerprints)
TrustGraph = Mapping[str, Tuple[OwnerTrust, FrozenSet[str]]]


def _introducer_counts(subject: str, certifiers: Iterable[str], graph: TrustGraph,
                       introducers: Iterable[str]) -> Tuple[int, int]:
    introducers = set(introducers)
    full = marginal = 0
    for certifier in certifiers:
        if certifier == subject or certifier not in introducers:
            continue
        trust = graph[certifier][0]
        if trust in (OwnerTrust.ULTIMATE, OwnerTrust.FULL):
            full += 1
        elif trust is OwnerTrust.MARGINAL:
            marginal += 1
    return full, marginal


def compute_validity(graph: TrustGraph, completes_needed: int = COMPLETES_NEEDED,
                     marginals_needed: int = MARGINALS_NEEDED,
                     max_depth: int = MAX_CERT_DEPTH) -> Dict[str, Validity]:
    """
    Evaluate validity for every key by iterating outward from the ultimately trusted roots

    A key becomes Valid at depth d when keys already Valid at depth < d, acting as
    introducers, supply enough full or marginal certifications. Iteration stops at
    convergence or at max_depth. Keys left over are MarginallyValid when at least one
    (but too few) marginal introducers within reach certified them.

    Args:
        graph: fingerprint -> (owner trust, certifier fingerprints)

    Returns:
        dict: fingerprint -> Validity
    """
    depth = {fpr: 0 for fpr, (trust, _) in graph.items() if trust is OwnerTrust.ULTIMATE}
    for level in range(1, max_depth + 1):
        introducers = list(depth)
        reached = {}
        for fpr, (_, certifiers) in graph.items():
            if fpr in depth:
                continue
            full, marginal = _introducer_counts(fpr, certifiers, graph, introducers)
            if full >= completes_needed or marginal >= marginals_needed:
                reached[fpr] = level
        if not reached:
            break
        depth.update(reached)

    within_reach = [fpr for fpr, d in depth.items() if d < max_depth]
    result = {}
    for fpr, (_, certifiers) in graph.items():
        if fpr in depth:
            result[fpr] = Validity.VALID
            continue
        _, marginal = _introducer_counts(fpr, certifiers, graph, within_reach)
        result[fpr] = Validity.MARGINALLY_VALID if marginal else Validity.UNKNOWN
    return result


class TrustStore:
    """
    Per-user web-of-trust store

    Single writer, many readers: mutations and snapshots share one lock.
    Certifications whose certifier is not in the store are held pending and
    never contribute to validity.
    """

    def __init__(self, path: Optional[Union[str, Path]] = None,
                 scheme: SignatureScheme = DEFAULT_SCHEME):
        self.path = Path(path) if path else None
        self.scheme = scheme
        self.records: Dict[str, KeyRecord] = {}
        # subject fingerprint -> certifications awaiting their certifier key
        self.pending: Dict[str, Set[Certification]] = {}
        self._lock = threading.RLock()

    def __contains__(self, fpr: str) -> bool:
        return fpr in self.records

    def _require(self, fpr: str) -> KeyRecord:
        record = self.records.get(fpr)
        if record is None:
            raise UnknownKey(f"Key {fpr} is not in the trust store")
        return record

    def add_key(self, public_key: bytes) -> str:
        """
        Add a signer key with owner trust None; adding an existing key is a no-op

        Returns:
            str: The key fingerprint
        """
        if not isinstance(public_key, (bytes, bytearray)) or len(public_key) != KEY_SIZE:
            raise InvalidKey(f"Public key must be exactly {KEY_SIZE} bytes")
        public_key = bytes(public_key)
        fpr = fingerprint(public_key)
        with self._lock:
            if fpr in self.records:
                return fpr
            self.records[fpr] = KeyRecord(fpr, public_key)
            logger.info(f"Added key {fpr}")
            self._promote_pending(fpr)
        return fpr

    def _promote_pending(self, certifier_fpr: str) -> None:
        certifier = self.records[certifier_fpr]
        for subject_fpr, certs in list(self.pending.items()):
            subject = self.records.get(subject_fpr)
            for cert in [c for c in certs if c.certifier_fingerprint == certifier_fpr]:
                certs.discard(cert)
                if subject and self.scheme.verify(certifier.public_key, subject.public_key, cert.signature):
                    subject.certifications.add(cert)
                    logger.info(f"Promoted pending certification of {subject_fpr} by {certifier_fpr}")
                else:
                    logger.warning(f"Dropped pending certification of {subject_fpr} by "
                                   f"{certifier_fpr}: signature does not verify")
            if not certs:
                del self.pending[subject_fpr]

    def set_owner_trust(self, fpr: str, level: OwnerTrust) -> None:
        with self._lock:
            self._require(fpr).owner_trust = OwnerTrust(level)
        logger.info(f"Owner trust of {fpr} set to {OwnerTrust(level).value}")

    def certify(self, certifier: ServiceIdentity, subject_fpr: str) -> Certification:
        """
        Sign the subject's public key with the certifier's secret key and record it

        Args:
            certifier (ServiceIdentity): Keypair of a key present in the store
            subject_fpr (str): Fingerprint of the key being certified

        Returns:
            Certification: The recorded certification
        """
        with self._lock:
            subject = self._require(subject_fpr)
            self._require(certifier.fingerprint)
            cert = Certification(certifier.fingerprint, certifier.sign(subject.public_key))
            subject.certifications.add(cert)
        if certifier.fingerprint == subject_fpr:
            logger.info(f"Recorded self-certification of {subject_fpr}; it does not count toward validity")
        else:
            logger.info(f"{certifier.fingerprint} certified {subject_fpr}")
        return cert

    def import_certification(self, subject_fpr: str, certifier_fpr: str, signature: bytes) -> bool:
        """
        Import an externally supplied certification

        Returns:
            bool: True if recorded, False if held pending an unknown certifier

        Raises:
            UnknownKey: subject not in the store
            BadCertSignature: certifier known and the signature does not verify
        """
        cert = Certification(certifier_fpr, bytes(signature))
        with self._lock:
            subject = self._require(subject_fpr)
            certifier = self.records.get(certifier_fpr)
            if certifier is None:
                self.pending.setdefault(subject_fpr, set()).add(cert)
                logger.warning(f"Certification of {subject_fpr} by unknown key {certifier_fpr} held pending")
                return False
            if not self.scheme.verify(certifier.public_key, subject.public_key, cert.signature):
                raise BadCertSignature(f"Certification of {subject_fpr} by {certifier_fpr} does not verify")
            subject.certifications.add(cert)
        return True

    def remove_key(self, fpr: str) -> None:
        """Remove a key; its certifications of other keys fall back to pending"""
        with self._lock:
            self._require(fpr)
            del self.records[fpr]
            self.pending.pop(fpr, None)
            for record in self.records.values():
                moved = {c for c in record.certifications if c.certifier_fingerprint == fpr}
                if moved:
                    record.certifications -= moved
                    self.pending.setdefault(record.fingerprint, set()).update(moved)
        logger.info(f"Removed key {fpr}")

    def get(self, fpr: str) -> KeyRecord:
        with self._lock:
            record = self._require(fpr)
            return KeyRecord(record.fingerprint, record.public_key, record.owner_trust,
                             set(record.certifications))

    def list_keys(self) -> List[KeyRecord]:
        with self._lock:
            return [self.get(fpr) for fpr in sorted(self.records)]

    def snapshot(self) -> Dict[str, Tuple[OwnerTrust, FrozenSet[str]]]:
        """Consistent copy of the certification graph"""
        with self._lock:
            return {
                fpr: (record.owner_trust,
                      frozenset(c.certifier_fingerprint for c in record.certifications))
                for fpr, record in self.records.items()
            }

    def validities(self) -> Dict[str, Validity]:
        return compute_validity(self.snapshot())

    def key_validity(self, fpr: str) -> Validity:
        """Validity of one key; absent keys are Unknown"""
        return self.validities().get(fpr, Validity.UNKNOWN)

    # Persistence

    def save(self, path: Optional[Union[str, Path]] = None) -> Path:
        path = Path(path) if path else self.path
        if path is None:
            raise ValueError("No trust store path configured")
        with self._lock:
            lines = [STORE_HEADER]
            for fpr in sorted(self.records):
                record = self.records[fpr]
                key_b64 = base64.b64encode(record.public_key).decode("ascii")
                lines.append(f"key: {fpr} {key_b64} {record.owner_trust.value}")
            for fpr in sorted(self.records):
                for cert in sorted(self.records[fpr].certifications, key=lambda c: (c.certifier_fingerprint, c.signature)):
                    lines.append(self._cert_line(fpr, cert))
            for fpr in sorted(self.pending):
                for cert in sorted(self.pending[fpr], key=lambda c: (c.certifier_fingerprint, c.signature)):
                    lines.append(self._cert_line(fpr, cert))
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
        os.replace(tmp, path)
        logger.info(f"Saved trust store with {len(self.records)} keys to {path}")
        return path

    @staticmethod
    def _cert_line(subject_fpr: str, cert: Certification) -> str:
        sig_b64 = base64.b64encode(cert.signature).decode("ascii")
        return f"cert: {subject_fpr} {cert.certifier_fingerprint} {sig_b64}"

    @classmethod
    def load(cls, path: Union[str, Path]) -> "TrustStore":
        """Read a store file; certifications are re-verified on load"""
        path = Path(path)
        store = cls(path)
        lines = path.read_text(encoding="utf-8").splitlines()
        if not lines or lines[0] != STORE_HEADER:
            raise TrustStoreFormatError(f"{path} is not a trust store file")
        certs = []
        try:
            for number, line in enumerate(lines[1:], start=2):
                if not line.strip():
                    continue
                kind, _, rest = line.partition(": ")
                parts = rest.split(" ")
                if kind == "key" and len(parts) == 3:
                    fpr = store.add_key(base64.b64decode(parts[1], validate=True))
                    if fpr != parts[0]:
                        raise TrustStoreFormatError(f"line {number}: fingerprint does not match key")
                    store.records[fpr].owner_trust = OwnerTrust(parts[2])
                elif kind == "cert" and len(parts) == 3:
                    certs.append((parts[0], parts[1], base64.b64decode(parts[2], validate=True)))
                else:
                    raise TrustStoreFormatError(f"line {number}: unrecognized entry")
            for subject_fpr, certifier_fpr, signature in certs:
                store.import_certification(subject_fpr, certifier_fpr, signature)
        except (binascii.Error, ValueError, InvalidKey, UnknownKey, BadCertSignature) as e:
            raise TrustStoreFormatError(f"Cannot load trust store {path}: {e}") from e
        return store

    @classmethod
    def open(cls, path: Union[str, Path]) -> "TrustStore":
        """Load the store at path, or start an empty one bound to it"""
        path = Path(path)
        return cls.load(path) if path.exists() else cls(path)
