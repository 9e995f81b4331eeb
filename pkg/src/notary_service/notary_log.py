"""
Notary Log Module
Append-only, hash-chained, notary-signed history of verification outcomes
"""

import base64
import binascii
import json
import logging
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timedelta
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from binding_descriptor.descriptor import descriptor_digest, validate_clearnet_url
from core.crypto import DEFAULT_SCHEME, ZERO_DIGEST, ZERO_FINGERPRINT, SignatureScheme, digest, is_hex_fingerprint
from core.errors import DescriptorError, LogCorrupted, MalformedAddress
from core.timeutil import Clock, format_rfc3339, normalize_utc, parse_rfc3339, utc_now
from onion_identity.onion_id import OnionAddress, ServiceIdentity, validate_onion_address
from simulated_network.sim_net import Transport
from verification.verifier import VerdictKind, Verifier
from web_of_trust.trust_store import TrustStore

logger = logging.getLogger(__name__)

HEAD_TAG = b"onion-binding-notary-head-v1"
ZERO_DIGEST_HEX = ZERO_DIGEST.hex()
RECORD_BEGIN = "-----BEGIN NOTARY OBSERVATION-----"
RECORD_END = "-----END NOTARY OBSERVATION-----"
OBSERVATION_FIELDS = ("seq", "observed", "onion", "clearnet", "descriptor-digest", "signer", "verdict")


@dataclass(frozen=True)
class SitePair:
    """A clearnet URL and the onion address it should be bound to"""
    clearnet_url: str
    onion_address: OnionAddress


def load_targets(path: Union[str, Path]) -> List[SitePair]:
    """Read a JSON list of {"clearnet": URL, "onion": ADDRESS} crawl targets"""
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON list of targets")
    targets = []
    for index, target in enumerate(data):
        try:
            targets.append(SitePair(validate_clearnet_url(target["clearnet"]),
                                    validate_onion_address(target["onion"])))
        except (KeyError, TypeError, AttributeError) as e:
            raise ValueError(f"{path}: target {index} needs \"clearnet\" and \"onion\" strings") from e
    return targets


@dataclass(frozen=True)
class Observation:
    """One distilled verification outcome"""
    seq: int
    observed_at: datetime
    onion_address: OnionAddress
    clearnet_url: str
    descriptor_digest: str
    signer_fingerprint: str
    verdict: VerdictKind

    def canonical(self) -> bytes:
        lines = [
            f"seq: {self.seq}",
            f"observed: {format_rfc3339(self.observed_at)}",
            f"onion: {self.onion_address}",
            f"clearnet: {self.clearnet_url}",
            f"descriptor-digest: {self.descriptor_digest}",
            f"signer: {self.signer_fingerprint}",
            f"verdict: {self.verdict.value}",
        ]
        return "".join(line + "\n" for line in lines).encode("utf-8")

    @classmethod
    def from_canonical(cls, data: bytes) -> "Observation":
        """Strict inverse of canonical(); any non-canonical input raises LogCorrupted"""
        try:
            text = data.decode("utf-8")
            lines = text[:-1].split("\n") if text.endswith("\n") else None
            if lines is None or len(lines) != len(OBSERVATION_FIELDS):
                raise ValueError("wrong number of lines")
            values = {}
            for line, name in zip(lines, OBSERVATION_FIELDS):
                prefix = f"{name}: "
                if not line.startswith(prefix):
                    raise ValueError(f"expected field {name!r}")
                values[name] = line[len(prefix):]
            observation = cls(
                seq=int(values["seq"]),
                observed_at=parse_rfc3339(values["observed"]),
                onion_address=validate_onion_address(values["onion"]),
                clearnet_url=validate_clearnet_url(values["clearnet"]),
                descriptor_digest=values["descriptor-digest"],
                signer_fingerprint=values["signer"],
                verdict=VerdictKind(values["verdict"]),
            )
        except (UnicodeDecodeError, ValueError, DescriptorError, MalformedAddress) as e:
            raise LogCorrupted(f"Malformed observation record: {e}") from e
        if not (is_hex_fingerprint(observation.descriptor_digest) and is_hex_fingerprint(observation.signer_fingerprint)):
            raise LogCorrupted("Observation digests must be 64 lowercase hex characters")
        if observation.canonical() != data:
            raise LogCorrupted("Observation record is not in canonical form")
        return observation

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seq": self.seq,
            "observed_at": format_rfc3339(self.observed_at),
            "onion_address": str(self.onion_address),
            "clearnet_url": self.clearnet_url,
            "descriptor_digest": self.descriptor_digest,
            "signer_fingerprint": self.signer_fingerprint,
            "verdict": self.verdict.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Observation":
        try:
            return cls(
                seq=int(data["seq"]),
                observed_at=parse_rfc3339(data["observed_at"]),
                onion_address=validate_onion_address(data["onion_address"]),
                clearnet_url=data["clearnet_url"],
                descriptor_digest=data["descriptor_digest"],
                signer_fingerprint=data["signer_fingerprint"],
                verdict=VerdictKind(data["verdict"]),
            )
        except (KeyError, TypeError, ValueError, MalformedAddress) as e:
            raise LogCorrupted(f"Malformed observation: {e}") from e


def chain_hash(previous: bytes, observation: Observation) -> bytes:
    """entry_hash[i] = digest(entry_hash[i-1] || canonical(entries[i]))"""
    return digest(previous + observation.canonical())


@dataclass(frozen=True)
class SignedHead:
    """Notary signature over the latest entry hash and its seq (-1 for an empty log)"""
    seq: int
    entry_hash: bytes
    signature: bytes

    def to_dict(self, notary_public_key: bytes) -> Dict[str, Any]:
        return {
            "seq": self.seq,
            "entry_hash": self.entry_hash.hex(),
            "signature": base64.b64encode(self.signature).decode("ascii"),
            "notary_public_key": notary_public_key.hex(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SignedHead":
        try:
            return cls(int(data["seq"]), bytes.fromhex(data["entry_hash"]),
                       base64.b64decode(data["signature"], validate=True))
        except (KeyError, TypeError, ValueError, binascii.Error) as e:
            raise LogCorrupted(f"Malformed log head: {e}") from e


def head_message(seq: int, entry_hash: bytes) -> bytes:
    return HEAD_TAG + entry_hash + seq.to_bytes(8, "big", signed=True)


@dataclass(frozen=True)
class LogCheck:
    """Outcome of verify_log: accepted, or rejected at the earliest inconsistent seq"""
    accepted: bool
    first_bad_seq: Optional[int] = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.accepted


def verify_log(entries: Sequence[Observation], hashes: Sequence[bytes], head: SignedHead,
               notary_public_key: bytes, scheme: SignatureScheme = DEFAULT_SCHEME) -> LogCheck:
    """
    Recompute the chain and check the signed head

    Args:
        entries: Observations in log order
        hashes: Stored per-entry hashes
        head (SignedHead): Signed head
        notary_public_key (bytes): The notary's public key

    Returns:
        LogCheck: accept, or reject naming the earliest inconsistent entry
    """
    previous = ZERO_DIGEST
    for i, entry in enumerate(entries):
        if entry.seq != i:
            return LogCheck(False, i, f"entry at position {i} carries seq {entry.seq}")
        computed = chain_hash(previous, entry)
        if i >= len(hashes) or hashes[i] != computed:
            return LogCheck(False, i, f"entry {i} does not match its chain hash")
        previous = computed
    if len(hashes) > len(entries):
        return LogCheck(False, len(entries), "more hashes than entries")

    last_seq = len(entries) - 1
    if not scheme.verify(notary_public_key, head_message(head.seq, head.entry_hash), head.signature):
        return LogCheck(False, min(max(head.seq, 0), len(entries)), "head signature does not verify")
    if head.seq > last_seq:
        return LogCheck(False, last_seq + 1, f"log truncated: head covers seq {head.seq}")
    if head.seq < last_seq:
        return LogCheck(False, head.seq + 1, f"entries after seq {head.seq} are not covered by the head")
    if head.entry_hash != previous:
        return LogCheck(False, max(last_seq, 0), "head hash does not match the chain")
    return LogCheck(True)


@dataclass(frozen=True)
class HistoryEntry:
    """An observation with the chain hashes needed to check it in isolation"""
    observation: Observation
    previous_hash: bytes
    entry_hash: bytes

    def to_dict(self) -> Dict[str, Any]:
        data = self.observation.to_dict()
        data["previous_hash"] = self.previous_hash.hex()
        data["entry_hash"] = self.entry_hash.hex()
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "HistoryEntry":
        try:
            return cls(Observation.from_dict(data), bytes.fromhex(data["previous_hash"]),
                       bytes.fromhex(data["entry_hash"]))
        except (KeyError, TypeError, ValueError) as e:
            raise LogCorrupted(f"Malformed history entry: {e}") from e


def verify_history(history: Sequence[HistoryEntry], head: SignedHead, notary_public_key: bytes,
                   scheme: SignatureScheme = DEFAULT_SCHEME) -> LogCheck:
    """Check each entry's link hash, the signed head, and the head hash if it is the latest entry"""
    if not scheme.verify(notary_public_key, head_message(head.seq, head.entry_hash), head.signature):
        return LogCheck(False, None, "head signature does not verify")
    for item in history:
        if item.observation.seq > head.seq:
            return LogCheck(False, item.observation.seq, "entry is newer than the signed head")
        if digest(item.previous_hash + item.observation.canonical()) != item.entry_hash:
            return LogCheck(False, item.observation.seq, "entry does not match its chain hash")
        if item.observation.seq == head.seq and item.entry_hash != head.entry_hash:
            return LogCheck(False, item.observation.seq, "latest entry does not match the head")
    return LogCheck(True)


class KeyChangeKind(Enum):
    STABLE = "Stable"
    KEY_CHANGED = "KeyChanged"
    NEW_SERVICE = "NewService"


@dataclass(frozen=True)
class KeyChange:
    kind: KeyChangeKind
    at_seq: Optional[int] = None


def detect_key_change(history: Sequence[Observation]) -> KeyChange:
    """
    Flag the first observation whose signer differs from the previous non-zero signer

    Returns:
        KeyChange: NewService (empty), KeyChanged(at_seq) or Stable
    """
    if not history:
        return KeyChange(KeyChangeKind.NEW_SERVICE)
    previous = None
    for observation in history:
        if observation.signer_fingerprint == ZERO_FINGERPRINT:
            continue
        if previous is not None and observation.signer_fingerprint != previous:
            return KeyChange(KeyChangeKind.KEY_CHANGED, observation.seq)
        previous = observation.signer_fingerprint
    return KeyChange(KeyChangeKind.STABLE)


def staleness(observation: Observation, now: datetime) -> timedelta:
    """Age of an observation; exposed to clients, never judged here"""
    return normalize_utc(now) - observation.observed_at


class NotaryLog:
    """
    A notary's append-only log

    Appends are atomic under a lock: the entry, its chain hash and the re-signed
    head change together. Readers get consistent snapshots.

    Args:
        identity (ServiceIdentity): Notary signing key
        path: Optional log file; the signed head is kept in a '.head' sidecar
    """

    def __init__(self, identity: ServiceIdentity, path: Optional[Union[str, Path]] = None):
        self.identity = identity
        self.path = Path(path) if path else None
        self.entries: List[Observation] = []
        self.hashes: List[bytes] = []
        self._lock = threading.RLock()
        self.head = self._sign_head(-1, ZERO_DIGEST)

    @property
    def notary_public_key(self) -> bytes:
        return self.identity.public_key

    @property
    def head_path(self) -> Optional[Path]:
        return self.path.with_name(self.path.name + ".head") if self.path else None

    def _sign_head(self, seq: int, entry_hash: bytes) -> SignedHead:
        return SignedHead(seq, entry_hash, self.identity.sign(head_message(seq, entry_hash)))

    def append(self, observed_at: datetime, onion_address: OnionAddress, clearnet_url: str,
               descriptor_digest: str, signer_fingerprint: str, verdict: VerdictKind) -> Observation:
        """Append an observation, assigning the next seq and re-signing the head"""
        with self._lock:
            observation = Observation(len(self.entries), normalize_utc(observed_at), onion_address,
                                      clearnet_url, descriptor_digest, signer_fingerprint, verdict)
            previous = self.hashes[-1] if self.hashes else ZERO_DIGEST
            entry_hash = chain_hash(previous, observation)
            head = self._sign_head(observation.seq, entry_hash)
            if self.path is not None:
                self._persist(observation, entry_hash, head)
            self.entries.append(observation)
            self.hashes.append(entry_hash)
            self.head = head
        logger.info(f"Notary observation {observation.seq}: {onion_address} {verdict.value}")
        return observation

    def observe(self, net: Transport, store: TrustStore, pair: SitePair,
                clock: Clock = utc_now) -> Observation:
        """
        Verify a pair from its clearnet side and record the distilled outcome

        Verification failures are recorded, never raised.
        """
        report = Verifier(net, store, clock).verify_pair(pair.clearnet_url)
        verdict = report.verdict
        if verdict in (VerdictKind.AUTHENTIC, VerdictKind.SELF_CONSISTENT_UNTRUSTED,
                       VerdictKind.CHANNEL_DOWNGRADED) and report.onion_address != str(pair.onion_address):
            verdict = VerdictKind.MISMATCH
        if report.descriptor is not None and verdict is not VerdictKind.MISSING:
            digest_hex = descriptor_digest(report.descriptor.descriptor)
        else:
            digest_hex = ZERO_DIGEST_HEX
        return self.append(report.checked_at, pair.onion_address, pair.clearnet_url,
                           digest_hex, report.signer_fingerprint, verdict)

    def record_failure(self, pair: SitePair, observed_at: datetime) -> Observation:
        """Record a target that could not be checked at all"""
        return self.append(observed_at, pair.onion_address, pair.clearnet_url,
                           ZERO_DIGEST_HEX, ZERO_FINGERPRINT, VerdictKind.MISSING)

    def snapshot(self) -> Tuple[List[Observation], List[bytes], SignedHead]:
        with self._lock:
            return list(self.entries), list(self.hashes), self.head

    def verify(self) -> LogCheck:
        entries, hashes, head = self.snapshot()
        return verify_log(entries, hashes, head, self.notary_public_key)

    def history_entries(self, onion_address: OnionAddress) -> List[HistoryEntry]:
        entries, hashes, _ = self.snapshot()
        return [
            HistoryEntry(obs, hashes[i - 1] if i else ZERO_DIGEST, hashes[i])
            for i, obs in enumerate(entries)
            if obs.onion_address == onion_address
        ]

    # Persistence

    @staticmethod
    def _record(observation: Observation, entry_hash: bytes) -> bytes:
        return (
            f"{RECORD_BEGIN}\n".encode("ascii")
            + observation.canonical()
            + f"entry-hash: {entry_hash.hex()}\n{RECORD_END}\n".encode("ascii")
        )

    def _persist(self, observation: Observation, entry_hash: bytes, head: SignedHead) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "ab") as f:
            f.write(self._record(observation, entry_hash))
            f.flush()
            os.fsync(f.fileno())
        self._write_head(head)

    def _write_head(self, head: SignedHead) -> None:
        tmp = self.head_path.with_name(self.head_path.name + ".tmp")
        tmp.write_text(json.dumps(head.to_dict(self.notary_public_key), indent=2) + "\n", encoding="utf-8")
        os.replace(tmp, self.head_path)

    @classmethod
    def open(cls, identity: ServiceIdentity, path: Union[str, Path]) -> "NotaryLog":
        """
        Load a log file, dropping a torn final record left by a crash mid-append

        Raises:
            LogCorrupted: a record other than the last is damaged, or the head
                sidecar is not signed by this notary or covers missing entries
        """
        log = cls(identity, path)
        if not log.path.exists():
            return log
        data = log.path.read_bytes()
        records = data.split(f"{RECORD_END}\n".encode("ascii"))
        tail = records.pop()
        good_length = 0
        previous = ZERO_DIGEST
        for index, chunk in enumerate(records):
            try:
                observation, stored = cls._parse_record(chunk)
                if observation.seq != index or chain_hash(previous, observation) != stored:
                    raise LogCorrupted(f"record {index} does not chain")
            except LogCorrupted:
                if index == len(records) - 1 and not tail:
                    logger.warning(f"Dropping torn final record {index} of {log.path}")
                    break
                raise
            log.entries.append(observation)
            log.hashes.append(stored)
            previous = stored
            good_length += len(chunk) + len(RECORD_END) + 1
        if good_length != len(data):
            logger.warning(f"Truncating {log.path} to {good_length} bytes after torn append")
            with open(log.path, "r+b") as f:
                f.truncate(good_length)

        last_seq = len(log.entries) - 1
        if log.head_path.exists():
            try:
                stored_head = SignedHead.from_dict(json.loads(log.head_path.read_text(encoding="utf-8")))
            except json.JSONDecodeError as e:
                raise LogCorrupted(f"Unreadable head file {log.head_path}: {e}") from e
            if not identity.verify(head_message(stored_head.seq, stored_head.entry_hash), stored_head.signature):
                raise LogCorrupted(f"Head of {log.path} is not signed by this notary")
            if stored_head.seq > last_seq:
                raise LogCorrupted(f"Head of {log.path} covers seq {stored_head.seq} beyond the log")
            if stored_head.seq >= 0 and log.hashes[stored_head.seq] != stored_head.entry_hash:
                raise LogCorrupted(f"Head of {log.path} does not match entry {stored_head.seq}")
        log.head = log._sign_head(last_seq, log.hashes[-1] if log.hashes else ZERO_DIGEST)
        log._write_head(log.head)
        logger.info(f"Opened notary log {log.path} with {len(log.entries)} entries")
        return log

    @staticmethod
    def _parse_record(chunk: bytes) -> Tuple[Observation, bytes]:
        begin = f"{RECORD_BEGIN}\n".encode("ascii")
        if not chunk.startswith(begin):
            raise LogCorrupted("record does not start with the BEGIN marker")
        body = chunk[len(begin):]
        payload, sep, hash_line = body.rpartition(b"entry-hash: ")
        if not sep or not hash_line.endswith(b"\n"):
            raise LogCorrupted("record has no entry-hash line")
        try:
            stored = bytes.fromhex(hash_line[:-1].decode("ascii"))
        except (UnicodeDecodeError, ValueError) as e:
            raise LogCorrupted(f"bad entry-hash: {e}") from e
        return Observation.from_canonical(payload), stored


def query_history(log: NotaryLog, onion_address: Union[OnionAddress, str]) -> List[Observation]:
    """All observations of one onion address in ascending seq; empty if unseen"""
    if not isinstance(onion_address, OnionAddress):
        onion_address = validate_onion_address(onion_address)
    return [item.observation for item in log.history_entries(onion_address)]


def observe(log: NotaryLog, net: Transport, store: TrustStore, pair: SitePair,
            clock: Clock = utc_now) -> Observation:
    return log.observe(net, store, pair, clock)
