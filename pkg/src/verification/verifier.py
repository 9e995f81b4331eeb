"""
Verifier Module
End-to-end verification of a clearnet/onion pair from its well-known binding descriptors
"""

import logging
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Tuple
from urllib.parse import urlsplit

from binding_descriptor.descriptor import (
    WELL_KNOWN_PATH,
    SignedBindingDescriptor,
    canonical_encode,
    parse_armored,
    verify_signature,
)
from core.crypto import ZERO_FINGERPRINT
from core.errors import (
    AddressError,
    DescriptorError,
    DirectorySelfAuthFailure,
    NetworkError,
)
from core.timeutil import Clock, format_rfc3339, normalize_utc, utc_now
from onion_identity.onion_id import (
    OnionAddress,
    derive_onion_address,
    is_onion_host,
    validate_onion_address,
)
from simulated_network.sim_net import Channel, Document, Transport, gateway_url
from web_of_trust.trust_store import TrustStore, Validity

logger = logging.getLogger(__name__)

DEFAULT_SKEW = timedelta(minutes=5)


class VerdictKind(Enum):
    AUTHENTIC = "Authentic"
    SELF_CONSISTENT_UNTRUSTED = "SelfConsistentUntrusted"
    CHANNEL_DOWNGRADED = "ChannelDowngraded"
    MISMATCH = "Mismatch"
    BAD_SIGNATURE = "BadSignature"
    ADDRESS_KEY_MISMATCH = "AddressKeyMismatch"
    EXPIRED = "Expired"
    MISSING = "Missing"


# most severe first
FAILURE_SEVERITY = (
    VerdictKind.MISSING,
    VerdictKind.BAD_SIGNATURE,
    VerdictKind.MISMATCH,
    VerdictKind.ADDRESS_KEY_MISMATCH,
    VerdictKind.EXPIRED,
)

EXIT_CODES = {
    VerdictKind.AUTHENTIC: 0,
    VerdictKind.SELF_CONSISTENT_UNTRUSTED: 10,
    VerdictKind.CHANNEL_DOWNGRADED: 11,
    VerdictKind.MISMATCH: 20,
    VerdictKind.BAD_SIGNATURE: 21,
    VerdictKind.ADDRESS_KEY_MISMATCH: 22,
    VerdictKind.EXPIRED: 23,
    VerdictKind.MISSING: 24,
}


class Assurance(Enum):
    FULL = "Full"
    DOWNGRADED = "Downgraded"


class CheckStatus(Enum):
    PASS = "pass"
    FAIL = "fail"
    SKIP = "skip"


class TlsBinding(Enum):
    BOUND = "Bound"
    NOT_BOUND = "NotBound"
    NO_CLAIM = "NoClaim"


# check name -> verdict when that check fails; Trust failures only lower the verdict
CHECK_FAILURE_VERDICTS = {
    "FetchEntry": VerdictKind.MISSING,
    "FetchCounterpart": VerdictKind.MISSING,
    "ParseEntry": VerdictKind.BAD_SIGNATURE,
    "ParseCounterpart": VerdictKind.BAD_SIGNATURE,
    "SignatureValid": VerdictKind.BAD_SIGNATURE,
    "CrossMatch": VerdictKind.MISMATCH,
    "SelfAuth": VerdictKind.ADDRESS_KEY_MISMATCH,
    "Freshness": VerdictKind.EXPIRED,
}


@dataclass(frozen=True)
class CheckOutcome:
    check: str
    status: CheckStatus
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status is CheckStatus.PASS


@dataclass
class VerificationReport:
    """Verdict, assurance and the evidence behind them for one site pair"""
    verdict: VerdictKind
    clearnet_url: Optional[str]
    onion_address: Optional[str]
    signer_fingerprint: str
    assurance: Assurance
    evidence: List[CheckOutcome]
    checked_at: datetime
    descriptor: Optional[SignedBindingDescriptor] = field(default=None, compare=False, repr=False)

    @property
    def pair(self) -> Tuple[Optional[str], Optional[str]]:
        return self.clearnet_url, self.onion_address

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

    def check(self, name: str) -> Optional[CheckOutcome]:
        return next((c for c in self.evidence if c.check == name), None)

    def to_dict(self) -> Dict[str, Any]:
        """Machine schema (one JSON object per report)"""
        return {
            "verdict": self.verdict.value,
            "pair": {"clearnet_url": self.clearnet_url, "onion_address": self.onion_address},
            "signer_fingerprint": self.signer_fingerprint,
            "assurance": self.assurance.value,
            "evidence": [
                {"check": c.check, "status": c.status.value, "detail": c.detail}
                for c in self.evidence
            ],
            "checked_at": format_rfc3339(self.checked_at),
        }


def assess_channel(channels: Mapping[str, Channel]) -> Assurance:
    """
    Grade channel assurance from the channels used per side

    Args:
        channels: side name ("clearnet", "onion") -> Channel used

    Returns:
        Assurance: Full iff the onion content came over an onion circuit
    """
    if channels.get("onion") is Channel.ONION_CIRCUIT:
        return Assurance.FULL
    return Assurance.DOWNGRADED


def verify_tls_binding(report: VerificationReport, observed_tls_fingerprint: str) -> TlsBinding:
    """Compare an observed TLS certificate fingerprint with the descriptor's claim"""
    claim = report.descriptor.descriptor.tls_fingerprint if report.descriptor else None
    if claim is None:
        return TlsBinding.NO_CLAIM
    if observed_tls_fingerprint.strip().lower() == claim:
        return TlsBinding.BOUND
    return TlsBinding.NOT_BOUND


@dataclass
class _Side:
    """Working state for one side of the pair during verification"""
    name: str
    channel: Channel
    document: Optional[Document] = None
    signed: Optional[SignedBindingDescriptor] = None
    self_auth_failure: Optional[str] = None


class Verifier:
    """
    Verifies clearnet/onion pairs against a trust store over a transport

    Args:
        net: Transport (SimNetwork or LoopbackTransport)
        store (TrustStore): The verifying user's trust store
        clock: Callable returning the current UTC time
        onion_channel (Channel): How the onion side is reached
        skew (timedelta): Tolerance on issued_at
    """

    def __init__(self, net: Transport, store: TrustStore, clock: Clock = utc_now,
                 onion_channel: Channel = Channel.ONION_CIRCUIT, skew: timedelta = DEFAULT_SKEW):
        self.net = net
        self.store = store
        self.clock = clock
        self.onion_channel = onion_channel
        self.skew = skew

    # Entry points and URLs

    @staticmethod
    def _classify_entry(entry_point: str) -> Tuple[str, str]:
        """Returns ("onion", address text) or ("clearnet", well-known URL)"""
        text = entry_point.strip()
        if "://" not in text:
            if is_onion_host(text) or "." not in text:
                return "onion", str(validate_onion_address(text))
            text = f"http://{text}"
        parts = urlsplit(text)
        host = parts.hostname or ""
        if is_onion_host(host):
            return "onion", str(validate_onion_address(host))
        if parts.scheme not in ("http", "https") or not host:
            raise ValueError(f"Unrecognized entry point {entry_point!r}")
        return "clearnet", f"{parts.scheme}://{parts.netloc}{WELL_KNOWN_PATH}"

    def _onion_url(self, address: OnionAddress) -> str:
        url = address.url(WELL_KNOWN_PATH)
        if self.onion_channel is Channel.TOR2WEB_PROXY:
            return gateway_url(url)
        return url

    @staticmethod
    def _clearnet_url(clearnet_url: str) -> str:
        parts = urlsplit(clearnet_url)
        return f"{parts.scheme}://{parts.netloc}{WELL_KNOWN_PATH}"

    # Steps

    def _fetch(self, side: _Side, url: str, check: str, evidence: List[CheckOutcome]) -> None:
        try:
            side.document = self.net.fetch(url, side.channel)
            evidence.append(CheckOutcome(check, CheckStatus.PASS, f"{url} over {side.channel.value}"))
        except DirectorySelfAuthFailure as e:
            side.self_auth_failure = str(e)
            evidence.append(CheckOutcome(check, CheckStatus.SKIP, "service key failed self-authentication"))
        except (NetworkError, AddressError) as e:
            evidence.append(CheckOutcome(check, CheckStatus.FAIL, f"{url}: {e}"))

    @staticmethod
    def _parse(side: _Side, check: str, evidence: List[CheckOutcome]) -> None:
        if side.document is None:
            return
        try:
            side.signed = parse_armored(side.document.body)
            evidence.append(CheckOutcome(check, CheckStatus.PASS))
        except DescriptorError as e:
            evidence.append(CheckOutcome(check, CheckStatus.FAIL, str(e)))

    def verify_pair(self, entry_point: str) -> VerificationReport:
        """
        Verify the pair reachable from a clearnet URL or onion address

        Runs, in order: fetch and parse the entry descriptor, fetch and parse the
        counterpart it names, CrossMatch, SignatureValid, SelfAuth, Freshness, Trust.

        Returns:
            VerificationReport: Verdict from the most severe failing check, else
            from signer validity and channel assurance
        """
        now = normalize_utc(self.clock())
        evidence: List[CheckOutcome] = []
        onion = _Side("onion", self.onion_channel)
        clearnet = _Side("clearnet", Channel.DIRECT)

        try:
            entry_kind, entry_value = self._classify_entry(entry_point)
        except (ValueError, AddressError) as e:
            evidence.append(CheckOutcome("FetchEntry", CheckStatus.FAIL, str(e)))
            return self._report(evidence, now, None, None, None, onion)

        if entry_kind == "onion":
            entry, counterpart = onion, clearnet
            entry_address = validate_onion_address(entry_value)
            self._fetch(onion, self._onion_url(entry_address), "FetchEntry", evidence)
            known_clearnet, known_onion = None, str(entry_address)
        else:
            entry, counterpart = clearnet, onion
            entry_host = urlsplit(entry_value).hostname
            self._fetch(clearnet, entry_value, "FetchEntry", evidence)
            known_clearnet, known_onion = entry_value[: -len(WELL_KNOWN_PATH)], None
        self._parse(entry, "ParseEntry", evidence)

        shared = entry.signed
        if shared is not None:
            d = shared.descriptor
            known_clearnet, known_onion = d.clearnet_url, str(d.onion_address)
            if counterpart is onion:
                self._fetch(onion, self._onion_url(d.onion_address), "FetchCounterpart", evidence)
            else:
                self._fetch(clearnet, self._clearnet_url(d.clearnet_url), "FetchCounterpart", evidence)
            self._parse(counterpart, "ParseCounterpart", evidence)

            # CrossMatch: entry consistency plus byte-identical canonical descriptors
            if entry is onion:
                entry_consistent = d.onion_address == entry_address
                entry_detail = f"entry {entry_address} is not the descriptor's onion {d.onion_address}"
            else:
                entry_consistent = d.clearnet_host == entry_host
                entry_detail = f"entry host {entry_host} is not the descriptor's host {d.clearnet_host}"
            if not entry_consistent:
                evidence.append(CheckOutcome("CrossMatch", CheckStatus.FAIL, entry_detail))
            elif counterpart.signed is None:
                evidence.append(CheckOutcome("CrossMatch", CheckStatus.SKIP, "counterpart descriptor unavailable"))
            elif canonical_encode(counterpart.signed.descriptor) != canonical_encode(d):
                evidence.append(CheckOutcome("CrossMatch", CheckStatus.FAIL,
                                             "clearnet and onion descriptors differ"))
            else:
                evidence.append(CheckOutcome("CrossMatch", CheckStatus.PASS, "descriptors byte-identical"))

            rejections = []
            for side in (clearnet, onion):
                if side.signed is not None:
                    check = verify_signature(side.signed)
                    if not check:
                        rejections.append(f"{side.name}: {check.reason.value} ({check.detail})")
            if rejections:
                evidence.append(CheckOutcome("SignatureValid", CheckStatus.FAIL, "; ".join(rejections)))
            else:
                evidence.append(CheckOutcome("SignatureValid", CheckStatus.PASS))

        evidence.append(self._self_auth(onion, shared))

        if shared is not None:
            d = shared.descriptor
            if d.is_current(now, self.skew):
                evidence.append(CheckOutcome("Freshness", CheckStatus.PASS,
                                             f"valid until {format_rfc3339(d.expires_at)}"))
            elif d.is_premature(now, self.skew):
                evidence.append(CheckOutcome("Freshness", CheckStatus.FAIL,
                                             f"not valid before {format_rfc3339(d.issued_at)}"))
            else:
                evidence.append(CheckOutcome("Freshness", CheckStatus.FAIL,
                                             f"expired at {format_rfc3339(d.expires_at)}"))
            validity = self.store.key_validity(d.signer_fingerprint)
            status = CheckStatus.PASS if validity is Validity.VALID else CheckStatus.FAIL
            evidence.append(CheckOutcome("Trust", status, f"signer {validity.value}"))

        return self._report(evidence, now, known_clearnet, known_onion, shared, onion)

    def _self_auth(self, onion: _Side, shared: Optional[SignedBindingDescriptor]) -> CheckOutcome:
        if onion.self_auth_failure is not None:
            return CheckOutcome("SelfAuth", CheckStatus.FAIL, onion.self_auth_failure)
        if onion.document is None or shared is None:
            return CheckOutcome("SelfAuth", CheckStatus.SKIP, "onion side unavailable")
        key = onion.document.authenticated_service_key
        if key is None:
            return CheckOutcome("SelfAuth", CheckStatus.SKIP,
                                f"no service key over {onion.channel.value}; assurance downgraded")
        derived = derive_onion_address(key)
        if derived != shared.descriptor.onion_address:
            return CheckOutcome("SelfAuth", CheckStatus.FAIL,
                                f"service key derives to {derived}, not {shared.descriptor.onion_address}")
        return CheckOutcome("SelfAuth", CheckStatus.PASS, f"service key derives to {derived}")

    def _report(self, evidence: List[CheckOutcome], now: datetime, clearnet_url: Optional[str],
                onion_address: Optional[str], shared: Optional[SignedBindingDescriptor],
                onion: _Side) -> VerificationReport:
        assurance = assess_channel({"clearnet": Channel.DIRECT, "onion": onion.channel})
        failures = {CHECK_FAILURE_VERDICTS[c.check] for c in evidence
                    if c.status is CheckStatus.FAIL and c.check in CHECK_FAILURE_VERDICTS}
        if failures:
            verdict = next(v for v in FAILURE_SEVERITY if v in failures)
        elif shared is None:
            verdict = VerdictKind.MISSING
        else:
            trusted = evidence[-1].check == "Trust" and evidence[-1].passed
            if not trusted:
                verdict = VerdictKind.SELF_CONSISTENT_UNTRUSTED
            elif assurance is Assurance.DOWNGRADED:
                verdict = VerdictKind.CHANNEL_DOWNGRADED
            else:
                verdict = VerdictKind.AUTHENTIC
        signer = shared.descriptor.signer_fingerprint if shared else ZERO_FINGERPRINT
        report = VerificationReport(verdict, clearnet_url, onion_address, signer, assurance,
                                    evidence, now, shared)
        logger.info(f"Verified {clearnet_url} <-> {onion_address}: {verdict.value} ({assurance.value})")
        return report


def verify_pair(net: Transport, store: TrustStore, entry_point: str, clock: Clock = utc_now,
                onion_channel: Channel = Channel.ONION_CIRCUIT,
                skew: timedelta = DEFAULT_SKEW) -> VerificationReport:
    """Convenience wrapper around Verifier.verify_pair"""
    return Verifier(net, store, clock, onion_channel, skew).verify_pair(entry_point)
