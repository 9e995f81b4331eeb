"""
Binding Descriptor Module
Canonical signed statements that cross-link a clearnet URL and an onion address
"""

import base64
import binascii
import logging
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union
from urllib.parse import urlsplit

from core.crypto import (
    DEFAULT_SCHEME,
    KEY_SIZE,
    SignatureScheme,
    fingerprint,
    hex_digest,
    is_hex_fingerprint,
)
from core.errors import (
    AddressError,
    BadBase64,
    DescriptorError,
    DuplicateField,
    InvalidFingerprint,
    InvalidLifetime,
    InvalidTimestamp,
    InvalidUrl,
    MalformedField,
    MissingField,
    MissingMarkers,
    UnknownField,
)
from core.timeutil import format_rfc3339, normalize_utc, parse_rfc3339
from onion_identity.onion_id import OnionAddress, ServiceIdentity, is_onion_host, validate_onion_address

logger = logging.getLogger(__name__)

DESCRIPTOR_VERSION = 1
DEFAULT_LIFETIME = timedelta(days=90)
PLACEHOLDER_FINGERPRINT = "0" * 64
WELL_KNOWN_PATH = "/.well-known/onion-binding.txt"

BEGIN_MARKER = "-----BEGIN ONION BINDING-----"
END_MARKER = "-----END ONION BINDING-----"

# canonical payload order; tls-fingerprint is optional
PAYLOAD_FIELDS = ("onion-binding-version", "clearnet", "onion", "issued", "expires", "signer",
                  "tls-fingerprint")
ARMOR_FIELDS = ("signer-key", "signature")
REQUIRED_FIELDS = PAYLOAD_FIELDS[:-1] + ARMOR_FIELDS


def validate_clearnet_url(url: str) -> str:
    """Require an absolute http/https URL with a non-empty, non-onion host"""
    if not isinstance(url, str) or not url:
        raise InvalidUrl("Clearnet URL must be a non-empty string")
    if any(c.isspace() or ord(c) < 0x20 or ord(c) == 0x7F for c in url):
        raise InvalidUrl(f"Clearnet URL contains whitespace or control characters: {url!r}")
    try:
        parts = urlsplit(url)
        host = parts.hostname
    except ValueError as e:
        raise InvalidUrl(f"Unparseable URL {url!r}: {e}") from e
    if parts.scheme not in ("http", "https"):
        raise InvalidUrl(f"URL scheme must be http or https: {url!r}")
    if not host:
        raise InvalidUrl(f"URL has no host: {url!r}")
    if is_onion_host(host):
        raise InvalidUrl(f"Clearnet URL must not name an onion host: {url!r}")
    return url


def _check_fingerprint(value: str, name: str) -> None:
    if not isinstance(value, str) or not is_hex_fingerprint(value):
        raise InvalidFingerprint(f"{name} must be 64 lowercase hex characters")


@dataclass(frozen=True)
class BindingDescriptor:
    """Unsigned pairing of a clearnet URL and an onion address"""
    clearnet_url: str
    onion_address: OnionAddress
    issued_at: datetime
    expires_at: datetime
    signer_fingerprint: str = PLACEHOLDER_FINGERPRINT
    tls_fingerprint: Optional[str] = None
    version: int = DESCRIPTOR_VERSION

    def __post_init__(self):
        if self.version != DESCRIPTOR_VERSION:
            raise DescriptorError(f"Unsupported descriptor version {self.version}")
        validate_clearnet_url(self.clearnet_url)
        if not isinstance(self.onion_address, OnionAddress):
            object.__setattr__(self, "onion_address", validate_onion_address(str(self.onion_address)))
        object.__setattr__(self, "issued_at", normalize_utc(self.issued_at))
        object.__setattr__(self, "expires_at", normalize_utc(self.expires_at))
        if self.issued_at >= self.expires_at:
            raise InvalidLifetime("issued_at must be earlier than expires_at")
        _check_fingerprint(self.signer_fingerprint, "signer fingerprint")
        if self.tls_fingerprint is not None:
            _check_fingerprint(self.tls_fingerprint, "TLS fingerprint")

    @property
    def clearnet_host(self) -> str:
        return urlsplit(self.clearnet_url).hostname

    def is_current(self, now: datetime, skew: timedelta = timedelta(0)) -> bool:
        """issued - skew <= now < expires"""
        now = normalize_utc(now)
        return not self.is_premature(now, skew) and now < self.expires_at

    def is_premature(self, now: datetime, skew: timedelta = timedelta(0)) -> bool:
        """now < issued - skew, compared as a difference so year 1 cannot overflow"""
        return normalize_utc(now) - self.issued_at < -skew


@dataclass(frozen=True)
class SignedBindingDescriptor:
    """
    A descriptor plus its detached signature and the signer's public key

    received_payload holds the exact payload bytes of a parsed block; it is
    not part of equality and is None for locally signed descriptors.
    """
    descriptor: BindingDescriptor
    signature: bytes
    signer_public_key: bytes
    received_payload: Optional[bytes] = field(default=None, compare=False, repr=False)


class RejectReason(Enum):
    BAD_SIGNATURE = "BadSignature"
    FINGERPRINT_MISMATCH = "FingerprintMismatch"


@dataclass(frozen=True)
class SignatureCheck:
    """Outcome of verify_signature: accepted, or rejected with a reason"""
    accepted: bool
    reason: Optional[RejectReason] = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.accepted


def build_descriptor(clearnet_url: str, onion_address: Union[OnionAddress, str],
                     issued_at: datetime, lifetime: timedelta = DEFAULT_LIFETIME,
                     tls_fingerprint: Optional[str] = None) -> BindingDescriptor:
    """
    Build an unsigned descriptor

    Args:
        clearnet_url (str): Absolute http/https URL of the clearnet site
        onion_address: Onion address of the onion site
        issued_at (datetime): Issue time (UTC, truncated to seconds)
        lifetime (timedelta): Validity period; must be positive
        tls_fingerprint (str): Optional SHA-256 fingerprint of the site's TLS certificate

    Returns:
        BindingDescriptor: Descriptor with a placeholder signer fingerprint
    """
    if lifetime <= timedelta(0):
        raise InvalidLifetime(f"Lifetime must be positive, got {lifetime}")
    validate_clearnet_url(clearnet_url)
    if not isinstance(onion_address, OnionAddress):
        onion_address = validate_onion_address(onion_address)
    issued_at = normalize_utc(issued_at)
    try:
        expires_at = issued_at + lifetime
    except OverflowError as e:
        raise InvalidTimestamp(f"Expiry of a descriptor issued {issued_at} is past year 9999") from e
    return BindingDescriptor(
        clearnet_url=clearnet_url,
        onion_address=onion_address,
        issued_at=issued_at,
        expires_at=expires_at,
        tls_fingerprint=tls_fingerprint,
    )


def _payload_lines(descriptor: BindingDescriptor) -> List[str]:
    lines = [
        f"onion-binding-version: {descriptor.version}",
        f"clearnet: {descriptor.clearnet_url}",
        f"onion: {descriptor.onion_address}",
        f"issued: {format_rfc3339(descriptor.issued_at)}",
        f"expires: {format_rfc3339(descriptor.expires_at)}",
        f"signer: {descriptor.signer_fingerprint}",
    ]
    if descriptor.tls_fingerprint is not None:
        lines.append(f"tls-fingerprint: {descriptor.tls_fingerprint}")
    return lines


def canonical_encode(descriptor: BindingDescriptor) -> bytes:
    """Bit-exact payload: fixed field order, LF-terminated UTF-8 lines"""
    return "".join(line + "\n" for line in _payload_lines(descriptor)).encode("utf-8")


def descriptor_digest(descriptor: BindingDescriptor) -> str:
    """Hex SHA-256 of the canonical encoding"""
    return hex_digest(canonical_encode(descriptor))


def sign_descriptor(descriptor: BindingDescriptor, signer: ServiceIdentity) -> SignedBindingDescriptor:
    """
    Fill in the signer fingerprint and sign the canonical encoding

    Args:
        descriptor (BindingDescriptor): Descriptor to sign
        signer (ServiceIdentity): The onion service identity or a separate signer keypair

    Returns:
        SignedBindingDescriptor: The completed, signed descriptor
    """
    completed = replace(descriptor, signer_fingerprint=signer.fingerprint)
    signature = signer.sign(canonical_encode(completed))
    logger.info(f"Signed binding {completed.clearnet_url} <-> {completed.onion_address} "
                f"with key {signer.fingerprint[:16]}")
    return SignedBindingDescriptor(completed, signature, signer.public_key)


def verify_signature(signed: SignedBindingDescriptor,
                     scheme: SignatureScheme = DEFAULT_SCHEME) -> SignatureCheck:
    """
    Check the fingerprint binding and the detached signature

    Returns:
        SignatureCheck: accepted, or rejected with BadSignature / FingerprintMismatch
    """
    descriptor = signed.descriptor
    if fingerprint(signed.signer_public_key) != descriptor.signer_fingerprint:
        return SignatureCheck(False, RejectReason.FINGERPRINT_MISMATCH,
                              "signer fingerprint does not match the signer public key")
    payload = canonical_encode(descriptor)
    if signed.received_payload is not None and signed.received_payload != payload:
        return SignatureCheck(False, RejectReason.BAD_SIGNATURE,
                              "received payload is not in canonical form")
    if not scheme.verify(signed.signer_public_key, payload, signed.signature):
        return SignatureCheck(False, RejectReason.BAD_SIGNATURE,
                              "signature does not verify over the canonical payload")
    return SignatureCheck(True)


def armor(signed: SignedBindingDescriptor) -> str:
    """Render the armored wire form published at the well-known path"""
    lines = [BEGIN_MARKER]
    lines.extend(_payload_lines(signed.descriptor))
    lines.append(f"signer-key: {base64.b64encode(signed.signer_public_key).decode('ascii')}")
    lines.append(f"signature: {base64.b64encode(signed.signature).decode('ascii')}")
    lines.append(END_MARKER)
    return "".join(line + "\n" for line in lines)


def _strict_b64decode(name: str, value: str) -> bytes:
    try:
        decoded = base64.b64decode(value, validate=True)
    except (binascii.Error, ValueError) as e:
        raise BadBase64(f"Field {name!r} is not valid base64: {e}") from e
    if base64.b64encode(decoded).decode("ascii") != value:
        raise BadBase64(f"Field {name!r} is not canonically base64 encoded")
    return decoded


def _split_field(line: str) -> Tuple[str, str]:
    name, sep, value = line.partition(": ")
    if not sep or not name:
        raise MalformedField(f"Line is not of the form 'name: value': {line!r}")
    return name, value


def _collect_fields(lines: List[str], allowed: Tuple[str, ...]) -> Dict[str, str]:
    fields: Dict[str, str] = {}
    for line in lines:
        name, value = _split_field(line.rstrip("\r"))
        if name not in allowed:
            raise UnknownField(f"Unknown field {name!r}")
        if name in fields:
            raise DuplicateField(f"Duplicate field {name!r}")
        fields[name] = value
    return fields


def _descriptor_from_fields(fields: Dict[str, str]) -> BindingDescriptor:
    for name in PAYLOAD_FIELDS[:-1]:
        if name not in fields:
            raise MissingField(f"Missing field {name!r}")
    if fields["onion-binding-version"] != str(DESCRIPTOR_VERSION):
        raise MalformedField(f"Unsupported version {fields['onion-binding-version']!r}")
    try:
        return BindingDescriptor(
            clearnet_url=fields["clearnet"],
            onion_address=validate_onion_address(fields["onion"]),
            issued_at=parse_rfc3339(fields["issued"]),
            expires_at=parse_rfc3339(fields["expires"]),
            signer_fingerprint=fields["signer"],
            tls_fingerprint=fields.get("tls-fingerprint"),
        )
    except (DescriptorError, AddressError, ValueError) as e:
        raise MalformedField(f"Invalid descriptor field: {e}") from e


def parse_canonical(payload: bytes) -> BindingDescriptor:
    """Parse bare payload lines (no armor, no signature)"""
    try:
        text = payload.decode("utf-8")
    except UnicodeDecodeError as e:
        raise MalformedField(f"Payload is not UTF-8: {e}") from e
    if not text.endswith("\n"):
        raise MalformedField("Payload must end with a line feed")
    return _descriptor_from_fields(_collect_fields(text[:-1].split("\n"), PAYLOAD_FIELDS))


def parse_armored(text: Union[str, bytes]) -> SignedBindingDescriptor:
    """
    Parse the armored wire form

    Surrounding whitespace and CRLF framing are tolerated; the payload lines are
    kept byte-for-byte so that non-canonical payloads fail verify_signature.

    Raises:
        DescriptorParseError: MissingMarkers, UnknownField, DuplicateField,
            MissingField, BadBase64 or MalformedField
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise MalformedField(f"Armored block is not UTF-8: {e}") from e
    lines = text.strip().split("\n")
    if len(lines) < 2 or lines[0].rstrip("\r") != BEGIN_MARKER or lines[-1].rstrip("\r") != END_MARKER:
        raise MissingMarkers("Armored block must start and end with ONION BINDING markers")
    body = lines[1:-1]

    fields = _collect_fields(body, PAYLOAD_FIELDS + ARMOR_FIELDS)
    for name in REQUIRED_FIELDS:
        if name not in fields:
            raise MissingField(f"Missing field {name!r}")

    descriptor = _descriptor_from_fields(fields)
    public_key = _strict_b64decode("signer-key", fields["signer-key"])
    if len(public_key) != KEY_SIZE:
        raise MalformedField(f"signer-key must decode to {KEY_SIZE} bytes")
    signature = _strict_b64decode("signature", fields["signature"])

    received = "".join(
        line + "\n" for line in body if _split_field(line.rstrip("\r"))[0] in PAYLOAD_FIELDS
    ).encode("utf-8")
    return SignedBindingDescriptor(descriptor, signature, public_key, received_payload=received)


def load_descriptor_file(path: Union[str, Path]) -> SignedBindingDescriptor:
    return parse_armored(Path(path).read_text(encoding="utf-8"))
