"""
Onion Identity Module
Service keypairs, self-authenticating onion address derivation and validation
"""

import base64
import json
import logging
import os
import secrets
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from core.crypto import DEFAULT_SCHEME, KEY_SIZE, SignatureScheme, digest, fingerprint
from core.errors import InvalidKey, InvalidSeed, KeyFileError, MalformedAddress

logger = logging.getLogger(__name__)

BASE32_ALPHABET = "abcdefghijklmnopqrstuvwxyz234567"
ADDRESS_TAG = b"genuine-onion-v1"
ONION_SUFFIX = ".onion"
LABEL_LENGTH = 16
# 80 bits of digest make exactly 16 base32 characters with no padding
ADDRESS_BYTES = 10
KEY_FILE_VERSION = 1


@dataclass(frozen=True)
class OnionAddress:
    """A 16-character lowercase base32 label; prints as '<label>.onion'"""
    label: str

    def __str__(self) -> str:
        return self.label + ONION_SUFFIX

    @property
    def host(self) -> str:
        return str(self)

    def url(self, path: str = "/", scheme: str = "http") -> str:
        return f"{scheme}://{self.host}{path}"

    def decode(self) -> bytes:
        """The 80-bit value the label encodes"""
        return base64.b32decode(self.label.upper())


@dataclass(frozen=True)
class ServiceIdentity:
    """
    Signing keypair whose public half determines an onion address
    """
    public_key: bytes
    secret_key: bytes = field(repr=False)
    scheme: SignatureScheme = field(default=DEFAULT_SCHEME, repr=False, compare=False)

    @property
    def fingerprint(self) -> str:
        return fingerprint(self.public_key)

    @property
    def onion_address(self) -> OnionAddress:
        return derive_onion_address(self.public_key)

    def sign(self, message: bytes) -> bytes:
        return self.scheme.sign(self.secret_key, message)

    def verify(self, message: bytes, signature: bytes) -> bool:
        return self.scheme.verify(self.public_key, message, signature)

    def save(self, path: Union[str, Path]) -> Path:
        """
        Write the keypair to a key file readable only by its owner

        Args:
            path: Destination file

        Returns:
            Path: The written file
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        data = {
            "version": KEY_FILE_VERSION,
            "scheme": self.scheme.name,
            "secret_key": self.secret_key.hex(),
            "public_key": self.public_key.hex(),
            "onion_address": str(self.onion_address),
            "fingerprint": self.fingerprint,
        }
        fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2)
            f.write("\n")
        # O_CREAT mode is ignored for pre-existing files
        os.chmod(path, 0o600)
        logger.info(f"Wrote key file {path} for {self.onion_address}")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ServiceIdentity":
        """Read a key file written by save()"""
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
            if data.get("version") != KEY_FILE_VERSION:
                raise KeyFileError(f"Unsupported key file version in {path}")
            if data.get("scheme") != DEFAULT_SCHEME.name:
                raise KeyFileError(f"Unsupported signature scheme {data.get('scheme')!r}")
            identity = generate_identity(bytes.fromhex(data["secret_key"]))
        except (OSError, ValueError, KeyError, InvalidSeed) as e:
            raise KeyFileError(f"Cannot read key file {path}: {e}") from e
        if identity.public_key.hex() != data.get("public_key"):
            raise KeyFileError(f"Key file {path} public key does not match its secret key")
        return identity


def generate_identity(seed: Optional[bytes] = None,
                      scheme: SignatureScheme = DEFAULT_SCHEME) -> ServiceIdentity:
    """
    Create a service keypair

    Args:
        seed (bytes): Optional 32 bytes of entropy; identical seeds give identical identities
        scheme: Signature scheme (Ed25519 by default)

    Returns:
        ServiceIdentity: The new keypair
    """
    if seed is None:
        seed = secrets.token_bytes(KEY_SIZE)
    elif not isinstance(seed, (bytes, bytearray)) or len(seed) != KEY_SIZE:
        raise InvalidSeed(f"Seed must be exactly {KEY_SIZE} bytes")
    seed = bytes(seed)
    return ServiceIdentity(public_key=scheme.public_key(seed), secret_key=seed, scheme=scheme)


def derive_onion_address(public_key: bytes) -> OnionAddress:
    """
    Derive the onion address committed to by a public key

    The label is base32 of the first 80 bits of SHA-256(tag || public_key).

    Args:
        public_key (bytes): Raw 32-byte public key

    Returns:
        OnionAddress: The derived address
    """
    if not isinstance(public_key, (bytes, bytearray)) or len(public_key) != KEY_SIZE:
        raise InvalidKey(f"Public key must be exactly {KEY_SIZE} bytes")
    truncated = digest(ADDRESS_TAG + bytes(public_key))[:ADDRESS_BYTES]
    return OnionAddress(base64.b32encode(truncated).decode("ascii").lower())


def validate_onion_address(text: str) -> OnionAddress:
    """
    Parse '<label>.onion' or a bare label, case-insensitively

    Args:
        text (str): Candidate address

    Returns:
        OnionAddress: Normalized address

    Raises:
        MalformedAddress: With the position of the first offending character
    """
    normalized = text.lower()
    dot = normalized.find(".")
    if dot >= 0:
        label, suffix = normalized[:dot], normalized[dot:]
        if suffix != ONION_SUFFIX:
            offset = next(
                (i for i, (a, b) in enumerate(zip(suffix, ONION_SUFFIX)) if a != b),
                min(len(suffix), len(ONION_SUFFIX)),
            )
            raise MalformedAddress("Address suffix must be '.onion'", dot + offset)
    else:
        label = normalized

    for i, char in enumerate(label[:LABEL_LENGTH]):
        if char not in BASE32_ALPHABET:
            raise MalformedAddress(f"Invalid character {char!r} in onion label", i)
    if len(label) < LABEL_LENGTH:
        raise MalformedAddress(
            f"Onion label has {len(label)} characters, expected {LABEL_LENGTH}", len(label)
        )
    if len(label) > LABEL_LENGTH:
        raise MalformedAddress(
            f"Onion label has {len(label)} characters, expected {LABEL_LENGTH}", LABEL_LENGTH
        )
    return OnionAddress(label)


def is_onion_host(host: str) -> bool:
    return host.lower().endswith(ONION_SUFFIX)
