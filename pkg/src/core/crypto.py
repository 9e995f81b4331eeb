"""
Crypto Primitives
Digest helpers and the pluggable detached-signature scheme
"""

import hashlib
import logging
from typing import Protocol

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

logger = logging.getLogger(__name__)

KEY_SIZE = 32
DIGEST_SIZE = 32
ZERO_DIGEST = bytes(DIGEST_SIZE)
ZERO_FINGERPRINT = "0" * 64


def digest(data: bytes) -> bytes:
    """256-bit digest used throughout (SHA-256)"""
    return hashlib.sha256(data).digest()


def hex_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def fingerprint(public_key: bytes) -> str:
    """
    Fingerprint of a public key

    Args:
        public_key (bytes): Raw 32-byte public key

    Returns:
        str: 64 lowercase hex characters
    """
    return hex_digest(public_key)


def is_hex_fingerprint(text: str) -> bool:
    """True if text is 64 lowercase hex characters"""
    return len(text) == 64 and all(c in "0123456789abcdef" for c in text)


class SignatureScheme(Protocol):
    """Detached signatures with 32-byte secret seeds and 32-byte public keys"""

    name: str

    def public_key(self, secret_key: bytes) -> bytes:
        ...

    def sign(self, secret_key: bytes, message: bytes) -> bytes:
        ...

    def verify(self, public_key: bytes, message: bytes, signature: bytes) -> bool:
        ...


class Ed25519Scheme:
    """Deterministic Ed25519 signatures backed by the cryptography package"""

    name = "ed25519"

    def _private(self, secret_key: bytes) -> Ed25519PrivateKey:
        return Ed25519PrivateKey.from_private_bytes(secret_key)

    def public_key(self, secret_key: bytes) -> bytes:
        return self._private(secret_key).public_key().public_bytes(
            serialization.Encoding.Raw, serialization.PublicFormat.Raw
        )

    def sign(self, secret_key: bytes, message: bytes) -> bytes:
        return self._private(secret_key).sign(message)

    def verify(self, public_key: bytes, message: bytes, signature: bytes) -> bool:
        try:
            Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
            return True
        except InvalidSignature:
            return False
        except ValueError as e:
            # wrong key length or point not on the curve
            logger.debug(f"Rejecting unusable public key: {e}")
            return False


DEFAULT_SCHEME: SignatureScheme = Ed25519Scheme()
