"""
Error Types
Exception hierarchy shared by every onion-binding component
"""

from typing import Optional


class OnionBindingError(Exception):
    """Base class for all onion-binding errors"""


# Identity and address errors

class AddressError(OnionBindingError):
    """Problems with keys, seeds or onion addresses"""


class InvalidSeed(AddressError):
    """Seed entropy is not exactly 32 bytes"""


class InvalidKey(AddressError):
    """Public key has the wrong length or encoding"""


class MalformedAddress(AddressError):
    """Text is not a valid onion address"""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class InvalidPrefix(AddressError):
    """Vanity prefix is empty, too long, or outside the base32 alphabet"""

    def __init__(self, message: str, position: Optional[int] = None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class SearchExhausted(AddressError):
    """Vanity search consumed its trial budget without a match"""

    def __init__(self, trials: int):
        super().__init__(f"no matching address after {trials} trials")
        self.trials = trials


class KeyFileError(OnionBindingError):
    """A key file could not be read or written"""


# Descriptor errors

class DescriptorError(OnionBindingError):
    """Binding descriptor construction failed"""


class InvalidUrl(DescriptorError):
    """Clearnet URL is not an absolute http/https URL with a host"""


class InvalidLifetime(DescriptorError):
    """Descriptor lifetime is not positive"""


class InvalidTimestamp(DescriptorError):
    """Timestamp cannot be represented in the descriptor format"""


class InvalidFingerprint(DescriptorError):
    """Fingerprint is not 64 lowercase hex characters"""


class DescriptorParseError(DescriptorError):
    """Armored or canonical descriptor text could not be parsed"""


class MissingMarkers(DescriptorParseError):
    """BEGIN/END armor lines are absent"""


class UnknownField(DescriptorParseError):
    """A line names a field the format does not define"""


class DuplicateField(DescriptorParseError):
    """A field appears more than once"""


class MissingField(DescriptorParseError):
    """A required field is absent"""


class BadBase64(DescriptorParseError):
    """A base64 value is malformed or not canonically encoded"""


class MalformedField(DescriptorParseError):
    """A line or field value is syntactically invalid"""


# Trust store errors

class TrustError(OnionBindingError):
    """Trust store operation failed"""


class UnknownKey(TrustError):
    """Fingerprint is not present in the trust store"""


class BadCertSignature(TrustError):
    """Certification signature does not verify under the certifier key"""


class TrustStoreFormatError(TrustError):
    """Trust store file could not be parsed"""


# Network errors

class NetworkError(OnionBindingError):
    """Simulated network operation failed"""


class NotFound(NetworkError):
    """No document or directory entry for the request"""


class ChannelMismatch(NetworkError):
    """Channel cannot reach the requested host"""


class DirectorySelfAuthFailure(NetworkError):
    """Directory key does not derive to the requested onion address"""


class AddressKeyMismatch(NetworkError):
    """Registering identity does not derive to the onion host"""


# Notary errors

class NotaryError(OnionBindingError):
    """Notary operation failed"""


class InvalidThreshold(NotaryError):
    """Quorum threshold outside 1..n"""


class LogCorrupted(NotaryError):
    """Notary log records could not be parsed or do not chain"""
