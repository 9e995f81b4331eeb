"""
Simulated Network Module
Hosted documents, channel semantics, a simulated onion directory and adversary controls
"""

import logging
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Protocol, Set, Tuple, Union
from urllib.parse import urlsplit

from core.errors import (
    AddressKeyMismatch,
    ChannelMismatch,
    DirectorySelfAuthFailure,
    InvalidKey,
    MalformedAddress,
    NotFound,
)
from onion_identity.onion_id import (
    OnionAddress,
    ServiceIdentity,
    derive_onion_address,
    is_onion_host,
    validate_onion_address,
)

logger = logging.getLogger(__name__)

TOR2WEB_SUFFIX = ".tor2web.example"


class Channel(Enum):
    ONION_CIRCUIT = "onion"
    DIRECT = "direct"
    TOR2WEB_PROXY = "tor2web"


@dataclass(frozen=True)
class Document:
    """A fetched body; authenticated_service_key is set only for onion-circuit fetches"""
    body: bytes
    fetched_over: Channel
    authenticated_service_key: Optional[bytes] = None
    url: str = ""

    def __post_init__(self):
        if (self.authenticated_service_key is not None) != (self.fetched_over is Channel.ONION_CIRCUIT):
            raise ValueError("authenticated_service_key must be present exactly for onion-circuit fetches")


@dataclass(frozen=True)
class DirectoryOverride:
    """Directory answers lookups for address with a substitute key"""
    address: OnionAddress
    public_key: bytes


@dataclass(frozen=True)
class TamperInTransit:
    """Rewrites bodies fetched from host over Direct or through the Tor2web gateway"""
    host: str
    transform: Callable[[bytes], bytes]


@dataclass(frozen=True)
class RemoveDocument:
    host: str
    path: str


AdversaryHook = Union[DirectoryOverride, TamperInTransit, RemoveDocument]


class Transport(Protocol):
    """Anything that can fetch a URL over a channel (in-memory or loopback HTTP)"""

    def fetch(self, url: str, channel: Channel) -> Document:
        ...


def split_url(url: str) -> Tuple[str, str]:
    """Lowercased host and path (with query) of an absolute URL"""
    try:
        parts = urlsplit(url)
        host = parts.hostname
    except ValueError as e:
        raise NotFound(f"Unparseable URL {url!r}: {e}") from e
    if not host:
        raise NotFound(f"URL has no host: {url!r}")
    path = parts.path or "/"
    if parts.query:
        path = f"{path}?{parts.query}"
    return host.lower(), path


def tor2web_host(address: OnionAddress) -> str:
    return f"{address.label}{TOR2WEB_SUFFIX}"


def is_gateway_host(host: str) -> bool:
    return host.lower().endswith(TOR2WEB_SUFFIX)


def onion_from_gateway_host(host: str) -> OnionAddress:
    if not is_gateway_host(host):
        raise ChannelMismatch(f"{host} is not a Tor2web gateway hostname")
    try:
        return validate_onion_address(host[: -len(TOR2WEB_SUFFIX)])
    except MalformedAddress as e:
        raise NotFound(f"Gateway hostname {host} does not embed an onion label: {e}") from e


def onion_host(host: str) -> OnionAddress:
    if not is_onion_host(host):
        raise ChannelMismatch(f"Onion circuits reach only .onion hosts, not {host}")
    try:
        return validate_onion_address(host)
    except MalformedAddress as e:
        raise NotFound(f"{host} is not a valid onion address: {e}") from e


def gateway_url(onion_url: str) -> str:
    """Rewrite http://<label>.onion/path to the gateway form https://<label>.tor2web.example/path"""
    host, path = split_url(onion_url)
    return f"https://{tor2web_host(validate_onion_address(host))}{path}"


def authenticate_service_key(address: OnionAddress, public_key: Optional[bytes]) -> bytes:
    """
    Client-side self-authentication: the key must derive to the address

    Raises:
        DirectorySelfAuthFailure: no key, or the key commits to a different address
    """
    if public_key is None:
        raise DirectorySelfAuthFailure(f"No service key returned for {address}")
    try:
        derived = derive_onion_address(public_key)
    except InvalidKey as e:
        raise DirectorySelfAuthFailure(f"Directory returned an unusable key for {address}: {e}") from e
    if derived != address:
        raise DirectorySelfAuthFailure(f"Directory key for {address} derives to {derived}")
    return public_key


class SimDirectory:
    """Maps onion addresses to service keys, standing in for the hidden-service directory"""

    def __init__(self):
        self.entries: Dict[OnionAddress, bytes] = {}
        self.overrides: Dict[OnionAddress, bytes] = {}

    def publish(self, address: OnionAddress, public_key: bytes) -> None:
        self.entries[address] = public_key

    def withdraw(self, address: OnionAddress) -> None:
        self.entries.pop(address, None)

    def lookup(self, address: OnionAddress) -> bytes:
        if address in self.overrides:
            return self.overrides[address]
        if address in self.entries:
            return self.entries[address]
        raise NotFound(f"No directory entry for {address}")


class SimNetwork:
    """
    Deterministic in-memory network

    The registry, directory and hooks share one lock, so installing a hook is
    atomic with respect to fetches.
    """

    def __init__(self):
        self.directory = SimDirectory()
        self.documents: Dict[Tuple[str, str], bytes] = {}
        self.removed: Set[Tuple[str, str]] = set()
        self.tampers: List[TamperInTransit] = []
        self._lock = threading.RLock()

    @staticmethod
    def _normalize_path(path: str) -> str:
        return path if path.startswith("/") else "/" + path

    def register_site(self, host: Union[str, OnionAddress], path: str, body: bytes,
                      service_identity: Optional[ServiceIdentity] = None) -> None:
        """
        Serve body at (host, path); onion hosts also get a directory entry

        Args:
            host: Clearnet hostname or onion address
            path (str): Absolute path
            body (bytes): Document content
            service_identity (ServiceIdentity): Required for onion hosts

        Raises:
            AddressKeyMismatch: identity does not derive to the onion host
        """
        path = self._normalize_path(path)
        if isinstance(host, OnionAddress) or is_onion_host(str(host)):
            address = host if isinstance(host, OnionAddress) else validate_onion_address(str(host))
            if service_identity is None:
                raise AddressKeyMismatch(f"Onion site {address} needs a service identity")
            if service_identity.onion_address != address:
                raise AddressKeyMismatch(
                    f"Identity derives to {service_identity.onion_address}, not {address}"
                )
            with self._lock:
                self.directory.publish(address, service_identity.public_key)
                self.documents[(address.host, path)] = bytes(body)
                self.removed.discard((address.host, path))
        else:
            key = (str(host).lower(), path)
            with self._lock:
                self.documents[key] = bytes(body)
                self.removed.discard(key)
        logger.info(f"Registered {host}{path} ({len(body)} bytes)")

    def unregister_site(self, host: Union[str, OnionAddress], path: Optional[str] = None) -> None:
        """Drop one document, or every document of the host when path is None"""
        host = str(host).lower()
        with self._lock:
            for key in [k for k in self.documents if k[0] == host and (path is None or k[1] == path)]:
                del self.documents[key]
            if path is None and is_onion_host(host):
                self.directory.withdraw(validate_onion_address(host))

    def install_adversary(self, hook: AdversaryHook) -> None:
        with self._lock:
            if isinstance(hook, DirectoryOverride):
                self.directory.overrides[hook.address] = hook.public_key
            elif isinstance(hook, TamperInTransit):
                self.tampers.append(TamperInTransit(hook.host.lower(), hook.transform))
            elif isinstance(hook, RemoveDocument):
                self.removed.add((hook.host.lower(), self._normalize_path(hook.path)))
            else:
                raise TypeError(f"Unknown adversary hook {hook!r}")
        logger.info(f"Installed adversary hook {type(hook).__name__}")

    def clear_adversaries(self) -> None:
        with self._lock:
            self.directory.overrides.clear()
            self.tampers.clear()
            self.removed.clear()

    def lookup_service_key(self, onion_address: OnionAddress) -> bytes:
        """Current directory key, possibly adversarially overridden"""
        with self._lock:
            return self.directory.lookup(onion_address)

    def _document(self, host: str, path: str) -> bytes:
        key = (host, path)
        if key in self.removed or key not in self.documents:
            raise NotFound(f"No document at {host}{path}")
        return self.documents[key]

    def _tamper(self, hosts: Tuple[str, ...], body: bytes) -> bytes:
        for hook in self.tampers:
            if hook.host in hosts:
                body = hook.transform(body)
        return body

    def resolve(self, url: str, channel: Channel) -> bytes:
        """
        Server-side view of a request: the body as delivered over the channel

        Onion-circuit content is only served for hosts with a directory entry;
        authenticating that entry is the client's job (see fetch).
        """
        host, path = split_url(url)
        with self._lock:
            if channel is Channel.ONION_CIRCUIT:
                address = onion_host(host)
                self.directory.lookup(address)
                return self._document(address.host, path)
            if channel is Channel.DIRECT:
                if is_onion_host(host) or is_gateway_host(host):
                    raise ChannelMismatch(f"Direct connections reach only clearnet hosts, not {host}")
                return self._tamper((host,), self._document(host, path))
            if channel is Channel.TOR2WEB_PROXY:
                address = onion_from_gateway_host(host)
                # the gateway is a Tor client and authenticates the service itself
                authenticate_service_key(address, self.directory.lookup(address))
                body = self._document(address.host, path)
                return self._tamper((host, address.host), body)
        raise ChannelMismatch(f"Unknown channel {channel!r}")

    def fetch(self, url: str, channel: Channel) -> Document:
        """
        Fetch a URL over a channel

        Onion circuits look the service key up in the directory and check that it
        derives to the requested address before any content is accepted.

        Raises:
            NotFound, ChannelMismatch, DirectorySelfAuthFailure
        """
        with self._lock:
            if channel is Channel.ONION_CIRCUIT:
                address = onion_host(split_url(url)[0])
                key = authenticate_service_key(address, self.lookup_service_key(address))
                return Document(self.resolve(url, channel), channel, key, url)
            return Document(self.resolve(url, channel), channel, None, url)
