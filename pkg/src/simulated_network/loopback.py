"""
Loopback HTTP mode for the simulated network
Serves SimNetwork documents over plain HTTP, selecting the site by Host header
"""

import json
import logging
import threading
from pathlib import Path
from typing import Optional

import requests
from flask import Flask, Response, jsonify, request
from werkzeug.serving import make_server

from core.errors import AddressError, ChannelMismatch, DirectorySelfAuthFailure, NetworkError, NotFound
from onion_identity.onion_id import ServiceIdentity, validate_onion_address
from simulated_network.sim_net import (
    Channel,
    Document,
    SimNetwork,
    authenticate_service_key,
    onion_host,
    split_url,
)

logger = logging.getLogger(__name__)

CHANNEL_HEADER = "X-Sim-Channel"
DIRECTORY_PREFIX = "/_simnet/directory/"

# status codes carrying simnet errors across HTTP
STATUS_NOT_FOUND = 404
STATUS_CHANNEL_MISMATCH = 421
STATUS_SELF_AUTH_FAILURE = 502


def create_simnet_app(net: SimNetwork) -> Flask:
    """Create the Flask application fronting a simulated network"""
    app = Flask(__name__)

    @app.route(DIRECTORY_PREFIX + "<label>", methods=["GET"])
    def directory_lookup(label):
        """Directory lookup: returns the (possibly overridden) service key"""
        try:
            key = net.lookup_service_key(validate_onion_address(label))
        except (NetworkError, AddressError) as e:
            return jsonify({"error": str(e)}), STATUS_NOT_FOUND
        return jsonify({"public_key": key.hex()})

    @app.route("/", defaults={"path": ""}, methods=["GET"])
    @app.route("/<path:path>", methods=["GET"])
    def serve(path):
        host = request.host.split(":")[0]
        try:
            channel = Channel(request.headers.get(CHANNEL_HEADER, Channel.DIRECT.value))
        except ValueError:
            return jsonify({"error": "Unknown channel"}), 400
        url = f"http://{host}{request.full_path.rstrip('?')}"
        try:
            body = net.resolve(url, channel)
        except ChannelMismatch as e:
            return jsonify({"error": str(e)}), STATUS_CHANNEL_MISMATCH
        except DirectorySelfAuthFailure as e:
            return jsonify({"error": str(e)}), STATUS_SELF_AUTH_FAILURE
        except NetworkError as e:
            return jsonify({"error": str(e)}), STATUS_NOT_FOUND
        return Response(body, mimetype="text/plain")

    return app


class LoopbackServer:
    """Runs the simnet app on a loopback port in a background thread"""

    def __init__(self, net: SimNetwork, host: str = "127.0.0.1", port: int = 0):
        self.net = net
        self._server = make_server(host, port, create_simnet_app(net), threaded=True)
        self._thread: Optional[threading.Thread] = None
        self._serving = False

    @property
    def port(self) -> int:
        return self._server.server_port

    @property
    def base_url(self) -> str:
        return f"http://{self._server.server_address[0]}:{self.port}"

    def start(self) -> "LoopbackServer":
        self._serving = True
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        logger.info(f"Simnet loopback server listening on {self.base_url}")
        return self

    def serve_forever(self) -> None:
        logger.info(f"Simnet loopback server listening on {self.base_url}")
        self._serving = True
        self._server.serve_forever()

    def stop(self) -> None:
        # shutdown() blocks unless serve_forever has run
        if self._serving:
            self._server.shutdown()
            self._serving = False
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> "LoopbackServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


class LoopbackTransport:
    """
    HTTP client for a loopback simnet server

    Implements the same fetch(url, channel) contract as SimNetwork, performing
    the onion self-authentication check on the client side.
    """

    def __init__(self, base_url: str, timeout: float = 5.0,
                 session: Optional[requests.Session] = None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        if session is None:
            session = requests.Session()
            # never route loopback traffic through HTTP_PROXY
            session.trust_env = False
        self.session = session

    def _get(self, host: str, path: str, channel: Channel) -> requests.Response:
        try:
            return self.session.get(
                self.base_url + path,
                headers={"Host": host, CHANNEL_HEADER: channel.value},
                timeout=self.timeout,
                allow_redirects=False,
            )
        except requests.RequestException as e:
            raise NetworkError(f"Loopback request for {host}{path} failed: {e}") from e

    @staticmethod
    def _raise_for_status(response: requests.Response, what: str) -> None:
        if response.status_code == 200:
            return
        try:
            message = response.json().get("error", response.reason)
        except ValueError:
            message = response.reason
        if response.status_code == STATUS_CHANNEL_MISMATCH:
            raise ChannelMismatch(message)
        if response.status_code == STATUS_SELF_AUTH_FAILURE:
            raise DirectorySelfAuthFailure(message)
        if response.status_code == STATUS_NOT_FOUND:
            raise NotFound(message)
        raise NetworkError(f"{what}: HTTP {response.status_code} {message}")

    def lookup_service_key(self, address) -> bytes:
        response = self._get("directory.simnet", DIRECTORY_PREFIX + address.label, Channel.DIRECT)
        self._raise_for_status(response, f"directory lookup for {address}")
        try:
            return bytes.fromhex(response.json()["public_key"])
        except (ValueError, KeyError) as e:
            raise NetworkError(f"Malformed directory answer for {address}: {e}") from e

    def fetch(self, url: str, channel: Channel) -> Document:
        host, path = split_url(url)
        key = None
        if channel is Channel.ONION_CIRCUIT:
            address = onion_host(host)
            key = authenticate_service_key(address, self.lookup_service_key(address))
        response = self._get(host, path, channel)
        self._raise_for_status(response, f"fetch {url}")
        return Document(response.content, channel, key, url)


def publish_manifest(net: SimNetwork, manifest_path) -> int:
    """
    Register every site listed in a JSON manifest

    Each entry has "host", "path", either "body" (text) or "body_file", and
    "key_file" for onion hosts. Relative file names resolve against the manifest.

    Returns:
        int: Number of documents registered
    """
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    with open(manifest_path, "r", encoding="utf-8") as f:
        entries = json.load(f)
    for entry in entries:
        if "body_file" in entry:
            body = (base / entry["body_file"]).read_bytes()
        else:
            body = entry.get("body", "").encode("utf-8")
        identity = ServiceIdentity.load(base / entry["key_file"]) if entry.get("key_file") else None
        net.register_site(entry["host"], entry.get("path", "/"), body, identity)
    logger.info(f"Published {len(entries)} documents from {manifest_path}")
    return len(entries)
