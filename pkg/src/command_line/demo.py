"""
Demo Module
A loopback simnet with one honest site pair and one attacked site pair
"""

import logging
from dataclasses import dataclass
from datetime import timedelta
from typing import Optional

from binding_descriptor.descriptor import WELL_KNOWN_PATH, armor, build_descriptor, sign_descriptor
from core.crypto import digest
from core.timeutil import Clock, utc_now
from onion_identity.onion_id import ServiceIdentity, generate_identity
from simulated_network.sim_net import DirectoryOverride, SimNetwork
from web_of_trust.trust_store import OwnerTrust, TrustStore

logger = logging.getLogger(__name__)

HONEST_HOST = "cupcakebridge.example"
ATTACKED_HOST = "lemonpress.example"


@dataclass
class DemoSite:
    clearnet_url: str
    identity: ServiceIdentity

    @property
    def onion_address(self):
        return self.identity.onion_address


@dataclass
class DemoSetup:
    net: SimNetwork
    honest: DemoSite
    attacked: DemoSite
    attacker: ServiceIdentity


def publish_pair(net: SimNetwork, clearnet_url: str, identity: ServiceIdentity,
                 clock: Clock = utc_now, lifetime: timedelta = timedelta(days=90)) -> str:
    """Sign a binding with the onion service key and serve it on both sites"""
    descriptor = build_descriptor(clearnet_url, identity.onion_address, clock(), lifetime)
    body = armor(sign_descriptor(descriptor, identity)).encode("utf-8")
    host = clearnet_url.split("://", 1)[1].split("/", 1)[0]
    net.register_site(host, WELL_KNOWN_PATH, body)
    net.register_site(identity.onion_address, WELL_KNOWN_PATH, body, identity)
    return body.decode("utf-8")


def build_demo(seed: Optional[bytes] = None, clock: Clock = utc_now) -> DemoSetup:
    """
    Two published pairs; the second has its directory entry replaced by an attacker key

    Args:
        seed (bytes): Optional 32-byte seed for reproducible identities
    """
    def make(label: bytes) -> ServiceIdentity:
        return generate_identity(digest(seed + label) if seed is not None else None)

    net = SimNetwork()
    honest = DemoSite(f"https://{HONEST_HOST}", make(b"honest"))
    attacked = DemoSite(f"https://{ATTACKED_HOST}", make(b"attacked"))
    attacker = make(b"attacker")
    publish_pair(net, honest.clearnet_url, honest.identity, clock)
    publish_pair(net, attacked.clearnet_url, attacked.identity, clock)
    net.install_adversary(DirectoryOverride(attacked.onion_address, attacker.public_key))
    logger.info(f"Demo network: honest {honest.onion_address}, attacked {attacked.onion_address}")
    return DemoSetup(net, honest, attacked, attacker)


def demo_trust_store(setup: DemoSetup, path=None) -> TrustStore:
    """Trust store whose owner ultimately trusts both site signers"""
    store = TrustStore(path)
    for site in (setup.honest, setup.attacked):
        fpr = store.add_key(site.identity.public_key)
        store.set_owner_trust(fpr, OwnerTrust.ULTIMATE)
    return store
