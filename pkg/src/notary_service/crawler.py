"""
Crawler Module
Periodically observes a fixed list of site pairs into a notary log
"""

import logging
import threading
from typing import Optional, Sequence

from core.timeutil import Clock, utc_now
from simulated_network.sim_net import Transport
from web_of_trust.trust_store import TrustStore

from notary_service.notary_log import NotaryLog, SitePair

logger = logging.getLogger(__name__)


def run_crawl(log: NotaryLog, net: Transport, store: TrustStore, targets: Sequence[SitePair],
              interval: float, cycles: Optional[int] = None,
              stop_event: Optional[threading.Event] = None, clock: Clock = utc_now) -> int:
    """
    Observe every target once per cycle, in input order

    Args:
        log (NotaryLog): Log to append to (the crawler is its only writer)
        net: Transport to verify over
        store (TrustStore): The notary's trust store
        targets: Site pairs to check
        interval (float): Seconds to wait between cycles
        cycles (int): Stop after this many cycles; None runs until stop_event is set
        stop_event: Event that ends the crawl early

    Returns:
        int: Number of observations appended
    """
    stop_event = stop_event or threading.Event()
    appended = 0
    cycle = 0
    while cycles is None or cycle < cycles:
        for pair in targets:
            if stop_event.is_set():
                return appended
            try:
                log.observe(net, store, pair, clock)
            except Exception as e:
                # one bad target must not end the crawl
                logger.error(f"Observation of {pair.onion_address} failed, recording Missing: {e!r}")
                log.record_failure(pair, clock())
            appended += 1
        cycle += 1
        logger.info(f"Crawl cycle {cycle} done: {len(targets)} targets")
        if cycles is not None and cycle >= cycles:
            break
        if stop_event.wait(interval):
            break
    return appended
