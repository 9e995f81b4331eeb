"""
Notary Client Module
Queries remote notaries over HTTP and checks what they return
"""

import logging
from dataclasses import dataclass, field
from datetime import datetime
from typing import List, Optional

import requests

from core.errors import LogCorrupted, NotaryError
from onion_identity.onion_id import OnionAddress

from notary_service.notary_log import (
    HistoryEntry,
    KeyChange,
    LogCheck,
    Observation,
    SignedHead,
    detect_key_change,
    staleness,
    verify_history,
)

logger = logging.getLogger(__name__)


@dataclass
class NotaryAnswer:
    """One notary's answer about one onion address"""
    notary_url: str
    history: List[HistoryEntry] = field(default_factory=list)
    head: Optional[SignedHead] = None
    notary_public_key: Optional[bytes] = None
    check: Optional[LogCheck] = None
    error: Optional[str] = None

    @property
    def observations(self) -> List[Observation]:
        return [item.observation for item in self.history]

    @property
    def latest(self) -> Optional[Observation]:
        """Latest observation, only if the history checked out"""
        if self.check is None or not self.check.accepted or not self.history:
            return None
        return self.history[-1].observation

    @property
    def key_change(self) -> KeyChange:
        return detect_key_change(self.observations)

    def staleness_seconds(self, now: datetime) -> Optional[float]:
        latest = self.latest
        return staleness(latest, now).total_seconds() if latest else None


class NotaryClient:
    """
    HTTP client for a notary's /v1 API

    Args:
        base_url (str): Notary base URL
        timeout (float): Request timeout in seconds
        pinned_key (bytes): Expected notary public key; None trusts the key the notary reports
    """

    def __init__(self, base_url: str, timeout: float = 10.0, pinned_key: Optional[bytes] = None,
                 session: Optional[requests.Session] = None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.pinned_key = pinned_key
        self.session = session or requests.Session()

    def _get(self, path: str, **params) -> dict:
        try:
            response = self.session.get(f"{self.base_url}{path}", params=params, timeout=self.timeout)
        except requests.RequestException as e:
            raise NotaryError(f"Notary {self.base_url} unreachable: {e}") from e
        if response.status_code != 200:
            raise NotaryError(f"Notary {self.base_url} returned {response.status_code}: {response.text[:200]}")
        try:
            payload = response.json()
        except ValueError as e:
            raise NotaryError(f"Notary {self.base_url} returned invalid JSON") from e
        if not isinstance(payload, dict):
            raise LogCorrupted(f"Notary {self.base_url} returned {type(payload).__name__}, not an object")
        return payload

    def _head_and_key(self, data: dict) -> tuple:
        if not isinstance(data, dict):
            raise LogCorrupted(f"Notary {self.base_url} head is not an object")
        head = SignedHead.from_dict(data)
        try:
            reported_key = bytes.fromhex(data["notary_public_key"])
        except (KeyError, TypeError, ValueError) as e:
            raise LogCorrupted(f"Notary {self.base_url} head has no public key") from e
        if self.pinned_key is not None and reported_key != self.pinned_key:
            raise NotaryError(f"Notary {self.base_url} key does not match the pinned key")
        return head, reported_key

    def head(self) -> SignedHead:
        head, _ = self._head_and_key(self._get("/v1/head"))
        return head

    def history(self, onion_address: OnionAddress) -> NotaryAnswer:
        """
        Fetch and check one address's history

        Never raises for notary-side problems; they are reported in NotaryAnswer.error.
        """
        answer = NotaryAnswer(self.base_url)
        try:
            data = self._get("/v1/history", onion=str(onion_address))
            answer.head, answer.notary_public_key = self._head_and_key(data.get("head", {}))
            items = data.get("observations", [])
            if not isinstance(items, list):
                raise LogCorrupted(f"Notary {self.base_url} observations are not a list")
            answer.history = [HistoryEntry.from_dict(item) for item in items]
        except NotaryError as e:
            logger.warning(f"{e}")
            answer.error = str(e)
            return answer
        answer.check = verify_history(answer.history, answer.head, answer.notary_public_key)
        if not answer.check:
            logger.warning(f"History from {self.base_url} failed verification: {answer.check.reason}")
        return answer
