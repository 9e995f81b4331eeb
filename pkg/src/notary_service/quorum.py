"""
Quorum Module
Aggregates the latest observations of several notaries into one verdict
"""

import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

from core.crypto import ZERO_DIGEST
from core.errors import InvalidThreshold
from verification.verifier import VerdictKind

from notary_service.notary_log import Observation

logger = logging.getLogger(__name__)

# verdicts a notary may vouch for
AGREEABLE_VERDICTS = frozenset({VerdictKind.AUTHENTIC, VerdictKind.SELF_CONSISTENT_UNTRUSTED})


class QuorumKind(Enum):
    AGREED = "Agreed"
    NO_QUORUM = "NoQuorum"
    CONFLICT = "Conflict"


@dataclass(frozen=True)
class QuorumResult:
    kind: QuorumKind
    descriptor_digest: Optional[str] = None
    signer_fingerprint: Optional[str] = None
    support: int = 0
    threshold: int = 0

    def to_dict(self):
        return {
            "quorum": self.kind.value,
            "descriptor_digest": self.descriptor_digest,
            "signer_fingerprint": self.signer_fingerprint,
            "support": self.support,
            "threshold": self.threshold,
        }


def default_threshold(n: int) -> int:
    """Simple majority"""
    return n // 2 + 1


def quorum_verdict(reports: Sequence[Tuple[str, Optional[Observation]]],
                   threshold: Optional[int] = None) -> QuorumResult:
    """
    Decide whether enough notaries agree on a binding

    Args:
        reports: (notary_id, latest Observation or None if the notary had none)
        threshold (int): k; defaults to floor(n/2) + 1

    Returns:
        QuorumResult: Agreed on (digest, signer) when at least k notaries vouch for it,
        Conflict when two different non-zero digests each reach k, else NoQuorum

    Raises:
        InvalidThreshold: k < 1 or k > n
    """
    n = len(reports)
    k = default_threshold(n) if threshold is None else threshold
    if k < 1 or k > n:
        raise InvalidThreshold(f"Quorum threshold {k} is outside 1..{n}")

    zero = ZERO_DIGEST.hex()
    support = Counter(
        (obs.descriptor_digest, obs.signer_fingerprint)
        for _, obs in reports
        if obs is not None and obs.verdict in AGREEABLE_VERDICTS and obs.descriptor_digest != zero
    )
    reached = [(pair, count) for pair, count in support.most_common() if count >= k]
    if len({digest for (digest, _), _ in reached}) > 1:
        logger.warning(f"Notary conflict: {len(reached)} bindings each reached {k} of {n}")
        return QuorumResult(QuorumKind.CONFLICT, support=reached[0][1], threshold=k)
    if reached:
        (digest, signer), count = reached[0]
        return QuorumResult(QuorumKind.AGREED, digest, signer, count, k)
    best = support.most_common(1)[0][1] if support else 0
    return QuorumResult(QuorumKind.NO_QUORUM, support=best, threshold=k)
