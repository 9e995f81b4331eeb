"""
Vanity Search Module
Generates fresh keypairs until the derived onion address starts with a chosen prefix
"""

import logging
import secrets
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Tuple

import numpy as np

from core.crypto import digest
from core.errors import InvalidPrefix, SearchExhausted
from onion_identity.onion_id import (
    BASE32_ALPHABET,
    ServiceIdentity,
    generate_identity,
)

logger = logging.getLogger(__name__)

MAX_PREFIX_LENGTH = 8
DEFAULT_MAX_TRIALS = 10_000_000
# trials per worker per round in parallel mode
BATCH_SIZE = 4096


def validate_prefix(prefix: str) -> str:
    """Normalize a vanity prefix to lowercase and check it against the base32 alphabet"""
    if not prefix:
        raise InvalidPrefix("Vanity prefix must not be empty")
    normalized = prefix.lower()
    for i, char in enumerate(normalized):
        if char not in BASE32_ALPHABET:
            raise InvalidPrefix(f"Invalid base32 character {char!r} in prefix", i)
    if len(normalized) > MAX_PREFIX_LENGTH:
        raise InvalidPrefix(f"Prefix longer than {MAX_PREFIX_LENGTH} characters is impractical")
    return normalized


def expected_vanity_trials(prefix: str) -> int:
    """Mean number of trials for a prefix: each character matches with probability 1/32"""
    return 32 ** len(validate_prefix(prefix))


def _trial_seed(base_seed: bytes, index: int) -> bytes:
    return digest(base_seed + index.to_bytes(8, "big"))


def _search_range(prefix: str, base_seed: bytes, start: int, count: int) -> Tuple[Optional[int], int]:
    """Worker body: scan trial indices [start, start + count); returns (hit index, trials used)"""
    for offset in range(count):
        index = start + offset
        identity = generate_identity(_trial_seed(base_seed, index))
        if identity.onion_address.label.startswith(prefix):
            return index, offset + 1
    return None, count


def vanity_search(prefix: str, max_trials: int = DEFAULT_MAX_TRIALS,
                  seed: Optional[bytes] = None, jobs: int = 1) -> Tuple[ServiceIdentity, int]:
    """
    Find an identity whose onion address starts with prefix

    Args:
        prefix (str): Desired base32 prefix (1-8 characters)
        max_trials (int): Trial budget
        seed (bytes): Optional entropy; single-worker seeded searches are deterministic
        jobs (int): Number of worker processes

    Returns:
        tuple: (identity, trials consumed across all workers)
    """
    prefix = validate_prefix(prefix)
    if max_trials < 1:
        raise ValueError("max_trials must be positive")
    if jobs < 1:
        raise ValueError("jobs must be positive")

    if jobs == 1:
        trials = 0
        while trials < max_trials:
            trial_seed = _trial_seed(seed, trials) if seed is not None else None
            identity = generate_identity(trial_seed)
            trials += 1
            if identity.onion_address.label.startswith(prefix):
                logger.info(f"Vanity prefix {prefix!r} found after {trials} trials")
                return identity, trials
        raise SearchExhausted(trials)

    base_seed = seed if seed is not None else secrets.token_bytes(32)
    return _parallel_search(prefix, max_trials, base_seed, jobs)


def _parallel_search(prefix: str, max_trials: int, base_seed: bytes,
                     jobs: int) -> Tuple[ServiceIdentity, int]:
    consumed = 0
    next_index = 0
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        while next_index < max_trials:
            futures = []
            for _ in range(jobs):
                count = min(BATCH_SIZE, max_trials - next_index)
                if count <= 0:
                    break
                futures.append(pool.submit(_search_range, prefix, base_seed, next_index, count))
                next_index += count
            hits = []
            for future in futures:
                hit, used = future.result()
                consumed += used
                if hit is not None:
                    hits.append(hit)
            if hits:
                identity = generate_identity(_trial_seed(base_seed, min(hits)))
                logger.info(f"Vanity prefix {prefix!r} found after {consumed} trials on {jobs} workers")
                return identity, consumed
    raise SearchExhausted(consumed)


def vanity_candidates(prefix: str, count: int, max_trials: int = DEFAULT_MAX_TRIALS,
                      seed: Optional[bytes] = None) -> List[Tuple[ServiceIdentity, int]]:
    """
    Collect several matching identities so the most readable address can be picked

    Args:
        prefix (str): Desired prefix
        count (int): Number of matches wanted
        max_trials (int): Total trial budget
        seed (bytes): Optional entropy for a deterministic run

    Returns:
        list: (identity, trial number) pairs in discovery order
    """
    prefix = validate_prefix(prefix)
    if count < 1:
        raise ValueError("count must be positive")
    found: List[Tuple[ServiceIdentity, int]] = []
    for trial in range(max_trials):
        identity = generate_identity(_trial_seed(seed, trial) if seed is not None else None)
        if identity.onion_address.label.startswith(prefix):
            found.append((identity, trial + 1))
            if len(found) == count:
                return found
    if not found:
        raise SearchExhausted(max_trials)
    logger.warning(f"Only {len(found)} of {count} candidates found in {max_trials} trials")
    return found


def vanity_statistics(prefix: str, runs: int, seed: Optional[bytes] = None) -> Dict[str, float]:
    """
    Monte Carlo estimate of the search cost for a prefix

    Returns:
        dict: mean, std and expected trial counts over the runs
    """
    prefix = validate_prefix(prefix)
    expected = 32 ** len(prefix)
    budget = expected * 64
    trials = np.empty(runs, dtype=np.int64)
    for run in range(runs):
        run_seed = digest(seed + b"run" + run.to_bytes(4, "big")) if seed is not None else None
        _, trials[run] = vanity_search(prefix, max_trials=budget, seed=run_seed)
    return {
        "runs": float(runs),
        "mean": float(trials.mean()),
        "std": float(trials.std(ddof=1)) if runs > 1 else 0.0,
        "expected": float(expected),
    }
