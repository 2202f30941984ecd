"""Near-duplicate filtering of text corpora with 64-bit SimHash"""

import json
import logging
from collections import Counter
from typing import List, Sequence, Union

from src.errors import FormatError
from src.models import DedupResult
from src.utils.config import Config

logger = logging.getLogger(__name__)

FNV_OFFSET = 14695981039346656037
FNV_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


def simhash64(text: str) -> int:
    """
    64-bit SimHash of lowercase whitespace-split unigrams

    Each distinct token votes +tf on the bits set in its FNV-1a hash and -tf
    on the others; a fingerprint bit is 1 when its vote total is positive.
    Empty text hashes to 0.
    """
    counts = Counter((text or "").lower().split())
    if not counts:
        return 0

    votes = [0] * 64
    for token, weight in counts.items():
        h = fnv1a_64(token.encode("utf-8"))
        for bit in range(64):
            votes[bit] += weight if (h >> bit) & 1 else -weight

    fingerprint = 0
    for bit, vote in enumerate(votes):
        if vote > 0:
            fingerprint |= 1 << bit
    return fingerprint


def hamming(a: int, b: int) -> int:
    return bin((a ^ b) & _MASK64).count("1")


class SimHashDeduplicator:
    """First-seen-wins near-duplicate filter"""

    def __init__(self, hamming_threshold: int = Config.HAMMING_THRESHOLD):
        """
        Initialize deduplicator

        Args:
            hamming_threshold: Largest bit distance still counted as a duplicate (0..64)
        """
        if not 0 <= hamming_threshold <= 64:
            raise ValueError(f"hamming threshold must lie in 0..64, got {hamming_threshold}")
        self.hamming_threshold = hamming_threshold

    def deduplicate(self, texts: Sequence[str]) -> DedupResult:
        """
        Scan texts in order, keeping each one not near any text kept before it

        Args:
            texts: Corpus documents

        Returns:
            Retained and duplicate indices, all fingerprints and the
            duplicate share of the corpus
        """
        fingerprints = [simhash64(t) for t in texts]
        kept: List[int] = []
        kept_prints: List[int] = []
        duplicates: List[int] = []

        # Exact fingerprint matches short-circuit the linear scan
        seen = set()
        for index, fp in enumerate(fingerprints):
            if fp in seen or any(hamming(fp, other) <= self.hamming_threshold for other in kept_prints):
                duplicates.append(index)
                continue
            kept.append(index)
            kept_prints.append(fp)
            seen.add(fp)

        rate = len(duplicates) / len(texts) if texts else 0.0
        logger.debug("dedup: %d of %d documents are duplicates", len(duplicates), len(texts))
        return DedupResult(
            retained=kept,
            duplicates=duplicates,
            fingerprints=fingerprints,
            duplication_rate=rate,
        )


def dedup_corpus(texts: Sequence[str], hamming_threshold: int = Config.HAMMING_THRESHOLD) -> DedupResult:
    return SimHashDeduplicator(hamming_threshold).deduplicate(texts)


def load_corpus(document: Union[str, bytes]) -> List[str]:
    """
    Split a corpus file into documents

    A document starting with `[` is read as a JSON array of strings;
    anything else holds one document per line (blank lines skipped).
    """
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError(f"corpus is not UTF-8: {e}") from e

    if document.lstrip().startswith("["):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as e:
            raise FormatError(f"invalid JSON corpus: {e.msg}", e.lineno) from e
        if not isinstance(data, list) or not all(isinstance(t, str) for t in data):
            raise FormatError("JSON corpus must be an array of strings")
        return data

    return [line for line in document.splitlines() if line.strip()]
