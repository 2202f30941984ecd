"""Corpus deduplication and weight quantization helpers"""

from src.distill.quantize import absmax_delta, quantize_codes, quantize_int4
from src.distill.simhash import SimHashDeduplicator, dedup_corpus, hamming, load_corpus, simhash64

__all__ = [
    "SimHashDeduplicator",
    "absmax_delta",
    "dedup_corpus",
    "hamming",
    "load_corpus",
    "quantize_codes",
    "quantize_int4",
    "simhash64",
]
