"""Embedding extraction producing the otto-align record format."""

from .extract import (
    ConfigError,
    ExtractorConfig,
    ExtractStats,
    SentencePair,
    extract,
    group_tokens,
    read_pairs_jsonl,
    read_pairs_tsv,
    resolve_layer,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ExtractorConfig", "ExtractStats", "SentencePair",
    "extract", "group_tokens", "read_pairs_jsonl", "read_pairs_tsv",
    "resolve_layer",
]
