"""Reading, validating, and word-pooling embedding records.

A record file is line-delimited JSON, one sentence pair per line:

    {"pair_id": str, "src_words": [str], "tgt_words": [str],
     "src_emb": [[float]], "tgt_emb": [[float]],
     "src_token_to_word": [int]?, "tgt_token_to_word": [int]?,
     "labels": {...}?}

When ``*_token_to_word`` is present the corresponding ``*_emb`` holds one row
per token and is mean-pooled down to words; otherwise the rows are already
word-level. Embeddings are parsed as float64 regardless of how they were
produced.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

import numpy as np

from .errors import DimensionMismatch, MappingGap, ParseError, ZeroNormWord

# Below this L2 norm a vector is considered degenerate: cosine distance to it
# is undefined, so the whole record is rejected rather than silently repaired.
ZERO_NORM_EPS = 1e-12


@dataclass
class TokenizedSide:
    """One side of a pair at token granularity, before word pooling."""

    words: list[str]
    token_embeddings: np.ndarray  # (num_tokens, D)
    token_to_word: list[int]

    def validate(self, *, pair_id: str | None = None, line: int | None = None) -> None:
        if self.token_embeddings.ndim != 2:
            raise ParseError("token embeddings must be a 2-d array", pair_id=pair_id, line=line)
        if len(self.token_to_word) != self.token_embeddings.shape[0]:
            raise ParseError(
                "token_to_word length does not match the number of embedding rows",
                pair_id=pair_id,
                line=line,
            )
        if any(b < a for a, b in zip(self.token_to_word, self.token_to_word[1:])):
            raise ParseError("token_to_word must be non-decreasing", pair_id=pair_id, line=line)
        if self.token_to_word and (
            min(self.token_to_word) < 0 or max(self.token_to_word) >= len(self.words)
        ):
            raise ParseError(
                "token_to_word indices out of range", pair_id=pair_id, line=line
            )


@dataclass
class SentencePairRecord:
    """A validated source/target pair with word-level embedding matrices."""

    pair_id: str
    src_words: list[str]
    tgt_words: list[str]
    src_emb: np.ndarray  # (m, D)
    tgt_emb: np.ndarray  # (n, D)
    labels: dict[str, Any] = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.src_emb.shape[0]

    @property
    def n(self) -> int:
        return self.tgt_emb.shape[0]

    @property
    def dim(self) -> int:
        return self.src_emb.shape[1]

    def validate(self, *, line: int | None = None) -> "SentencePairRecord":
        for name, emb, words in (
            ("src", self.src_emb, self.src_words),
            ("tgt", self.tgt_emb, self.tgt_words),
        ):
            if emb.ndim != 2 or emb.shape[0] < 1:
                raise ParseError(f"{name} embeddings must be a non-empty matrix",
                                 pair_id=self.pair_id, line=line)
            if emb.shape[0] != len(words):
                raise ParseError(
                    f"{name} has {len(words)} words but {emb.shape[0]} embedding rows",
                    pair_id=self.pair_id, line=line,
                )
            if not np.all(np.isfinite(emb)):
                raise ParseError(f"{name} embeddings contain non-finite values",
                                 pair_id=self.pair_id, line=line)
            norms = np.linalg.norm(emb, axis=1)
            if np.any(norms < ZERO_NORM_EPS):
                bad = int(np.argmin(norms))
                raise ZeroNormWord(
                    f"{name} word {bad} has near-zero norm", pair_id=self.pair_id, line=line
                )
        if self.src_emb.shape[1] != self.tgt_emb.shape[1]:
            raise DimensionMismatch(
                f"src dim {self.src_emb.shape[1]} != tgt dim {self.tgt_emb.shape[1]}",
                pair_id=self.pair_id, line=line,
            )
        if self.src_emb.shape[1] < 2:
            raise ParseError("embedding dimension must be at least 2",
                             pair_id=self.pair_id, line=line)
        return self


def pool_to_words(side: TokenizedSide, *, normalize_before_pool: bool = False,
                  pair_id: str | None = None, line: int | None = None) -> np.ndarray:
    """Mean-pool token rows into one row per word.

    Row ``w`` of the result is the arithmetic mean of all token rows mapped to
    word ``w``. Raises :class:`MappingGap` if some word receives no tokens and
    :class:`ZeroNormWord` if a pooled vector is degenerate.
    """
    side.validate(pair_id=pair_id, line=line)
    num_words = len(side.words)
    tokens = np.asarray(side.token_embeddings, dtype=np.float64)
    if normalize_before_pool:
        norms = np.linalg.norm(tokens, axis=1, keepdims=True)
        if np.any(norms < ZERO_NORM_EPS):
            raise ZeroNormWord("token row has near-zero norm", pair_id=pair_id, line=line)
        tokens = tokens / norms
    mapping = np.asarray(side.token_to_word, dtype=np.intp)
    counts = np.bincount(mapping, minlength=num_words)
    if np.any(counts == 0):
        missing = int(np.argmin(counts))
        raise MappingGap(f"word {missing} receives no tokens", pair_id=pair_id, line=line)
    pooled = np.zeros((num_words, tokens.shape[1]), dtype=np.float64)
    np.add.at(pooled, mapping, tokens)
    pooled /= counts[:, None]
    norms = np.linalg.norm(pooled, axis=1)
    if np.any(norms < ZERO_NORM_EPS):
        bad = int(np.argmin(norms))
        raise ZeroNormWord(f"pooled word {bad} has near-zero norm", pair_id=pair_id, line=line)
    return pooled


def parse_record_line(text: str, *, line: int | None = None,
                      normalize_before_pool: bool = False) -> SentencePairRecord:
    """Parse and fully validate a single JSON record line."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}", line=line) from None
    if not isinstance(obj, dict):
        raise ParseError("record line is not a JSON object", line=line)

    try:
        pair_id = str(obj["pair_id"])
        src_words = [str(w) for w in obj["src_words"]]
        tgt_words = [str(w) for w in obj["tgt_words"]]
    except KeyError as exc:
        raise ParseError(f"missing field {exc}", line=line) from None

    def side_matrix(prefix: str, words: list[str]) -> np.ndarray:
        try:
            emb = np.asarray(obj[f"{prefix}_emb"], dtype=np.float64)
        except KeyError:
            raise ParseError(f"missing field '{prefix}_emb'", pair_id=pair_id, line=line) from None
        except (TypeError, ValueError):
            raise ParseError(f"'{prefix}_emb' is not a rectangular float array",
                             pair_id=pair_id, line=line) from None
        mapping = obj.get(f"{prefix}_token_to_word")
        if mapping is None:
            return emb
        side = TokenizedSide(words=words, token_embeddings=emb,
                             token_to_word=[int(t) for t in mapping])
        return pool_to_words(side, normalize_before_pool=normalize_before_pool,
                             pair_id=pair_id, line=line)

    record = SentencePairRecord(
        pair_id=pair_id,
        src_words=src_words,
        tgt_words=tgt_words,
        src_emb=side_matrix("src", src_words),
        tgt_emb=side_matrix("tgt", tgt_words),
        labels=dict(obj.get("labels") or {}),
    )
    return record.validate(line=line)


def record_to_json(record: SentencePairRecord) -> str:
    """Serialize a word-level record to one JSON line (exact float round-trip)."""
    obj: dict[str, Any] = {
        "pair_id": record.pair_id,
        "src_words": record.src_words,
        "tgt_words": record.tgt_words,
        "src_emb": [[float(x) for x in row] for row in record.src_emb],
        "tgt_emb": [[float(x) for x in row] for row in record.tgt_emb],
    }
    if record.labels:
        obj["labels"] = record.labels
    return json.dumps(obj, ensure_ascii=False)


def read_records(path: str | Path, format: str = "jsonl", *,
                 uniform_dim: bool = False,
                 normalize_before_pool: bool = False) -> Iterator[SentencePairRecord]:
    """Yield validated records in file order.

    With ``uniform_dim`` every record must share the embedding dimension of the
    first one; a differing record raises :class:`DimensionMismatch`.
    """
    if format != "jsonl":
        raise ValueError(f"unknown record format {format!r}")
    expected_dim: int | None = None
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, text in enumerate(handle, start=1):
            if not text.strip():
                continue
            record = parse_record_line(text, line=lineno,
                                       normalize_before_pool=normalize_before_pool)
            if uniform_dim:
                if expected_dim is None:
                    expected_dim = record.dim
                elif record.dim != expected_dim:
                    raise DimensionMismatch(
                        f"record dim {record.dim} != stream dim {expected_dim}",
                        pair_id=record.pair_id, line=lineno,
                    )
            yield record


def write_records(records: Iterable[SentencePairRecord], path: str | Path) -> int:
    """Write word-level records as JSONL; returns the number written."""
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(record_to_json(record) + "\n")
            count += 1
    return count
