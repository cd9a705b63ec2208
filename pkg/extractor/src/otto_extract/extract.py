"""Token-level embedding extraction from pretrained multilingual encoders.

Produces the JSONL record format consumed by the alignment toolkit: one
object per sentence pair carrying token embeddings from a chosen hidden
layer plus token-to-word index maps derived from the tokenizer's word-id
mechanism. Special tokens (sequence delimiters, padding) carry no word
identity and are dropped from both the map and the matrix.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

log = logging.getLogger("otto_extract")


class ConfigError(ValueError):
    """Extraction configuration is inconsistent with the loaded model."""


@dataclass(frozen=True)
class ExtractorConfig:
    model: str                     # model name or local path
    layer: int | str = "last"      # hidden-state index, 0 = embedding layer
    device: str = "cpu"
    batch_size: int = 8
    segmentation: str = "whitespace"  # or "provided" (word lists in the input)


@dataclass
class ExtractStats:
    written: int = 0
    skipped: int = 0


@dataclass(frozen=True)
class SentencePair:
    pair_id: str
    src_words: list[str]
    tgt_words: list[str]


def resolve_layer(num_hidden_layers: int, layer: int | str) -> int:
    """Map the layer selector onto a hidden-state index, before any inference."""
    if layer == "last":
        return num_hidden_layers
    index = int(layer)
    if not 0 <= index <= num_hidden_layers:
        raise ConfigError(
            f"layer {index} outside this model's range 0..{num_hidden_layers}")
    return index


def group_tokens(word_ids: Sequence[int | None], num_words: int) -> list[int] | None:
    """Positions' word indices with specials dropped; None if a word vanished.

    A word can end up with no tokens (exotic characters the tokenizer strips,
    or truncation); such records are skipped rather than emitted with gaps.
    """
    mapping = [w for w in word_ids if w is not None]
    if sorted(set(mapping)) != list(range(num_words)):
        return None
    return mapping


def read_pairs_tsv(path: str | Path) -> Iterator[SentencePair]:
    """Tab-separated source/target sentences, whitespace-segmented."""
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            src_text, sep, tgt_text = line.partition("\t")
            if not sep:
                raise ValueError(f"line {lineno}: expected 'source<TAB>target'")
            yield SentencePair(pair_id=str(lineno), src_words=src_text.split(),
                               tgt_words=tgt_text.split())


def read_pairs_jsonl(path: str | Path) -> Iterator[SentencePair]:
    """JSON objects with pair_id and pre-segmented word lists."""
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            yield SentencePair(pair_id=str(obj.get("pair_id", lineno)),
                               src_words=[str(w) for w in obj["src_words"]],
                               tgt_words=[str(w) for w in obj["tgt_words"]])


def load_encoder(config: ExtractorConfig):
    import torch
    from transformers import AutoModel, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(config.model)
    if not tokenizer.is_fast:
        raise ConfigError("a fast tokenizer is required for word-id mapping")
    model = AutoModel.from_pretrained(config.model)
    layer = resolve_layer(model.config.num_hidden_layers, config.layer)
    model.to(torch.device(config.device))
    model.eval()
    return tokenizer, model, layer


def _encode_batch(word_lists, tokenizer, model, layer, device):
    import torch

    encoded = tokenizer(word_lists, is_split_into_words=True, padding=True,
                        truncation=True, return_tensors="pt")
    with torch.no_grad():
        output = model(**encoded.to(device), output_hidden_states=True)
    hidden = output.hidden_states[layer].cpu().numpy()
    sides = []
    for index, words in enumerate(word_lists):
        word_ids = encoded.word_ids(index)
        keep = [pos for pos, w in enumerate(word_ids) if w is not None]
        mapping = group_tokens(word_ids, len(words))
        sides.append(None if mapping is None else (hidden[index, keep, :], mapping))
    return sides


def _batches(items: list, size: int) -> Iterator[list]:
    for start in range(0, len(items), size):
        yield items[start:start + size]


def extract(pairs: Iterable[SentencePair], config: ExtractorConfig,
            output: str | Path) -> ExtractStats:
    """Write one record per extractable pair; skip and log the rest."""
    tokenizer, model, layer = load_encoder(config)
    stats = ExtractStats()
    pair_list = [p for p in pairs]
    with open(output, "w", encoding="utf-8") as sink:
        for batch in _batches(pair_list, config.batch_size):
            src_sides = _encode_batch([p.src_words for p in batch],
                                      tokenizer, model, layer, config.device)
            tgt_sides = _encode_batch([p.tgt_words for p in batch],
                                      tokenizer, model, layer, config.device)
            for pair, src, tgt in zip(batch, src_sides, tgt_sides):
                if not pair.src_words or not pair.tgt_words:
                    log.warning("skipping %s: empty side", pair.pair_id)
                    stats.skipped += 1
                    continue
                if src is None or tgt is None:
                    side = "source" if src is None else "target"
                    log.warning("skipping %s: a %s word has no tokens",
                                pair.pair_id, side)
                    stats.skipped += 1
                    continue
                record = {
                    "pair_id": pair.pair_id,
                    "src_words": pair.src_words,
                    "tgt_words": pair.tgt_words,
                    "src_emb": [[float(x) for x in row] for row in src[0]],
                    "tgt_emb": [[float(x) for x in row] for row in tgt[0]],
                    "src_token_to_word": src[1],
                    "tgt_token_to_word": tgt[1],
                }
                sink.write(json.dumps(record, ensure_ascii=False) + "\n")
                stats.written += 1
    log.info("wrote %d records, skipped %d", stats.written, stats.skipped)
    return stats
