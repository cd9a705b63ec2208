import numpy as np
import pytest

from otto_align.embedding_io import SentencePairRecord


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_record(rng, m, n, dim=16, pair_id="pair", labels=None):
    """Random record with well-separated word vectors."""
    src = rng.normal(size=(m, dim))
    tgt = rng.normal(size=(n, dim))
    return SentencePairRecord(
        pair_id=pair_id,
        src_words=[f"s{i}" for i in range(m)],
        tgt_words=[f"t{j}" for j in range(n)],
        src_emb=src,
        tgt_emb=tgt,
        labels=labels or {},
    ).validate()


def matched_record(rng, m, dim=64, noise=0.05, pair_id="pair"):
    """Record whose target is a noisy copy of the source, word for word."""
    src = rng.normal(size=(m, dim))
    tgt = src + noise * rng.normal(size=(m, dim))
    return SentencePairRecord(
        pair_id=pair_id,
        src_words=[f"s{i}" for i in range(m)],
        tgt_words=[f"t{j}" for j in range(m)],
        src_emb=src,
        tgt_emb=tgt,
    ).validate()


def with_target(record, tgt_emb):
    n = tgt_emb.shape[0]
    return SentencePairRecord(
        pair_id=record.pair_id,
        src_words=record.src_words,
        tgt_words=[f"t{j}" for j in range(n)],
        src_emb=record.src_emb,
        tgt_emb=tgt_emb,
        labels=record.labels,
    ).validate()
