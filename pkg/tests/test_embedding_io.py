import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otto_align.embedding_io import (
    TokenizedSide,
    parse_record_line,
    pool_to_words,
    read_records,
    record_to_json,
    write_records,
)
from otto_align.errors import (
    DimensionMismatch,
    MappingGap,
    ParseError,
    ZeroNormWord,
)
from conftest import make_record


def side(words, embeddings, mapping):
    return TokenizedSide(words=words,
                         token_embeddings=np.asarray(embeddings, dtype=np.float64),
                         token_to_word=mapping)


class TestPoolToWords:
    def test_two_tokens_one_word(self):
        pooled = pool_to_words(side(["w"], [[1.0, 0.0], [0.0, 1.0]], [0, 0]))
        assert np.allclose(pooled, [[0.5, 0.5]])

    def test_identity_mapping(self, rng):
        tokens = rng.normal(size=(4, 8))
        pooled = pool_to_words(side(list("abcd"), tokens, [0, 1, 2, 3]))
        assert np.array_equal(pooled, tokens)

    def test_uneven_groups(self):
        pooled = pool_to_words(side(["a", "b"], [[2, 0], [4, 0], [1, 1]], [0, 0, 1]))
        assert np.allclose(pooled, [[3, 0], [1, 1]])

    def test_mapping_gap(self):
        with pytest.raises(MappingGap):
            pool_to_words(side(["a", "b"], [[1, 0], [0, 1]], [0, 0]))

    def test_zero_norm_pooled_word(self):
        with pytest.raises(ZeroNormWord):
            pool_to_words(side(["a"], [[1.0, 0.0], [-1.0, 0.0]], [0, 0]))

    def test_non_monotone_mapping_rejected(self):
        with pytest.raises(ParseError):
            pool_to_words(side(["a", "b"], [[1, 0], [0, 1]], [1, 0]))

    def test_mapping_length_mismatch(self):
        with pytest.raises(ParseError):
            pool_to_words(side(["a"], [[1, 0], [0, 1]], [0]))

    def test_normalize_before_pool_changes_result(self):
        s = side(["w"], [[2.0, 0.0], [0.0, 1.0]], [0, 0])
        raw = pool_to_words(s)
        normed = pool_to_words(s, normalize_before_pool=True)
        assert np.allclose(raw, [[1.0, 0.5]])
        assert np.allclose(normed, [[0.5, 0.5]])

    @settings(max_examples=50, deadline=None)
    @given(perm=st.permutations(list(range(6))))
    def test_permutation_invariant_within_group(self, perm):
        rng = np.random.default_rng(7)
        tokens = rng.normal(size=(6, 5))
        mapping = [0, 0, 0, 1, 1, 1]
        base = pool_to_words(side(["a", "b"], tokens, mapping))
        # Permute tokens only inside their word groups.
        grouped = sorted(range(6), key=lambda i: (mapping[i], perm[i]))
        shuffled = pool_to_words(side(["a", "b"], tokens[grouped], mapping))
        assert np.allclose(base, shuffled, atol=1e-12, rtol=0)


class TestRecordRoundTrip:
    def test_write_read_bit_identical(self, rng, tmp_path):
        records = [make_record(rng, 3, 2, dim=4, pair_id="a"),
                   make_record(rng, 5, 6, dim=7, pair_id="b",
                               labels={"hallucination": 2})]
        path = tmp_path / "records.jsonl"
        assert write_records(records, path) == 2
        loaded = list(read_records(path))
        assert len(loaded) == 2
        for orig, back in zip(records, loaded):
            assert back.pair_id == orig.pair_id
            assert back.src_words == orig.src_words
            assert np.array_equal(back.src_emb, orig.src_emb)
            assert np.array_equal(back.tgt_emb, orig.tgt_emb)
            assert back.labels == orig.labels

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert list(read_records(path)) == []

    def test_token_level_record_is_pooled(self):
        line = json.dumps({
            "pair_id": "p", "src_words": ["a"], "tgt_words": ["x", "y"],
            "src_emb": [[2, 0], [4, 0]], "src_token_to_word": [0, 0],
            "tgt_emb": [[1, 0], [0, 1]],
        })
        record = parse_record_line(line)
        assert np.allclose(record.src_emb, [[3, 0]])
        assert record.tgt_emb.shape == (2, 2)

    def test_serialized_floats_round_trip_exactly(self, rng):
        record = make_record(rng, 2, 2, dim=3)
        again = parse_record_line(record_to_json(record))
        assert np.array_equal(again.src_emb, record.src_emb)


class TestValidation:
    def test_dimension_mismatch_across_sides(self):
        line = json.dumps({"pair_id": "p", "src_words": ["a"], "tgt_words": ["x"],
                           "src_emb": [[1, 0, 0, 0]], "tgt_emb": [[1, 0, 0, 0, 0]]})
        with pytest.raises(DimensionMismatch):
            parse_record_line(line)

    def test_zero_norm_row_rejected(self):
        line = json.dumps({"pair_id": "p", "src_words": ["a", "b"], "tgt_words": ["x"],
                           "src_emb": [[1, 0], [0, 0]], "tgt_emb": [[1, 0]]})
        with pytest.raises(ZeroNormWord):
            parse_record_line(line)

    def test_parse_error_carries_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"pair_id": "ok", "src_words": ["a"], "tgt_words": ["x"], '
                        '"src_emb": [[1, 0]], "tgt_emb": [[1, 0]]}\n'
                        "not json\n")
        with pytest.raises(ParseError) as excinfo:
            list(read_records(path))
        assert excinfo.value.line == 2

    def test_word_count_embedding_rows_must_match(self):
        line = json.dumps({"pair_id": "p", "src_words": ["a", "b"], "tgt_words": ["x"],
                           "src_emb": [[1, 0]], "tgt_emb": [[1, 0]]})
        with pytest.raises(ParseError):
            parse_record_line(line)

    def test_uniform_dim_stream(self, rng, tmp_path):
        path = tmp_path / "mixed.jsonl"
        write_records([make_record(rng, 2, 2, dim=4, pair_id="a"),
                       make_record(rng, 2, 2, dim=6, pair_id="b")], path)
        assert len(list(read_records(path))) == 2
        with pytest.raises(DimensionMismatch):
            list(read_records(path, uniform_dim=True))

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            list(read_records(tmp_path / "x", format="csv"))

    def test_min_dimension(self):
        line = json.dumps({"pair_id": "p", "src_words": ["a"], "tgt_words": ["x"],
                           "src_emb": [[1.0]], "tgt_emb": [[1.0]]})
        with pytest.raises(ParseError):
            parse_record_line(line)
