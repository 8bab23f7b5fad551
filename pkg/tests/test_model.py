# coding=utf-8
"""
分词、多粒度语义单元、用户塔、商品塔与双塔模型
"""

import numpy as np
import pytest

from shopradar.core.errors import DataError, IndexFormatError, InvalidParameterError, ShapeError
from shopradar.model.item_tower import read_embeddings, write_embeddings
from shopradar.model.query import MGS_ROWS, build_mgs
from shopradar.model.towers import TwoTowerModel, score
from shopradar.model.user_tower import encode_behaviors, query_attention
from shopradar.model.vocab import Vocab, tokenize
from shopradar.numerics import Tensor
from shopradar.numerics.layers import set_param


def first_warm_user(corpus):
    for user in corpus.users.values():
        if user.realtime_seq and user.historical_queries:
            return user
    raise AssertionError("tiny corpus has no warm user")


class TestTokenizer:

    def test_lowercase_segments_and_chars(self):
        segments = tokenize("Red  DRESS")
        assert [s.text for s in segments] == ["red", "dress"]
        assert segments[1].chars == ["d", "r", "e", "s", "s"]

    @pytest.mark.parametrize("text", ["", "   ", None])
    def test_empty_query(self, text):
        with pytest.raises(InvalidParameterError):
            tokenize(text)

    def test_single_char_segment_degrades_to_char(self):
        vocab = Vocab(["<oov>", "ab", "x"], ngram_buckets=16)
        batch = vocab.encode_queries(["ab x"])
        assert batch.bigram_is_char[0].tolist() == [False, True]
        assert batch.bigrams[0, 1] == 0
        assert batch.bigram_chars[0, 1] == vocab.char_id("x")
        assert 1 <= batch.bigrams[0, 0] < 16

    def test_unknown_segment_maps_to_oov(self):
        vocab = Vocab(["<oov>", "ab"], ngram_buckets=16)
        assert vocab.encode_queries(["zz ab"]).segments[0].tolist() == [0, 1]

    def test_history_capped_to_latest(self):
        vocab = Vocab(["<oov>", "ab", "cd", "ef"], ngram_buckets=16)
        batch = vocab.encode_queries(["ab"], [["ab", "cd", "ef"]], max_history=2)
        assert batch.history_mask[0].tolist() == [True, True]
        assert batch.history[0, :, 0].tolist() == [2, 3]


class TestQuerySemantics:

    def test_shapes_and_mix_row(self, model, corpus):
        user = first_warm_user(corpus)
        sem = model.encode_semantics([corpus.queries[0].text], [user])
        assert sem.q_mgs.shape == (1, len(MGS_ROWS), 8)
        five = sum(sem.rows[name].data for name in MGS_ROWS[:5])
        np.testing.assert_allclose(sem.rows["q_mix"].data, five, rtol=1e-5, atol=1e-6)
        np.testing.assert_allclose(sem.his_weights.sum(axis=-1), 1.0, rtol=1e-5)

    def test_no_history_gives_zero_row(self, model, corpus):
        sem = model.encode_semantics([corpus.queries[0].text], [None])
        np.testing.assert_allclose(sem.rows["q_his_seq"].data, 0.0)
        np.testing.assert_allclose(sem.his_weights, 0.0)

    def test_disabled_units_repeat_segment_mean(self, corpus, make_model_config):
        model = TwoTowerModel.from_corpus(corpus, make_model_config(use_mgs=False), seed=3)
        sem = model.encode_semantics([corpus.queries[2].text], [None])
        for row in range(len(MGS_ROWS)):
            np.testing.assert_allclose(sem.q_mgs.data[0, row], sem.rows["q_seg"].data[0])

    def test_build_mgs_selects_one_query(self, model, corpus):
        texts = [corpus.queries[i].text for i in range(3)]
        batch = model.vocab.encode_queries(texts)
        whole = build_mgs(model.query, batch)
        single = build_mgs(model.query, batch, index=1)
        assert single.q_mgs.shape == (1, 6, 8)
        np.testing.assert_allclose(single.q_mgs.data[0], whole.q_mgs.data[1])


class TestUserTower:

    def test_query_attention_skips_masked_values(self, rng):
        q = Tensor(rng.normal(size=(1, 6, 4)))
        values = Tensor(rng.normal(size=(1, 3, 4)))
        out, weights = query_attention(q, values, np.array([[True, False, True]]), scaled=False)
        assert weights.shape == (1, 6, 4)
        np.testing.assert_allclose(weights[..., 2], 0.0)
        np.testing.assert_allclose(weights.sum(axis=-1), 1.0, rtol=1e-5)

    def test_cold_user_attends_zero_row(self, model, corpus):
        sem = model.encode_semantics([corpus.queries[0].text], [None])
        behaviors = encode_behaviors([None], model.config)
        h_real = model.user.realtime_repr(sem.q_mgs, behaviors.realtime, behaviors.realtime_mask)
        h_short = model.user.shortterm_repr(sem.q_mgs, behaviors.short, behaviors.short_mask)
        h_long = model.user.longterm_repr(sem.q_mgs, behaviors.long)
        for h in (h_real, h_short, h_long):
            np.testing.assert_allclose(h.data, 0.0)
        np.testing.assert_allclose(model.user.last_weights["realtime"], 1.0)
        out = model.encode_users([corpus.queries[0].text], [None])
        assert out.shape == (1, 8)
        assert np.all(np.isfinite(out.data))

    def test_realtime_weights_cover_sequence(self, model, corpus):
        user = first_warm_user(corpus)
        model.encode_users([corpus.queries[0].text], [user])
        weights = model.user.last_weights["realtime"]
        assert weights.shape == (1, 6, len(user.realtime_seq) + 1)
        np.testing.assert_allclose(weights.sum(axis=-1), 1.0, rtol=1e-5)

    def test_mean_fusion(self, corpus, make_model_config, rng):
        model = TwoTowerModel.from_corpus(corpus, make_model_config(fusion="mean"), seed=3)
        parts = [Tensor(rng.normal(size=(2, 6, 8))) for _ in range(4)]
        fused = model.user.fuse(*parts).data
        expected = np.concatenate([p.data for p in parts], axis=1).mean(axis=1)
        np.testing.assert_allclose(fused, expected, rtol=1e-5)

    def test_fusion_shape_mismatch(self, model, rng):
        good = Tensor(rng.normal(size=(1, 6, 8)))
        with pytest.raises(ShapeError):
            model.user.fuse(good, good, good, Tensor(rng.normal(size=(1, 5, 8))))

    def test_dropout_only_in_training(self, model, corpus):
        user = first_warm_user(corpus)
        text = corpus.queries[0].text
        a = model.encode_users([text], [user]).data
        b = model.encode_users([text], [user]).data
        np.testing.assert_array_equal(a, b)
        trained = model.encode_users([text], [user], rng=np.random.default_rng(0), training=True).data
        assert not np.allclose(a, trained)


class TestItemTower:

    def test_zero_projection_leaves_id_embedding(self, model):
        set_param(model.params, "item.w_t", np.zeros((8, 8)))
        out = model.encode_items([0, 5, 9]).data
        np.testing.assert_allclose(out, model.params["item.id"].data[[1, 6, 10]])

    def test_title_term_bounded(self, model):
        ids = np.arange(model.sizes.n_items)
        diff = model.encode_items(ids).data - model.params["item.id"].data[ids + 1]
        assert np.all(np.abs(diff) <= 1.0 + 1e-6)

    def test_title_order_does_not_matter(self, model):
        titles = np.array([[5, 9, 17, 0], [17, 5, 9, 0]])
        mask = np.array([[True, True, True, False]] * 2)
        out = model.item(np.array([4, 4]), titles, mask).data
        np.testing.assert_allclose(out[0], out[1], rtol=1e-5, atol=1e-6)

    def test_empty_title(self, model):
        with pytest.raises(DataError) as exc:
            model.item(np.array([3]), np.zeros((1, 2), dtype=np.int64), np.zeros((1, 2), dtype=bool))
        assert exc.value.code == "EMPTY_TITLE"

    def test_unknown_item(self, model):
        with pytest.raises(DataError) as exc:
            model.encode_items([0, 999])
        assert exc.value.code == "DANGLING_REFERENCE"

    def test_export_matches_direct_encoding(self, model):
        matrix = model.export_item_matrix()
        assert matrix.shape == (200, 8)
        assert matrix.dtype == np.float32
        for item_id in range(200):
            assert np.array_equal(matrix[item_id], model.item_repr(item_id).data.astype(np.float32)[0]), item_id


class TestTwoTowerModel:

    def test_score_is_inner_product(self):
        assert score(Tensor([1.0, 2.0]), Tensor([3.0, 4.0])).item() == pytest.approx(11.0)
        assert score(Tensor([1.0, 0.0]), Tensor([0.0, 1.0])).item() == 0.0

    def test_checkpoint_restores_outputs(self, model, corpus, model_config, tmp_path):
        path = tmp_path / "model.mgd"
        model.save(str(path))
        other = TwoTowerModel.from_corpus(corpus, model_config, seed=99).load(str(path))
        text = corpus.queries[4].text
        user = first_warm_user(corpus)
        np.testing.assert_allclose(other.encode_users([text], [user]).data,
                                   model.encode_users([text], [user]).data, rtol=1e-6)
        np.testing.assert_allclose(other.export_item_matrix(), model.export_item_matrix(), rtol=1e-6)

    def test_embedding_file_round_trip(self, model, tmp_path):
        path = tmp_path / "items.mge"
        matrix = model.export_all_items(str(path))
        np.testing.assert_array_equal(read_embeddings(str(path)), matrix)

    def test_embedding_file_errors(self, tmp_path, rng):
        path = tmp_path / "items.mge"
        write_embeddings(str(path), rng.normal(size=(4, 3)))
        raw = path.read_bytes()
        path.write_bytes(b"XXXX" + raw[4:])
        with pytest.raises(IndexFormatError):
            read_embeddings(str(path))
        path.write_bytes(raw[:-4])
        with pytest.raises(IndexFormatError):
            read_embeddings(str(path))
        with pytest.raises(IndexFormatError):
            read_embeddings(str(tmp_path / "missing.mge"))

    def test_describe(self, model):
        info = model.describe()
        assert info["sizes"]["n_items"] == 200
        assert info["parameters"] == model.params.num_values() > 0
