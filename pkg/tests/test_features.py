"""Tests for feature templates and the embedding table."""

import numpy as np
import pytest

from revmine.corpus import Sentence
from revmine.errors import ConfigError, ParseError
from revmine.features import (
    PAD,
    FeatureTemplateConfig,
    build_feature_index,
    extract_features,
    featurize_sentence,
    load_embeddings,
    stylistics,
    to_matrix,
)
from tests.conftest import FIXTURES

SENTENCE = Sentence.from_words(["Upload", "videos", "2x"], ["VB", "NNS", "CD"])


class TestTemplates:
    def test_window_features(self):
        vector = extract_features(SENTENCE, 0, FeatureTemplateConfig(window=1))
        features = vector.binary_features
        assert "w[0]=upload" in features
        assert f"w[-1]={PAD}" in features
        assert "w[+1]=videos" in features
        assert "pos[0]=VB" in features
        assert f"pos[-1]={PAD}" in features
        assert not any(f.startswith("w[+2]") for f in features)

    def test_affixes(self):
        features = extract_features(SENTENCE, 2, FeatureTemplateConfig()).binary_features
        assert {"pre1[0]=2", "pre2[0]=2x", "suf1[0]=x", "suf2[0]=2x"} <= features
        assert not any(f.startswith("pre3[0]") for f in features)

    def test_position_and_stylistics(self):
        config = FeatureTemplateConfig()
        assert "pos_in_sent=first" in extract_features(SENTENCE, 0, config).binary_features
        assert "pos_in_sent=inner" in extract_features(SENTENCE, 1, config).binary_features
        last = extract_features(SENTENCE, 2, config).binary_features
        assert "pos_in_sent=last" in last
        assert {"style[0]=has_digit", "style[0]=alnum"} <= last

    def test_templates_can_be_switched_off(self):
        config = FeatureTemplateConfig(window=0, affix_lengths=(), use_pos=False, use_position=False,
                                       use_stylistics=False)
        assert extract_features(SENTENCE, 0, config).binary_features == {"w[0]=upload"}

    def test_stylistics(self):
        assert stylistics("GPS") == ["init_cap", "all_caps"]
        assert stylistics("wi-fi") == ["has_symbol"]
        assert stylistics("a") == []

    def test_missing_pos(self):
        sentence = Sentence.from_words(["x"])
        assert "pos[0]=<NONE>" in extract_features(sentence, 0, FeatureTemplateConfig()).binary_features

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            extract_features(SENTENCE, 3, FeatureTemplateConfig())

    @pytest.mark.parametrize("kwargs", [{"window": -1}, {"affix_lengths": (5,)},
                                        {"use_embeddings": True, "embedding_dim": 0}])
    def test_invalid_config(self, kwargs):
        with pytest.raises(ConfigError):
            FeatureTemplateConfig(**kwargs)

    def test_config_round_trip(self):
        config = FeatureTemplateConfig(window=1, affix_lengths=(2, 1))
        assert FeatureTemplateConfig.from_dict(config.to_dict()) == config
        assert config.to_dict()["affix_lengths"] == [1, 2]


class TestMatrix:
    def test_index_is_sorted_and_matrix_is_binary(self):
        config = FeatureTemplateConfig(window=0, affix_lengths=(), use_position=False, use_stylistics=False)
        vectors = featurize_sentence(SENTENCE, config)
        index = build_feature_index([vectors])
        assert list(index) == sorted(index)
        matrix = to_matrix(vectors, index)
        assert matrix.shape == (3, len(index))
        assert matrix.sum() == 6
        assert matrix[0, index["w[0]=upload"]] == 1.0

    def test_unknown_features_are_dropped(self):
        config = FeatureTemplateConfig(window=0)
        index = build_feature_index([featurize_sentence(SENTENCE, config)])
        other = featurize_sentence(Sentence.from_words(["zzz"], ["NN"]), config)
        matrix = to_matrix(other, index)
        assert matrix.shape == (1, len(index))
        assert "pos[0]=NN" not in index
        assert matrix.sum() == 1.0
        assert matrix[0, index["pos_in_sent=first"]] == 1.0


class TestEmbeddings:
    def test_load(self):
        table = load_embeddings(FIXTURES / "embeddings.txt")
        assert table.dim == 3
        assert len(table) == 6
        np.testing.assert_allclose(table.lookup("Photos"), [0.5, 0.1, -0.2])
        assert table.lookup("unknown") is None

    def test_header_and_duplicates(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("2 2\nvideo 1 0\nvideo 0 1\n", encoding="utf-8")
        table = load_embeddings(path)
        assert table.dim == 2
        np.testing.assert_allclose(table.lookup("video"), [0.0, 1.0])
        assert len(table.warnings) == 1

    def test_dimension_mismatch(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("video 1 0\nsound 1\n", encoding="utf-8")
        with pytest.raises(ParseError) as info:
            load_embeddings(path)
        assert info.value.line == 2

    def test_non_finite(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("video nan 0\n", encoding="utf-8")
        with pytest.raises(ParseError, match="non-finite"):
            load_embeddings(path)

    def test_continuous_features(self):
        table = load_embeddings(FIXTURES / "embeddings.txt")
        config = FeatureTemplateConfig(use_embeddings=True, embedding_dim=3)
        sentence = Sentence.from_words(["photos", "zzz"], ["NNS", "NN"])
        known, unknown = featurize_sentence(sentence, config, table)
        assert known.continuous_features == pytest.approx({"emb[0]": 0.5, "emb[1]": 0.1, "emb[2]": -0.2})
        assert unknown.continuous_features == {"emb[0]": 0.0, "emb[1]": 0.0, "emb[2]": 0.0}
        index = build_feature_index([[known, unknown]])
        matrix = to_matrix([known, unknown], index)
        assert matrix[0, index["emb[2]"]] == pytest.approx(-0.2)

    def test_table_dimension_must_match_config(self):
        table = load_embeddings(FIXTURES / "embeddings.txt")
        config = FeatureTemplateConfig(use_embeddings=True, embedding_dim=4)
        with pytest.raises(ConfigError, match="dim"):
            featurize_sentence(SENTENCE, config, table)
