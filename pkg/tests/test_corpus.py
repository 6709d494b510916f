import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selftrain.corpus import (
    CorpusError,
    DatasetSchema,
    Label,
    NormalizationProfile,
    class_distribution,
    consolidate_annotations,
    load_bundle,
    load_dataset,
    merge_bundles,
    normalize_conversation,
    normalize_text,
    save_bundle,
)

from conftest import make_example, write_jsonl

TWEET = NormalizationProfile.TWEET
CONVERSATION = NormalizationProfile.CONVERSATION


class TestNormalizeText:
    def test_tweet_strips_mentions_urls_punctuation_accents(self):
        assert normalize_text("héllo   @user http://x.co !!", TWEET) == "hello"

    def test_tweet_identity_on_clean_text(self):
        assert normalize_text("is not on", TWEET) == "is not on"

    def test_conversation_turns_and_url_placeholder(self):
        assert normalize_conversation(["hi there", "see www.a.com"]) == "hi there\nsee URL"

    def test_tweet_removes_www_urls(self):
        assert normalize_text("go to www.example.com now", TWEET) == "go to now"

    @given(st.text(max_size=200))
    @settings(max_examples=200)
    def test_idempotent_tweet(self, text):
        once = normalize_text(text, TWEET)
        assert normalize_text(once, TWEET) == once

    @given(st.text(max_size=200))
    @settings(max_examples=200)
    def test_idempotent_conversation(self, text):
        once = normalize_text(text, CONVERSATION)
        assert normalize_text(once, CONVERSATION) == once


class TestConsolidateAnnotations:
    def test_majority(self):
        assert consolidate_annotations([1, 1, 0]) == Label.OFFENSIVE

    def test_unanimous(self):
        assert consolidate_annotations([0, 0, 0]) == Label.NOT_OFFENSIVE

    def test_tie_resolves_to_not_offensive(self):
        assert consolidate_annotations([1, 0]) == Label.NOT_OFFENSIVE

    def test_empty_rejected(self):
        with pytest.raises(CorpusError):
            consolidate_annotations([])

    @given(st.lists(st.integers(min_value=0, max_value=1), min_size=1, max_size=15),
           st.randoms())
    def test_permutation_invariant(self, votes, rnd):
        shuffled = list(votes)
        rnd.shuffle(shuffled)
        assert consolidate_annotations(votes) == consolidate_annotations(shuffled)


class TestClassDistribution:
    def test_empty(self):
        assert class_distribution([]) == {Label.NOT_OFFENSIVE: 0, Label.OFFENSIVE: 0}

    def test_counting(self):
        examples = [make_example(i, f"text {i}", 1 if i < 2 else 0) for i in range(5)]
        assert class_distribution(examples) == {Label.NOT_OFFENSIVE: 3, Label.OFFENSIVE: 2}


class TestLoadDataset:
    def test_three_line_fixture(self, tmp_path):
        path = tmp_path / "tiny.jsonl"
        write_jsonl(path, [
            {"id": "a", "text": "all good here", "label": 0},
            {"id": "b", "text": "fine as well", "label": 0},
            {"id": "c", "text": "you absolute fool", "label": 1},
        ])
        bundle, stats = load_dataset(path, DatasetSchema(), split_spec="train")
        assert len(bundle.train) == 3
        assert stats.class_counts["train"] == {0: 2, 1: 1}
        assert stats.rows_read == stats.rows_kept == 3

    def test_olid_style_tsv_counts(self, olid_style_tsv):
        path, expected = olid_style_tsv
        schema = DatasetSchema(format="tsv", id_field="id", text_field="tweet",
                               label_field="subtask_a", label_map={"NOT": 0, "OFF": 1},
                               profile=TWEET)
        bundle, stats = load_dataset(path, schema, split_spec="train")
        assert stats.class_counts["train"] == expected
        assert len(bundle.train) == sum(expected.values())

    def test_convabuse_style_votes_consolidated(self, tmp_path):
        path = tmp_path / "conv_dev.jsonl"
        write_jsonl(path, [
            {"id": "c1", "text": "user: hi\nbot: hello", "label": [0, 0, 1]},
            {"id": "c2", "text": "user: you are vile\nbot: sorry", "label": [1, 1, 0]},
            {"id": "c3", "text": "user: thanks\nbot: welcome", "label": [0, 1]},  # tie -> 0
        ])
        schema = DatasetSchema(profile=CONVERSATION)
        bundle, stats = load_dataset(path, schema, split_spec="dev")
        assert stats.class_counts["dev"] == {0: 2, 1: 1}
        assert bundle.dev is not None and len(bundle.dev) == 3

    def test_split_field_routing(self, tmp_path):
        path = tmp_path / "mixed.jsonl"
        write_jsonl(path, [
            {"id": "a", "text": "alpha", "label": 0, "split": "train"},
            {"id": "b", "text": "beta", "label": 1, "split": "test"},
            {"id": "c", "text": "gamma", "split": "unlabelled"},
        ])
        bundle, stats = load_dataset(path, DatasetSchema())
        assert len(bundle.train) == 1 and len(bundle.test) == 1 and len(bundle.unlabelled) == 1
        assert stats.rows_kept == 3

    def test_empty_after_normalization_dropped_and_counted(self, tmp_path):
        path = tmp_path / "drop.jsonl"
        write_jsonl(path, [
            {"id": "a", "text": "@user http://x.co", "label": 0},
            {"id": "b", "text": "substance", "label": 1},
        ])
        bundle, stats = load_dataset(path, DatasetSchema(profile=TWEET), split_spec="train")
        assert stats.rows_read == 2
        assert stats.rows_dropped == 1
        assert stats.rows_kept == 1
        assert stats.rows_read == stats.rows_kept + stats.rows_dropped
        assert [ex.doc.id for ex in bundle.train] == ["b"]

    def test_counts_sum_to_rows_kept(self, tmp_path):
        path = tmp_path / "sum.jsonl"
        write_jsonl(path, [{"id": f"r{i}", "text": f"text {i}", "label": i % 2,
                            "split": "train" if i % 3 else "test"} for i in range(20)])
        _, stats = load_dataset(path, DatasetSchema())
        total = sum(sum(c.values()) for c in stats.class_counts.values())
        assert total == stats.rows_kept

    def test_missing_file(self, tmp_path):
        with pytest.raises(CorpusError, match="not found"):
            load_dataset(tmp_path / "absent.jsonl", DatasetSchema())

    def test_unmappable_label_reports_row(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        write_jsonl(path, [
            {"id": "a", "text": "ok", "label": 0},
            {"id": "b", "text": "bad", "label": "UNKNOWN"},
        ])
        with pytest.raises(CorpusError, match="row 2"):
            load_dataset(path, DatasetSchema(), split_spec="train")

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        write_jsonl(path, [
            {"id": "a", "text": "first", "label": 0},
            {"id": "a", "text": "second", "label": 1},
        ])
        with pytest.raises(CorpusError, match="duplicate id"):
            load_dataset(path, DatasetSchema(), split_spec="train")

    def test_duplicate_id_across_files_rejected(self, tmp_path):
        p1, p2 = tmp_path / "one.jsonl", tmp_path / "two.jsonl"
        write_jsonl(p1, [{"id": "a", "text": "first", "label": 0}])
        write_jsonl(p2, [{"id": "a", "text": "second", "label": 1}])
        schema = DatasetSchema()
        with pytest.raises(CorpusError):
            merge_bundles(load_dataset(p1, schema, "train"), load_dataset(p2, schema, "test"))

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "broken.jsonl"
        path.write_text('{"id": "a", "text": "ok", "label": 0}\nnot json at all\n')
        with pytest.raises(CorpusError, match=":2"):
            load_dataset(path, DatasetSchema(), split_spec="train")


class TestRoundTrip:
    def test_save_load_bit_identical(self, tmp_path):
        path = tmp_path / "src.jsonl"
        write_jsonl(path, [
            {"id": "a", "text": "héllo   @you !!", "label": 0, "split": "train"},
            {"id": "b", "text": "plain words", "label": 1, "split": "train"},
            {"id": "t", "text": "test words", "label": 0, "split": "test"},
            {"id": "u", "text": "no label here", "split": "unlabelled"},
        ])
        bundle, _ = load_dataset(path, DatasetSchema(profile=TWEET))
        out = tmp_path / "bundle"
        save_bundle(bundle, out)
        reloaded = load_bundle(out)
        assert [(e.doc.id, e.doc.text, e.label) for e in reloaded.train] == \
               [(e.doc.id, e.doc.text, e.label) for e in bundle.train]
        assert [(e.doc.id, e.doc.text, e.label) for e in reloaded.test] == \
               [(e.doc.id, e.doc.text, e.label) for e in bundle.test]
        assert [(d.id, d.text) for d in reloaded.unlabelled] == \
               [(d.id, d.text) for d in bundle.unlabelled]
        # saving the reloaded bundle reproduces the files byte for byte
        out2 = tmp_path / "bundle2"
        save_bundle(reloaded, out2)
        for name in ("train.jsonl", "test.jsonl", "unlabelled.jsonl"):
            assert (out / name).read_bytes() == (out2 / name).read_bytes()


OLID_DIR = os.environ.get("SELFTRAIN_OLID_DIR")
CONVABUSE_DIR = os.environ.get("SELFTRAIN_CONVABUSE_DIR")


@pytest.mark.skipif(not OLID_DIR, reason="set SELFTRAIN_OLID_DIR to run on the real dataset")
def test_real_olid_train_counts():
    schema = DatasetSchema(format="tsv", id_field="id", text_field="tweet",
                           label_field="subtask_a", label_map={"NOT": 0, "OFF": 1},
                           profile=TWEET)
    _, stats = load_dataset(os.path.join(OLID_DIR, "olid-training-v1.0.tsv"), schema, "train")
    assert stats.class_counts["train"] == {0: 8840, 1: 4400}


@pytest.mark.skipif(not CONVABUSE_DIR, reason="set SELFTRAIN_CONVABUSE_DIR to run on the real dataset")
def test_real_convabuse_dev_counts():
    schema = DatasetSchema(profile=CONVERSATION)
    _, stats = load_dataset(os.path.join(CONVABUSE_DIR, "dev.jsonl"), schema, "dev")
    assert stats.class_counts["dev"] == {0: 719, 1: 112}
