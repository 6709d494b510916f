import logging

import numpy as np
import pytest

from selftrain.augment import AugmentConfig, AugmenterKind, load_default_lexicon
from selftrain.classifier import builtin_defaults, train
from selftrain.corpus import DatasetBundle, Label, Provenance
from selftrain.features import FeatureSpace
from selftrain.loop import (
    LinearBackend,
    SelfTrainConfig,
    balance_downsample,
    confidence_filter,
    infer_weak_labels,
    run_experiment_suite,
    run_self_training,
)
from selftrain.synthetic import SyntheticSpec, make_synthetic_bundle

from conftest import FixedProbModel, make_doc, make_weak

SMALL_SPEC = SyntheticSpec(n_train=40, n_test=80, n_unlabelled=300,
                           n_keywords_per_class=5, n_noise_tokens=60)


def small_bundle(seed=0):
    return make_synthetic_bundle(seed, SMALL_SPEC)


def fast_config(**overrides):
    defaults = dict(
        generations=3,
        confidence_threshold=0.8,
        train=builtin_defaults(epochs=4, batch_size=64),
        seed=1,
    )
    defaults.update(overrides)
    return SelfTrainConfig(**defaults)


def fast_backend():
    return LinearBackend(FeatureSpace(dimension=1 << 12))


class TestInferWeakLabels:
    def test_argmax_and_confidence(self):
        weak = infer_weak_labels(FixedProbModel(0.9, 0.1), [make_doc(0, "x")])
        assert weak[0].label is Label.NOT_OFFENSIVE
        assert weak[0].confidence == pytest.approx(0.9)
        assert weak[0].provenance is Provenance.WEAK

    def test_tie_goes_to_not_offensive(self):
        weak = infer_weak_labels(FixedProbModel(0.5, 0.5), [make_doc(0, "x")])
        assert weak[0].label is Label.NOT_OFFENSIVE
        assert weak[0].confidence == pytest.approx(0.5)

    def test_empty_pool(self):
        assert infer_weak_labels(FixedProbModel(0.5, 0.5), []) == []


class TestConfidenceFilter:
    def test_boundary_kept(self):
        weak = [make_weak(i, f"t{i}", 0, c) for i, c in enumerate([0.9, 0.79, 0.80])]
        kept = confidence_filter(weak, 0.8)
        assert [ex.doc.id for ex in kept] == ["d0", "d2"]

    def test_threshold_one(self):
        weak = [make_weak(0, "a", 0, 1.0), make_weak(1, "b", 0, 0.999)]
        kept = confidence_filter(weak, 1.0)
        assert [ex.doc.id for ex in kept] == ["d0"]

    def test_all_below(self):
        weak = [make_weak(i, f"t{i}", 0, 0.6) for i in range(3)]
        assert confidence_filter(weak, 0.8) == []


class TestBalanceDownsample:
    def test_min_rule(self):
        weak = [make_weak(f"n{i}", "a", 0, 0.9) for i in range(100)]
        weak += [make_weak(f"p{i}", "b", 1, 0.9) for i in range(40)]
        out = balance_downsample(weak, rng_seed=0)
        assert out.counts == {Label.NOT_OFFENSIVE: 40, Label.OFFENSIVE: 40}
        assert len(out.examples) == 80

    def test_missing_class_yields_empty_and_warns(self, caplog):
        weak = [make_weak(i, "a", 0, 0.9) for i in range(5)]
        with caplog.at_level(logging.WARNING):
            out = balance_downsample(weak, rng_seed=0)
        assert out.examples == []
        assert any("empty weak set" in rec.message for rec in caplog.records)

    def test_already_balanced_is_identity(self):
        weak = [make_weak(f"n{i}", "a", 0, 0.9) for i in range(40)]
        weak += [make_weak(f"p{i}", "b", 1, 0.9) for i in range(40)]
        out = balance_downsample(weak, rng_seed=3)
        assert out.examples == weak

    def test_deterministic(self):
        weak = [make_weak(f"n{i}", "a", 0, 0.9) for i in range(30)]
        weak += [make_weak(f"p{i}", "b", 1, 0.9) for i in range(10)]
        a = balance_downsample(weak, rng_seed=5)
        b = balance_downsample(weak, rng_seed=5)
        assert [e.doc.id for e in a.examples] == [e.doc.id for e in b.examples]


class RecordingBackend(LinearBackend):
    """LinearBackend that records each generation's training set."""

    def __init__(self, space):
        super().__init__(space)
        self.train_sets = []

    def train(self, train_examples, dev_examples, config):
        self.train_sets.append(list(train_examples))
        return super().train(train_examples, dev_examples, config)


class TestRunSelfTraining:
    def test_four_generations_first_has_no_weak(self):
        records = run_self_training(small_bundle(), fast_config(generations=4), fast_backend())
        assert len(records) == 4
        first = records[0]
        assert (first.weak_prefilter, first.weak_postfilter,
                first.weak_postbalance, first.weak_postaugment) == (0, 0, 0, 0)

    def test_augment_none_postaugment_equals_postbalance(self):
        records = run_self_training(small_bundle(), fast_config(), fast_backend())
        for record in records[1:]:
            assert record.weak_postaugment == record.weak_postbalance

    def test_sizes_monotone_through_stages(self):
        records = run_self_training(small_bundle(), fast_config(generations=4), fast_backend())
        for record in records[1:]:
            assert record.weak_prefilter >= record.weak_postfilter >= record.weak_postbalance

    def test_augmented_generation_doubles_balance(self):
        config = fast_config(augment=AugmentConfig(kind=AugmenterKind.WORD_SWAP))
        records = run_self_training(small_bundle(), config, fast_backend())
        for record in records[1:]:
            assert record.weak_postaugment == 2 * record.weak_postbalance

    def test_human_examples_in_every_generation(self):
        bundle = small_bundle()
        backend = RecordingBackend(FeatureSpace(dimension=1 << 12))
        run_self_training(bundle, fast_config(), backend)
        human_ids = [ex.doc.id for ex in bundle.train]
        for train_set in backend.train_sets:
            ids = [ex.doc.id for ex in train_set[: len(human_ids)]]
            assert ids == human_ids
            assert all(ex.provenance is Provenance.HUMAN for ex in train_set[: len(human_ids)])

    def test_weak_never_in_eval_sets(self):
        bundle = small_bundle()
        records = run_self_training(bundle, fast_config(), fast_backend(), keep_weak_sets=True)
        eval_ids = {ex.doc.id for ex in bundle.test}
        for record in records[1:]:
            for ex in record.weak_examples or []:
                assert ex.doc.id not in eval_ids

    def test_number_of_models_equals_generations(self):
        records = run_self_training(small_bundle(), fast_config(generations=3), fast_backend())
        assert sum(1 for r in records if r.model is not None) == 3

    def test_deterministic_per_seed(self):
        bundle = small_bundle()
        a = run_self_training(bundle, fast_config(seed=4), fast_backend())
        b = run_self_training(bundle, fast_config(seed=4), fast_backend())
        assert [r.test_f1 for r in a] == [r.test_f1 for r in b]
        assert [r.weak_postfilter for r in a] == [r.weak_postfilter for r in b]

    def test_empty_weak_set_reduces_to_supervised(self):
        bundle = small_bundle()
        space = FeatureSpace(dimension=1 << 12)
        config = builtin_defaults(epochs=3, seed=123)
        supervised = train(bundle.train, None, config, space)
        with_empty_weak = train(list(bundle.train) + [], None, config, space)
        assert np.array_equal(supervised.weights, with_empty_weak.weights)

    def test_requires_unlabelled_pool_for_iterations(self):
        bundle = small_bundle()
        bundle.unlabelled = []
        with pytest.raises(ValueError, match="unlabelled"):
            run_self_training(bundle, fast_config(), fast_backend())

    def test_requires_human_train(self):
        bundle = small_bundle()
        bundle.train = []
        with pytest.raises(ValueError, match="train"):
            run_self_training(bundle, fast_config(), fast_backend())

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SelfTrainConfig(generations=0)
        with pytest.raises(ValueError):
            SelfTrainConfig(confidence_threshold=0.5)
        with pytest.raises(ValueError):
            SelfTrainConfig(confidence_threshold=1.2)


class TestExperimentSuite:
    def test_report_shape_three_seeds(self):
        report = run_experiment_suite(small_bundle(), [fast_config(generations=2)],
                                      seeds=[1, 2, 3], backend=fast_backend())
        labels = [c.label for c in report.columns]
        assert labels == ["DF", "ST"]
        st_col = report.columns[1]
        assert st_col.summary.n_runs == 3
        assert st_col.summary.std >= 0.0

    def test_single_seed_std_zero(self):
        report = run_experiment_suite(small_bundle(), [fast_config(generations=2)],
                                      seeds=[7], backend=fast_backend())
        assert all(c.summary.std == 0.0 for c in report.columns)

    def test_augmented_column_label(self):
        config = fast_config(generations=2,
                             augment=AugmentConfig(kind=AugmenterKind.WORD_SWAP))
        report = run_experiment_suite(small_bundle(), [config], seeds=[1],
                                      backend=fast_backend())
        assert [c.label for c in report.columns] == ["DF", "ST+WS"]

    def test_deterministic_reports(self):
        args = (small_bundle(), [fast_config(generations=2)], [1, 2])
        a = run_experiment_suite(*args, backend=fast_backend())
        b = run_experiment_suite(*args, backend=fast_backend())
        assert a.to_dict() == b.to_dict()

    def test_df_column_is_single_generation(self):
        report = run_experiment_suite(small_bundle(), [fast_config(generations=3)],
                                      seeds=[1], backend=fast_backend())
        df_col = report.columns[0]
        assert all(len(cell.records) == 1 for cell in df_col.cells)
