import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selftrain.metrics import (
    ConfusionMatrix,
    MetricsError,
    aggregate,
    confusion,
    f1_macro,
    per_class_f1,
)


def brute_force_f1_macro(preds, golds):
    """Per-example tally using the raw precision/recall definitions."""
    scores = []
    for cls in (0, 1):
        tp = sum(1 for p, g in zip(preds, golds) if p == cls and g == cls)
        pred_cls = sum(1 for p in preds if p == cls)
        gold_cls = sum(1 for g in golds if g == cls)
        precision = tp / pred_cls if pred_cls else 0.0
        recall = tp / gold_cls if gold_cls else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        scores.append(f1)
    return sum(scores) / 2


class TestConfusion:
    def test_perfect(self):
        golds = [1] * 3 + [0] * 5
        cm = confusion(golds, golds)
        assert (cm.tp, cm.tn, cm.fp, cm.fn) == (3, 5, 0, 0)

    def test_all_flipped(self):
        golds = [1] * 3 + [0] * 5
        preds = [1 - g for g in golds]
        cm = confusion(preds, golds)
        assert cm.tp == 0 and cm.tn == 0
        assert cm.fp == 5 and cm.fn == 3

    def test_mixed_case_matches_tally(self):
        rng = random.Random(7)
        preds = [rng.randint(0, 1) for _ in range(10)]
        golds = [rng.randint(0, 1) for _ in range(10)]
        cm = confusion(preds, golds)
        assert cm.tp == sum(1 for p, g in zip(preds, golds) if p == 1 and g == 1)
        assert cm.fp == sum(1 for p, g in zip(preds, golds) if p == 1 and g == 0)
        assert cm.fn == sum(1 for p, g in zip(preds, golds) if p == 0 and g == 1)
        assert cm.tn == sum(1 for p, g in zip(preds, golds) if p == 0 and g == 0)
        assert cm.total == 10

    def test_length_mismatch(self):
        with pytest.raises(MetricsError):
            confusion([0, 1], [0])


class TestF1Macro:
    def test_perfect_is_one(self):
        assert f1_macro(ConfusionMatrix(tp=4, fp=0, fn=0, tn=6)) == 1.0

    def test_worked_case(self):
        cm = ConfusionMatrix(tp=2, fp=1, fn=1, tn=6)
        scores = per_class_f1(cm)
        assert scores[1] == pytest.approx(0.666667, abs=1e-6)
        assert scores[0] == pytest.approx(0.857143, abs=1e-6)
        assert f1_macro(cm) == pytest.approx(0.761905, abs=1e-6)

    def test_single_class_predictions_on_balanced_gold(self):
        # predicting only the majority class on a 5/5 gold split
        cm = confusion([0] * 10, [0] * 5 + [1] * 5)
        assert f1_macro(cm) < 0.5

    def test_empty_matrix_rejected(self):
        with pytest.raises(MetricsError):
            f1_macro(ConfusionMatrix(tp=0, fp=0, fn=0, tn=0))

    @given(st.tuples(*[st.integers(min_value=0, max_value=50)] * 4))
    @settings(max_examples=300)
    def test_bounds_and_transposition_invariance(self, counts):
        tp, fp, fn, tn = counts
        if tp + fp + fn + tn == 0:
            return
        cm = ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)
        swapped = ConfusionMatrix(tp=tn, fp=fn, fn=fp, tn=tp)
        assert 0.0 <= f1_macro(cm) <= 1.0
        assert f1_macro(cm) == pytest.approx(f1_macro(swapped))

    @given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=60))
    @settings(max_examples=300)
    def test_matches_brute_force(self, pairs):
        preds = [p for p, _ in pairs]
        golds = [g for _, g in pairs]
        assert f1_macro(confusion(preds, golds)) == pytest.approx(
            brute_force_f1_macro(preds, golds), abs=1e-12)


class TestAggregate:
    def test_constant_runs(self):
        summary = aggregate([0.8, 0.8, 0.8])
        assert summary.mean == pytest.approx(0.8)
        assert summary.std == 0.0
        assert summary.n_runs == 3

    def test_two_runs_population_std(self):
        summary = aggregate([0.78, 0.80])
        assert summary.mean == pytest.approx(0.79)
        assert summary.std == pytest.approx(0.01)

    def test_single_run_std_zero(self):
        assert aggregate([0.5]).std == 0.0

    def test_empty_rejected(self):
        with pytest.raises(MetricsError):
            aggregate([])

    @given(st.lists(st.floats(min_value=0, max_value=1), min_size=1, max_size=10), st.randoms())
    @settings(max_examples=100)
    def test_permutation_invariant(self, runs, rnd):
        shuffled = list(runs)
        rnd.shuffle(shuffled)
        a, b = aggregate(runs), aggregate(shuffled)
        assert a.mean == pytest.approx(b.mean)
        assert a.std == pytest.approx(b.std)
