import math

import pytest
import torch

from bert_backend.models import load_model_and_tokenizer
from bert_backend.training import (
    TrainSettings,
    _combined_batch_loss,
    finetune,
    predict_probs,
)

NICE = [{"text": f"you are lovely and kind friend {i}", "label": 0} for i in range(10)]
NASTY = [{"text": f"you are vile and hateful fool {i}", "label": 1} for i in range(10)]


class TestCombinedBatchLoss:
    def test_two_sides_averaged_separately(self):
        logits = torch.tensor([[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
        labels = torch.tensor([0, 1, 1])
        sides = torch.tensor([True, False, False])
        # uniform logits: each side contributes ln 2
        loss = _combined_batch_loss(logits, labels, sides)
        assert float(loss) == pytest.approx(2 * math.log(2), abs=1e-6)

    def test_single_side_is_plain_mean(self):
        logits = torch.tensor([[2.0, 0.0], [0.0, 2.0]])
        labels = torch.tensor([0, 1])
        sides = torch.tensor([True, True])
        expected = float(torch.nn.functional.cross_entropy(logits, labels))
        assert float(_combined_batch_loss(logits, labels, sides)) == pytest.approx(expected)


class TestFinetune:
    def test_tiny_model_learns_fixture(self):
        import time

        settings = TrainSettings(model="tiny", epochs=30, batch_size=8,
                                 learning_rate=5e-3, seed=3, max_tokens=32)
        texts = [ex["text"] for ex in NICE + NASTY]
        model, tokenizer = load_model_and_tokenizer("tiny", texts, settings.max_tokens,
                                                    settings.dropout_rate)
        started = time.time()
        outcome = finetune(model, tokenizer, NICE, NASTY[:5], settings)
        assert time.time() - started < 120  # 20-example fine-tune stays in smoke range
        assert outcome.selected_epoch >= 1
        assert outcome.train_loss == min(outcome.history)
        assert outcome.train_loss < outcome.history[0]

        probs = predict_probs(model, tokenizer,
                              ["you are lovely and kind", "you are vile and hateful"],
                              settings.max_tokens)
        assert probs[0][0] > probs[1][0]  # nicer text scores less offensive

    def test_selected_epoch_serves_lowest_loss(self):
        settings = TrainSettings(model="tiny", epochs=5, batch_size=16,
                                 learning_rate=1e-3, seed=1, max_tokens=32)
        texts = [ex["text"] for ex in NICE + NASTY]
        model, tokenizer = load_model_and_tokenizer("tiny", texts, settings.max_tokens,
                                                    settings.dropout_rate)
        outcome = finetune(model, tokenizer, NICE, NASTY, settings)
        assert outcome.history.index(min(outcome.history)) + 1 == outcome.selected_epoch

    def test_rows_sum_to_one(self):
        settings = TrainSettings(model="tiny", epochs=2, batch_size=16, seed=0, max_tokens=32)
        texts = [ex["text"] for ex in NICE + NASTY]
        model, tokenizer = load_model_and_tokenizer("tiny", texts, settings.max_tokens,
                                                    settings.dropout_rate)
        finetune(model, tokenizer, NICE, NASTY, settings)
        probs = predict_probs(model, tokenizer, texts, settings.max_tokens)
        for row in probs:
            assert abs(sum(row) - 1.0) <= 1e-6

    def test_empty_texts_empty_rows(self):
        texts = [ex["text"] for ex in NICE + NASTY]
        model, tokenizer = load_model_and_tokenizer("tiny", texts, 32, 0.1)
        assert predict_probs(model, tokenizer, [], 32) == []
