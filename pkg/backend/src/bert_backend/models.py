"""Checkpoint registry: pre-trained names plus an offline 'tiny' model.

The "tiny" checkpoint builds a small randomly initialized BERT with a
word-level tokenizer trained on the request's own texts, so the server
works (and its protocol can be exercised) with no model hub access.
Any other identifier is handed to transformers' from_pretrained and a
load failure surfaces as a session failure with the original reason.
"""
from __future__ import annotations

from tokenizers import Tokenizer
from tokenizers.models import WordLevel
from tokenizers.pre_tokenizers import Whitespace
from tokenizers.trainers import WordLevelTrainer
from transformers import (
    AutoModelForSequenceClassification,
    AutoTokenizer,
    BertConfig,
    BertForSequenceClassification,
    PreTrainedTokenizerFast,
)

TINY_NAMES = ("tiny", "tiny-bert")
DEFAULT_MODEL = "tiny"

# §-style architecture list the server accepts out of the box; anything
# else still goes through from_pretrained unchanged.
KNOWN_PRETRAINED = (
    "distilbert-base-uncased",
    "bert-base-cased",
    "bert-large-cased",
    "roberta-base",
    "roberta-large",
)


class ModelLoadError(Exception):
    pass


def _build_tiny_tokenizer(texts: list[str], vocab_size: int = 4000) -> PreTrainedTokenizerFast:
    tokenizer = Tokenizer(WordLevel(unk_token="[UNK]"))
    tokenizer.pre_tokenizer = Whitespace()
    trainer = WordLevelTrainer(special_tokens=["[PAD]", "[UNK]"], vocab_size=vocab_size)
    tokenizer.train_from_iterator([t.lower() for t in texts], trainer)
    return PreTrainedTokenizerFast(tokenizer_object=tokenizer,
                                   pad_token="[PAD]", unk_token="[UNK]")


def _build_tiny_model(vocab_size: int, pad_token_id: int, max_tokens: int,
                      dropout: float) -> BertForSequenceClassification:
    config = BertConfig(
        vocab_size=max(vocab_size, 2),
        hidden_size=64,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=128,
        max_position_embeddings=max(max_tokens + 2, 16),
        num_labels=2,
        pad_token_id=pad_token_id,
        hidden_dropout_prob=dropout,
        attention_probs_dropout_prob=dropout,
    )
    return BertForSequenceClassification(config)


def _apply_dropout(model, dropout: float) -> None:
    # attribute names differ across architectures; set the common ones
    config = model.config
    for attr in ("hidden_dropout_prob", "attention_probs_dropout_prob",
                 "dropout", "attention_dropout", "classifier_dropout"):
        if hasattr(config, attr) and getattr(config, attr) is not None:
            setattr(config, attr, dropout)
    import torch.nn as nn

    for module in model.modules():
        if isinstance(module, nn.Dropout):
            module.p = dropout


def load_model_and_tokenizer(name: str, texts: list[str], max_tokens: int, dropout: float):
    """Returns (model, tokenizer) for the named checkpoint.

    Raises ModelLoadError with the underlying reason when the checkpoint
    cannot be materialized (missing weights, no hub access, OOM, ...).
    """
    if name in TINY_NAMES:
        if not texts:
            raise ModelLoadError("the tiny checkpoint needs training texts to build its vocab")
        tokenizer = _build_tiny_tokenizer(texts)
        model = _build_tiny_model(tokenizer.vocab_size, tokenizer.pad_token_id,
                                  max_tokens, dropout)
        return model, tokenizer
    try:
        tokenizer = AutoTokenizer.from_pretrained(name)
        model = AutoModelForSequenceClassification.from_pretrained(name, num_labels=2)
    except Exception as exc:  # surfaced as a failed session, not a crash
        raise ModelLoadError(f"cannot load checkpoint {name!r}: {exc}") from exc
    _apply_dropout(model, dropout)
    return model, tokenizer
