"""Synthetic keyword-driven corpus for directional experiments.

Two classes are driven by a small set of class-specific keywords buried
in a shared noise vocabulary. A handful of labelled examples is enough
to pick up most keywords but also overfits noise-token coincidences;
the large unlabelled pool gives self-training room to average that
noise away, which is exactly the effect the directional acceptance
experiment measures.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import DatasetBundle, Document, Label, LabeledExample

DIRECTIONAL_CORPUS_SEED = 97


@dataclass(frozen=True)
class SyntheticSpec:
    n_train: int = 100
    n_dev: int = 0
    n_test: int = 400
    n_unlabelled: int = 5000
    n_keywords_per_class: int = 10
    n_noise_tokens: int = 500
    keywordless_fraction: float = 0.15  # ambiguous documents with no class signal
    min_length: int = 8
    max_length: int = 16


def _make_doc_tokens(rng: random.Random, spec: SyntheticSpec, label: Label,
                     keywords: dict[Label, list[str]], noise: list[str]) -> list[str]:
    length = rng.randint(spec.min_length, spec.max_length)
    tokens = [rng.choice(noise) for _ in range(length)]
    if rng.random() >= spec.keywordless_fraction:
        n_kw = rng.randint(1, 3)
        positions = rng.sample(range(length), min(n_kw, length))
        for pos in positions:
            tokens[pos] = rng.choice(keywords[label])
    return tokens


def make_synthetic_bundle(seed: int, spec: SyntheticSpec | None = None) -> DatasetBundle:
    """Deterministic two-class keyword corpus with an unlabelled pool.

    Every split is exactly class-balanced; unlabelled documents are drawn
    from the same generative process with their labels discarded.
    """
    spec = spec or SyntheticSpec()
    rng = random.Random(seed)
    keywords = {
        Label.OFFENSIVE: [f"off{i}" for i in range(spec.n_keywords_per_class)],
        Label.NOT_OFFENSIVE: [f"ok{i}" for i in range(spec.n_keywords_per_class)],
    }
    noise = [f"w{i}" for i in range(spec.n_noise_tokens)]

    def make_split(split: str, size: int, labelled: bool):
        examples = []
        docs = []
        for i in range(size):
            label = Label.OFFENSIVE if i % 2 else Label.NOT_OFFENSIVE
            tokens = _make_doc_tokens(rng, spec, label, keywords, noise)
            doc = Document(id=f"{split}-{i}", text=" ".join(tokens), source="synthetic")
            if labelled:
                examples.append(LabeledExample(doc=doc, label=label))
            else:
                docs.append(doc)
        return examples, docs

    train, _ = make_split("train", spec.n_train, labelled=True)
    dev = None
    if spec.n_dev:
        dev, _ = make_split("dev", spec.n_dev, labelled=True)
    test, _ = make_split("test", spec.n_test, labelled=True)
    _, unlabelled = make_split("unl", spec.n_unlabelled, labelled=False)

    return DatasetBundle(train=train, dev=dev, test=test, unlabelled=unlabelled)


def directional_experiment_parts():
    """Fixed bundle, backend, and loop config of the directional experiment.

    The train config diverges from the transformer defaults because the
    from-scratch linear model needs small batches and a strong learning
    rate to converge on 100 examples; the loop settings stay at their
    defaults (4 generations, 0.8 threshold, no augmentation).
    """
    from .classifier import builtin_defaults
    from .features import FeatureSpace
    from .loop import LinearBackend, SelfTrainConfig

    bundle = make_synthetic_bundle(DIRECTIONAL_CORPUS_SEED)
    backend = LinearBackend(FeatureSpace(dimension=1 << 16))
    config = SelfTrainConfig(
        train=builtin_defaults(learning_rate=0.5, epochs=60, batch_size=32))
    return bundle, backend, config
