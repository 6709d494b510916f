"""The teacher-student self-training loop.

Generation 1 trains the teacher on human-labelled data only. Every later
generation re-infers weak labels over the full unlabelled pool with the
current teacher, filters them by confidence, downsamples to a perfectly
balanced weak set, optionally doubles it with augmented copies, and
trains a fresh equal-sized student on human plus weak data under the
combined loss. The student then becomes the next teacher.

Weak labels are hard argmax labels; students never warm-start. All
randomness is derived from the loop seed per generation, so extending a
run with more generations never perturbs earlier ones.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field, replace
from typing import Protocol, Sequence

import numpy as np

from .augment import AugmentConfig, AugmenterKind, augment_weak_set
from .classifier import (
    FeatureSpace,
    LinearModelState,
    TrainConfig,
    builtin_defaults,
    predict_label,
    train,
)
from .corpus import DatasetBundle, Document, Label, LabeledExample, Provenance
from .hashing import derive_seed
from .metrics import ScoreSummary, aggregate, confusion, f1_macro, per_class_f1

logger = logging.getLogger(__name__)


class Predictor(Protocol):
    def predict_proba(self, docs: Sequence[Document]) -> list[np.ndarray]:
        ...


class Backend(Protocol):
    """Anything that can train a predictor on labelled + weak examples."""

    name: str

    def train(self, train_examples: Sequence[LabeledExample],
              dev_examples: Sequence[LabeledExample] | None,
              config: TrainConfig) -> Predictor:
        ...


class LinearBackend:
    """Built-in deterministic linear classifier backend."""

    name = "builtin"

    def __init__(self, space: FeatureSpace | None = None):
        self.space = space or FeatureSpace()

    def train(self, train_examples, dev_examples, config: TrainConfig) -> LinearModelState:
        return train(train_examples, dev_examples, config, self.space)


@dataclass(frozen=True)
class SelfTrainConfig:
    generations: int = 4  # counts the initial teacher as generation 1
    confidence_threshold: float = 0.80
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    train: TrainConfig = field(default_factory=builtin_defaults)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if not 0.5 < self.confidence_threshold <= 1.0:
            raise ValueError("confidence threshold must lie in (0.5, 1]")


@dataclass
class WeakSet:
    examples: list[LabeledExample]
    counts: dict[Label, int]


@dataclass
class GenerationRecord:
    generation: int
    weak_prefilter: int = 0
    weak_postfilter: int = 0
    weak_postbalance: int = 0
    weak_postaugment: int = 0
    train_loss: float | None = None
    dev_f1: float | None = None
    test_f1: float | None = None
    test_per_class_f1: dict[int, float] | None = None
    model: Predictor | None = None
    weak_examples: list[LabeledExample] | None = None  # populated on request only

    def to_dict(self) -> dict:
        return {
            "generation": self.generation,
            "weak_prefilter": self.weak_prefilter,
            "weak_postfilter": self.weak_postfilter,
            "weak_postbalance": self.weak_postbalance,
            "weak_postaugment": self.weak_postaugment,
            "train_loss": self.train_loss,
            "dev_f1": self.dev_f1,
            "test_f1": self.test_f1,
            "test_per_class_f1": self.test_per_class_f1,
        }


def infer_weak_labels(model: Predictor, unlabelled: Sequence[Document]) -> list[LabeledExample]:
    """One weak example per document: argmax label, max-probability confidence."""
    if not unlabelled:
        return []
    dists = model.predict_proba(unlabelled)
    out = []
    for doc, dist in zip(unlabelled, dists):
        label = predict_label(dist)
        out.append(LabeledExample(
            doc=doc,
            label=label,
            provenance=Provenance.WEAK,
            confidence=float(np.max(dist)),
        ))
    return out


def confidence_filter(weak: Sequence[LabeledExample], threshold: float) -> list[LabeledExample]:
    """Keep examples at or above the threshold, in stable order."""
    return [ex for ex in weak if ex.confidence >= threshold]


def balance_downsample(weak: Sequence[LabeledExample], rng_seed: int) -> WeakSet:
    """Downsample to equal class counts by uniform sampling without replacement."""
    by_class: dict[Label, list[int]] = {Label.NOT_OFFENSIVE: [], Label.OFFENSIVE: []}
    for i, ex in enumerate(weak):
        by_class[ex.label].append(i)
    c = min(len(by_class[Label.NOT_OFFENSIVE]), len(by_class[Label.OFFENSIVE]))
    if c == 0:
        if weak:
            logger.warning("balance_downsample: one class absent from the weak set; "
                           "returning an empty weak set")
        return WeakSet(examples=[], counts={Label.NOT_OFFENSIVE: 0, Label.OFFENSIVE: 0})
    rng = random.Random(rng_seed)
    kept: list[int] = []
    for label in (Label.NOT_OFFENSIVE, Label.OFFENSIVE):
        kept.extend(rng.sample(by_class[label], c))
    kept.sort()
    return WeakSet(examples=[weak[i] for i in kept],
                   counts={Label.NOT_OFFENSIVE: c, Label.OFFENSIVE: c})


def evaluate_scores(model: Predictor,
                    examples: Sequence[LabeledExample]) -> tuple[float, dict[int, float]]:
    preds = [predict_label(d) for d in model.predict_proba([ex.doc for ex in examples])]
    golds = [ex.label for ex in examples]
    cm = confusion(preds, golds)
    return f1_macro(cm), per_class_f1(cm)


def evaluate_f1(model: Predictor, examples: Sequence[LabeledExample]) -> float:
    return evaluate_scores(model, examples)[0]


def run_self_training(bundle: DatasetBundle, config: SelfTrainConfig,
                      backend: Backend | None = None,
                      keep_weak_sets: bool = False) -> list[GenerationRecord]:
    """Run the loop for ``config.generations`` generations.

    Returns one record per generation carrying the weak-set sizes through
    each stage, the evaluation scores, and the trained model;
    ``keep_weak_sets`` additionally retains each generation's post-augment
    weak set on its record for auditing.
    """
    backend = backend or LinearBackend()
    if not bundle.train:
        raise ValueError("bundle has no human-labelled training examples")
    if config.generations >= 2 and not bundle.unlabelled:
        raise ValueError("self-training beyond generation 1 needs an unlabelled pool")

    records: list[GenerationRecord] = []
    model: Predictor | None = None
    for gen in range(1, config.generations + 1):
        record = GenerationRecord(generation=gen)
        weak_examples: list[LabeledExample] = []
        if gen > 1:
            assert model is not None
            weak = infer_weak_labels(model, bundle.unlabelled)
            record.weak_prefilter = len(weak)
            weak = confidence_filter(weak, config.confidence_threshold)
            record.weak_postfilter = len(weak)
            balanced = balance_downsample(weak, derive_seed(config.seed, "balance", gen))
            record.weak_postbalance = len(balanced.examples)
            gen_augment = replace(config.augment, seed=derive_seed(config.seed, "augment", gen))
            weak_examples = augment_weak_set(balanced.examples, gen_augment)
            record.weak_postaugment = len(weak_examples)
            if keep_weak_sets:
                record.weak_examples = weak_examples

        train_config = replace(config.train, seed=derive_seed(config.seed, "train", gen))
        train_set = list(bundle.train) + weak_examples
        model = backend.train(train_set, bundle.dev, train_config)
        record.model = model

        if isinstance(model, LinearModelState):
            record.train_loss = model.training_history[model.selected_epoch - 1].train_loss
        if bundle.dev:
            record.dev_f1 = evaluate_f1(model, bundle.dev)
        if bundle.test:
            record.test_f1, record.test_per_class_f1 = evaluate_scores(model, bundle.test)
        logger.info("generation %d: weak %d -> %d -> %d -> %d, dev F1 %s, test F1 %s",
                    gen, record.weak_prefilter, record.weak_postfilter,
                    record.weak_postbalance, record.weak_postaugment,
                    record.dev_f1, record.test_f1)
        records.append(record)
    return records


# --- experiment suite --------------------------------------------------------

COLUMN_DF = "DF"

_KIND_COLUMNS = {
    AugmenterKind.NONE: "ST",
    AugmenterKind.WORD_SWAP: "ST+WS",
    AugmenterKind.SYNONYM_SUBSTITUTION: "ST+SS",
    AugmenterKind.BACKTRANSLATION: "ST+BT",
}


def column_label(config: SelfTrainConfig) -> str:
    return _KIND_COLUMNS[config.augment.kind]


@dataclass
class CellResult:
    column: str
    seed: int
    records: list[GenerationRecord]

    @property
    def final_test_f1(self) -> float | None:
        return self.records[-1].test_f1


@dataclass
class ExperimentColumn:
    label: str
    summary: ScoreSummary
    cells: list[CellResult]


@dataclass
class ExperimentReport:
    columns: list[ExperimentColumn]

    def to_dict(self) -> dict:
        return {
            "columns": [
                {
                    "config_id": col.label,
                    "label": col.label,
                    "mean": col.summary.mean,
                    "std": col.summary.std,
                    "runs": [
                        {"seed": cell.seed, "f1_macro": cell.final_test_f1,
                         "per_class_f1": cell.records[-1].test_per_class_f1,
                         "generations": [r.to_dict() for r in cell.records]}
                        for cell in col.cells
                    ],
                }
                for col in self.columns
            ]
        }


class CellRunner(Protocol):
    """Hook for caching or persisting (column, seed) cells; the default
    just runs the loop in memory."""

    def __call__(self, bundle: DatasetBundle, config: SelfTrainConfig,
                 column: str, seed: int, backend: Backend) -> CellResult:
        ...


def _run_cell(bundle: DatasetBundle, config: SelfTrainConfig,
              column: str, seed: int, backend: Backend) -> CellResult:
    records = run_self_training(bundle, replace(config, seed=seed), backend)
    return CellResult(column=column, seed=seed, records=records)


def run_experiment_suite(
    bundle: DatasetBundle,
    configs: Sequence[SelfTrainConfig],
    seeds: Sequence[int],
    backend: Backend | None = None,
    cell_runner: CellRunner = _run_cell,
) -> ExperimentReport:
    """Run default fine-tuning plus each configured self-training column.

    Every (config, seed) cell runs independently; the report aggregates
    the final-generation test F1-macro per column as mean and population
    standard deviation over seeds.
    """
    if not seeds:
        raise ValueError("at least one seed is required")
    if not configs:
        raise ValueError("at least one self-training config is required")
    backend = backend or LinearBackend()

    columns: list[ExperimentColumn] = []
    df_config = replace(configs[0], generations=1,
                        augment=AugmentConfig(kind=AugmenterKind.NONE))
    plan: list[tuple[str, SelfTrainConfig]] = [(COLUMN_DF, df_config)]
    for config in configs:
        plan.append((column_label(config), config))

    for label, config in plan:
        cells = [cell_runner(bundle, config, label, seed, backend) for seed in seeds]
        scores = [cell.final_test_f1 for cell in cells]
        if any(s is None for s in scores):
            raise ValueError(f"column {label}: missing test scores; bundle has no test split?")
        columns.append(ExperimentColumn(label=label, summary=aggregate(scores), cells=cells))
    return ExperimentReport(columns=columns)
