"""Noisy self-training framework for binary text classification."""

from .corpus import (
    CorpusError,
    DatasetBundle,
    DatasetSchema,
    Document,
    IngestionStats,
    Label,
    LabeledExample,
    NormalizationProfile,
    Provenance,
    class_distribution,
    consolidate_annotations,
    load_dataset,
    merge_bundles,
    normalize_text,
)
from .features import FeatureSpace, FeatureVector, Vocabulary, build_vocabulary, featurize, tokenize
from .classifier import (
    LinearModelState,
    LossBatch,
    TrainConfig,
    TrainingError,
    builtin_defaults,
    combined_loss,
    combined_loss_grad,
    cross_entropy,
    load_model,
    predict_label,
    predict_proba,
    save_model,
    train,
)
from .augment import (
    AugmentConfig,
    AugmentError,
    AugmenterKind,
    SynonymLexicon,
    augment_weak_set,
    backtranslate,
    load_default_lexicon,
    synonym_substitute,
    word_swap,
)
from .loop import (
    Backend,
    GenerationRecord,
    LinearBackend,
    SelfTrainConfig,
    WeakSet,
    balance_downsample,
    confidence_filter,
    infer_weak_labels,
    run_experiment_suite,
    run_self_training,
)
from .analysis import ShiftReport, ShiftedPair, VocabGrowthReport, label_shift, vocabulary_growth
from .metrics import ConfusionMatrix, ScoreSummary, aggregate, confusion, f1_macro
from .remote import BackendError, ProtocolError, RemoteBackend, remote_predict, remote_train

__version__ = "0.1.0"
