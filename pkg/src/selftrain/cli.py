"""Config-driven command line: ingest, train, selftrain, augment, analyze, report.

Settings live in an INI file with sections mirroring the config types;
any key can be overridden with --set section.key=value, and the most
common knobs have dedicated flags. Exit codes: 0 success, 1 usage error,
2 data error, 3 backend or protocol error.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import analysis as analysis_mod
from .augment import (
    AugmentConfig,
    AugmentError,
    AugmenterKind,
    SynonymLexicon,
    augment_documents,
    load_default_lexicon,
)
from .classifier import TrainConfig, load_model, save_model, LinearModelState
from .corpus import (
    CorpusError,
    DatasetBundle,
    DatasetSchema,
    NormalizationProfile,
    load_bundle,
    load_dataset,
    merge_bundles,
    read_documents,
    save_bundle,
    write_documents,
    write_examples,
)
from .features import FeatureSpace
from .loop import (
    COLUMN_DF,
    CellResult,
    GenerationRecord,
    LinearBackend,
    SelfTrainConfig,
    column_label,
    run_experiment_suite,
    run_self_training,
)
from .metrics import MetricsError, aggregate
from .analysis import AnalysisError
from .remote import BackendError, RemoteBackend
from .translation import (
    HttpTranslationClient,
    IdentityTranslationClient,
    TranslationError,
    load_stub_translator,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BACKEND = 3

DEFAULTS: dict[str, dict[str, str]] = {
    "data": {
        "bundle": "", "train": "", "dev": "", "test": "", "unlabelled": "",
        "format": "jsonl", "profile": "none", "id_field": "id", "text_field": "text",
        "label_field": "label", "split_field": "split", "label_map": "",
    },
    "features": {"dimension": str(1 << 18), "ngram_orders": "1,2", "hash_seed": "0"},
    "train": {
        "backend": "builtin", "model": "", "batch_size": "128", "max_tokens": "128",
        "learning_rate": "", "warmup_fraction": "0.15", "weight_decay": "0.001",
        "epochs": "20", "dropout_rate": "0.1",
    },
    "selftrain": {"generations": "4", "confidence_threshold": "0.8", "seeds": "1,2,3"},
    "augment": {"kind": "none", "rate": "0.3", "lexicon": "", "translation": "stub"},
    "output": {"dir": "runs/default"},
}


class UsageError(Exception):
    pass


class Settings:
    """Layered key-value settings: defaults, config file, CLI overrides."""

    def __init__(self):
        self.values = {section: dict(keys) for section, keys in DEFAULTS.items()}

    def load_file(self, path: str) -> None:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        if not Path(path).is_file():
            raise UsageError(f"config file not found: {path}")
        parser.read(path, encoding="utf-8")
        for section in parser.sections():
            if section not in self.values:
                raise UsageError(f"unknown config section [{section}]")
            for key, value in parser.items(section):
                if key not in self.values[section]:
                    raise UsageError(f"unknown config key {section}.{key}")
                self.values[section][key] = value

    def override(self, section: str, key: str, value: str) -> None:
        if section not in self.values or key not in self.values[section]:
            raise UsageError(f"unknown config key {section}.{key}")
        self.values[section][key] = value

    def get(self, section: str, key: str) -> str:
        return self.values[section][key].strip()

    def get_int(self, section: str, key: str) -> int:
        try:
            return int(self.get(section, key))
        except ValueError:
            raise UsageError(f"{section}.{key} must be an integer") from None

    def get_float(self, section: str, key: str) -> float:
        try:
            return float(self.get(section, key))
        except ValueError:
            raise UsageError(f"{section}.{key} must be a number") from None

    def config_hash(self) -> str:
        # identifies the experiment, not its destination directory
        hashed = {s: v for s, v in self.values.items() if s != "output"}
        canonical = json.dumps(hashed, sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _parse_seeds(raw: str) -> list[int]:
    try:
        seeds = [int(s) for s in raw.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"cannot parse seeds from {raw!r}") from None
    if not seeds:
        raise UsageError("at least one seed is required")
    return seeds


def _parse_kinds(raw: str) -> list[AugmenterKind]:
    kinds = []
    for part in raw.replace(",", " ").split():
        try:
            kinds.append(AugmenterKind(part))
        except ValueError:
            valid = ", ".join(k.value for k in AugmenterKind)
            raise UsageError(f"unknown augmenter {part!r}; expected one of: {valid}") from None
    return kinds or [AugmenterKind.NONE]


def _schema_from(settings: Settings) -> DatasetSchema:
    profile_raw = settings.get("data", "profile").lower()
    profile = None if profile_raw in ("", "none") else NormalizationProfile(profile_raw)
    label_map = None
    raw_map = settings.get("data", "label_map")
    if raw_map:
        label_map = {}
        for pair in raw_map.split(","):
            try:
                key, value = pair.split("=")
            except ValueError:
                raise UsageError(f"bad label_map entry {pair!r}; expected RAW=0|1") from None
            label_map[key.strip()] = int(value)
    return DatasetSchema(
        format=settings.get("data", "format"),
        id_field=settings.get("data", "id_field") or None,
        text_field=settings.get("data", "text_field"),
        label_field=settings.get("data", "label_field") or None,
        split_field=settings.get("data", "split_field") or None,
        label_map=label_map,
        profile=profile,
    )


def _ingest_bundle(settings: Settings):
    schema = _schema_from(settings)
    loaded = []
    for split in ("train", "dev", "test", "unlabelled"):
        path = settings.get("data", split)
        if path:
            loaded.append(load_dataset(path, schema, split_spec=split))
    if not loaded:
        raise UsageError("no dataset paths configured under [data]")
    return merge_bundles(*loaded)


def _load_bundle(settings: Settings) -> DatasetBundle:
    bundle_dir = settings.get("data", "bundle")
    if bundle_dir:
        return load_bundle(bundle_dir)
    bundle, _ = _ingest_bundle(settings)
    return bundle


def _feature_space(settings: Settings) -> FeatureSpace:
    orders = tuple(int(n) for n in settings.get("features", "ngram_orders").replace(",", " ").split())
    return FeatureSpace(
        dimension=settings.get_int("features", "dimension"),
        ngram_orders=orders,
        hash_seed=settings.get_int("features", "hash_seed"),
    )


def _train_config(settings: Settings, seed: int) -> TrainConfig:
    backend = settings.get("train", "backend")
    lr_raw = settings.get("train", "learning_rate")
    if lr_raw:
        learning_rate = float(lr_raw)
    else:
        learning_rate = 0.1 if backend == "builtin" else 1e-5
    return TrainConfig(
        batch_size=settings.get_int("train", "batch_size"),
        max_tokens=settings.get_int("train", "max_tokens"),
        learning_rate=learning_rate,
        warmup_fraction=settings.get_float("train", "warmup_fraction"),
        weight_decay=settings.get_float("train", "weight_decay"),
        epochs=settings.get_int("train", "epochs"),
        dropout_rate=settings.get_float("train", "dropout_rate"),
        seed=seed,
    )


def _backend_from(settings: Settings):
    backend = settings.get("train", "backend")
    if backend == "builtin":
        return LinearBackend(_feature_space(settings))
    if backend.startswith("http://") or backend.startswith("https://"):
        return RemoteBackend(backend, model_name=settings.get("train", "model") or None)
    raise UsageError(f"unknown backend {backend!r}; expected 'builtin' or an http(s) URL")


def _lexicon_from(settings: Settings) -> SynonymLexicon:
    path = settings.get("augment", "lexicon")
    return SynonymLexicon.from_file(path) if path else load_default_lexicon()


def _translator_from(settings: Settings):
    raw = settings.get("augment", "translation")
    if raw in ("", "stub"):
        return load_stub_translator()
    if raw == "identity":
        return IdentityTranslationClient()
    if raw.startswith("http://") or raw.startswith("https://"):
        return HttpTranslationClient(raw)
    raise UsageError(f"unknown translation client {raw!r}; expected stub, identity, or a URL")


def _augment_config(settings: Settings, kind: AugmenterKind) -> AugmentConfig:
    lexicon = _lexicon_from(settings) if kind is AugmenterKind.SYNONYM_SUBSTITUTION else None
    translator = _translator_from(settings) if kind is AugmenterKind.BACKTRANSLATION else None
    return AugmentConfig(
        kind=kind,
        rate=settings.get_float("augment", "rate"),
        lexicon=lexicon,
        translator=translator,
    )


def _out_dir(settings: Settings) -> Path:
    out = Path(settings.get("output", "dir"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_manifest(out: Path, settings: Settings, seeds: list[int]) -> None:
    _write_json(out / "manifest.json", {
        "config_hash": settings.config_hash(),
        "config": settings.values,
        "seeds": seeds,
        "format_versions": {"model": 1, "report": 1},
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    })


# --- commands ----------------------------------------------------------------


def cmd_ingest(settings: Settings) -> int:
    bundle, stats = _ingest_bundle(settings)
    out = _out_dir(settings)
    save_bundle(bundle, out)
    _write_json(out / "ingestion_stats.json", stats.to_dict())
    print(f"ingested {stats.rows_kept}/{stats.rows_read} rows "
          f"({stats.rows_dropped} dropped) -> {out}")
    for split, counts in sorted(stats.class_counts.items()):
        print(f"  {split}: {counts}")
    return EXIT_OK


def cmd_train(settings: Settings, seeds: list[int]) -> int:
    bundle = _load_bundle(settings)
    backend = _backend_from(settings)
    config = _train_config(settings, seed=seeds[0])
    out = _out_dir(settings)
    model = backend.train(bundle.train, bundle.dev, config)
    result = {"backend": backend.name, "seed": seeds[0]}
    if isinstance(model, LinearModelState):
        model_path = out / "model.json"
        save_model(model, model_path)
        result["model_path"] = str(model_path)
        result["selected_epoch"] = model.selected_epoch
    if bundle.test:
        from .loop import evaluate_f1

        result["test_f1_macro"] = evaluate_f1(model, bundle.test)
    _write_json(out / "train_result.json", result)
    print(json.dumps(result, indent=2, sort_keys=True))
    return EXIT_OK


def _persisting_cell_runner(out: Path):
    """Cell runner that caches finished (column, seed) cells on disk."""

    def runner(bundle, config: SelfTrainConfig, column: str, seed: int, backend) -> CellResult:
        cell_dir = out / "cells" / column / f"seed{seed}"
        metrics_path = cell_dir / "metrics.json"
        if metrics_path.is_file():
            payload = json.loads(metrics_path.read_text(encoding="utf-8"))
            records = [GenerationRecord(
                generation=g["generation"],
                weak_prefilter=g["weak_prefilter"],
                weak_postfilter=g["weak_postfilter"],
                weak_postbalance=g["weak_postbalance"],
                weak_postaugment=g["weak_postaugment"],
                train_loss=g["train_loss"],
                dev_f1=g["dev_f1"],
                test_f1=g["test_f1"],
                test_per_class_f1=(
                    {int(k): v for k, v in g["test_per_class_f1"].items()}
                    if g.get("test_per_class_f1") else None),
            ) for g in payload["generations"]]
            print(f"  [cached] {column} seed {seed}")
            return CellResult(column=column, seed=seed, records=records)

        records = run_self_training(bundle, replace(config, seed=seed), backend,
                                    keep_weak_sets=True)
        cell_dir.mkdir(parents=True, exist_ok=True)
        for record in records:
            if record.weak_examples is not None:
                write_examples(cell_dir / f"weak_gen{record.generation}.jsonl",
                               record.weak_examples)
                record.weak_examples = None
            if isinstance(record.model, LinearModelState):
                save_model(record.model, cell_dir / f"model_gen{record.generation}.json")
        _write_json(metrics_path, {
            "config_id": column,
            "column": column,
            "seed": seed,
            "f1_macro": records[-1].test_f1,
            "per_class_f1": records[-1].test_per_class_f1,
            "generations": [r.to_dict() for r in records],
        })
        print(f"  [done] {column} seed {seed}: test F1 {records[-1].test_f1:.4f}")
        return CellResult(column=column, seed=seed, records=records)

    return runner


def _format_report_text(report_dict: dict) -> str:
    lines = ["column      mean ± 1 std   runs"]
    for col in report_dict["columns"]:
        runs = ", ".join(f"{r['f1_macro']:.4f}" for r in col["runs"])
        lines.append(f"{col['label']:<10}  {100 * col['mean']:.1f} ± {100 * col['std']:.1f}"
                     f"    [{runs}]")
    return "\n".join(lines) + "\n"


def cmd_selftrain(settings: Settings, seeds: list[int]) -> int:
    bundle = _load_bundle(settings)
    backend = _backend_from(settings)
    out = _out_dir(settings)
    kinds = _parse_kinds(settings.get("augment", "kind"))
    configs = []
    for kind in kinds:
        configs.append(SelfTrainConfig(
            generations=settings.get_int("selftrain", "generations"),
            confidence_threshold=settings.get_float("selftrain", "confidence_threshold"),
            augment=_augment_config(settings, kind),
            train=_train_config(settings, seed=0),
        ))
    _write_manifest(out, settings, seeds)
    report = run_experiment_suite(bundle, configs, seeds, backend,
                                  cell_runner=_persisting_cell_runner(out))
    report_dict = report.to_dict()
    _write_json(out / "report.json", report_dict)
    text = _format_report_text(report_dict)
    (out / "report.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def cmd_augment(settings: Settings, seeds: list[int]) -> int:
    path = settings.get("data", "unlabelled")
    if not path:
        raise UsageError("cmd augment needs data.unlabelled to point at a documents file")
    docs = read_documents(path)
    kinds = _parse_kinds(settings.get("augment", "kind"))
    if len(kinds) != 1:
        raise UsageError("cmd augment takes exactly one augmenter kind")
    config = replace(_augment_config(settings, kinds[0]), seed=seeds[0])
    augmented = augment_documents(docs, config)
    out = _out_dir(settings)
    out_path = out / "augmented.jsonl"
    write_documents(out_path, augmented)
    print(f"augmented {len(docs)} documents with {kinds[0].value} -> {out_path}")
    return EXIT_OK


def cmd_analyze(settings: Settings, seeds: list[int], model_path: str | None) -> int:
    if not model_path:
        raise UsageError("cmd analyze needs --model pointing at a trained model file")
    if not Path(model_path).is_file():
        raise CorpusError(f"model file not found: {model_path}")
    model = load_model(model_path)
    bundle = _load_bundle(settings)
    docs = bundle.unlabelled
    if not docs:
        raise CorpusError("no unlabelled documents to analyze")
    out = _out_dir(settings)

    methods = (AugmenterKind.BACKTRANSLATION, AugmenterKind.SYNONYM_SUBSTITUTION,
               AugmenterKind.WORD_SWAP)
    shift_reports = []
    vocab_reports = []
    all_pairs = []
    for method in methods:
        config = replace(_augment_config(settings, method), seed=seeds[0])
        augmented = augment_documents(docs, config)
        report, pairs = analysis_mod.label_shift(model, docs, augmented, method)
        shift_reports.append(report)
        all_pairs.extend(pairs)
        vocab_reports.append(analysis_mod.vocabulary_growth(docs, augmented, method))
    paths = analysis_mod.emit_analysis_report(shift_reports, vocab_reports, all_pairs, out)
    print((out / "analysis.txt").read_text(encoding="utf-8"), end="")
    print(f"reports written to {paths['json'].parent}")
    return EXIT_OK


def cmd_report(settings: Settings) -> int:
    out = _out_dir(settings)
    cells_dir = out / "cells"
    if not cells_dir.is_dir():
        raise CorpusError(f"no cells directory under {out}; run selftrain first")
    columns = []
    labels = sorted(p.name for p in cells_dir.iterdir() if p.is_dir())
    ordered = [COLUMN_DF] + [l for l in sorted(labels) if l != COLUMN_DF]
    for label in ordered:
        cell_dir = cells_dir / label
        if not cell_dir.is_dir():
            continue
        runs = []
        for metrics_path in sorted(cell_dir.glob("seed*/metrics.json")):
            payload = json.loads(metrics_path.read_text(encoding="utf-8"))
            runs.append({"seed": payload["seed"], "f1_macro": payload["f1_macro"],
                         "per_class_f1": payload.get("per_class_f1"),
                         "generations": payload["generations"]})
        if not runs:
            continue
        summary = aggregate([r["f1_macro"] for r in runs])
        columns.append({"config_id": label, "label": label,
                        "mean": summary.mean, "std": summary.std, "runs": runs})
    report_dict = {"columns": columns}
    _write_json(out / "report.json", report_dict)
    text = _format_report_text(report_dict)
    (out / "report.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


# --- entry point --------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="selftrain", description=__doc__)
    parser.add_argument("command",
                        choices=["ingest", "train", "selftrain", "augment", "analyze", "report"])
    parser.add_argument("--config", help="INI config file")
    parser.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override any config key (repeatable)")
    parser.add_argument("--seed", type=int, help="single seed (shorthand for --seeds)")
    parser.add_argument("--seeds", help="comma-separated seed list")
    parser.add_argument("--output", help="run directory")
    parser.add_argument("--backend", help="'builtin' or a remote endpoint URL")
    parser.add_argument("--augment",
                        help="augmenter kind(s): none, word-swap, synonym, backtranslation")
    parser.add_argument("--threshold", type=float, help="confidence threshold")
    parser.add_argument("--generations", type=int, help="teacher-student iterations")
    parser.add_argument("--model", help="model file for analyze")
    return parser


def _resolve_settings(args) -> tuple[Settings, list[int]]:
    settings = Settings()
    if args.config:
        settings.load_file(args.config)
    for item in args.set:
        try:
            target, value = item.split("=", 1)
            section, key = target.split(".", 1)
        except ValueError:
            raise UsageError(f"bad --set {item!r}; expected section.key=value") from None
        settings.override(section.strip(), key.strip(), value.strip())
    if args.output:
        settings.override("output", "dir", args.output)
    if args.backend:
        settings.override("train", "backend", args.backend)
    if args.augment:
        settings.override("augment", "kind", args.augment)
    if args.threshold is not None:
        settings.override("selftrain", "confidence_threshold", str(args.threshold))
    if args.generations is not None:
        settings.override("selftrain", "generations", str(args.generations))
    if args.seeds:
        settings.override("selftrain", "seeds", args.seeds)
    elif args.seed is not None:
        settings.override("selftrain", "seeds", str(args.seed))
    seeds = _parse_seeds(settings.get("selftrain", "seeds"))
    return settings, seeds


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings, seeds = _resolve_settings(args)
        if args.command == "ingest":
            return cmd_ingest(settings)
        if args.command == "train":
            return cmd_train(settings, seeds)
        if args.command == "selftrain":
            return cmd_selftrain(settings, seeds)
        if args.command == "augment":
            return cmd_augment(settings, seeds)
        if args.command == "analyze":
            return cmd_analyze(settings, seeds, args.model)
        if args.command == "report":
            return cmd_report(settings)
        raise UsageError(f"unknown command {args.command!r}")
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusError, AugmentError, AnalysisError, MetricsError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (BackendError, TranslationError) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
