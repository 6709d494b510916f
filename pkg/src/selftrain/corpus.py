"""Dataset schemas, file ingestion, text normalization and split management.

Labelled corpora and the unlabelled pool are read from JSON Lines files
(one object per line, UTF-8) or, with an explicit schema flag, from TSV
files with a header row. Text is normalized at ingestion time with a
profile matching the corpus origin (tweets vs. chatbot conversations);
documents that come out empty are dropped and counted, never passed on.
"""
from __future__ import annotations

import csv
import json
import logging
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

logger = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "dev", "test", "unlabelled")


class CorpusError(Exception):
    """Raised for unreadable files, bad labels, or duplicate ids."""


class Label(IntEnum):
    NOT_OFFENSIVE = 0
    OFFENSIVE = 1


class Provenance(Enum):
    HUMAN = "human"
    WEAK = "weak"
    AUGMENTED = "augmented"


class NormalizationProfile(Enum):
    TWEET = "tweet"
    CONVERSATION = "conversation"


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    source: str = ""


@dataclass(frozen=True)
class LabeledExample:
    doc: Document
    label: Label
    provenance: Provenance = Provenance.HUMAN
    confidence: float = 1.0
    origin_id: str | None = None

    def __post_init__(self) -> None:
        if self.provenance is Provenance.HUMAN and self.confidence != 1.0:
            raise ValueError("human-labelled examples carry confidence 1.0")
        if self.provenance is Provenance.AUGMENTED and self.origin_id is None:
            raise ValueError("augmented examples must reference their origin document")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence out of range: {self.confidence}")


@dataclass
class DatasetBundle:
    train: list[LabeledExample] = field(default_factory=list)
    dev: list[LabeledExample] | None = None
    test: list[LabeledExample] = field(default_factory=list)
    unlabelled: list[Document] = field(default_factory=list)

    def check_disjoint_ids(self) -> None:
        seen: dict[str, str] = {}
        for split, docs in self.iter_splits():
            for d in docs:
                if d.id in seen and seen[d.id] != split:
                    raise CorpusError(f"id {d.id!r} appears in splits {seen[d.id]!r} and {split!r}")
                if d.id in seen:
                    raise CorpusError(f"duplicate id {d.id!r} in split {split!r}")
                seen[d.id] = split

    def iter_splits(self) -> Iterable[tuple[str, list[Document]]]:
        yield "train", [ex.doc for ex in self.train]
        if self.dev is not None:
            yield "dev", [ex.doc for ex in self.dev]
        yield "test", [ex.doc for ex in self.test]
        yield "unlabelled", list(self.unlabelled)


@dataclass
class IngestionStats:
    rows_read: int = 0
    rows_kept: int = 0
    rows_dropped: int = 0
    class_counts: dict[str, dict[int, int]] = field(default_factory=dict)

    def record_kept(self, split: str, label: Label | None) -> None:
        self.rows_kept += 1
        if label is not None:
            counts = self.class_counts.setdefault(split, {0: 0, 1: 0})
            counts[int(label)] += 1

    def merge(self, other: "IngestionStats") -> "IngestionStats":
        merged = IngestionStats(
            rows_read=self.rows_read + other.rows_read,
            rows_kept=self.rows_kept + other.rows_kept,
            rows_dropped=self.rows_dropped + other.rows_dropped,
            class_counts={k: dict(v) for k, v in self.class_counts.items()},
        )
        for split, counts in other.class_counts.items():
            tgt = merged.class_counts.setdefault(split, {0: 0, 1: 0})
            for lbl, n in counts.items():
                tgt[lbl] = tgt.get(lbl, 0) + n
        return merged

    def to_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_kept": self.rows_kept,
            "rows_dropped": self.rows_dropped,
            "class_counts": {s: {str(k): v for k, v in c.items()} for s, c in self.class_counts.items()},
        }


@dataclass(frozen=True)
class DatasetSchema:
    """Column mapping for a dataset file.

    ``format`` is "jsonl" or "tsv". ``label_map`` translates raw label
    values onto {0, 1}; when absent, values must already parse as 0/1.
    A JSONL label value may be a list of annotator votes, which is
    consolidated by majority (ties resolve to NOT_OFFENSIVE).
    """

    format: str = "jsonl"
    id_field: str | None = "id"
    text_field: str = "text"
    label_field: str | None = "label"
    split_field: str | None = "split"
    label_map: Mapping[str, int] | None = None
    profile: NormalizationProfile | None = None
    source: str = ""


# --- normalization ---------------------------------------------------------

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"(?<!\S)@\S+")


def _fold_accents(text: str) -> str:
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


def _strip_punctuation(text: str) -> str:
    return "".join(ch for ch in text if not unicodedata.category(ch).startswith("P"))


def normalize_text(raw: str, profile: NormalizationProfile) -> str:
    """Normalize *raw* under the given profile. Total and idempotent.

    Tweet: user mentions, URLs and punctuation are removed, accents folded
    to their ASCII base letters, whitespace runs collapsed.
    Conversation: URLs are replaced with the placeholder token "URL";
    newline separators between turns are preserved.
    """
    if profile is NormalizationProfile.TWEET:
        text = _URL_RE.sub(" ", raw)
        text = _MENTION_RE.sub(" ", text)
        text = _fold_accents(text)
        text = _strip_punctuation(text)
        return " ".join(text.split())
    if profile is NormalizationProfile.CONVERSATION:
        lines = []
        for line in _URL_RE.sub("URL", raw).split("\n"):
            collapsed = " ".join(line.split())
            if collapsed:
                lines.append(collapsed)
        return "\n".join(lines)
    raise ValueError(f"unknown profile: {profile!r}")


def normalize_conversation(turns: Sequence[str]) -> str:
    """Join conversation turns with newline separators and normalize."""
    return normalize_text("\n".join(turns), NormalizationProfile.CONVERSATION)


def consolidate_annotations(votes: Sequence[Label | int]) -> Label:
    """Majority vote over binary annotations; ties resolve to NOT_OFFENSIVE."""
    if not votes:
        raise CorpusError("cannot consolidate an empty vote list")
    counts = Counter(int(v) for v in votes)
    if counts[1] > counts[0]:
        return Label.OFFENSIVE
    return Label.NOT_OFFENSIVE


def class_distribution(examples: Sequence[LabeledExample]) -> dict[Label, int]:
    counts = {Label.NOT_OFFENSIVE: 0, Label.OFFENSIVE: 0}
    for ex in examples:
        counts[ex.label] += 1
    return counts


# --- ingestion --------------------------------------------------------------


def _map_label_value(value: object, schema: DatasetSchema, row_num: int) -> Label:
    if isinstance(value, (list, tuple)):
        votes = [_map_label_value(v, schema, row_num) for v in value]
        return consolidate_annotations(votes)
    if schema.label_map is not None:
        key = str(value)
        if key not in schema.label_map:
            raise CorpusError(f"row {row_num}: label value {value!r} not in label map")
        value = schema.label_map[key]
    try:
        ivalue = int(value)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        raise CorpusError(f"row {row_num}: cannot map label value {value!r} onto {{0,1}}") from None
    if ivalue not in (0, 1):
        raise CorpusError(f"row {row_num}: label value {value!r} outside {{0,1}}")
    return Label(ivalue)


def _iter_rows(path: Path, schema: DatasetSchema) -> Iterable[tuple[int, dict]]:
    if schema.format == "jsonl":
        with path.open("r", encoding="utf-8") as fh:
            for i, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"{path}:{i}: malformed JSON line: {exc}") from None
                if not isinstance(row, dict):
                    raise CorpusError(f"{path}:{i}: expected a JSON object per line")
                yield i, row
    elif schema.format == "tsv":
        with path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh, delimiter="\t")
            if reader.fieldnames is None:
                raise CorpusError(f"{path}: missing TSV header row")
            for i, row in enumerate(reader, start=2):  # header is line 1
                yield i, row
    else:
        raise CorpusError(f"unknown dataset format {schema.format!r}")


def load_dataset(
    path: str | Path,
    schema: DatasetSchema,
    split_spec: str | None = None,
) -> tuple[DatasetBundle, IngestionStats]:
    """Load one dataset file into a bundle.

    ``split_spec`` assigns every row to the named split; when None, each
    row's split comes from ``schema.split_field`` (defaulting to "train").
    Labelled rows require a mappable label; rows in the "unlabelled" split
    ignore the label column. Duplicate ids are rejected.
    """
    path = Path(path)
    if not path.is_file():
        raise CorpusError(f"dataset file not found: {path}")
    if split_spec is not None and split_spec not in SPLIT_NAMES:
        raise CorpusError(f"unknown split {split_spec!r}; expected one of {SPLIT_NAMES}")

    bundle = DatasetBundle()
    stats = IngestionStats()
    seen_ids: set[str] = set()
    source = schema.source or path.name

    for row_num, row in _iter_rows(path, schema):
        stats.rows_read += 1
        split = split_spec
        if split is None:
            raw_split = row.get(schema.split_field) if schema.split_field else None
            split = str(raw_split) if raw_split else "train"
        if split not in SPLIT_NAMES:
            raise CorpusError(f"{path}:{row_num}: unknown split {split!r}")

        raw_text = row.get(schema.text_field)
        if raw_text is None:
            raise CorpusError(f"{path}:{row_num}: missing text field {schema.text_field!r}")
        text = str(raw_text)
        if schema.profile is not None:
            text = normalize_text(text, schema.profile)
        if not text.strip():
            stats.rows_dropped += 1
            continue

        if schema.id_field is not None and row.get(schema.id_field) not in (None, ""):
            doc_id = str(row[schema.id_field])
        else:
            doc_id = f"{path.stem}-{row_num}"
        if doc_id in seen_ids:
            raise CorpusError(f"{path}:{row_num}: duplicate id {doc_id!r}")
        seen_ids.add(doc_id)

        doc = Document(id=doc_id, text=text, source=source)
        if split == "unlabelled":
            bundle.unlabelled.append(doc)
            stats.record_kept(split, None)
            continue

        if schema.label_field is None or schema.label_field not in row or row[schema.label_field] in (None, ""):
            raise CorpusError(f"{path}:{row_num}: missing label for split {split!r}")
        label = _map_label_value(row[schema.label_field], schema, row_num)
        example = LabeledExample(doc=doc, label=label)
        if split == "dev":
            if bundle.dev is None:
                bundle.dev = []
            bundle.dev.append(example)
        else:
            getattr(bundle, split).append(example)
        stats.record_kept(split, label)

    return bundle, stats


def merge_bundles(*loaded: tuple[DatasetBundle, IngestionStats]) -> tuple[DatasetBundle, IngestionStats]:
    """Merge per-file bundles; ids must stay unique across all splits."""
    merged = DatasetBundle()
    stats = IngestionStats()
    for bundle, st in loaded:
        merged.train.extend(bundle.train)
        if bundle.dev is not None:
            if merged.dev is None:
                merged.dev = []
            merged.dev.extend(bundle.dev)
        merged.test.extend(bundle.test)
        merged.unlabelled.extend(bundle.unlabelled)
        stats = stats.merge(st)
    merged.check_disjoint_ids()
    return merged, stats


# --- persistence (normalized JSON Lines) ------------------------------------


def _example_to_obj(ex: LabeledExample) -> dict:
    obj = {
        "id": ex.doc.id,
        "text": ex.doc.text,
        "source": ex.doc.source,
        "label": int(ex.label),
        "provenance": ex.provenance.value,
        "confidence": ex.confidence,
    }
    if ex.origin_id is not None:
        obj["origin_id"] = ex.origin_id
    return obj


def _obj_to_example(obj: dict) -> LabeledExample:
    return LabeledExample(
        doc=Document(id=str(obj["id"]), text=str(obj["text"]), source=str(obj.get("source", ""))),
        label=Label(int(obj["label"])),
        provenance=Provenance(obj.get("provenance", "human")),
        confidence=float(obj.get("confidence", 1.0)),
        origin_id=obj.get("origin_id"),
    )


def write_examples(path: str | Path, examples: Iterable[LabeledExample]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(_example_to_obj(ex), ensure_ascii=False, sort_keys=True) + "\n")


def write_documents(path: str | Path, docs: Iterable[Document]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps({"id": d.id, "text": d.text, "source": d.source},
                                ensure_ascii=False, sort_keys=True) + "\n")


def read_documents(path: str | Path) -> list[Document]:
    docs = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{i}: malformed JSON line: {exc}") from None
            docs.append(Document(id=str(obj["id"]), text=str(obj["text"]), source=str(obj.get("source", ""))))
    return docs


def save_bundle(bundle: DatasetBundle, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_examples(out / "train.jsonl", bundle.train)
    if bundle.dev is not None:
        write_examples(out / "dev.jsonl", bundle.dev)
    write_examples(out / "test.jsonl", bundle.test)
    write_documents(out / "unlabelled.jsonl", bundle.unlabelled)


def load_bundle(in_dir: str | Path) -> DatasetBundle:
    src = Path(in_dir)
    bundle = DatasetBundle()
    with (src / "train.jsonl").open("r", encoding="utf-8") as fh:
        bundle.train = [_obj_to_example(json.loads(line)) for line in fh if line.strip()]
    dev_path = src / "dev.jsonl"
    if dev_path.is_file():
        with dev_path.open("r", encoding="utf-8") as fh:
            bundle.dev = [_obj_to_example(json.loads(line)) for line in fh if line.strip()]
    with (src / "test.jsonl").open("r", encoding="utf-8") as fh:
        bundle.test = [_obj_to_example(json.loads(line)) for line in fh if line.strip()]
    unl_path = src / "unlabelled.jsonl"
    if unl_path.is_file():
        bundle.unlabelled = read_documents(unl_path)
    bundle.check_disjoint_ids()
    return bundle
