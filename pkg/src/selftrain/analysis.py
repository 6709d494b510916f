"""Audits of augmentation label-invariance and vocabulary growth.

A base model trained on human-labelled data only infers both the clean
and the augmented version of each unlabelled document. A pair whose
predicted label flips counts as shifted: positive shift flips
non-offensive to offensive, negative shift the other way. Vocabulary
growth measures how many unseen tokens an augmenter introduces on top of
the clean corpus vocabulary.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .augment import AugmenterKind
from .classifier import predict_label
from .corpus import Document, Label
from .features import build_vocabulary
from .loop import Predictor

REPORT_METHOD_ORDER = (
    AugmenterKind.BACKTRANSLATION,
    AugmenterKind.SYNONYM_SUBSTITUTION,
    AugmenterKind.WORD_SWAP,
)

_METHOD_SHORT = {
    AugmenterKind.BACKTRANSLATION: "BT",
    AugmenterKind.SYNONYM_SUBSTITUTION: "SS",
    AugmenterKind.WORD_SWAP: "WS",
    AugmenterKind.NONE: "none",
}


class AnalysisError(Exception):
    pass


@dataclass(frozen=True)
class ShiftReport:
    method: AugmenterKind
    n_examples: int
    n_shifted: int
    n_pos_shift: int
    n_neg_shift: int
    total_shift_pct: float
    positive_shift_pct: float
    negative_shift_pct: float

    def to_dict(self) -> dict:
        return {
            "method": _METHOD_SHORT[self.method],
            "n_examples": self.n_examples,
            "n_shifted": self.n_shifted,
            "n_pos_shift": self.n_pos_shift,
            "n_neg_shift": self.n_neg_shift,
            "total_shift_pct": self.total_shift_pct,
            "positive_shift_pct": self.positive_shift_pct,
            "negative_shift_pct": self.negative_shift_pct,
        }


@dataclass(frozen=True)
class ShiftedPair:
    clean_text: str
    augmented_text: str
    clean_label: Label
    augmented_label: Label
    method: AugmenterKind

    def to_dict(self) -> dict:
        return {
            "clean_text": self.clean_text,
            "augmented_text": self.augmented_text,
            "clean_label": int(self.clean_label),
            "augmented_label": int(self.augmented_label),
            "method": _METHOD_SHORT[self.method],
        }


@dataclass(frozen=True)
class VocabGrowthReport:
    method: AugmenterKind
    base_vocab_size: int
    combined_vocab_size: int
    growth_pct: float

    def to_dict(self) -> dict:
        return {
            "method": _METHOD_SHORT[self.method],
            "base_vocab_size": self.base_vocab_size,
            "combined_vocab_size": self.combined_vocab_size,
            "growth_pct": self.growth_pct,
        }


def label_shift(
    model: Predictor,
    docs: Sequence[Document],
    augmented: Sequence[Document],
    method: AugmenterKind,
    confidence_threshold: float | None = None,
) -> tuple[ShiftReport, list[ShiftedPair]]:
    """Compare predicted labels on clean vs. augmented documents.

    The model should be a generation-1 teacher (trained on human data
    only). By default every pair counts; passing ``confidence_threshold``
    restricts the audit to pairs whose clean prediction clears the
    threshold, mirroring the confidence filter of the training loop.

    Positive and negative shift percentages are fractions of the shifted
    subset and sum to exactly 100 whenever any shift exists; with no
    shifts both are reported as 0.
    """
    if len(docs) != len(augmented):
        raise AnalysisError(
            f"clean and augmented lists are misaligned: {len(docs)} vs {len(augmented)}")

    clean_dists = model.predict_proba(docs)
    aug_dists = model.predict_proba(augmented)

    n_examples = 0
    n_pos = 0
    n_neg = 0
    pairs: list[ShiftedPair] = []
    for doc, aug_doc, cd, ad in zip(docs, augmented, clean_dists, aug_dists):
        if confidence_threshold is not None and float(max(cd)) < confidence_threshold:
            continue
        n_examples += 1
        clean_label = predict_label(cd)
        aug_label = predict_label(ad)
        if clean_label == aug_label:
            continue
        if clean_label is Label.NOT_OFFENSIVE:
            n_pos += 1
        else:
            n_neg += 1
        pairs.append(ShiftedPair(
            clean_text=doc.text,
            augmented_text=aug_doc.text,
            clean_label=clean_label,
            augmented_label=aug_label,
            method=method,
        ))

    n_shifted = n_pos + n_neg
    total_pct = 100.0 * n_shifted / n_examples if n_examples else 0.0
    if n_shifted:
        pos_pct = 100.0 * n_pos / n_shifted
        neg_pct = 100.0 - pos_pct  # exact complement by construction
    else:
        pos_pct = neg_pct = 0.0
    report = ShiftReport(
        method=method,
        n_examples=n_examples,
        n_shifted=n_shifted,
        n_pos_shift=n_pos,
        n_neg_shift=n_neg,
        total_shift_pct=total_pct,
        positive_shift_pct=pos_pct,
        negative_shift_pct=neg_pct,
    )
    return report, pairs


def vocabulary_growth(clean: Sequence[Document], augmented: Sequence[Document],
                      method: AugmenterKind) -> VocabGrowthReport:
    """Relative vocabulary increase of clean+augmented over clean alone."""
    base = build_vocabulary(clean)
    if base.size == 0:
        raise AnalysisError("clean corpus has an empty vocabulary")
    combined = base.union(build_vocabulary(augmented))
    growth = 100.0 * (combined.size - base.size) / base.size
    return VocabGrowthReport(
        method=method,
        base_vocab_size=base.size,
        combined_vocab_size=combined.size,
        growth_pct=growth,
    )


def _method_sort_key(method: AugmenterKind) -> int:
    try:
        return REPORT_METHOD_ORDER.index(method)
    except ValueError:
        return len(REPORT_METHOD_ORDER)


def emit_analysis_report(
    shift_reports: Sequence[ShiftReport],
    vocab_reports: Sequence[VocabGrowthReport],
    pairs: Sequence[ShiftedPair],
    out_dir: str | Path,
    max_pairs_per_method: int = 50,
) -> dict[str, Path]:
    """Write the machine-readable report, a plain-text table, and pair samples.

    JSON keeps full precision; the text table rounds to one decimal place.
    Rows are ordered BT, SS, WS.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    shift_sorted = sorted(shift_reports, key=lambda r: _method_sort_key(r.method))
    vocab_sorted = sorted(vocab_reports, key=lambda r: _method_sort_key(r.method))

    json_path = out / "analysis.json"
    json_path.write_text(json.dumps({
        "shift": [r.to_dict() for r in shift_sorted],
        "vocabulary_growth": [r.to_dict() for r in vocab_sorted],
    }, indent=2, sort_keys=True), encoding="utf-8")

    lines = ["Augmentation  Total Shift  Positive Shift  Negative Shift"]
    for r in shift_sorted:
        lines.append(f"{_METHOD_SHORT[r.method]:<12}  {r.total_shift_pct:>10.1f}%"
                     f"  {r.positive_shift_pct:>13.1f}%  {r.negative_shift_pct:>13.1f}%")
    lines.append("")
    lines.append("Augmentation  Base Vocab  Combined Vocab  Growth")
    for r in vocab_sorted:
        lines.append(f"{_METHOD_SHORT[r.method]:<12}  {r.base_vocab_size:>10d}"
                     f"  {r.combined_vocab_size:>14d}  {r.growth_pct:>5.1f}%")
    table_path = out / "analysis.txt"
    table_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    pairs_path = out / "shifted_pairs.jsonl"
    kept_per_method: dict[AugmenterKind, int] = {}
    with pairs_path.open("w", encoding="utf-8") as fh:
        for pair in pairs:
            kept = kept_per_method.get(pair.method, 0)
            if kept >= max_pairs_per_method:
                continue
            kept_per_method[pair.method] = kept + 1
            fh.write(json.dumps(pair.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")

    return {"json": json_path, "table": table_path, "pairs": pairs_path}
