"""Data-noising augmenters and the weak-set doubling step.

Three methods are available behind one interface: random adjacent word
swap, random synonym substitution from a lexicon, and backtranslation
through a pivot language. Each is a deterministic function of its input,
seed, and config; per-document seeds are derived from the config seed and
the document id, so sharding documents across workers can never change
the result.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import Document, LabeledExample, Provenance
from .hashing import derive_seed
from .translation import TranslationClient

TRANSLATION_BATCH_SIZE = 64


class AugmentError(Exception):
    pass


class AugmenterKind(Enum):
    WORD_SWAP = "word-swap"
    SYNONYM_SUBSTITUTION = "synonym"
    BACKTRANSLATION = "backtranslation"
    NONE = "none"


class SynonymLexicon:
    """Maps lowercase tokens to non-empty synonym lists."""

    def __init__(self, entries: Mapping[str, Sequence[str]]):
        self.entries: dict[str, list[str]] = {}
        for word, synonyms in entries.items():
            if word != word.lower():
                raise AugmentError(f"lexicon key not lowercase: {word!r}")
            syns = [s for s in synonyms if s]
            if not syns:
                raise AugmentError(f"empty synonym list for {word!r}")
            if word in syns:
                raise AugmentError(f"synonym list for {word!r} contains its own key")
            self.entries[word] = syns

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, token: str) -> list[str] | None:
        return self.entries.get(token)

    @classmethod
    def from_file(cls, path: str | Path) -> "SynonymLexicon":
        """Parse the one-entry-per-line "word<TAB>syn1,syn2,..." format."""
        entries: dict[str, list[str]] = {}
        for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                word, syns = line.split("\t")
            except ValueError:
                raise AugmentError(f"{path}:{i}: expected 'word<TAB>syn1,syn2,...'") from None
            entries[word] = [s.strip() for s in syns.split(",") if s.strip()]
        return cls(entries)


def load_default_lexicon() -> SynonymLexicon:
    with resources.as_file(resources.files("selftrain.data") / "lexicon_en.tsv") as path:
        return SynonymLexicon.from_file(path)


@dataclass(frozen=True)
class AugmentConfig:
    kind: AugmenterKind = AugmenterKind.NONE
    rate: float = 0.30
    seed: int = 0
    lexicon: SynonymLexicon | None = None
    translator: TranslationClient | None = None
    source_lang: str = "en"
    pivot_lang: str = "de"

    def __post_init__(self) -> None:
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError("rate must lie in [0, 1]")

    def validated(self) -> "AugmentConfig":
        if self.kind is AugmenterKind.SYNONYM_SUBSTITUTION and self.lexicon is None:
            raise AugmentError("synonym substitution requires a lexicon")
        if self.kind is AugmenterKind.BACKTRANSLATION and self.translator is None:
            raise AugmentError("backtranslation requires a translation client")
        return self


def _noise_count(n_tokens: int, rate: float) -> int:
    """Number of positions to perturb: max(1, floor(rate * len))."""
    if n_tokens == 0 or rate <= 0.0:
        return 0
    return max(1, math.floor(rate * n_tokens))


def swap_plan(n_tokens: int, rate: float, rng: random.Random) -> list[int]:
    """Adjacent-pair swap positions, sampled without repetition.

    Position p swaps tokens p and p+1; the plan is applied in sampled
    order. Sequences shorter than two tokens get no swaps.
    """
    if n_tokens < 2:
        return []
    k = min(_noise_count(n_tokens, rate), n_tokens - 1)
    if k == 0:
        return []
    return rng.sample(range(n_tokens - 1), k)


def word_swap(tokens: Sequence[str], rate: float, rng_seed: int) -> list[str]:
    """Randomly swap adjacent tokens at a fraction of the positions.

    The output is a permutation of the input (multiset and length are
    preserved); the input comes back unchanged when it has fewer than two
    tokens or the rate is zero.
    """
    out = list(tokens)
    rng = random.Random(rng_seed)
    for pos in swap_plan(len(out), rate, rng):
        out[pos], out[pos + 1] = out[pos + 1], out[pos]
    return out


def synonym_substitute(tokens: Sequence[str], lexicon: SynonymLexicon,
                       rate: float, rng_seed: int) -> list[str]:
    """Replace a fraction of the tokens with a random synonym each.

    Only positions whose token (lowercased) has a lexicon entry are
    eligible; when fewer eligible positions exist than the target count,
    all of them are replaced. Tokens without an entry are never touched.
    """
    out = list(tokens)
    k = _noise_count(len(out), rate)
    if k == 0:
        return out
    rng = random.Random(rng_seed)
    candidates = [i for i, tok in enumerate(out) if tok.lower() in lexicon]
    if not candidates:
        return out
    chosen = rng.sample(candidates, min(k, len(candidates)))
    for i in sorted(chosen):
        out[i] = rng.choice(lexicon.entries[out[i].lower()])
    return out


def backtranslate(texts: Sequence[str], client: TranslationClient,
                  pivot: tuple[str, str] = ("en", "de")) -> list[str]:
    """Translate into the pivot language and back, preserving alignment.

    Client calls carry at most TRANSLATION_BATCH_SIZE texts each; a
    response of the wrong length fails with the offending batch range.
    """
    source_lang, pivot_lang = pivot
    results: list[str] = []
    for start in range(0, len(texts), TRANSLATION_BATCH_SIZE):
        batch = list(texts[start : start + TRANSLATION_BATCH_SIZE])
        pivoted = client.translate(batch, source_lang, pivot_lang)
        if len(pivoted) != len(batch):
            raise AugmentError(
                f"translation response misaligned for batch [{start}:{start + len(batch)}]: "
                f"sent {len(batch)} texts, got {len(pivoted)}")
        restored = client.translate(pivoted, pivot_lang, source_lang)
        if len(restored) != len(batch):
            raise AugmentError(
                f"translation response misaligned for batch [{start}:{start + len(batch)}]: "
                f"sent {len(batch)} texts, got {len(restored)}")
        results.extend(str(t) for t in restored)
    return results


def _augment_texts(texts: Sequence[str], doc_ids: Sequence[str],
                   config: AugmentConfig) -> list[str]:
    kind = config.kind
    if kind is AugmenterKind.BACKTRANSLATION:
        return backtranslate(texts, config.translator, (config.source_lang, config.pivot_lang))
    out = []
    for text, doc_id in zip(texts, doc_ids):
        seed = derive_seed(config.seed, doc_id)
        tokens = text.split()
        if kind is AugmenterKind.WORD_SWAP:
            tokens = word_swap(tokens, config.rate, seed)
        elif kind is AugmenterKind.SYNONYM_SUBSTITUTION:
            tokens = synonym_substitute(tokens, config.lexicon, config.rate, seed)
        else:
            raise AugmentError(f"no augmentation routine for kind {kind}")
        out.append(" ".join(tokens))
    return out


def augment_documents(docs: Sequence[Document], config: AugmentConfig) -> list[Document]:
    """Produce one augmented document per input, index-aligned."""
    config.validated()
    if config.kind is AugmenterKind.NONE:
        return list(docs)
    texts = _augment_texts([d.text for d in docs], [d.id for d in docs], config)
    return [Document(id=f"{d.id}#aug", text=t, source=d.source) for d, t in zip(docs, texts)]


def augment_weak_set(weak: Sequence[LabeledExample], config: AugmentConfig) -> list[LabeledExample]:
    """Double the weakly-labelled set with one augmented copy per example.

    Each copy replicates the origin's label and confidence, carries
    provenance AUGMENTED and the origin id, and never modifies the
    originals. Kind NONE skips the step and returns the input unchanged.
    """
    config.validated()
    if config.kind is AugmenterKind.NONE:
        return list(weak)
    for ex in weak:
        if ex.provenance is not Provenance.WEAK:
            raise AugmentError(
                f"augment_weak_set expects weak examples, got {ex.provenance} for {ex.doc.id!r}")
    aug_docs = augment_documents([ex.doc for ex in weak], config)
    augmented = [
        LabeledExample(
            doc=doc,
            label=ex.label,
            provenance=Provenance.AUGMENTED,
            confidence=ex.confidence,
            origin_id=ex.doc.id,
        )
        for ex, doc in zip(weak, aug_docs)
    ]
    return list(weak) + augmented
