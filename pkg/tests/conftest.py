import json

import numpy as np
import pytest

from selftrain.corpus import Document, Label, LabeledExample, Provenance


def make_doc(i, text, source="test"):
    return Document(id=f"d{i}", text=text, source=source)


def make_example(i, text, label, provenance=Provenance.HUMAN, confidence=1.0, origin_id=None):
    return LabeledExample(doc=make_doc(i, text), label=Label(label),
                          provenance=provenance, confidence=confidence, origin_id=origin_id)


def make_weak(i, text, label, confidence):
    return make_example(i, text, label, provenance=Provenance.WEAK, confidence=confidence)


def toy_separable_examples(n_per_class=10):
    """Linearly separable two-keyword corpus: 'apple' vs 'mildew'."""
    filler = ["one", "two", "three", "four", "five", "six"]
    examples = []
    for i in range(n_per_class):
        pad = filler[i % len(filler)]
        examples.append(make_example(f"neg{i}", f"fresh apple {pad}", 0))
        examples.append(make_example(f"pos{i}", f"rotten mildew {pad}", 1))
    return examples


class FixedProbModel:
    """Predictor stub returning one fixed distribution for every document."""

    def __init__(self, p_not, p_off):
        self.dist = np.array([p_not, p_off], dtype=np.float64)

    def predict_proba(self, docs):
        return [self.dist.copy() for _ in docs]


class KeywordProbModel:
    """Predictor stub: p(offensive) high iff a trigger token is present."""

    def __init__(self, trigger="bad", p_hit=0.9, p_miss=0.1):
        self.trigger = trigger
        self.p_hit = p_hit
        self.p_miss = p_miss

    def predict_proba(self, docs):
        out = []
        for doc in docs:
            p_off = self.p_hit if self.trigger in doc.text.lower().split() else self.p_miss
            out.append(np.array([1.0 - p_off, p_off]))
        return out


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


@pytest.fixture
def olid_style_tsv(tmp_path):
    """OLID-shaped TSV fixture: 8 NOT / 4 OFF training rows."""
    rows = ["id\ttweet\tsubtask_a"]
    texts_not = ["have a great day", "the game was fun", "nice weather today",
                 "see you at the match", "lovely morning everyone", "coffee is ready",
                 "what a goal that was", "happy birthday friend"]
    texts_off = ["you are all idiots", "what a stupid take", "this is trash talk",
                 "shut up you fool"]
    for i, t in enumerate(texts_not):
        rows.append(f"olid{i}\t{t}\tNOT")
    for i, t in enumerate(texts_off):
        rows.append(f"olid{len(texts_not) + i}\t{t}\tOFF")
    path = tmp_path / "olid_train.tsv"
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path, {0: 8, 1: 4}
