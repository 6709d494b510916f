#!/usr/bin/env python3
"""Build a full synonym lexicon from WordNet (offline utility).

Requires nltk with the wordnet corpus downloaded:

    pip install nltk
    python3 -c "import nltk; nltk.download('wordnet')"

Writes the one-entry-per-line "word<TAB>syn1,syn2,..." format consumed by
SynonymLexicon.from_file. The packaged fixture lexicon stays the default
for tests; this script is for larger runs on real corpora.
"""
import argparse
import sys


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="lexicon_wordnet.tsv")
    parser.add_argument("--max-synonyms", type=int, default=8)
    args = parser.parse_args()

    try:
        from nltk.corpus import wordnet
        wordnet.ensure_loaded()
    except (ImportError, LookupError) as exc:
        print(f"WordNet unavailable: {exc}\nSee the module docstring for setup.",
              file=sys.stderr)
        return 1

    entries = {}
    for synset in wordnet.all_synsets():
        lemmas = [l.name().replace("_", " ").lower() for l in synset.lemmas()]
        lemmas = [l for l in lemmas if l.isalpha()]  # single clean tokens only
        for lemma in lemmas:
            synonyms = [o for o in lemmas if o != lemma]
            if synonyms:
                entries.setdefault(lemma, [])
                for syn in synonyms:
                    if syn not in entries[lemma]:
                        entries[lemma].append(syn)

    with open(args.out, "w", encoding="utf-8") as fh:
        for word in sorted(entries):
            synonyms = entries[word][: args.max_synonyms]
            fh.write(f"{word}\t{','.join(synonyms)}\n")
    print(f"wrote {len(entries)} entries to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
