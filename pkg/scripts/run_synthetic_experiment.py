#!/usr/bin/env python3
"""Run the directional synthetic experiment end to end.

Compares default fine-tuning (one generation) against self-training with
and without augmentation on the fixed synthetic keyword corpus, printing
a report in the usual column layout.
"""
import argparse
from dataclasses import replace

from selftrain.augment import AugmentConfig, AugmenterKind, load_default_lexicon
from selftrain.loop import run_experiment_suite
from selftrain.synthetic import directional_experiment_parts
from selftrain.translation import load_stub_translator


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", default="1,2,3")
    parser.add_argument("--augmenters", default="none",
                        help="comma list: none, word-swap, synonym, backtranslation")
    args = parser.parse_args()

    seeds = [int(s) for s in args.seeds.split(",")]
    bundle, backend, base = directional_experiment_parts()

    configs = []
    for name in args.augmenters.split(","):
        kind = AugmenterKind(name.strip())
        augment = AugmentConfig(kind=kind)
        if kind is AugmenterKind.SYNONYM_SUBSTITUTION:
            augment = replace(augment, lexicon=load_default_lexicon())
        elif kind is AugmenterKind.BACKTRANSLATION:
            augment = replace(augment, translator=load_stub_translator())
        configs.append(replace(base, augment=augment))

    report = run_experiment_suite(bundle, configs, seeds, backend)
    print(f"{'column':<8}  mean ± 1 std   per-seed")
    for col in report.columns:
        runs = ", ".join(f"{c.final_test_f1:.4f}" for c in col.cells)
        print(f"{col.label:<8}  {100 * col.summary.mean:.1f} ± {100 * col.summary.std:.1f}"
              f"     [{runs}]")


if __name__ == "__main__":
    main()
