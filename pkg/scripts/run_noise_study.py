#!/usr/bin/env python3
"""Noise-robustness study: paired ChemKAN / DeepONet runs across noise levels.

Writes per-level traces and a summary table under runs/noise-study. Expect
several hours on one core at the default budgets; trim noise_levels or
epochs for a smoke run.
"""

import sys

from chemkan.cli import main

if __name__ == "__main__":
    sys.exit(main([
        "noise-study",
        "--set", "dataset.n_train=20", "--set", "dataset.n_test=10",
        "--set", "train.epochs_stage1=5000",
        "--set", "don.epochs=10000",
        "--set", "seed=3",
    ]))
