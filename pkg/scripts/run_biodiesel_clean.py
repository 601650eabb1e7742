#!/usr/bin/env python3
"""Clean-data biodiesel training run (the headline desk-scale experiment).

Generates 20 train / 10 test trajectories, trains the 156-parameter model
for 5000 epochs, and writes checkpoint + traces under runs/train.
"""

import sys

from chemkan.cli import main

if __name__ == "__main__":
    sys.exit(main([
        "generate",
        "--set", "dataset.n_train=20", "--set", "dataset.n_test=10",
    ]) or main([
        "train",
        "--set", "dataset.n_train=20", "--set", "dataset.n_test=10",
        "--set", "train.epochs_stage1=5000",
        "--set", "seed=3",
    ]))
