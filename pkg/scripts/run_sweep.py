#!/usr/bin/env python3
"""Neural-scaling sweep: ChemKAN hidden-width ladder vs DeepONet widths.

Emits runs/sweep/sweep.txt with a log-log slope fit of loss against
parameter count for each family.
"""

import sys

from chemkan.cli import main

if __name__ == "__main__":
    sys.exit(main([
        "sweep",
        "--set", "dataset.n_train=20", "--set", "dataset.n_test=10",
        "--set", "train.epochs_stage1=2000",
        "--set", "don.epochs=8000",
    ]))
