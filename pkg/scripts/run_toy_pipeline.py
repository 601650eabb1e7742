#!/usr/bin/env python3
"""Two-stage training on the toy exothermic mechanism, PINN loss enabled.

Stage 1 fits the kinetic core with data-fed temperature; stage 2 opens the
thermodynamic superstructure and fits the full state, including the
temperature profile, on held-out initial temperatures.
"""

import sys

from chemkan.cli import main

if __name__ == "__main__":
    sys.exit(main([
        "train",
        "--set", "dataset.kind=toy",
        "--set", "dataset.toy_train_T0=[1050.0,1100.0,1150.0,1200.0,1250.0]",
        "--set", "dataset.toy_test_T0=[1075.0,1125.0,1175.0]",
        "--set", "loss.pinn_enabled=true",
        "--set", "model.hidden=6",
        "--set", "model.grid_size=5",
        "--set", "model.thermo_enabled=true",
        "--set", "train.epochs_stage1=2000",
        "--set", "train.epochs_stage2=2000",
        "--set", "train.lr=5e-3",
        "--set", "train.lr_stage2=2e-3",
    ]))
