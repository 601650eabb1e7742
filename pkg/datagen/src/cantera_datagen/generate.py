"""Grid generation and file output.

Writes one CSV per (T0, phi) grid point plus a manifest in the format the
chemkan kinetics loader ingests. Manifest entries carry the grid
coordinates and a `withheld` flag for the held-out test condition.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
from dataclasses import dataclass

from . import mechanism as mech
from .reactor import run_reactor

WITHHELD_DEFAULT = ((1150.0, 1.3),)


@dataclass
class ReactorGridSpec:
    temperatures: tuple[float, ...] = (950.0, 1000.0, 1050.0, 1100.0, 1150.0,
                                       1200.0)
    equivalence_ratios: tuple[float, ...] = (0.7, 0.9, 1.1, 1.3, 1.5)
    t_end: float = 6e-4
    n_samples: int = 100
    mechanism: str = "builtin-h2o2"
    withheld: tuple[tuple[float, float], ...] = WITHHELD_DEFAULT

    def points(self):
        for T0 in self.temperatures:
            for phi in self.equivalence_ratios:
                yield float(T0), float(phi)


def _require_builtin(spec: ReactorGridSpec) -> None:
    if spec.mechanism == "builtin-h2o2":
        return
    if spec.mechanism.startswith("cantera:"):
        try:
            import cantera  # noqa: F401
        except ImportError as exc:
            raise RuntimeError(
                "mechanism 'cantera:*' needs the cantera package, which is "
                "not importable in this environment; install cantera or use "
                "the builtin-h2o2 mechanism"
            ) from exc
        raise NotImplementedError(
            "cantera-backed generation is not wired up; use builtin-h2o2"
        )
    raise ValueError(f"unknown mechanism {spec.mechanism!r}")


def _write_csv(path, times, states) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *mech.SPECIES, "T"])
        for t, row in zip(times, states):
            w.writerow([repr(float(t)), *(repr(float(v)) for v in row)])


def generate_h2_grid(spec: ReactorGridSpec, directory, prefix="h2") -> str:
    """Run every grid point and write CSVs + manifest; returns manifest path."""
    _require_builtin(spec)
    os.makedirs(directory, exist_ok=True)
    entries = []
    for i, (T0, phi) in enumerate(spec.points()):
        times, states = run_reactor(T0, phi, spec.t_end, spec.n_samples)
        name = f"{prefix}_{i:03d}_T{T0:.0f}_phi{phi:.1f}.csv"
        _write_csv(os.path.join(directory, name), times, states)
        entries.append({
            "path": name,
            "constant_T": False,
            "T0": T0,
            "phi": phi,
            "withheld": [T0, phi] in [list(w) for w in spec.withheld],
        })
    manifest = {
        "schema_version": 1,
        "species": list(mech.SPECIES),
        "split": "train",
        "units": "mass_fraction",
        "provenance": {
            "kind": "clean",
            "generator": "cantera_datagen",
            "mechanism": spec.mechanism,
            "t_end": spec.t_end,
            "n_samples": spec.n_samples,
        },
        "files": entries,
        "normalization": None,
    }
    mpath = os.path.join(directory, f"{prefix}_manifest.json")
    with open(mpath, "w") as fh:
        json.dump(manifest, fh, indent=1)
    return mpath


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="h2-datagen")
    p.add_argument("--out", default="h2_grid")
    p.add_argument("--temperatures", type=float, nargs="+")
    p.add_argument("--phis", type=float, nargs="+")
    p.add_argument("--t-end", type=float, default=6e-4)
    p.add_argument("--n-samples", type=int, default=100)
    p.add_argument("--mechanism", default="builtin-h2o2")
    args = p.parse_args(argv)
    spec = ReactorGridSpec(
        temperatures=tuple(args.temperatures) if args.temperatures
        else ReactorGridSpec.temperatures,
        equivalence_ratios=tuple(args.phis) if args.phis
        else ReactorGridSpec.equivalence_ratios,
        t_end=args.t_end,
        n_samples=args.n_samples,
        mechanism=args.mechanism,
    )
    try:
        mpath = generate_h2_grid(spec, args.out)
    except (RuntimeError, ValueError) as exc:
        print(f"error: {exc}")
        return 1
    print(f"manifest: {mpath}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
