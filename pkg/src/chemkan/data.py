"""Ground-truth kinetics data: generation, bookkeeping, noise, file I/O.

State layout everywhere is [species..., T] with temperature last. The
biodiesel system carries concentrations and a constant per-trajectory
temperature; the toy exothermic system couples one species pair to a
temperature equation and produces ignition-like profiles.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .odeint import IntegratorConfig, integrate

# kcal/(mol K); makes Ea/(R T) dimensionless with Ea in kcal/mol
GAS_CONSTANT_KCAL = 1.987204e-3

ORACLE_TOL = 1e-9


def oracle_config(save_at=None) -> IntegratorConfig:
    return IntegratorConfig(abs_tol=ORACLE_TOL, rel_tol=ORACLE_TOL, save_at=save_at)


@dataclass(frozen=True)
class ArrheniusReaction:
    """k(T) = exp(ln_A) * exp(-Ea / (R T)); bimolecular mass action."""

    ln_A: float
    Ea: float  # kcal/mol
    reactants: tuple[int, ...]
    products: tuple[int, ...]

    def rate_constant(self, T):
        return np.exp(self.ln_A - self.Ea / (GAS_CONSTANT_KCAL * T))


# -- biodiesel transesterification -------------------------------------------

BIODIESEL_SPECIES = ("TG", "ROH", "DG", "MG", "GL", "RCO2R")
_TG, _ROH, _DG, _MG, _GL, _E = range(6)

BIODIESEL_REACTIONS = (
    ArrheniusReaction(18.60, 14.54, (_TG, _ROH), (_DG, _E)),
    ArrheniusReaction(7.93, 6.47, (_DG, _ROH), (_MG, _E)),
    ArrheniusReaction(19.13, 14.42, (_MG, _ROH), (_GL, _E)),
)


def biodiesel_rhs(c, T):
    """Mass-action rates of the 6 concentrations at temperature T."""
    k = np.array([r.rate_constant(T) for r in BIODIESEL_REACTIONS])
    r1 = k[0] * c[_TG] * c[_ROH]
    r2 = k[1] * c[_DG] * c[_ROH]
    r3 = k[2] * c[_MG] * c[_ROH]
    return np.array([-r1, -(r1 + r2 + r3), r1 - r2, r2 - r3, r3, r1 + r2 + r3])


# -- toy exothermic mechanism (synthetic; no literature provenance) ----------

TOY_SPECIES = ("F", "P")
TOY_LN_A = np.log(1e8)  # 1/s
TOY_EA = 30.0  # kcal/mol
TOY_HEAT = 800.0  # h_F / c_p, K (adiabatic temperature rise per unit Y_F)
TOY_T0_DEFAULT = (1050.0, 1150.0, 1250.0)
TOY_T_END = 4e-3
TOY_N_SAMPLES = 60


def toy_rhs(u):
    """RHS of [Y_F, Y_P, T] for the one-step F -> P mechanism."""
    yf, _, T = u
    k = np.exp(TOY_LN_A - TOY_EA / (GAS_CONSTANT_KCAL * T))
    r = k * max(yf, 0.0)  # rate is zero once the fuel is exhausted
    return np.array([-r, r, TOY_HEAT * r])


# -- trajectories and datasets ------------------------------------------------


@dataclass
class Trajectory:
    times: np.ndarray  # (n_t,)
    states: np.ndarray  # (n_t, m+1), temperature last
    constant_T: bool = False

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if self.states.shape[0] != self.times.size:
            raise ValueError("states/times length mismatch")

    @property
    def species(self) -> np.ndarray:
        return self.states[:, :-1]

    @property
    def temperature(self) -> np.ndarray:
        return self.states[:, -1]

    def temperature_at(self, t):
        if self.constant_T:
            return np.full(np.shape(t), self.states[0, -1])
        return np.interp(t, self.times, self.temperature)


@dataclass
class TrajectoryDataset:
    species_names: tuple[str, ...]
    trajectories: list[Trajectory]
    split: str = "train"  # "train" | "test"
    provenance: dict = field(default_factory=lambda: {"kind": "clean"})
    units: str = "concentration"  # "concentration" | "mass_fraction"
    clean_parent: "TrajectoryDataset | None" = None

    @property
    def m(self) -> int:
        return len(self.species_names)

    def state_range(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-state (min, range) over all trajectories; temperature last."""
        allstates = np.vstack([tr.states for tr in self.trajectories])
        lo = allstates.min(axis=0)
        rng = allstates.max(axis=0) - lo
        return lo, rng


# -- generation ---------------------------------------------------------------


def generate_biodiesel(
    n_train: int,
    n_test: int,
    seed: int = 0,
    cfg: IntegratorConfig | None = None,
    n_points: int = 30,
    window: float = 30.0,
) -> tuple[TrajectoryDataset, TrajectoryDataset]:
    """Isothermal transesterification trajectories at sampled (T, TG0, ROH0)."""
    if n_train < 1 or n_test < 1:
        raise ValueError("need at least one trajectory per split")
    rng = np.random.default_rng(seed)
    times = np.arange(n_points) * (window / n_points)

    def make(n):
        trajs = []
        for _ in range(n):
            T = rng.uniform(323.0, 343.0)
            tg0, roh0 = rng.uniform(0.5, 2.0, size=2)
            c0 = np.array([tg0, roh0, 0.0, 0.0, 0.0, 0.0])
            icfg = cfg or oracle_config()
            icfg = replace(icfg, save_at=times[1:])
            sol = integrate(lambda t, c: biodiesel_rhs(c, T), c0, (0.0, times[-1]), icfg)
            conc = np.vstack([c0, sol.states])
            states = np.column_stack([conc, np.full(n_points, T)])
            trajs.append(Trajectory(times.copy(), states, constant_T=True))
        return trajs

    train = TrajectoryDataset(BIODIESEL_SPECIES, make(n_train), "train")
    test = TrajectoryDataset(BIODIESEL_SPECIES, make(n_test), "test")
    return train, test


def generate_toy_exothermic(
    T0s=TOY_T0_DEFAULT,
    seed: int = 0,
    cfg: IntegratorConfig | None = None,
    n_points: int = TOY_N_SAMPLES,
    t_end: float = TOY_T_END,
    split: str = "train",
) -> TrajectoryDataset:
    """One-step exothermic F -> P trajectories from the given initial temps."""
    T0s = np.atleast_1d(np.asarray(T0s, dtype=float))
    if T0s.size < 1:
        raise ValueError("need at least one condition")
    times = np.linspace(0.0, t_end, n_points)
    trajs = []
    for T0 in T0s:
        u0 = np.array([1.0, 0.0, T0])
        icfg = cfg or oracle_config()
        icfg = replace(icfg, save_at=times[1:])
        sol = integrate(lambda t, u: toy_rhs(u), u0, (0.0, t_end), icfg)
        states = np.vstack([u0, sol.states])
        trajs.append(Trajectory(times.copy(), states, constant_T=False))
    return TrajectoryDataset(TOY_SPECIES, trajs, split)


def apply_noise(
    dataset: TrajectoryDataset, percent: float, seed: int = 0
) -> TrajectoryDataset:
    """Additive Gaussian noise on species columns, std = percent% of range.

    Per-state ranges are taken per trajectory, so a species that barely
    moves in one trajectory receives proportionally little noise there.
    Every sample is noisy, including t = 0: the measured initial state is
    as uncertain as any other observation, so integrated fits start from
    the noisy first point. Temperature is left clean (it is a data-fed
    input, constant per trajectory in the isothermal case). The returned
    dataset keeps a reference to its clean parent.
    """
    if percent < 0:
        raise ValueError("noise percent must be non-negative")
    if dataset.provenance.get("kind") != "clean":
        raise ValueError("noise can only be applied to a clean dataset")
    rng = np.random.default_rng(seed)
    trajs = []
    for tr in dataset.trajectories:
        states = tr.states.copy()
        if percent > 0:
            sigma = percent / 100.0 * np.ptp(states[:, :-1], axis=0)
            states[:, :-1] += rng.normal(0.0, 1.0, size=states[:, :-1].shape) * sigma
        trajs.append(Trajectory(tr.times.copy(), states, tr.constant_T))
    return TrajectoryDataset(
        dataset.species_names,
        trajs,
        dataset.split,
        provenance={"kind": "noisy", "percent": percent, "seed": seed},
        units=dataset.units,
        clean_parent=dataset,
    )


# -- element bookkeeping -------------------------------------------------------


@dataclass(frozen=True)
class ElementMatrix:
    elements: tuple[str, ...]
    species: tuple[str, ...]
    atom_counts: np.ndarray  # (n_elements, n_species) integers
    atomic_masses: np.ndarray  # (n_elements,) g/mol

    def __post_init__(self):
        object.__setattr__(self, "atom_counts", np.asarray(self.atom_counts, float))
        object.__setattr__(self, "atomic_masses", np.asarray(self.atomic_masses, float))

    @property
    def molar_masses(self) -> np.ndarray:
        return self.atomic_masses @ self.atom_counts

    def check_consistency(self, molar_masses=None, rtol=1e-3) -> None:
        if molar_masses is not None:
            if not np.allclose(self.molar_masses, molar_masses, rtol=rtol):
                raise ValueError("composition table inconsistent with molar masses")

    def conservation_coefficients(self) -> np.ndarray:
        """coeff[e, k] = N_e^k W_e / W_k, mapping mass fractions to
        elemental mass fractions."""
        return self.atom_counts * self.atomic_masses[:, None] / self.molar_masses


H2_SPECIES = ("H2", "H", "O", "O2", "OH", "H2O", "HO2", "H2O2", "N2")

H2_ELEMENT_MATRIX = ElementMatrix(
    elements=("H", "O", "N"),
    species=H2_SPECIES,
    atom_counts=np.array(
        [
            [2, 1, 0, 0, 1, 2, 1, 2, 0],  # H
            [0, 0, 1, 2, 1, 1, 2, 2, 0],  # O
            [0, 0, 0, 0, 0, 0, 0, 0, 2],  # N
        ]
    ),
    atomic_masses=np.array([1.008, 15.999, 14.007]),
)

# single pseudo-element for the toy F -> P pair (equal unit masses)
TOY_ELEMENT_MATRIX = ElementMatrix(
    elements=("E",),
    species=TOY_SPECIES,
    atom_counts=np.array([[1, 1]]),
    atomic_masses=np.array([1.0]),
)


# -- ignition delay ------------------------------------------------------------


def ignition_delay(traj: Trajectory) -> float | None:
    """Time of maximum dT/dt (central differences; one-sided endpoints).

    Returns None (no ignition) for a constant-temperature trajectory.
    Ties break to the earliest time.
    """
    if traj.times.size < 3:
        raise ValueError("need at least 3 points")
    T = traj.temperature
    if np.ptp(T) <= 1e-12 * max(1.0, abs(T[0])):
        return None
    dTdt = np.gradient(T, traj.times)
    return float(traj.times[int(np.argmax(dTdt))])


# -- trajectory CSV + manifest I/O ---------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def export_trajectory_csv(traj: Trajectory, species_names, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *species_names, "T"])
        for t, row in zip(traj.times, traj.states):
            w.writerow([_fmt(t), *(_fmt(v) for v in row)])


def read_trajectory_csv(path, species_names, units="concentration") -> Trajectory:
    species_names = tuple(species_names)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    expected = ["t", *species_names, "T"]
    if header != expected:
        raise ValueError(
            f"{path}: schema mismatch, header {header!r} != expected {expected!r}"
        )
    times, states = [], []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(expected):
            raise ValueError(f"{path}: row {i}: wrong field count")
        vals = [float(v) for v in row]
        times.append(vals[0])
        states.append(vals[1:])
    times = np.array(times)
    states = np.array(states)
    if np.any(np.diff(times) <= 0):
        bad = int(np.argmax(np.diff(times) <= 0)) + 3
        raise ValueError(f"{path}: row {bad}: non-monotone time")
    if units == "mass_fraction":
        sums = states[:, :-1].sum(axis=1)
        bad = np.abs(sums - 1.0) > 1e-3
        if np.any(bad):
            row = int(np.argmax(bad)) + 2
            raise ValueError(
                f"{path}: row {row}: mass fractions sum to {sums[bad][0]:.6f}, "
                "expected 1 within 1e-3"
            )
    return Trajectory(times, states)


def export_dataset(
    dataset: TrajectoryDataset, directory, prefix="traj", normalization=None
) -> str:
    """Write one CSV per trajectory plus a manifest; returns manifest path."""
    os.makedirs(directory, exist_ok=True)
    entries = []
    for i, tr in enumerate(dataset.trajectories):
        name = f"{prefix}_{i:03d}.csv"
        export_trajectory_csv(tr, dataset.species_names, os.path.join(directory, name))
        entries.append({"path": name, "constant_T": bool(tr.constant_T)})
    manifest = {
        "schema_version": 1,
        "species": list(dataset.species_names),
        "split": dataset.split,
        "units": dataset.units,
        "provenance": dataset.provenance,
        "files": entries,
        "normalization": normalization,
    }
    mpath = os.path.join(directory, f"{prefix}_manifest.json")
    with open(mpath, "w") as fh:
        json.dump(manifest, fh, indent=1)
    return mpath


def ingest_trajectories(manifest_path, schema=None) -> TrajectoryDataset:
    """Load and validate a dataset from its manifest.

    schema, when given, is the expected species ordering; a mismatch is
    rejected. Mass-fraction data additionally gets per-row sum validation.
    """
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    version = manifest.get("schema_version", 1)
    if version != 1:
        raise ValueError(f"unsupported manifest schema version {version}")
    species = tuple(manifest["species"])
    if schema is not None and tuple(schema) != species:
        raise ValueError(
            f"species ordering mismatch: manifest {species!r} vs expected "
            f"{tuple(schema)!r}"
        )
    units = manifest.get("units", "concentration")
    base = os.path.dirname(os.path.abspath(manifest_path))
    trajs = []
    for entry in manifest["files"]:
        tr = read_trajectory_csv(os.path.join(base, entry["path"]), species, units)
        tr.constant_T = bool(entry.get("constant_T", False))
        trajs.append(tr)
    return TrajectoryDataset(
        species,
        trajs,
        manifest.get("split", "train"),
        provenance=manifest.get("provenance", {"kind": "clean"}),
        units=units,
    )
