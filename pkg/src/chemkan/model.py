"""ChemKAN model: kinetic core, linear thermodynamic map, correction KAN.

The kinetic core is two KAN layers mapping the full state [Y_1..Y_m, T] to
the m species rates; the first layer is purely additive, the second carries
the multiplication nodes. The temperature rate is a learned linear
combination of the species rates plus a single-output additive correction
layer on the full state. Parameters split into three named partitions:
``kin`` (core layers), ``thermo`` (m linear scalars), ``cor`` (correction
layer).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .kan import KanLayer, RBFGrid

PARTITIONS = ("kin", "thermo", "cor")
SELECTORS = ("kin", "thermo_cor", "all")


@dataclass
class ChemKanConfig:
    m: int
    hidden: int
    n_mu: int
    grid_size: int
    base: bool
    thermo_enabled: bool
    cor_grid_size: int | None = None  # defaults to grid_size
    # physical seconds per unit of the model's internal time; training and
    # prediction integrate in internal time so fast mechanisms stay O(1)
    time_scale: float = 1.0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("need at least one species")
        if self.time_scale <= 0:
            raise ValueError("time_scale must be positive")
        if not (1 <= self.n_mu <= self.hidden):
            raise ValueError("hidden layer needs 1 <= n_mu <= hidden")
        if self.cor_grid_size is None:
            self.cor_grid_size = self.grid_size


@dataclass
class ChemKanModel:
    config: ChemKanConfig
    layer0: KanLayer  # (m+1) -> hidden, additive
    layer1: KanLayer  # hidden -> m, n_mu > 0
    thermo_linear: np.ndarray | None  # (m,)
    correction: KanLayer | None  # (m+1) -> 1, additive

    def __post_init__(self):
        c = self.config
        if self.layer0.n_mu != 0:
            raise ValueError("kinetic core layer 0 must be additive")
        if self.layer1.n_mu < 1:
            raise ValueError("kinetic core layer 1 needs n_mu > 0")
        if self.layer0.n_in != c.m + 1 or self.layer1.n_out != c.m:
            raise ValueError("kinetic core must map (m+1) -> m")
        if c.thermo_enabled:
            if self.thermo_linear is None or self.correction is None:
                raise ValueError("thermo superstructure missing")
            if self.correction.n_mu != 0 or self.correction.n_out != 1:
                raise ValueError("correction layer must be additive, one output")

    @property
    def m(self) -> int:
        return self.config.m

    @property
    def thermo_enabled(self) -> bool:
        return self.config.thermo_enabled

    @classmethod
    def create(cls, config: ChemKanConfig, seed: int = 0) -> "ChemKanModel":
        rng = np.random.default_rng(seed)
        c = config
        layer0 = KanLayer.create(c.m + 1, c.hidden, 0, c.grid_size, c.base, rng)
        layer1 = KanLayer.create(c.hidden, c.m, c.n_mu, c.grid_size, c.base, rng)
        thermo = correction = None
        if c.thermo_enabled:
            thermo = rng.uniform(-0.1, 0.1, size=c.m)
            correction = KanLayer.create(c.m + 1, 1, 0, c.cor_grid_size, c.base, rng)
        return cls(c, layer0, layer1, thermo, correction)

    # -- parameter partitions ------------------------------------------------

    def partition_sizes(self) -> dict[str, int]:
        sizes = {"kin": self.layer0.n_params + self.layer1.n_params}
        sizes["thermo"] = self.m if self.thermo_enabled else 0
        sizes["cor"] = self.correction.n_params if self.thermo_enabled else 0
        return sizes

    def get_params(self, which: str = "all") -> np.ndarray:
        kin = np.concatenate([self.layer0.get_params(), self.layer1.get_params()])
        if which == "kin":
            return kin
        if not self.thermo_enabled:
            if which == "all":
                return kin
            raise ValueError("thermo superstructure disabled")
        tc = np.concatenate([self.thermo_linear, self.correction.get_params()])
        if which == "thermo_cor":
            return tc
        if which == "all":
            return np.concatenate([kin, tc])
        raise ValueError(f"unknown selector {which!r}")

    def set_params(self, theta: np.ndarray, which: str = "all") -> None:
        theta = np.asarray(theta, dtype=float)
        p0, p1 = self.layer0.n_params, self.layer1.n_params
        if which in ("kin", "all"):
            self.layer0.set_params(theta[:p0])
            self.layer1.set_params(theta[p0 : p0 + p1])
            theta = theta[p0 + p1 :]
            if which == "kin":
                if theta.size:
                    raise ValueError("parameter vector length mismatch")
                return
        if which in ("thermo_cor", "all") and self.thermo_enabled:
            m = self.m
            self.thermo_linear = theta[:m].copy()
            self.correction.set_params(theta[m:])
        elif theta.size:
            raise ValueError("parameter vector length mismatch")


def kinetic_rhs(model: ChemKanModel, u) -> np.ndarray:
    """Species rates dY/dt from the full state [Y, T]; (..., m)."""
    return model.layer1.forward(model.layer0.forward(u))


def full_rhs(model: ChemKanModel, u) -> np.ndarray:
    """Full state rate [dY/dt, dT/dt]; requires the thermo superstructure."""
    if not model.thermo_enabled:
        raise ValueError("full_rhs requires thermo_enabled")
    dy = kinetic_rhs(model, u)
    cor = model.correction.forward(u)[..., 0]
    dT = dy @ model.thermo_linear + cor
    return np.concatenate([dy, dT[..., None]], axis=-1)


def kinetic_jacobians(model: ChemKanModel, u):
    """(df_kin/du, df_kin/dtheta_kin), batched over leading axes of u."""
    y0 = model.layer0.forward(u)
    J0x, J0t = model.layer0.jacobians(u)
    J1x, J1t = model.layer1.jacobians(y0)
    Ju = J1x @ J0x
    Jth = np.concatenate([J1x @ J0t, J1t], axis=-1)
    return Ju, Jth


def rhs_sensitivities(model: ChemKanModel, u, which: str = "all"):
    """Analytic Jacobians of the RHS w.r.t. the state and a parameter slice.

    With the thermo superstructure enabled returns ((..., m+1, m+1),
    (..., m+1, P_sel)); with it disabled, the kinetic rows only
    ((..., m, m+1), (..., m, P_kin)).
    """
    if which not in SELECTORS:
        raise ValueError(f"unknown selector {which!r}")
    Ju_kin, Jth_kin = kinetic_jacobians(model, u)
    if not model.thermo_enabled:
        if which != "kin" and which != "all":
            raise ValueError("thermo superstructure disabled")
        return Ju_kin, Jth_kin

    m = model.m
    w = model.thermo_linear
    Jcx, Jct = model.correction.jacobians(u)
    dy = kinetic_rhs(model, u)

    dT_du = np.einsum("k,...ki->...i", w, Ju_kin) + Jcx[..., 0, :]
    Ju = np.concatenate([Ju_kin, dT_du[..., None, :]], axis=-2)

    batch = np.asarray(u).shape[:-1]
    blocks = []
    if which in ("kin", "all"):
        dT_dkin = np.einsum("k,...kp->...p", w, Jth_kin)
        blocks.append(
            np.concatenate([Jth_kin, dT_dkin[..., None, :]], axis=-2)
        )
    if which in ("thermo_cor", "all"):
        P_tc = m + model.correction.n_params
        tc = np.zeros(batch + (m + 1, P_tc))
        tc[..., m, :m] = dy
        tc[..., m, m:] = Jct[..., 0, :]
        blocks.append(tc)
    return Ju, np.concatenate(blocks, axis=-1)


def count_parameters(model: ChemKanModel) -> tuple[int, dict[str, int]]:
    sizes = model.partition_sizes()
    return sum(sizes.values()), sizes


# -- checkpoint I/O ----------------------------------------------------------
# JSON with repr-roundtrip floats: bit-exact on the decimal representation.

def save_checkpoint(model: ChemKanModel, path) -> None:
    c = model.config
    doc = {
        "format": "chemkan-checkpoint",
        "version": 1,
        "topology": {
            "m": c.m,
            "hidden": c.hidden,
            "n_mu": c.n_mu,
            "grid_size": c.grid_size,
            "cor_grid_size": c.cor_grid_size,
            "base": c.base,
            "thermo_enabled": c.thermo_enabled,
            "time_scale": repr(c.time_scale),
        },
        "partitions": {
            "kin": model.get_params("kin").tolist(),
        },
    }
    if c.thermo_enabled:
        doc["partitions"]["thermo"] = model.thermo_linear.tolist()
        doc["partitions"]["cor"] = model.correction.get_params().tolist()
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_checkpoint(path) -> ChemKanModel:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != "chemkan-checkpoint":
        raise ValueError(f"{path}: not a ChemKAN checkpoint")
    t = doc["topology"]
    config = ChemKanConfig(
        m=t["m"],
        hidden=t["hidden"],
        n_mu=t["n_mu"],
        grid_size=t["grid_size"],
        base=t["base"],
        thermo_enabled=t["thermo_enabled"],
        cor_grid_size=t.get("cor_grid_size"),
        time_scale=float(t.get("time_scale", 1.0)),
    )
    model = ChemKanModel.create(config, seed=0)
    model.set_params(np.array(doc["partitions"]["kin"]), "kin")
    if config.thermo_enabled:
        model.thermo_linear = np.array(doc["partitions"]["thermo"], dtype=float)
        model.correction.set_params(np.array(doc["partitions"]["cor"]))
    return model
