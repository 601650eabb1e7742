"""Hydrogen-air kinetics for the homogeneous-reactor generator.

The default "builtin-h2o2" mechanism is the hydrogen/oxygen subsystem of
GRI-Mech 3.0 (9 species with N2 inert, 28 elementary steps counting
duplicates; the argon channels are dropped for N2-diluted mixtures)
transcribed here with NASA-7 thermodynamics so the generator
runs without an external chemistry toolkit. Requesting mechanism
"cantera:<file>" instead uses the cantera package and fails loudly when
it is not importable.

Units: cgs-mol kinetics as published (cm^3, mol, s, cal/mol); the reactor
module converts to SI.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

R_CAL = 1.98720425864083  # cal/(mol K)
R_SI = 8.31446261815324  # J/(mol K)
P_ATM = 101325.0  # Pa
SPECIES = ("H2", "H", "O", "O2", "OH", "H2O", "HO2", "H2O2", "N2")
# g/mol
MOLAR_MASSES = np.array(
    [2.016, 1.008, 15.999, 31.998, 17.007, 18.015, 33.006, 34.014, 28.014]
)

# NASA-7 polynomial coefficients, (low, high) per species; breakpoint 1000 K.
NASA7 = {
    "H2": (
        (2.34433112e00, 7.98052075e-03, -1.94781510e-05, 2.01572094e-08,
         -7.37611761e-12, -9.17935173e02, 6.83010238e-01),
        (3.33727920e00, -4.94024731e-05, 4.99456778e-07, -1.79566394e-10,
         2.00255376e-14, -9.50158922e02, -3.20502331e00),
    ),
    "H": (
        (2.5e00, 7.05332819e-13, -1.99591964e-15, 2.30081632e-18,
         -9.27732332e-22, 2.54736599e04, -4.46682853e-01),
        (2.50000001e00, -2.30842973e-11, 1.61561948e-14, -4.73515235e-18,
         4.98197357e-22, 2.54736599e04, -4.46682914e-01),
    ),
    "O": (
        (3.16826710e00, -3.27931884e-03, 6.64306396e-06, -6.12806624e-09,
         2.11265971e-12, 2.91222592e04, 2.05193346e00),
        (2.56942078e00, -8.59741137e-05, 4.19484589e-08, -1.00177799e-11,
         1.22833691e-15, 2.92175791e04, 4.78433864e00),
    ),
    "O2": (
        (3.78245636e00, -2.99673416e-03, 9.84730201e-06, -9.68129509e-09,
         3.24372837e-12, -1.06394356e03, 3.65767573e00),
        (3.28253784e00, 1.48308754e-03, -7.57966669e-07, 2.09470555e-10,
         -2.16717794e-14, -1.08845772e03, 5.45323129e00),
    ),
    "OH": (
        (3.99201543e00, -2.40131752e-03, 4.61793841e-06, -3.88113333e-09,
         1.36411470e-12, 3.61508056e03, -1.03925458e-01),
        (3.09288767e00, 5.48429716e-04, 1.26505228e-07, -8.79461556e-11,
         1.17412376e-14, 3.85865700e03, 4.47669610e00),
    ),
    "H2O": (
        (4.19864056e00, -2.03643410e-03, 6.52040211e-06, -5.48797062e-09,
         1.77197817e-12, -3.02937267e04, -8.49032208e-01),
        (3.03399249e00, 2.17691804e-03, -1.64072518e-07, -9.70419870e-11,
         1.68200992e-14, -3.00042971e04, 4.96677010e00),
    ),
    "HO2": (
        (4.30179801e00, -4.74912051e-03, 2.11582891e-05, -2.42763894e-08,
         9.29225124e-12, 2.94808040e02, 3.71666245e00),
        (4.01721090e00, 2.23982013e-03, -6.33658150e-07, 1.14246370e-10,
         -1.07908535e-14, 1.11856713e02, 3.78510215e00),
    ),
    "H2O2": (
        (4.27611269e00, -5.42822417e-04, 1.67335701e-05, -2.15770813e-08,
         8.62454363e-12, -1.77025821e04, 3.43505074e00),
        (4.16500285e00, 4.90831694e-03, -1.90139225e-06, 3.71185986e-10,
         -2.87908305e-14, -1.78617877e04, 2.91615662e00),
    ),
    "N2": (
        (3.298677e00, 1.4082404e-03, -3.963222e-06, 5.641515e-09,
         -2.444854e-12, -1.0208999e03, 3.950372e00),
        (2.92664000e00, 1.48797680e-03, -5.68476000e-07, 1.00970380e-10,
         -6.75335100e-15, -9.22797700e02, 5.98052800e00),
    ),
}

_NASA_LOW = np.array([NASA7[s][0] for s in SPECIES])
_NASA_HIGH = np.array([NASA7[s][1] for s in SPECIES])


def _nasa_coeffs(T: float) -> np.ndarray:
    return _NASA_LOW if T < 1000.0 else _NASA_HIGH


def cp_R(T: float) -> np.ndarray:
    """Dimensionless molar heat capacities cp/R per species."""
    a = _nasa_coeffs(T)
    return a[:, 0] + a[:, 1] * T + a[:, 2] * T**2 + a[:, 3] * T**3 + a[:, 4] * T**4


def h_RT(T: float) -> np.ndarray:
    """Dimensionless molar enthalpies h/(RT) per species."""
    a = _nasa_coeffs(T)
    return (a[:, 0] + a[:, 1] * T / 2 + a[:, 2] * T**2 / 3 + a[:, 3] * T**3 / 4
            + a[:, 4] * T**4 / 5 + a[:, 5] / T)


def s_R(T: float) -> np.ndarray:
    """Dimensionless molar entropies s/R per species."""
    a = _nasa_coeffs(T)
    return (a[:, 0] * np.log(T) + a[:, 1] * T + a[:, 2] * T**2 / 2
            + a[:, 3] * T**3 / 3 + a[:, 4] * T**4 / 4 + a[:, 6])


@dataclass(frozen=True)
class Reaction:
    """One (possibly pressure-dependent) reversible elementary step."""

    reactants: dict[str, int]
    products: dict[str, int]
    A: float  # cm-mol-s-K units
    n: float
    Ea: float  # cal/mol
    third_body: bool = False
    efficiencies: dict[str, float] = field(default_factory=dict)
    falloff: tuple[float, float, float] | None = None  # low-pressure A, n, Ea
    troe: tuple[float, float, float, float] | None = None

    def k_arrhenius(self, T: float) -> float:
        return self.A * T**self.n * np.exp(-self.Ea / (R_CAL * T))


def _r(eq: str, A, n, Ea, **kw) -> Reaction:
    lhs, rhs = eq.split("=")

    def side(s):
        out: dict[str, int] = {}
        for term in s.split("+"):
            term = term.strip()
            if term == "M":  # generic collider, handled via third_body
                continue
            nu = 1
            if term[0].isdigit():
                nu, term = int(term[0]), term[1:]
            out[term] = out.get(term, 0) + nu
        return out

    return Reaction(side(lhs), side(rhs), A, n, Ea, **kw)


# GRI-Mech 3.0 H/O subsystem. "+M" steps carry collider efficiencies
# (unlisted species default to 1); the two falloff steps use Troe blending.
REACTIONS: tuple[Reaction, ...] = (
    _r("2O+M=O2+M", 1.2e17, -1.0, 0.0, third_body=True,
       efficiencies={"H2": 2.4, "H2O": 15.4}),
    _r("O+H+M=OH+M", 5.0e17, -1.0, 0.0, third_body=True,
       efficiencies={"H2": 2.0, "H2O": 6.0}),
    _r("O+H2=H+OH", 3.87e4, 2.7, 6260.0),
    _r("O+HO2=OH+O2", 2.0e13, 0.0, 0.0),
    _r("O+H2O2=OH+HO2", 9.63e6, 2.0, 4000.0),
    _r("H+O2+M=HO2+M", 2.8e18, -0.86, 0.0, third_body=True,
       efficiencies={"O2": 0.0, "H2O": 0.0, "N2": 0.0}),
    _r("H+2O2=HO2+O2", 2.08e19, -1.24, 0.0),
    _r("H+O2+H2O=HO2+H2O", 1.126e19, -0.76, 0.0),
    _r("H+O2+N2=HO2+N2", 2.6e19, -1.24, 0.0),
    _r("H+O2=O+OH", 2.65e16, -0.6707, 17041.0),
    _r("2H+M=H2+M", 1.0e18, -1.0, 0.0, third_body=True,
       efficiencies={"H2": 0.0, "H2O": 0.0}),
    _r("2H+H2=2H2", 9.0e16, -0.6, 0.0),
    _r("2H+H2O=H2+H2O", 6.0e19, -1.25, 0.0),
    _r("H+OH+M=H2O+M", 2.2e22, -2.0, 0.0, third_body=True,
       efficiencies={"H2": 0.73, "H2O": 3.65}),
    _r("H+HO2=O+H2O", 3.97e12, 0.0, 671.0),
    _r("H+HO2=O2+H2", 4.48e13, 0.0, 1068.0),
    _r("H+HO2=2OH", 8.4e13, 0.0, 635.0),
    _r("H+H2O2=HO2+H2", 1.21e7, 2.0, 5200.0),
    _r("H+H2O2=OH+H2O", 1.0e13, 0.0, 3600.0),
    _r("OH+H2=H+H2O", 2.16e8, 1.51, 3430.0),
    _r("2OH+M=H2O2+M", 7.4e13, -0.37, 0.0, third_body=True,
       efficiencies={"H2": 2.0, "H2O": 6.0},
       falloff=(2.3e18, -0.9, -1700.0),
       troe=(0.7346, 94.0, 1756.0, 5182.0)),
    _r("2OH=O+H2O", 3.57e4, 2.4, -2110.0),
    _r("OH+HO2=O2+H2O", 1.45e13, 0.0, -500.0),
    _r("OH+HO2=O2+H2O", 5.0e15, 0.0, 17330.0),  # duplicate, high-T branch
    _r("OH+H2O2=HO2+H2O", 2.0e12, 0.0, 427.0),
    _r("OH+H2O2=HO2+H2O", 1.7e18, 0.0, 29410.0),  # duplicate
    _r("2HO2=O2+H2O2", 1.3e11, 0.0, -1630.0),
    _r("2HO2=O2+H2O2", 4.2e14, 0.0, 12000.0),  # duplicate
)

_IDX = {s: i for i, s in enumerate(SPECIES)}


def stoich_matrices() -> tuple[np.ndarray, np.ndarray]:
    """(reactant, product) stoichiometric coefficient matrices (n_rxn, n_sp)."""
    nr = len(REACTIONS)
    nu_f = np.zeros((nr, len(SPECIES)))
    nu_b = np.zeros((nr, len(SPECIES)))
    for i, rxn in enumerate(REACTIONS):
        for s, nu in rxn.reactants.items():
            nu_f[i, _IDX[s]] = nu
        for s, nu in rxn.products.items():
            nu_b[i, _IDX[s]] = nu
    return nu_f, nu_b


_NU_F, _NU_B = stoich_matrices()
_NU_NET = _NU_B - _NU_F


def rate_constants(T: float) -> tuple[np.ndarray, np.ndarray]:
    """Forward rate constants and equilibrium constants Kc at T.

    Kc is in concentration units (mol/cm^3) consistent with the cgs-mol
    Arrhenius parameters; reverse constants follow as kf/Kc.
    """
    kf = np.array([rxn.k_arrhenius(T) for rxn in REACTIONS])
    # Kp from NASA thermo, then Kc = Kp (P0 / RT)^{sum nu}
    g_RT = h_RT(T) - s_R(T)
    dG = _NU_NET @ g_RT
    dnu = _NU_NET.sum(axis=1)
    # P0/(R T) in mol/cm^3: 1 atm reference, R in erg-free SI -> convert
    c0 = P_ATM / (R_SI * T) * 1e-6
    Kc = np.exp(-dG) * c0**dnu
    return kf, Kc


def net_production_rates(conc: np.ndarray, T: float) -> np.ndarray:
    """Molar production rates (mol/cm^3/s) from concentrations (mol/cm^3)."""
    conc = np.clip(conc, 0.0, None)
    kf, Kc = rate_constants(T)
    kr = kf / Kc
    M = conc.sum()
    q = np.empty(len(REACTIONS))
    for i, rxn in enumerate(REACTIONS):
        fwd = kf[i]
        rev = kr[i]
        if rxn.third_body:
            eff = M + sum(
                (e - 1.0) * conc[_IDX[s]] for s, e in rxn.efficiencies.items()
            )
            if rxn.falloff is not None:
                A0, n0, E0 = rxn.falloff
                k0 = A0 * T**n0 * np.exp(-E0 / (R_CAL * T))
                pr = k0 * eff / max(fwd, 1e-300)
                a, T3, T1, T2 = rxn.troe
                fcent = ((1 - a) * np.exp(-T / T3) + a * np.exp(-T / T1)
                         + np.exp(-T2 / T))
                logf = _troe_blend(pr, fcent)
                factor = pr / (1 + pr) * logf
                fwd = fwd * factor
                rev = rev * factor
            else:
                fwd = fwd * eff
                rev = rev * eff
        rate_f = fwd * np.prod(conc ** _NU_F[i])
        rate_r = rev * np.prod(conc ** _NU_B[i])
        q[i] = rate_f - rate_r
    return _NU_NET.T @ q


def _troe_blend(pr: float, fcent: float) -> float:
    if pr <= 0 or fcent <= 0:
        return 1.0
    log_fc = np.log10(fcent)
    c = -0.4 - 0.67 * log_fc
    n = 0.75 - 1.27 * log_fc
    log_pr = np.log10(pr)
    f1 = (log_pr + c) / (n - 0.14 * (log_pr + c))
    return 10.0 ** (log_fc / (1.0 + f1 * f1))
