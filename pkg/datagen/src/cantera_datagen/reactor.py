"""Constant-pressure adiabatic homogeneous reactor."""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from . import mechanism as mech

PRESSURE = mech.P_ATM  # 1 atm throughout


def mixture_from_phi(phi: float) -> np.ndarray:
    """Initial mass fractions of a hydrogen-air mixture at equivalence ratio phi.

    Air is 21% O2 / 79% N2 by mole; stoichiometry is 2 H2 + O2 -> 2 H2O, so
    the stoichiometric fuel:oxidizer mole ratio is 2.
    """
    if phi <= 0:
        raise ValueError("equivalence ratio must be positive")
    moles = np.zeros(len(mech.SPECIES))
    moles[mech.SPECIES.index("H2")] = 2.0 * phi
    moles[mech.SPECIES.index("O2")] = 1.0
    moles[mech.SPECIES.index("N2")] = 0.79 / 0.21
    mass = moles * mech.MOLAR_MASSES
    return mass / mass.sum()


def density(Y: np.ndarray, T: float) -> float:
    """Ideal-gas mass density in kg/m^3."""
    mean_W = 1.0 / np.sum(Y / mech.MOLAR_MASSES)  # g/mol
    return PRESSURE * mean_W * 1e-3 / (mech.R_SI * T)


def reactor_rhs(t: float, u: np.ndarray) -> np.ndarray:
    """d[Y..., T]/dt for the constant-pressure adiabatic reactor (SI)."""
    Y = u[:-1]
    T = max(u[-1], 200.0)
    rho = density(Y, T)  # kg/m^3
    # concentrations in mol/cm^3 for the cgs-mol kinetics
    conc = rho * 1e-3 * Y / mech.MOLAR_MASSES  # (g/cm^3)/(g/mol)
    wdot = mech.net_production_rates(conc, T)  # mol/cm^3/s
    wdot_si = wdot * 1e6  # mol/m^3/s
    dY = wdot_si * mech.MOLAR_MASSES * 1e-3 / rho
    h = mech.h_RT(T) * mech.R_SI * T  # J/mol
    cp_mass = float(
        np.sum(Y / (mech.MOLAR_MASSES * 1e-3) * mech.cp_R(T)) * mech.R_SI
    )  # J/(kg K)
    dT = -float(h @ wdot_si) / (rho * cp_mass)
    return np.append(dY, dT)


def run_reactor(T0: float, phi: float, t_end: float, n_samples: int):
    """Integrate one grid point; returns (times, states) with T last."""
    Y0 = mixture_from_phi(phi)
    u0 = np.append(Y0, T0)
    times = np.linspace(0.0, t_end, n_samples)
    sol = solve_ivp(
        reactor_rhs, (0.0, t_end), u0, method="BDF", t_eval=times,
        rtol=1e-9, atol=1e-14,
    )
    if not sol.success:
        raise RuntimeError(f"reactor integration failed: {sol.message}")
    states = sol.y.T.copy()
    # clip integration noise so mass fractions stay physical
    states[:, :-1] = np.clip(states[:, :-1], 0.0, None)
    states[:, :-1] /= states[:, :-1].sum(axis=1, keepdims=True)
    return times, states
