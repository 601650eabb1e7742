import numpy as np
import pytest

from chemkan.model import ChemKanConfig, ChemKanModel
from chemkan.odeint import IntegratorConfig


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def small_model():
    # 2-species kinetic-only model, small enough for finite differences
    return ChemKanModel.create(
        ChemKanConfig(m=2, hidden=3, n_mu=1, grid_size=3, base=False,
                      thermo_enabled=False),
        seed=7,
    )


@pytest.fixture
def thermo_model():
    return ChemKanModel.create(
        ChemKanConfig(m=2, hidden=3, n_mu=1, grid_size=3, base=True,
                      thermo_enabled=True, cor_grid_size=4),
        seed=11,
    )


@pytest.fixture
def loose_integrator():
    return IntegratorConfig(abs_tol=1e-8, rel_tol=1e-8)
