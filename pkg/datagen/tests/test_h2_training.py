"""Reduced-budget surrogate training on a generated hydrogen grid.

Trains the 344-parameter ChemKAN on one temperature row of the reactor grid
and checks that the learned surrogate reproduces the qualitative structure of
the data: the ignition-delay trend across equivalence ratio is monotone in
the same direction as the data, and each predicted delay is within 20% of
the corresponding data value. This is a slow end-to-end check (several
minutes on one core).
"""

import numpy as np
import pytest

chemkan_data = pytest.importorskip("chemkan.data")

from chemkan import data as D
from chemkan.model import ChemKanConfig, ChemKanModel
from chemkan.odeint import IntegratorConfig
from chemkan.training import LossConfig, NormalizationSpec, predict, train_stage

from cantera_datagen.generate import ReactorGridSpec, generate_h2_grid

PHIS = (0.7, 0.9, 1.1, 1.3, 1.5)
T_END = 6e-4
T0_ROW = 1000.0  # delays span ~300-350 us here, well resolved by the grid
STAGE1_EPOCHS = 1500
STAGE2_EPOCHS = 1000
INT_CFG = IntegratorConfig(abs_tol=1e-6, rel_tol=1e-6)


@pytest.fixture(scope="module")
def trained_row(tmp_path_factory):
    spec = ReactorGridSpec(temperatures=(T0_ROW,), equivalence_ratios=PHIS,
                           t_end=T_END, withheld=())
    manifest = generate_h2_grid(spec, tmp_path_factory.mktemp("h2row"))
    ds = D.ingest_trajectories(manifest, schema=D.H2_SPECIES)
    norm = NormalizationSpec.from_dataset(ds)
    cfg = ChemKanConfig(m=9, hidden=3, n_mu=1, grid_size=4, base=True,
                        thermo_enabled=True, cor_grid_size=4, time_scale=T_END)
    model = ChemKanModel.create(cfg, seed=0)
    train_stage(model, ds, 1, STAGE1_EPOCHS, 0, norm, LossConfig(stage=1),
                INT_CFG)
    train_stage(model, ds, 2, STAGE2_EPOCHS, 0, norm, LossConfig(stage=2),
                INT_CFG)
    return model, ds, norm


def _delays(trained_row):
    model, ds, norm = trained_row
    pred_hat = predict(model, ds, norm, 2, INT_CFG)
    phys = norm.denormalize(pred_hat)
    times = ds.trajectories[0].times
    data = [D.ignition_delay(tr) for tr in ds.trajectories]
    pred = [D.ignition_delay(D.Trajectory(times, phys[:, b, :]))
            for b in range(len(ds.trajectories))]
    return np.array(data, dtype=float), np.array(pred, dtype=float)


def test_ignition_trend_monotone_in_phi(trained_row):
    # qualitative trend: delay grows with phi on this row; the sampled data
    # quantizes delays to ~6 us bins, so require non-strict monotonicity
    # with a net increase, in the data and in the surrogate's predictions
    data, pred = _delays(trained_row)
    assert np.all(np.diff(data) >= 0.0) and data[-1] > data[0], data
    assert np.all(np.diff(pred) >= 0.0) and pred[-1] > pred[0], (data, pred)


def test_ignition_delays_within_20_percent(trained_row):
    data, pred = _delays(trained_row)
    rel = np.abs(pred - data) / data
    assert np.all(rel < 0.20), dict(zip(PHIS, rel))
