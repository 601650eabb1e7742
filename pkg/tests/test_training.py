import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chemkan import data as D
from chemkan.model import ChemKanConfig, ChemKanModel
from chemkan.odeint import IntegratorConfig
from chemkan.optim import Adam
from chemkan.training import (
    LossConfig,
    NormalizationSpec,
    evaluate_mse,
    evaluate_noise_free,
    loss,
    loss_and_grad,
    pinn_term,
    train_stage,
)

INT_CFG = IntegratorConfig(abs_tol=1e-7, rel_tol=1e-7)


@pytest.fixture(scope="module")
def tiny_dataset():
    train, _ = D.generate_biodiesel(3, 1, seed=0, n_points=8, window=7.0)
    return train


@pytest.fixture
def tiny_model():
    cfg = ChemKanConfig(m=6, hidden=2, n_mu=1, grid_size=2, base=False,
                        thermo_enabled=False)
    return ChemKanModel.create(cfg, seed=1)


class TestNormalization:
    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_roundtrip(self, seed):
        train, _ = D.generate_biodiesel(2, 1, seed=seed, n_points=5, window=4.0)
        norm = NormalizationSpec.from_dataset(train)
        x = train.trajectories[0].states
        assert np.allclose(norm.denormalize(norm.normalize(x)), x, atol=1e-12)

    def test_train_split_maps_to_unit_box(self, tiny_dataset):
        norm = NormalizationSpec.from_dataset(tiny_dataset)
        allstates = np.vstack([t.states for t in tiny_dataset.trajectories])
        z = norm.normalize(allstates)
        assert z.min() >= -1e-12 and z.max() <= 1 + 1e-12

    def test_degenerate_range_is_safe(self):
        tr = D.Trajectory(np.array([0.0, 1.0]),
                          np.array([[1.0, 0.0, 300.0], [0.5, 0.5, 300.0]]))
        ds = D.TrajectoryDataset(("F", "P"), [tr])
        norm = NormalizationSpec.from_dataset(ds)
        z = norm.normalize(tr.states)
        assert np.all(np.isfinite(z)) and np.allclose(z[:, -1], 0.0)

    def test_serialization_roundtrip(self, tiny_dataset):
        norm = NormalizationSpec.from_dataset(tiny_dataset)
        back = NormalizationSpec.from_dict(norm.to_dict())
        assert np.array_equal(back.mins, norm.mins)
        assert np.array_equal(back.ranges, norm.ranges)


class TestLossAndGrad:
    def test_gradient_matches_fd(self, tiny_model, tiny_dataset):
        norm = NormalizationSpec.from_dataset(tiny_dataset)
        lc = LossConfig(stage=1)
        val, _, grad = loss_and_grad(tiny_model, tiny_dataset, norm, lc,
                                     INT_CFG)
        ref, _ = loss(tiny_model, tiny_dataset, norm, lc, INT_CFG)
        assert val == pytest.approx(ref, rel=1e-6)

        theta0 = tiny_model.get_params("kin")
        eps = 1e-5
        for j in np.random.default_rng(0).choice(theta0.size, 6, replace=False):
            tp, tm = theta0.copy(), theta0.copy()
            tp[j] += eps
            tm[j] -= eps
            tiny_model.set_params(tp, "kin")
            lp, _ = loss(tiny_model, tiny_dataset, norm, lc, INT_CFG)
            tiny_model.set_params(tm, "kin")
            lm, _ = loss(tiny_model, tiny_dataset, norm, lc, INT_CFG)
            fd = (lp - lm) / (2 * eps)
            assert grad[j] == pytest.approx(fd, rel=1e-3, abs=1e-9)
        tiny_model.set_params(theta0, "kin")

    def test_pinn_term_zero_on_conserved_prediction(self):
        # constant species prediction conserves every element exactly
        norm = NormalizationSpec(np.zeros(3), np.ones(3))
        pred = np.tile(np.array([0.4, 0.6]), (5, 2, 1))
        val = pinn_term(pred, norm, D.TOY_ELEMENT_MATRIX, alpha=1e-4, m=2)
        assert val == 0.0

    def test_pinn_term_positive_on_drift(self):
        norm = NormalizationSpec(np.zeros(3), np.ones(3))
        pred = np.tile(np.array([0.4, 0.6]), (5, 2, 1)).copy()
        pred[-1, :, 0] += 0.1
        val = pinn_term(pred, norm, D.TOY_ELEMENT_MATRIX, alpha=1e-4, m=2)
        assert val > 0.0


class TestTrainStage:
    def test_loss_decreases(self, tiny_model, tiny_dataset):
        norm = NormalizationSpec.from_dataset(tiny_dataset)
        rep = train_stage(tiny_model, tiny_dataset, 1, 40, 0, norm,
                          LossConfig(stage=1), INT_CFG)
        assert rep.train_mse[-1] < rep.train_mse[0]
        assert len(rep.train_mse) == 40

    def test_deterministic_given_seed(self, tiny_dataset):
        def run():
            cfg = ChemKanConfig(m=6, hidden=2, n_mu=1, grid_size=2,
                                base=False, thermo_enabled=False)
            model = ChemKanModel.create(cfg, seed=4)
            train_stage(model, tiny_dataset, 1, 10, 0,
                        NormalizationSpec.from_dataset(tiny_dataset),
                        LossConfig(stage=1), INT_CFG)
            return model.get_params()

        assert np.array_equal(run(), run())

    def test_stage2_requires_thermo(self, tiny_model, tiny_dataset):
        norm = NormalizationSpec.from_dataset(tiny_dataset)
        with pytest.raises(ValueError):
            train_stage(tiny_model, tiny_dataset, 2, 1, 0, norm,
                        LossConfig(stage=2), INT_CFG)

    def test_report_trace_file(self, tmp_path, tiny_model, tiny_dataset):
        norm = NormalizationSpec.from_dataset(tiny_dataset)
        rep = train_stage(tiny_model, tiny_dataset, 1, 5, 0, norm,
                          LossConfig(stage=1), INT_CFG,
                          test_dataset=tiny_dataset)
        path = tmp_path / "trace.txt"
        rep.write_text(path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 6  # header + 5 epochs
        assert "train_mse" in lines[0]


class TestEvaluation:
    def test_noise_free_uses_clean_parent(self, tiny_model, tiny_dataset):
        norm = NormalizationSpec.from_dataset(tiny_dataset)
        noisy = D.apply_noise(tiny_dataset, 20.0, seed=8)
        noisy_mse = evaluate_mse(tiny_model, noisy, norm, 1, INT_CFG)
        clean_mse = evaluate_noise_free(tiny_model, tiny_dataset, norm, 1,
                                        INT_CFG)
        assert noisy_mse != clean_mse
        direct = evaluate_mse(tiny_model, tiny_dataset, norm, 1, INT_CFG)
        assert clean_mse == pytest.approx(direct)


class TestAdam:
    def test_converges_on_quadratic(self):
        adam = Adam(2, lr=0.1)
        x = np.array([3.0, -2.0])
        for _ in range(400):
            x = adam.step(x, 2 * x)
        assert np.allclose(x, 0.0, atol=1e-3)

    def test_first_step_is_lr_sized(self):
        adam = Adam(1, lr=0.01)
        x = adam.step(np.array([1.0]), np.array([1e-3]))
        # bias correction makes the first update ~lr regardless of gradient
        assert x[0] == pytest.approx(1.0 - 0.01, rel=1e-3)
