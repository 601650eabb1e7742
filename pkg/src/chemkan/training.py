"""Two-stage ChemKAN training: normalized loss, forward-sensitivity
gradients, Adam, and loss-trace reporting.

The network operates entirely in normalized state space: every state is
mapped to [0, 1] by the training-split minimum and range, and the model's
outputs are rates of the normalized states. Raw Kelvin temperatures would
saturate the tanh layer normalization, so this scaling is what makes the
temperature input informative.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .data import ElementMatrix, TrajectoryDataset
from .model import ChemKanModel, full_rhs, kinetic_jacobians, kinetic_rhs, \
    rhs_sensitivities
from .odeint import DivergenceError, IntegratorConfig, \
    integrate, integrate_batch_with_sensitivity
from .optim import Adam


@dataclass
class NormalizationSpec:
    """Per-state minimum and range over the training split.

    States constant across the split keep their minimum and get range 1 so
    their error contributes in absolute units.
    """

    mins: np.ndarray
    ranges: np.ndarray

    @classmethod
    def from_dataset(cls, dataset: TrajectoryDataset) -> "NormalizationSpec":
        lo, rng = dataset.state_range()
        rng = np.where(rng > 0, rng, 1.0)
        return cls(lo, rng)

    def normalize(self, states):
        return (np.asarray(states, dtype=float) - self.mins) / self.ranges

    def denormalize(self, states_hat):
        return np.asarray(states_hat, dtype=float) * self.ranges + self.mins

    def to_dict(self):
        return {"mins": self.mins.tolist(), "ranges": self.ranges.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["mins"], float), np.array(d["ranges"], float))


@dataclass
class LossConfig:
    alpha_pinn: float = 1e-4
    pinn_enabled: bool = False
    stage: int = 1
    element_matrix: ElementMatrix | None = None

    def __post_init__(self):
        if self.stage not in (1, 2):
            raise ValueError("stage must be 1 or 2")
        if self.pinn_enabled and self.element_matrix is None:
            raise ValueError("pinn_enabled requires an element matrix")


@dataclass
class TrainReport:
    seed: int
    stage: int
    train_mse: list[float] = field(default_factory=list)
    test_mse: list[float] = field(default_factory=list)
    noisefree_mse: list[float] = field(default_factory=list)
    pinn: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)
    failed_epochs: list[int] = field(default_factory=list)
    checkpoint_path: str | None = None

    @property
    def epochs_run(self) -> int:
        return len(self.train_mse)

    def write_text(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("epoch train_mse test_mse noisefree_mse pinn seconds\n")
            for i in range(self.epochs_run):
                fh.write(
                    f"{i} {self.train_mse[i]!r} {self.test_mse[i]!r} "
                    f"{self.noisefree_mse[i]!r} {self.pinn[i]!r} "
                    f"{self.seconds[i]:.3f}\n"
                )


# -- dataset plumbing ----------------------------------------------------------


def _shared_times(dataset: TrajectoryDataset) -> np.ndarray:
    times = dataset.trajectories[0].times
    for tr in dataset.trajectories[1:]:
        if tr.times.shape != times.shape or not np.array_equal(tr.times, times):
            raise ValueError("trajectories must share a common time grid")
    return times


def _observations(dataset: TrajectoryDataset) -> np.ndarray:
    """(n_t, B, m+1) stacked states."""
    return np.stack([tr.states for tr in dataset.trajectories], axis=1)


def _temperature_interp(times, T_hat_table):
    """Vectorized per-trajectory linear interpolation of normalized T."""
    def T_of(t):
        i = np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2)
        frac = (t - times[i]) / (times[i + 1] - times[i])
        return T_hat_table[i] + frac * (T_hat_table[i + 1] - T_hat_table[i])

    return T_of


# -- prediction ----------------------------------------------------------------


def predict(
    model: ChemKanModel,
    dataset: TrajectoryDataset,
    norm: NormalizationSpec,
    stage: int,
    int_cfg: IntegratorConfig,
) -> np.ndarray:
    """Integrate the surrogate over every trajectory in the dataset.

    Returns normalized predictions of shape (n_t, B, n_state) where
    n_state = m for stage 1 (temperature data-fed) and m+1 for stage 2.
    """
    # integrate in the model's internal time units
    times = _shared_times(dataset) / model.config.time_scale
    obs_hat = norm.normalize(_observations(dataset))  # (n_t, B, m+1)
    m = model.m
    B = obs_hat.shape[1]

    if stage == 1:
        T_of = _temperature_interp(times, obs_hat[:, :, m])
        u0 = obs_hat[0, :, :m]

        def f(t, Y):
            U = np.column_stack([Y, T_of(t)])
            return kinetic_rhs(model, U).ravel()

        n_state = m
    else:
        u0 = obs_hat[0]

        def f(t, U):
            return full_rhs(model, U.reshape(B, m + 1)).ravel()

        n_state = m + 1

    cfg = IntegratorConfig(
        abs_tol=int_cfg.abs_tol,
        rel_tol=int_cfg.rel_tol,
        initial_step=int_cfg.initial_step,
        max_steps=int_cfg.max_steps,
        mode=int_cfg.mode,
        save_at=times[1:],
    )

    def f_flat(t, z):
        return f(t, z.reshape(B, n_state))

    sol = integrate(f_flat, u0.ravel(), (times[0], times[-1]), cfg)
    out = np.empty((len(times), B, n_state))
    out[0] = u0
    out[1:] = sol.states.reshape(len(times) - 1, B, n_state)
    return out


def mse_against(pred_hat, obs_hat, n_star) -> float:
    err = pred_hat[..., :n_star] - obs_hat[..., :n_star]
    return float(np.mean(err * err))


def evaluate_mse(model, dataset, norm, stage, int_cfg) -> float:
    """Normalized MSE of the integrated surrogate against the dataset."""
    pred = predict(model, dataset, norm, stage, int_cfg)
    obs_hat = norm.normalize(_observations(dataset))
    n_star = model.m if stage == 1 else model.m + 1
    return mse_against(pred, obs_hat[..., : pred.shape[-1]], n_star)


def evaluate_noise_free(model, clean_dataset, norm, stage, int_cfg) -> float:
    """MSE against the clean (pre-noise) truth under the training
    normalization."""
    return evaluate_mse(model, clean_dataset, norm, stage, int_cfg)


def pinn_term(Y_hat_pred, norm, element_matrix, alpha, m) -> float:
    """Element-conservation penalty on predicted trajectories.

    Y_hat_pred is (n_t, B, >=m) in normalized units; the penalty acts on
    unnormalized mass fractions and compares each time to the first
    prediction time. Summed over elements and times, averaged over
    trajectories.
    """
    coeff = element_matrix.conservation_coefficients()  # (Ne, m)
    dY = (Y_hat_pred[:, :, :m] - Y_hat_pred[0, :, :m]) * norm.ranges[:m]
    g = np.einsum("ek,jbk->ejb", coeff, dY)
    return float(alpha * np.abs(g).sum(axis=(0, 1)).mean())


# -- loss and gradient ---------------------------------------------------------


def loss(
    model: ChemKanModel,
    dataset: TrajectoryDataset,
    norm: NormalizationSpec,
    loss_cfg: LossConfig,
    int_cfg: IntegratorConfig,
) -> tuple[float, dict]:
    """Training loss of the integrated surrogate (no gradient)."""
    stage = loss_cfg.stage
    pred = predict(model, dataset, norm, stage, int_cfg)
    obs_hat = norm.normalize(_observations(dataset))
    n_star = model.m if stage == 1 else model.m + 1
    mse = mse_against(pred, obs_hat[..., : pred.shape[-1]], n_star)
    components = {"mse": mse, "pinn": 0.0}
    if loss_cfg.pinn_enabled:
        components["pinn"] = pinn_term(
            pred, norm, loss_cfg.element_matrix, loss_cfg.alpha_pinn, model.m
        )
    return mse + components["pinn"], components


def loss_and_grad(
    model: ChemKanModel,
    dataset: TrajectoryDataset,
    norm: NormalizationSpec,
    loss_cfg: LossConfig,
    int_cfg: IntegratorConfig,
) -> tuple[float, dict, np.ndarray]:
    """Full-batch loss and dL/dtheta via forward sensitivity analysis.

    The gradient covers theta_kin for stage 1 and all partitions for
    stage 2 (matching the partition each stage updates).
    """
    stage = loss_cfg.stage
    # integrate in the model's internal time units
    times = _shared_times(dataset) / model.config.time_scale
    obs_hat = norm.normalize(_observations(dataset))
    m = model.m
    B = obs_hat.shape[1]
    which = "kin" if stage == 1 else "all"
    P = model.get_params(which).size

    if stage == 1:
        T_of = _temperature_interp(times, obs_hat[:, :, m])
        n_state = m
        U0 = obs_hat[0, :, :m]

        def f_batch(t, Y):
            U = np.column_stack([Y, T_of(t)])
            return kinetic_rhs(model, U)

        def jac_batch(t, Y):
            U = np.column_stack([Y, T_of(t)])
            Ju, Jth = kinetic_jacobians(model, U)
            return Ju[..., :m], Jth  # T is exogenous, not a state
    else:
        n_state = m + 1
        U0 = obs_hat[0]

        def f_batch(t, U):
            return full_rhs(model, U)

        def jac_batch(t, U):
            return rhs_sensitivities(model, U, "all")

    cfg = IntegratorConfig(
        abs_tol=int_cfg.abs_tol,
        rel_tol=int_cfg.rel_tol,
        initial_step=int_cfg.initial_step,
        max_steps=int_cfg.max_steps,
        mode=int_cfg.mode,
        save_at=times[1:],
    )
    S0 = np.zeros((B, n_state, P))
    sol = integrate_batch_with_sensitivity(
        f_batch, jac_batch, U0, S0, (times[0], times[-1]), cfg
    )
    n_t = len(times)
    pred = np.empty((n_t, B, n_state))
    pred[0] = U0
    pred[1:] = sol.states
    S = np.zeros((n_t, B, n_state, P))
    S[1:] = sol.sensitivities

    n_star = m if stage == 1 else m + 1
    err = pred[..., :n_star] - obs_hat[..., :n_star]
    mse = float(np.mean(err * err))
    grad = (2.0 / err.size) * np.einsum("jbk,jbkp->p", err, S[..., :n_star, :])

    components = {"mse": mse, "pinn": 0.0}
    if loss_cfg.pinn_enabled:
        coeff = loss_cfg.element_matrix.conservation_coefficients()
        dY = (pred[:, :, :m] - pred[0, :, :m]) * norm.ranges[:m]
        g = np.einsum("ek,jbk->ejb", coeff, dY)
        components["pinn"] = float(
            loss_cfg.alpha_pinn * np.abs(g).sum(axis=(0, 1)).mean()
        )
        # d|g|/dtheta; S at the first time is zero so only S_j contributes
        sgn = np.sign(g)
        scaled_S = S[:, :, :m, :] * norm.ranges[:m, None]
        grad = grad + (loss_cfg.alpha_pinn / B) * np.einsum(
            "ejb,ek,jbkp->p", sgn, coeff, scaled_S
        )
    return mse + components["pinn"], components, grad


# -- training loop ---------------------------------------------------------------


class TrainingAborted(RuntimeError):
    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


def train_stage(
    model: ChemKanModel,
    dataset: TrajectoryDataset,
    stage: int,
    epochs: int,
    seed: int = 0,
    norm: NormalizationSpec | None = None,
    loss_cfg: LossConfig | None = None,
    int_cfg: IntegratorConfig | None = None,
    lr: float = 2e-3,
    test_dataset: TrajectoryDataset | None = None,
    clean_test_dataset: TrajectoryDataset | None = None,
    eval_every: int = 1,
    stop_below: float | None = None,
) -> TrainReport:
    """Adam over the stage's parameter partition; full-batch gradients.

    Stage 1 updates theta_kin with data-fed temperature; stage 2 updates
    the whole network. On a diverged epoch the parameters roll back to the
    last good state and the learning rate is halved, once; a second failure
    aborts. Deterministic given the seed and inputs.
    """
    if stage == 2 and not model.thermo_enabled:
        raise ValueError("stage 2 requires the thermo superstructure")
    if norm is None:
        norm = NormalizationSpec.from_dataset(dataset)
    if loss_cfg is None:
        loss_cfg = LossConfig(stage=stage)
    if loss_cfg.stage != stage:
        raise ValueError("loss_cfg.stage disagrees with stage")
    if int_cfg is None:
        int_cfg = IntegratorConfig()

    which = "kin" if stage == 1 else "all"
    params = model.get_params(which)
    adam = Adam(params.size, lr=lr)
    report = TrainReport(seed=seed, stage=stage)
    halved = False
    last_good = params.copy()

    for epoch in range(epochs):
        t_start = time.perf_counter()
        try:
            total, comps, grad = loss_and_grad(model, dataset, norm, loss_cfg, int_cfg)
            if not (np.isfinite(total) and np.all(np.isfinite(grad))):
                raise DivergenceError("non-finite loss or gradient", None, None)
        except DivergenceError:
            report.failed_epochs.append(epoch)
            model.set_params(last_good, which)
            params = last_good.copy()
            if halved:
                raise TrainingAborted(
                    f"epoch {epoch}: diverged again after lr halving", report
                )
            adam = Adam(params.size, lr=adam.lr / 2.0)
            halved = True
            report.train_mse.append(float("nan"))
            report.test_mse.append(float("nan"))
            report.noisefree_mse.append(float("nan"))
            report.pinn.append(float("nan"))
            report.seconds.append(time.perf_counter() - t_start)
            continue

        last_good = params.copy()
        params = adam.step(params, grad)
        model.set_params(params, which)

        report.train_mse.append(comps["mse"])
        report.pinn.append(comps["pinn"])
        if test_dataset is not None and epoch % eval_every == 0:
            report.test_mse.append(
                evaluate_mse(model, test_dataset, norm, stage, int_cfg)
            )
        else:
            report.test_mse.append(float("nan"))
        if clean_test_dataset is not None and epoch % eval_every == 0:
            report.noisefree_mse.append(
                evaluate_noise_free(model, clean_test_dataset, norm, stage, int_cfg)
            )
        else:
            report.noisefree_mse.append(float("nan"))
        report.seconds.append(time.perf_counter() - t_start)

        if stop_below is not None and comps["mse"] < stop_below:
            break
    return report
