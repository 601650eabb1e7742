"""DeepONet baseline: branch x trunk with an optional output network.

The network regresses states directly from (initial condition, time) pairs;
no ODE solve is involved. Training happens in the same normalized state
space as the ChemKAN, with the trunk time input scaled by the training
window. Hidden activations are Swish; terminal layers of each sub-network
are linear. Gradients are plain backprop.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .data import TrajectoryDataset
from .kan import swish, swish_deriv
from .optim import Adam
from .training import NormalizationSpec, TrainReport, _observations, _shared_times


class MLP:
    """Dense network; Swish on hidden layers, linear terminal layer."""

    def __init__(self, widths, rng: np.random.Generator):
        self.widths = list(widths)
        self.W = []
        self.b = []
        for n_in, n_out in zip(widths, widths[1:]):
            bound = 1.0 / np.sqrt(n_in)
            self.W.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
            self.b.append(rng.uniform(-bound, bound, size=n_out))

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.W, self.b))

    def get_params(self) -> np.ndarray:
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in
                               zip(self.W, self.b)])

    def set_params(self, theta: np.ndarray) -> None:
        k = 0
        for i, (w, b) in enumerate(zip(self.W, self.b)):
            self.W[i] = theta[k : k + w.size].reshape(w.shape).copy()
            k += w.size
            self.b[i] = theta[k : k + b.size].copy()
            k += b.size
        if k != theta.size:
            raise ValueError("parameter vector length mismatch")

    def forward(self, x, cache=None):
        """x is (B, n_in); optionally records pre-activations for backprop."""
        h = np.asarray(x, dtype=float)
        if cache is not None:
            cache.append(h)
        last = len(self.W) - 1
        for i, (w, b) in enumerate(zip(self.W, self.b)):
            z = h @ w.T + b
            h = z if i == last else swish(z)
            if cache is not None:
                cache.append((z, h))
        return h

    def backward(self, cache, grad_out):
        """Returns (grad wrt input, flat grad wrt params)."""
        grads_W = [None] * len(self.W)
        grads_b = [None] * len(self.b)
        g = grad_out
        last = len(self.W) - 1
        for i in range(last, -1, -1):
            z, _ = cache[i + 1]
            if i != last:
                g = g * swish_deriv(z)
            h_prev = cache[i] if i == 0 else cache[i][1]
            grads_W[i] = g.T @ h_prev
            grads_b[i] = g.sum(axis=0)
            g = g @ self.W[i]
        flat = np.concatenate(
            [np.concatenate([w.ravel(), b]) for w, b in zip(grads_W, grads_b)]
        )
        return g, flat


@dataclass
class DeepOnetModel:
    branch: MLP  # (m+1) -> q
    trunk: MLP  # 1 -> q
    output: MLP | None  # q -> m, or None for a fixed group-sum readout
    m: int
    t_scale: float = 1.0  # trunk input is t / t_scale

    def __post_init__(self):
        if self.branch.widths[-1] != self.trunk.widths[-1]:
            raise ValueError("branch and trunk terminal widths must match")
        if self.output is None and self.branch.widths[-1] % self.m:
            raise ValueError("fixed readout needs terminal width divisible by m")

    @property
    def n_params(self) -> int:
        n = self.branch.n_params + self.trunk.n_params
        return n + (self.output.n_params if self.output is not None else 0)

    def get_params(self) -> np.ndarray:
        parts = [self.branch.get_params(), self.trunk.get_params()]
        if self.output is not None:
            parts.append(self.output.get_params())
        return np.concatenate(parts)

    def set_params(self, theta: np.ndarray) -> None:
        nb, nt = self.branch.n_params, self.trunk.n_params
        self.branch.set_params(theta[:nb])
        self.trunk.set_params(theta[nb : nb + nt])
        if self.output is not None:
            self.output.set_params(theta[nb + nt :])

    @classmethod
    def create(
        cls,
        m: int,
        branch_widths,
        trunk_widths,
        output_widths=None,
        seed: int = 0,
        t_scale: float = 1.0,
    ) -> "DeepOnetModel":
        rng = np.random.default_rng(seed)
        branch = MLP(branch_widths, rng)
        trunk = MLP(trunk_widths, rng)
        output = MLP(output_widths, rng) if output_widths is not None else None
        return cls(branch, trunk, output, m, t_scale)

    @classmethod
    def standard_308(cls, seed: int = 0, t_scale: float = 1.0) -> "DeepOnetModel":
        """The 308-parameter baseline configuration for the 6-species case.

        Branch 7->7->7->8, trunk 1->7->8, output 8->6; weights-plus-biases
        counting. Pinned by total count, with the trunk and output widths
        matching the described topology exactly.
        """
        return cls.create(6, (7, 7, 7, 8), (1, 7, 8), (8, 6), seed, t_scale)


def don_forward(model: DeepOnetModel, u0, t):
    """Predicted state(s): u0 (m+1,) or (B, m+1); t scalar or (B,)."""
    single = np.asarray(u0).ndim == 1
    u0 = np.atleast_2d(np.asarray(u0, dtype=float))
    tcol = np.broadcast_to(
        np.asarray(t, dtype=float).reshape(-1, 1), (u0.shape[0], 1)
    )
    br = model.branch.forward(u0)
    tr = model.trunk.forward(tcol / model.t_scale)
    prod = br * tr
    if model.output is not None:
        out = model.output.forward(prod)
    else:
        q = prod.shape[1]
        out = prod.reshape(prod.shape[0], model.m, q // model.m).sum(axis=2)
    return out[0] if single else out


def _forward_backward(model, U0, tcol, target):
    """Normalized MSE over all points and its parameter gradient."""
    cb, ct = [], []
    br = model.branch.forward(U0, cb)
    tr = model.trunk.forward(tcol / model.t_scale, ct)
    prod = br * tr
    if model.output is not None:
        co = []
        pred = model.output.forward(prod, co)
    else:
        q = prod.shape[1]
        pred = prod.reshape(prod.shape[0], model.m, q // model.m).sum(axis=2)
    err = pred - target
    mse = float(np.mean(err * err))
    g_pred = 2.0 * err / err.size
    if model.output is not None:
        g_prod, g_out = model.output.backward(co, g_pred)
    else:
        g_prod = np.repeat(g_pred, prod.shape[1] // model.m, axis=1)
        g_out = None
    _, g_br = model.branch.backward(cb, g_prod * tr)
    _, g_tr = model.trunk.backward(ct, g_prod * br)
    parts = [g_br, g_tr] + ([g_out] if g_out is not None else [])
    return mse, np.concatenate(parts), pred


def dataset_points(dataset: TrajectoryDataset, norm: NormalizationSpec):
    """(U0 (n_pts, m+1), t (n_pts, 1), target (n_pts, m)) in normalized
    units; every sampled time of every trajectory, keyed by its initial
    condition."""
    times = _shared_times(dataset)
    obs_hat = norm.normalize(_observations(dataset))  # (n_t, B, m+1)
    n_t, B, n = obs_hat.shape
    U0 = np.repeat(obs_hat[0][None, :, :], n_t, axis=0).reshape(n_t * B, n)
    tcol = np.repeat(times, B).reshape(-1, 1)
    target = obs_hat[..., : n - 1].reshape(n_t * B, n - 1)
    return U0, tcol, target


def evaluate_don_mse(model, dataset, norm) -> float:
    U0, tcol, target = dataset_points(dataset, norm)
    pred = don_forward(model, U0, tcol)
    return float(np.mean((pred - target) ** 2))


def don_train(
    model: DeepOnetModel,
    dataset: TrajectoryDataset,
    epochs: int,
    seed: int = 0,
    norm: NormalizationSpec | None = None,
    lr: float = 2e-3,
    test_dataset: TrajectoryDataset | None = None,
    clean_test_dataset: TrajectoryDataset | None = None,
) -> TrainReport:
    """Full-batch Adam on the normalized MSE over (u0, t, u(t)) tuples."""
    if norm is None:
        norm = NormalizationSpec.from_dataset(dataset)
    U0, tcol, target = dataset_points(dataset, norm)
    params = model.get_params()
    adam = Adam(params.size, lr=lr)
    report = TrainReport(seed=seed, stage=1)
    for _ in range(epochs):
        t_start = time.perf_counter()
        mse, grad, _ = _forward_backward(model, U0, tcol, target)
        params = adam.step(params, grad)
        model.set_params(params)
        report.train_mse.append(mse)
        report.pinn.append(0.0)
        report.test_mse.append(
            evaluate_don_mse(model, test_dataset, norm)
            if test_dataset is not None
            else float("nan")
        )
        report.noisefree_mse.append(
            evaluate_don_mse(model, clean_test_dataset, norm)
            if clean_test_dataset is not None
            else float("nan")
        )
        report.seconds.append(time.perf_counter() - t_start)
    return report
