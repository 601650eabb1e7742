"""Gridded-RBF KAN layers.

A layer connects every input to every output through its own learnable
univariate activation: a weighted sum of Gaussian bumps on a fixed uniform
grid, plus an optional Swish base term. Outputs combine the first ``n_mu``
activated inputs by a product and the remaining ones by a sum; ``n_mu = 0``
recovers the plain additive layer.

All forward/Jacobian routines are pure functions of (parameters, input) and
accept either a single input vector or a batch stacked along the leading
axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def swish(x):
    return x / (1.0 + np.exp(-x))


def swish_deriv(x):
    s = 1.0 / (1.0 + np.exp(-x))
    return s * (1.0 + x * (1.0 - s))


@dataclass(frozen=True)
class RBFGrid:
    """Uniform grid of RBF centers on the normalized input range [-1, 1]."""

    centers: np.ndarray
    spread: float

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float)
        object.__setattr__(self, "centers", c)
        if c.ndim != 1 or c.size < 1:
            raise ValueError("grid needs at least one center")
        if c.size > 1:
            d = np.diff(c)
            if np.any(d <= 0):
                raise ValueError("gridpoints must be strictly increasing")
            if not np.allclose(d, d[0], rtol=1e-12, atol=1e-12):
                raise ValueError("gridpoints must be uniformly spaced")
        if self.spread <= 0:
            raise ValueError("spread must be positive")

    @property
    def size(self) -> int:
        return self.centers.size

    @classmethod
    def uniform(cls, n: int) -> "RBFGrid":
        """N centers spanning [-1, 1] inclusive, spread equal to the spacing.

        A single-center grid sits at 0 with spread 1.
        """
        if n < 1:
            raise ValueError("grid size must be >= 1")
        if n == 1:
            return cls(np.zeros(1), 1.0)
        centers = np.linspace(-1.0, 1.0, n)
        return cls(centers, centers[1] - centers[0])

    def basis(self, x):
        """RBF basis values, shape x.shape + (N,)."""
        r = np.asarray(x, dtype=float)[..., None] - self.centers
        return np.exp(-(r * r) / (2.0 * self.spread**2))

    def basis_deriv(self, x):
        r = np.asarray(x, dtype=float)[..., None] - self.centers
        h2 = self.spread**2
        return np.exp(-(r * r) / (2.0 * h2)) * (-r / h2)


@dataclass(frozen=True)
class ActivationParams:
    """Weights of one learnable activation: N grid weights, optional base."""

    grid_weights: np.ndarray
    base_weight: float | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "grid_weights", np.asarray(self.grid_weights, dtype=float)
        )


def eval_activation(p: ActivationParams, g: RBFGrid, x: float) -> float:
    """Scalar activation value at an already-normalized input x."""
    if p.grid_weights.shape != (g.size,):
        raise ValueError("grid_weights length must equal grid size")
    val = float(np.dot(p.grid_weights, g.basis(x)))
    if p.base_weight is not None:
        val += p.base_weight * swish(x)
    return val


@dataclass
class KanLayer:
    """One KAN layer: n_out x n_in activations over a shared grid.

    grid_weights has shape (n_out, n_in, N); base_weights is (n_out, n_in)
    or None when the Swish base term is disabled. The first n_mu inputs (in
    declared order) feed the product term.
    """

    n_in: int
    n_out: int
    n_mu: int
    grid: RBFGrid
    grid_weights: np.ndarray
    base_weights: np.ndarray | None = None
    normalize_input: bool = True

    def __post_init__(self):
        if not (0 <= self.n_mu <= self.n_in):
            raise ValueError("need 0 <= n_mu <= n_in")
        self.grid_weights = np.asarray(self.grid_weights, dtype=float)
        if self.grid_weights.shape != (self.n_out, self.n_in, self.grid.size):
            raise ValueError("grid_weights shape mismatch")
        if self.base_weights is not None:
            self.base_weights = np.asarray(self.base_weights, dtype=float)
            if self.base_weights.shape != (self.n_out, self.n_in):
                raise ValueError("base_weights shape mismatch")

    @property
    def has_base(self) -> bool:
        return self.base_weights is not None

    @property
    def n_params(self) -> int:
        return self.n_in * self.n_out * (self.grid.size + int(self.has_base))

    @classmethod
    def create(
        cls,
        n_in: int,
        n_out: int,
        n_mu: int,
        grid_size: int,
        base: bool,
        rng: np.random.Generator,
        normalize_input: bool = True,
        init_scale: float = 0.1,
    ) -> "KanLayer":
        grid = RBFGrid.uniform(grid_size)
        gw = rng.uniform(-init_scale, init_scale, size=(n_out, n_in, grid_size))
        bw = rng.uniform(-init_scale, init_scale, size=(n_out, n_in)) if base else None
        return cls(n_in, n_out, n_mu, grid, gw, bw, normalize_input)

    # -- parameter flattening ------------------------------------------------
    # canonical order: all grid weights (C order over out, in, gridpoint),
    # then all base weights (C order over out, in).

    def get_params(self) -> np.ndarray:
        parts = [self.grid_weights.ravel()]
        if self.has_base:
            parts.append(self.base_weights.ravel())
        return np.concatenate(parts)

    def set_params(self, theta: np.ndarray) -> None:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError("parameter vector length mismatch")
        ng = self.n_out * self.n_in * self.grid.size
        self.grid_weights = theta[:ng].reshape(self.grid_weights.shape).copy()
        if self.has_base:
            self.base_weights = theta[ng:].reshape(self.n_out, self.n_in).copy()

    # -- evaluation ----------------------------------------------------------

    def _normalize(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n_in:
            raise ValueError(
                f"input width {x.shape[-1]} does not match n_in={self.n_in}"
            )
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite layer input")
        return np.tanh(x) if self.normalize_input else x

    def _phi(self, xn):
        """Activation matrix phi[..., i, j] on normalized inputs."""
        psi = self.grid.basis(xn)  # (..., n_in, N)
        phi = np.einsum("ijk,...jk->...ij", self.grid_weights, psi)
        if self.has_base:
            phi = phi + self.base_weights * swish(xn)[..., None, :]
        return phi

    def forward(self, x) -> np.ndarray:
        """Layer output; x is (n_in,) or (..., n_in)."""
        xn = self._normalize(x)
        phi = self._phi(xn)
        mu = self.n_mu
        add = phi[..., :, mu:].sum(axis=-1)
        if mu == 0:
            return add
        return np.prod(phi[..., :, :mu], axis=-1) + add

    def jacobians(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Analytic d(out)/d(x) and d(out)/d(theta).

        Returns (..., n_out, n_in) and (..., n_out, n_params); derivatives
        are taken with respect to the raw, pre-normalization input.
        """
        xn = self._normalize(x)
        batch = xn.shape[:-1]
        psi = self.grid.basis(xn)  # (..., n_in, N)
        dpsi = self.grid.basis_deriv(xn)
        sw = swish(xn)
        dsw = swish_deriv(xn)

        phi = np.einsum("ijk,...jk->...ij", self.grid_weights, psi)
        dphi = np.einsum("ijk,...jk->...ij", self.grid_weights, dpsi)
        if self.has_base:
            phi = phi + self.base_weights * sw[..., None, :]
            dphi = dphi + self.base_weights * dsw[..., None, :]

        mu = self.n_mu
        # factor[..., i, j]: sensitivity of output i to phi[i, j]
        factor = np.ones(batch + (self.n_out, self.n_in))
        for j in range(mu):
            others = [jj for jj in range(mu) if jj != j]
            factor[..., :, j] = (
                np.prod(phi[..., :, others], axis=-1) if others else 1.0
            )

        dout_dxn = factor * dphi
        if self.normalize_input:
            dout_dx = dout_dxn * (1.0 - xn * xn)[..., None, :]
        else:
            dout_dx = dout_dxn

        N = self.grid.size
        # d out_i / d w[i', j, k] is nonzero only for i' == i
        dgrid = np.zeros(batch + (self.n_out, self.n_out, self.n_in, N))
        idx = np.arange(self.n_out)
        dgrid[..., idx, idx, :, :] = factor[..., None] * psi[..., None, :, :]
        parts = [dgrid.reshape(batch + (self.n_out, self.n_out * self.n_in * N))]
        if self.has_base:
            dbase = np.zeros(batch + (self.n_out, self.n_out, self.n_in))
            dbase[..., idx, idx, :] = factor * sw[..., None, :]
            parts.append(dbase.reshape(batch + (self.n_out, self.n_out * self.n_in)))
        dout_dtheta = np.concatenate(parts, axis=-1)
        return dout_dx, dout_dtheta


def layer_forward(layer: KanLayer, x) -> np.ndarray:
    return layer.forward(x)


def layer_jacobians(layer: KanLayer, x) -> tuple[np.ndarray, np.ndarray]:
    return layer.jacobians(x)
