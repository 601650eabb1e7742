"""Tsitouras 5(4) explicit Runge-Kutta integration.

Seven stages, FSAL, embedded 4th-order error estimate. Output times are hit
exactly by clipping the step size (no dense output). A forward-sensitivity
mode co-integrates S = du/dtheta as one flattened augmented state, with
error control applied to the full augmented vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Tsitouras (2011) coefficients, as used in standard Tsit5 implementations.
_C = np.array([0.0, 0.161, 0.327, 0.9, 0.9800255409045097, 1.0, 1.0])
_A = np.zeros((7, 7))
_A[1, 0] = 0.161
_A[2, :2] = [-0.008480655492356989, 0.335480655492357]
_A[3, :3] = [2.8971530571054935, -6.359448489975075, 4.3622954328695815]
_A[4, :4] = [
    5.325864828439257,
    -11.748883564062828,
    7.4955393428898365,
    -0.09249506636175525,
]
_A[5, :5] = [
    5.86145544294642,
    -12.92096931784711,
    8.159367898576159,
    -0.071584973281401,
    -0.028269050394068383,
]
# 5th-order weights (also the 7th stage row: FSAL)
_B = np.array([
    0.09646076681806523,
    0.01,
    0.4798896504144996,
    1.379008574103742,
    -3.290069515436081,
    2.324710524099774,
    0.0,
])
_A[6, :] = _B
# b - bhat: dotted with the stages this gives the embedded error estimate
_BTILDE = np.array([
    -0.00178001105222577714,
    -0.0008164344596567469,
    0.007880878010261995,
    -0.1447110071732629,
    0.5823571654525552,
    -0.45808210592918697,
    0.015151515151515152,
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


class DivergenceError(RuntimeError):
    """Integration failed; carries the last accepted time and state."""

    def __init__(self, message, t, state):
        super().__init__(message)
        self.t = t
        self.state = state


@dataclass
class IntegratorConfig:
    abs_tol: float = 1e-6
    rel_tol: float = 1e-6
    initial_step: float | None = None
    max_steps: int = 1_000_000
    mode: str = "adaptive"  # "adaptive" | "fixed"
    save_at: np.ndarray | None = None

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.mode not in ("adaptive", "fixed"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.save_at is not None:
            self.save_at = np.asarray(self.save_at, dtype=float)
            if np.any(np.diff(self.save_at) <= 0):
                raise ValueError("save_at must be strictly increasing")


@dataclass
class Solution:
    times: np.ndarray
    states: np.ndarray  # (n_save, n)
    step_count: int
    rejected_count: int
    rhs_eval_count: int


@dataclass
class SensitivitySolution:
    times: np.ndarray
    states: np.ndarray  # (n_save, n)
    sensitivities: np.ndarray  # (n_save, n, P)
    step_count: int
    rejected_count: int
    rhs_eval_count: int


def _resolve_save_at(span, cfg):
    t0, t1 = span
    if t1 <= t0:
        raise ValueError("integration span must be nondegenerate, t1 > t0")
    if cfg.save_at is None:
        return np.array([t1])
    save = cfg.save_at
    if save[0] < t0 - 1e-12 or save[-1] > t1 + 1e-12:
        raise ValueError("save_at must lie within the integration span")
    return save


def integrate(f, u0, span, cfg: IntegratorConfig) -> Solution:
    """Integrate u' = f(t, u) over span, reporting states at cfg.save_at.

    save_at defaults to [t1]. Raises DivergenceError on a non-finite RHS or
    when max_steps is exceeded.
    """
    t0, t1 = span
    save = _resolve_save_at(span, cfg)
    u = np.array(u0, dtype=float)
    out = np.empty((len(save), u.size))

    h = cfg.initial_step if cfg.initial_step is not None else (t1 - t0) / 100.0
    t = t0
    k1 = np.asarray(f(t, u), dtype=float)
    evals = 1
    accepted = rejected = 0
    if not np.all(np.isfinite(k1)):
        raise DivergenceError("non-finite RHS at initial state", t, u)

    i_save = 0
    while i_save < len(save) and save[i_save] <= t0 + 1e-14 * max(1.0, abs(t0)):
        out[i_save] = u
        i_save += 1

    k = np.empty((7, u.size))
    while i_save < len(save):
        target = save[i_save]
        if accepted + rejected >= cfg.max_steps:
            raise DivergenceError("max_steps exceeded", t, u)
        h_step = min(h, target - t)
        k[0] = k1
        bad = False
        for s in range(1, 7):
            us = u + h_step * (_A[s, :s] @ k[:s])
            k[s] = f(t + _C[s] * h_step, us)
            evals += 1
            if not np.all(np.isfinite(k[s])):
                bad = True
                break
        if bad:
            if cfg.mode == "fixed":
                raise DivergenceError("non-finite RHS during fixed step", t, u)
            rejected += 1
            h = h_step * _MIN_FACTOR
            continue
        u_new = u + h_step * (_B @ k)

        if cfg.mode == "fixed":
            accept = True
        else:
            err = h_step * (_BTILDE @ k)
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(u), np.abs(u_new))
            err_norm = np.sqrt(np.mean((err / scale) ** 2))
            accept = err_norm <= 1.0
            if err_norm == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = min(
                    _MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * err_norm ** (-0.2))
                )
            if accept:
                # a step clipped to hit a save point should not shrink the
                # natural step size
                h = max(h, h_step * factor) if h_step < h else h_step * factor
            else:
                h = h_step * min(1.0, factor)

        if accept:
            accepted += 1
            t = t + h_step
            u = u_new
            k1 = k[6]  # FSAL: k7 = f(t_new, u_new)
            if t >= target - 1e-12 * max(1.0, abs(target)):
                out[i_save] = u
                i_save += 1
        else:
            rejected += 1

    return Solution(save.copy(), out, accepted, rejected, evals)


def integrate_with_sensitivity(
    f, f_jac, u0, S0, span, cfg: IntegratorConfig
) -> SensitivitySolution:
    """Co-integrate u' = f(t, u) and S' = (df/du) S + df/dtheta.

    f_jac(t, u) must return (df/du of shape (n, n), df/dtheta of shape
    (n, P)). S0 is (n, P), typically zero.
    """
    u0 = np.asarray(u0, dtype=float)
    S0 = np.asarray(S0, dtype=float)
    n = u0.size
    P = S0.shape[1]
    if S0.shape != (n, P):
        raise ValueError("S0 must have shape (n_state, n_params)")

    def f_aug(t, z):
        u = z[:n]
        S = z[n:].reshape(n, P)
        du = np.asarray(f(t, u), dtype=float)
        Ju, Jth = f_jac(t, u)
        dS = Ju @ S + Jth
        return np.concatenate([du, dS.ravel()])

    sol = integrate(f_aug, np.concatenate([u0, S0.ravel()]), span, cfg)
    states = sol.states[:, :n]
    sens = sol.states[:, n:].reshape(len(sol.times), n, P)
    return SensitivitySolution(
        sol.times, states, sens, sol.step_count, sol.rejected_count,
        sol.rhs_eval_count,
    )


def integrate_batch_with_sensitivity(
    f_batch, jac_batch, U0, S0, span, cfg: IntegratorConfig
) -> SensitivitySolution:
    """Batched forward-sensitivity integration with shared step control.

    U0 is (B, n); S0 is (B, n, P) against a shared parameter vector.
    f_batch(t, U) -> (B, n); jac_batch(t, U) -> ((B, n, n), (B, n, P)).
    The B systems are independent but stepped together, with error control
    over the concatenated augmented state. Returned states/sensitivities
    have shapes (n_save, B, n) and (n_save, B, n, P).
    """
    U0 = np.asarray(U0, dtype=float)
    S0 = np.asarray(S0, dtype=float)
    B, n = U0.shape
    P = S0.shape[2]
    nu = B * n

    def f_aug(t, z):
        U = z[:nu].reshape(B, n)
        S = z[nu:].reshape(B, n, P)
        dU = f_batch(t, U)
        Ju, Jth = jac_batch(t, U)
        dS = np.einsum("bij,bjp->bip", Ju, S) + Jth
        return np.concatenate([dU.ravel(), dS.ravel()])

    sol = integrate(f_aug, np.concatenate([U0.ravel(), S0.ravel()]), span, cfg)
    n_save = len(sol.times)
    states = sol.states[:, :nu].reshape(n_save, B, n)
    sens = sol.states[:, nu:].reshape(n_save, B, n, P)
    return SensitivitySolution(
        sol.times, states, sens, sol.step_count, sol.rejected_count,
        sol.rhs_eval_count,
    )
