import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from chemkan.odeint import (
    DivergenceError,
    IntegratorConfig,
    integrate,
    integrate_batch_with_sensitivity,
    integrate_with_sensitivity,
)


def decay(t, u):
    return -u


def test_exponential_decay_adaptive():
    cfg = IntegratorConfig(abs_tol=1e-10, rel_tol=1e-10)
    sol = integrate(decay, np.array([1.0]), (0.0, 5.0), cfg)
    assert sol.states[-1, 0] == pytest.approx(np.exp(-5.0), rel=1e-8)


def test_fixed_step_order_is_five():
    # global error ratio across halved steps -> slope near 5
    errs = []
    hs = [0.2, 0.1, 0.05, 0.025]
    for h in hs:
        cfg = IntegratorConfig(mode="fixed", initial_step=h)
        sol = integrate(decay, np.array([1.0]), (0.0, 2.0), cfg)
        errs.append(abs(sol.states[-1, 0] - np.exp(-2.0)))
    slopes = np.diff(np.log(errs)) / np.diff(np.log(hs))
    assert 4.5 < np.mean(slopes) < 5.5


def test_fsal_evaluation_count():
    cfg = IntegratorConfig(abs_tol=1e-8, rel_tol=1e-8)
    calls = [0]

    def f(t, u):
        calls[0] += 1
        return -u

    sol = integrate(f, np.array([1.0]), (0.0, 3.0), cfg)
    assert calls[0] == sol.rhs_eval_count
    assert sol.rhs_eval_count == 6 * sol.step_count + 6 * sol.rejected_count + 1


def test_save_at_points_hit_exactly():
    save = np.array([0.3, 1.1, 2.7])
    cfg = IntegratorConfig(abs_tol=1e-9, rel_tol=1e-9, save_at=save)
    sol = integrate(decay, np.array([1.0]), (0.0, 3.0), cfg)
    assert np.array_equal(sol.times, save)
    assert np.allclose(sol.states[:, 0], np.exp(-save), rtol=1e-7)


def test_matches_scipy_on_nonlinear_system(loose_integrator):
    def f(t, u):
        return np.array([u[1], -np.sin(u[0]) - 0.1 * u[1]])

    u0 = np.array([1.2, 0.0])
    sol = integrate(f, u0, (0.0, 10.0), loose_integrator)
    ref = solve_ivp(f, (0.0, 10.0), u0, rtol=1e-11, atol=1e-11, dense_output=True)
    # local tolerance 1e-8 accumulates over t=10; allow for global error
    assert np.allclose(sol.states[-1], ref.y[:, -1], atol=1e-5)


def test_divergence_raises_with_location():
    def blow(t, u):
        return u * u

    cfg = IntegratorConfig(abs_tol=1e-8, rel_tol=1e-8, max_steps=100000)
    with pytest.raises(DivergenceError) as exc:
        integrate(blow, np.array([1.0]), (0.0, 2.0), cfg)
    assert 0.0 < exc.value.t <= 2.0


@given(st.floats(-1.5, 1.5), st.floats(0.2, 3.0))
@settings(max_examples=20, deadline=None)
def test_sensitivity_closed_form(theta, t_end):
    # u' = theta*u, u(0)=1 -> du/dtheta = t * exp(theta t)
    cfg = IntegratorConfig(abs_tol=1e-10, rel_tol=1e-10)
    sol = integrate_with_sensitivity(
        lambda t, u: theta * u,
        lambda t, u: (np.array([[theta]]), np.array([[u[0]]])),
        np.array([1.0]),
        np.zeros((1, 1)),
        (0.0, t_end),
        cfg,
    )
    expected = t_end * np.exp(theta * t_end)
    assert sol.sensitivities[-1, 0, 0] == pytest.approx(expected, rel=1e-6)


def test_batch_sensitivity_matches_single():
    thetas = np.array([0.3, -0.8])

    def f_batch(t, U):
        return thetas[:, None] * U

    def jac_batch(t, U):
        Ju = thetas[:, None, None] * np.ones((2, 1, 1))
        Jt = U[:, :, None]
        return Ju, Jt

    cfg = IntegratorConfig(abs_tol=1e-10, rel_tol=1e-10,
                           save_at=np.array([0.5, 1.0]))
    U0 = np.ones((2, 1))
    S0 = np.zeros((2, 1, 1))
    batch = integrate_batch_with_sensitivity(f_batch, jac_batch, U0, S0,
                                             (0.0, 1.0), cfg)
    for b, theta in enumerate(thetas):
        single = integrate_with_sensitivity(
            lambda t, u: theta * u,
            lambda t, u: (np.array([[theta]]), np.array([[u[0]]])),
            np.array([1.0]),
            np.zeros((1, 1)),
            (0.0, 1.0),
            cfg,
        )
        assert np.allclose(batch.states[:, b], single.states, atol=1e-8)
        assert np.allclose(batch.sensitivities[:, b], single.sensitivities,
                           atol=1e-8)


def test_max_steps_guard():
    cfg = IntegratorConfig(abs_tol=1e-12, rel_tol=1e-12, max_steps=3)
    with pytest.raises(DivergenceError):
        integrate(decay, np.array([1.0]), (0.0, 100.0), cfg)
