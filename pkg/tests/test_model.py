import numpy as np
import pytest

from chemkan.model import (
    ChemKanConfig,
    ChemKanModel,
    count_parameters,
    full_rhs,
    kinetic_jacobians,
    kinetic_rhs,
    load_checkpoint,
    rhs_sensitivities,
    save_checkpoint,
)


def biodiesel_config():
    return ChemKanConfig(m=6, hidden=4, n_mu=2, grid_size=3, base=False,
                         thermo_enabled=False)


def h2_config():
    return ChemKanConfig(m=9, hidden=3, n_mu=1, grid_size=4, base=True,
                         thermo_enabled=True, cor_grid_size=4)


def test_biodiesel_parameter_count_is_156():
    model = ChemKanModel.create(biodiesel_config(), seed=0)
    total, parts = count_parameters(model)
    assert total == 156
    assert parts == {"kin": 156, "thermo": 0, "cor": 0}


def test_h2_parameter_count_is_344():
    model = ChemKanModel.create(h2_config(), seed=0)
    total, parts = count_parameters(model)
    assert total == 344
    assert parts["thermo"] == 9
    assert parts["kin"] + parts["thermo"] + parts["cor"] == 344


def test_param_selectors_partition_all(thermo_model):
    kin = thermo_model.get_params("kin")
    rest = thermo_model.get_params("thermo_cor")
    full = thermo_model.get_params("all")
    assert kin.size + rest.size == full.size
    assert np.array_equal(np.concatenate([kin, rest]), full)


def test_set_params_roundtrip(thermo_model):
    theta = thermo_model.get_params()
    thermo_model.set_params(-theta)
    assert np.array_equal(thermo_model.get_params(), -theta)
    kin_size = thermo_model.partition_sizes()["kin"]
    thermo_model.set_params(theta[:kin_size] * 3, which="kin")
    assert np.array_equal(thermo_model.get_params("kin"), theta[:kin_size] * 3)
    # the other partition is untouched
    assert np.array_equal(thermo_model.get_params("thermo_cor"),
                          -theta[kin_size:])


def test_kinetic_rhs_shape_and_batch(small_model):
    u = np.array([0.4, 0.6, 0.5])  # 2 species + temperature input
    out = kinetic_rhs(small_model, u)
    assert out.shape == (2,)
    U = np.tile(u, (4, 1))
    assert np.allclose(kinetic_rhs(small_model, U), out)


def test_full_rhs_requires_thermo(small_model, thermo_model):
    u = np.array([0.4, 0.6, 0.5])
    with pytest.raises(ValueError):
        full_rhs(small_model, u)
    out = full_rhs(thermo_model, u)
    assert out.shape == (3,)
    # temperature rate = linear map of species rates + correction output
    dy = kinetic_rhs(thermo_model, u)
    assert np.isfinite(out[-1])
    assert np.allclose(out[:-1], dy)


def fd(f, x, eps=1e-6):
    y0 = np.atleast_1d(f(x))
    J = np.zeros((y0.size, x.size))
    for j in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[j] += eps
        xm[j] -= eps
        J[:, j] = (np.atleast_1d(f(xp)) - np.atleast_1d(f(xm))) / (2 * eps)
    return J


def test_kinetic_jacobians_match_fd(small_model):
    u = np.array([0.3, 0.8, 0.45])
    Ju, Jt = kinetic_jacobians(small_model, u)
    assert np.allclose(Ju, fd(lambda z: kinetic_rhs(small_model, z), u),
                       atol=1e-6)

    theta0 = small_model.get_params("kin")

    def f_theta(theta):
        small_model.set_params(theta, "kin")
        return kinetic_rhs(small_model, u)

    fd_t = fd(f_theta, theta0)
    small_model.set_params(theta0, "kin")
    assert np.allclose(Jt, fd_t, atol=1e-6)


@pytest.mark.parametrize("which", ["kin", "thermo_cor", "all"])
def test_rhs_sensitivities_match_fd(thermo_model, which):
    # state Jacobian always covers the full state; `which` only narrows the
    # parameter slice
    u = np.array([0.3, 0.8, 0.45])
    Ju, Jt = rhs_sensitivities(thermo_model, u, which)
    assert np.allclose(Ju, fd(lambda z: full_rhs(thermo_model, z), u),
                       atol=1e-6)

    theta0 = thermo_model.get_params(which)

    def f_theta(theta):
        thermo_model.set_params(theta, which)
        return full_rhs(thermo_model, u)

    fd_t = fd(f_theta, theta0)
    thermo_model.set_params(theta0, which)
    assert np.allclose(Jt, fd_t, atol=1e-6)


def test_checkpoint_roundtrip_is_bit_exact(tmp_path, thermo_model):
    path = tmp_path / "model.ck.json"
    save_checkpoint(thermo_model, path)
    loaded = load_checkpoint(path)
    assert np.array_equal(loaded.get_params(), thermo_model.get_params())
    assert loaded.config == thermo_model.config
    u = np.array([0.2, 0.9, 0.5])
    assert np.array_equal(full_rhs(loaded, u), full_rhs(thermo_model, u))


def test_create_is_seeded():
    a = ChemKanModel.create(biodiesel_config(), seed=5)
    b = ChemKanModel.create(biodiesel_config(), seed=5)
    c = ChemKanModel.create(biodiesel_config(), seed=6)
    assert np.array_equal(a.get_params(), b.get_params())
    assert not np.array_equal(a.get_params(), c.get_params())


def test_config_validation():
    with pytest.raises(ValueError):
        ChemKanConfig(m=0, hidden=4, n_mu=0, grid_size=3, base=False,
                      thermo_enabled=False)
    with pytest.raises(ValueError):
        ChemKanConfig(m=6, hidden=4, n_mu=9, grid_size=3, base=False,
                      thermo_enabled=False)
