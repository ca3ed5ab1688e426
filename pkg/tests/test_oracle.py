import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hydrolim.oracle import (LinearModeSystem, damped_wave_residual, evolve_exact,
                             mode_eigen, mode_matrix, taylor_expm, uniform_bound_check)

PI = np.pi
modes = st.tuples(st.integers(-4, 4), st.integers(-4, 4), st.integers(-4, 4))
eps_values = st.sampled_from([0.5, 0.2, 0.1, 0.05, 0.01])


def test_vertical_mode_eigenvalues():
    lam = mode_eigen((0, 0, 1), 0.1).values
    lam = lam[np.argsort(lam.imag)]
    im = 0.5 * PI * np.sqrt(400 - PI ** 2)
    expect = np.array([-PI ** 2 / 2 - 1j * im, -PI ** 2 / 2 + 1j * im])
    assert np.abs(lam - expect).max() <= 1e-10
    assert lam[1] == pytest.approx(-4.9348022 + 31.0259273j, abs=1e-6)


def test_mean_mode_conserved():
    e = mode_eigen((0, 0, 0), 0.1)
    assert np.abs(e.values).max() == 0.0
    x0 = np.array([1.0, 0.5, -0.2, 0.0])
    assert np.allclose(evolve_exact(x0, 3.0, (0, 0, 0), 0.1).values, x0, atol=0)


def test_generator_entries():
    m = mode_matrix((1, 2, 3), 0.1)
    k2 = PI ** 2 * 14
    assert m[0, 1] == pytest.approx(-1j * PI) and m[0, 3] == pytest.approx(-3j * PI)
    assert m[1, 0] == pytest.approx(-1j * PI) and m[1, 1] == pytest.approx(-k2)
    assert m[3, 0] == pytest.approx(-3j * PI / 0.01)
    assert LinearModeSystem.build((1, 2, 3), 0.1).m.shape == (4, 4)
    assert LinearModeSystem.build((0, 0, 2), 0.1).m.shape == (2, 2)


@settings(max_examples=40, deadline=None)
@given(modes, eps_values)
def test_stability_and_eigen_residuals(k, eps):
    e = mode_eigen(k, eps)
    assert np.all(e.values.real <= 1e-9 * max(1.0, np.abs(e.values).max()))
    assert np.all(e.residuals() <= 1e-12 * max(1.0, np.abs(e.matrix).max()))


@settings(max_examples=30, deadline=None)
@given(modes, eps_values, st.floats(0.0, 0.5), st.floats(0.0, 0.5))
def test_semigroup(k, eps, t1, t2):
    x0 = np.array([1.0, 0.3j, -0.2, 0.4])
    a = evolve_exact(x0, t1 + t2, k, eps).values
    b = evolve_exact(evolve_exact(x0, t1, k, eps).values, t2, k, eps).values
    assert np.abs(a - b).max() <= 1e-12 * max(1.0, np.abs(x0).max())


def test_identity_at_zero_time():
    x0 = np.array([0.1, 0.2, 0.3, 0.4])
    assert np.allclose(evolve_exact(x0, 0.0, (1, 1, 1), 0.1).values, x0, rtol=0, atol=1e-15)
    with pytest.raises(ValueError):
        evolve_exact(x0, -1.0, (1, 1, 1), 0.1)


def test_heat_decay_of_horizontal_mode():
    k, t = (1, 2, 0), 0.3
    # psi_h splits into a decaying solenoidal part and an acoustic part;
    # pick the solenoidal direction (perpendicular to k_h) to isolate heat decay
    perp = np.array([0.0, -2.0, 1.0, 0.0])
    out = evolve_exact(perp, t, k, 0.1).values
    assert np.allclose(out, perp * np.exp(-PI ** 2 * 5 * t), atol=1e-14)


def test_vertical_mode_envelope():
    x0 = np.array([1.0, 0.0, 0.0, 0.5])
    out = evolve_exact(x0, 1.0, (0, 0, 1), 0.1)
    e = mode_eigen((0, 0, 1), 0.1)
    cond = np.linalg.cond(e.vectors)
    assert abs(out.values[0]) <= cond * np.exp(-PI ** 2 / 2) * np.linalg.norm(x0)


def test_taylor_matches_eigen_path():
    m = mode_matrix((1, 0, 2), 0.2)
    a = taylor_expm(m * 0.1)
    x0 = np.array([1.0, 0.5, 0.0, -0.3])
    assert np.allclose(a @ x0, evolve_exact(x0, 0.1, (1, 0, 2), 0.2).values, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(modes, eps_values, st.floats(0.0, 1.0))
def test_damped_wave_identity_along_trajectories(k, eps, t):
    x0 = np.array([1.0, -0.5, 0.25j, 0.1])
    x = evolve_exact(x0, t, k, eps).values
    m = mode_matrix(k, eps)
    scale = np.abs(m @ m @ x).max() + np.abs(m @ x).max() + np.abs(x).max() / eps ** 2 * 100
    assert abs(damped_wave_residual(x, k, eps)) <= 1e-12 * max(1.0, scale)


def test_uniform_bound_examples():
    t = np.linspace(0, 1, 201)
    rep = uniform_bound_check([0.2, 0.1, 0.05], t)
    assert rep.uniform("eps*psi_z")
    scaled = uniform_bound_check([0.2, 0.1, 0.05], t, scale_vertical=True)
    assert scaled.uniform("dt_eta") and scaled.growth["dt_eta"] <= 2.0
    zero = uniform_bound_check([0.2, 0.1, 0.05], t, init=(0, 0, 0, 0))
    assert all(v == 0.0 for vals in zero.quantities.values() for v in vals)
    assert len(rep.lines()) == 2 + len(rep.quantities)
