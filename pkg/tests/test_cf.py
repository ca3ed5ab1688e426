import numpy as np
import pytest

from hydrolim.cf import (CfIntegrator, DivergenceError, InconsistencyWarning, ModeMatrix,
                         StepperConfig, mass, mixed_wave_residual, mixed_wave_terms,
                         nonlinear_rhs, reconstruct_w, step, time_derivatives)
from hydrolim.oracle import evolve_fields_exact
from hydrolim.spectral import (Grid, Parity, hs_norm, project_parity, to_physical,
                               to_spectral)
from hydrolim.state import (CfState, compatibility_derivatives, make_well_prepared_ic,
                            random_state, reference_cpe_init)

PI = np.pi
G = Grid(8, 8, 8)


def state(grid, eps, sigma=0.0, v1=0.0, v2=0.0, w=0.0):
    x, y, z = grid.mesh()
    zero = np.zeros(grid.shape)
    vals = [(f(x, y, z) if callable(f) else f) + zero for f in (sigma, v1, v2, w)]
    return CfState.from_physical(grid, *vals, eps)


def test_config_validation():
    with pytest.raises(ValueError):
        StepperConfig(0.0)
    with pytest.raises(ValueError):
        StepperConfig(1e-3, scheme="rk4")
    with pytest.raises(ValueError):
        StepperConfig(1e-3, startup="nope")


def test_mode_matrix_implicit_invertible():
    m = ModeMatrix.build((1, 2, 3), 0.1, dt=0.5)
    assert np.all(np.linalg.eigvals(m.a).real <= 1e-12)
    assert abs(np.linalg.det(m.implicit())) > 0


def test_nonlinear_rhs_examples():
    for s in (state(G, 0.1, sigma=lambda x, y, z: np.cos(PI * x)),
              state(G, 0.1, v1=0.7)):
        assert all(np.abs(f.coeffs).max() == 0.0 for f in nonlinear_rhs(s))
    s = state(G, 0.1, sigma=lambda x, y, z: np.cos(PI * x), v1=1.0)
    ds = nonlinear_rhs(s)[0]
    x, y, z = G.mesh()
    assert np.abs(to_physical(ds) - PI * np.sin(PI * x)).max() <= 1e-13


@pytest.mark.parametrize("scheme", ["cnab2", "imex-euler"])
def test_fixed_points(scheme):
    cfg = StepperConfig(1e-2, scheme)
    z = CfState.zeros(G, 0.1)
    out = CfIntegrator(cfg).advance(z, 5)
    assert all(np.abs(f.coeffs).max() == 0.0 for f in out.fields)
    c = state(G, 0.1, sigma=0.37)
    out = CfIntegrator(cfg).advance(c, 20)
    assert np.abs(out.sigma.coeffs - c.sigma.coeffs).max() <= 1e-15
    assert all(np.abs(f.coeffs).max() <= 1e-15 for f in out.fields[1:])
    assert out.time == pytest.approx(0.2)


def test_step_returns_explicit_terms():
    s = random_state(G, 0.1, kmax=2, rng=3)
    new, nl = step(s, StepperConfig(1e-3))
    assert new.time == pytest.approx(1e-3)
    assert [f.parity for f in nl] == [Parity.EVEN] * 3 + [Parity.ODD]


def linear_errors(scheme, dts, eps=0.1):
    errs = []
    for dt in dts:
        s0 = state(G, eps, sigma=lambda x, y, z: 0.3 * np.cos(PI * z),
                   w=lambda x, y, z: 0.2 * np.sin(PI * z))
        s = CfIntegrator(StepperConfig(dt, scheme, nonlinear=False)).advance(s0, int(round(1 / dt)))
        exact = evolve_fields_exact(*s0.fields, eps, 1.0)
        errs.append(np.sqrt(sum(np.sum(np.abs(f.coeffs - e) ** 2) for f, e in zip(s.fields, exact))))
    return np.array(errs)


def test_linear_order_cnab2():
    errs = linear_errors("cnab2", [1e-2, 5e-3, 2.5e-3])
    orders = np.log2(errs[:-1] / errs[1:])
    assert np.all(orders >= 1.8)
    # error drops roughly fourfold per halving
    assert np.all(errs[:-1] / errs[1:] > 3.5)


def test_linear_order_imex_euler():
    errs = linear_errors("imex-euler", [2.5e-3, 1.25e-3, 6.25e-4])
    orders = np.log2(errs[:-1] / errs[1:])
    assert np.all((orders > 0.8) & (orders < 1.3))


def test_legacy_startup_still_second_order():
    errs = []
    for dt in (1e-2, 5e-3, 2.5e-3):
        s0 = state(G, 0.1, sigma=lambda x, y, z: 0.3 * np.cos(PI * z))
        cfg = StepperConfig(dt, "cnab2", nonlinear=False, startup="imex-euler")
        s = CfIntegrator(cfg).advance(s0, int(round(1 / dt)))
        exact = evolve_fields_exact(*s0.fields, 0.1, 1.0)
        errs.append(np.sqrt(sum(np.sum(np.abs(f.coeffs - e) ** 2) for f, e in zip(s.fields, exact))))
    errs = np.array(errs)
    assert np.all(np.log2(errs[:-1] / errs[1:]) >= 1.8)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_detected():
    s = state(G, 0.1, sigma=lambda x, y, z: np.cos(PI * x))
    bad = s.replace(v1=to_spectral(np.full(G.shape, np.inf), G, Parity.EVEN))
    with pytest.raises(DivergenceError) as info:
        step(bad, StepperConfig(1e-3))
    assert info.value.last_state is bad


@pytest.fixture(scope="module")
def evolved():
    g = Grid(16, 16, 16)
    cpe0 = reference_cpe_init(g)
    s0 = make_well_prepared_ic(cpe0, 0.1)
    s = CfIntegrator(StepperConfig(2.5e-4)).advance(s0, 40)
    return s0, s


def test_parity_and_mass(evolved):
    s0, s = evolved
    assert hs_norm(project_parity(s.sigma, Parity.ODD)) <= 1e-12 * hs_norm(s.sigma)
    assert hs_norm(project_parity(s.w, Parity.EVEN)) <= 1e-12 * hs_norm(s.w)
    assert abs(mass(s) - mass(s0)) <= 1e-8 * mass(s0)


def test_reconstruct_w_examples(evolved):
    zero = CfState.zeros(G, 0.1)
    w = reconstruct_w(zero.sigma, zero.sigma, zero.v1, zero.v2)
    assert np.abs(w.coeffs).max() == 0.0
    x, y, z = G.mesh()
    s = state(G, 0.1, v1=lambda x, y, z: np.sin(PI * x) * np.cos(PI * z))
    w = reconstruct_w(s.sigma, s.sigma, s.v1, s.v2)
    assert np.abs(to_physical(w) + np.cos(PI * x) * np.sin(PI * z)).max() <= 1e-13
    _, s = evolved
    d = time_derivatives(s)
    w = reconstruct_w(s.sigma, d.sigma_t, s.v1, s.v2)
    assert hs_norm(w - s.w) <= 10 * 2.5e-4 * hs_norm(s.w)


def test_reconstruct_w_warns_on_inconsistent_data():
    s = state(G, 0.1, sigma=lambda x, y, z: np.cos(PI * x))
    bad_dt = to_spectral(np.ones(G.shape), G, Parity.EVEN)
    with pytest.warns(InconsistencyWarning):
        reconstruct_w(s.sigma, bad_dt, s.v1, s.v2)


def test_time_derivatives_examples():
    d = time_derivatives(CfState.zeros(G, 0.1))
    assert all(np.abs(f.coeffs).max() == 0.0 for f in (d.sigma_t, d.v1_t, d.v2_t, d.w_t, d.sigma_tt))
    eps = 0.05
    s = state(G, eps, sigma=lambda x, y, z: eps * np.cos(PI * z))
    x, y, z = G.mesh()
    d = time_derivatives(s)
    assert np.abs(to_physical(d.w_t) - PI / eps * np.sin(PI * z)).max() <= 1e-11
    r = random_state(G, 0.1, kmax=2, rng=7)
    d, c = time_derivatives(r), compatibility_derivatives(r)
    for a, b in ((d.sigma_t, c.sigma1), (d.v1_t, c.v1_t), (d.w_t, c.w1), (d.sigma_tt, c.sigma2)):
        assert np.array_equal(a.coeffs, b.coeffs)


def test_mixed_wave_zero_and_random():
    assert mixed_wave_residual(CfState.zeros(G, 0.1)) == 0.0
    for seed in range(3):
        s = random_state(Grid(16, 16, 16), 0.1, kmax=4, amplitude=0.05, rng=seed)
        assert mixed_wave_residual(s, relative=True) <= 1e-8


def test_mixed_wave_linear_regime():
    s = random_state(G, 0.1, kmax=2, amplitude=1e-6, rng=11)
    t = mixed_wave_terms(s)
    linear = sum(t.lhs[k] for k in ("dt(dt sigma - lap sigma)", "-lap_h sigma", "-eps^-2 dzz sigma"))
    nonlinear = [t._norm(a) for a in t.rhs.values()] + [t._norm(t.lhs["transport"])]
    assert t._norm(linear) <= 1e-5 * t.scale
    assert max(nonlinear) <= 1e-5 * t.scale
    assert t.relative <= 1e-8
