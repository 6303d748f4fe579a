import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from randenv import ouenv
from randenv.ouenv import TestFunction as Phi
from randenv.stationarity import Histogram, chi2_test

B = ouenv.make_model("B", b=0.7)
C = ouenv.make_model("C")
D = ouenv.make_model("D", a=1.0, b=1.0)
RECTS = {"B": B.on_rectangle(1, 2, -1, 1), "C": C.on_rectangle(1, 2, -1, 1), "D": D.on_rectangle(0.5, 2, -1, 1)}

X2 = Phi(lambda z, x: x * x, lambda z, x: 0.0, lambda z, x: 2 * x, lambda z, x: 0.0, lambda z, x: 2.0, name="x2",
         neumann=False)
ZLIN = Phi(lambda z, x: z, lambda z, x: 1.0, lambda z, x: 0.0, lambda z, x: 0.0, lambda z, x: 0.0, name="z",
           neumann=False)
XLIN = Phi(lambda z, x: x, lambda z, x: 0.0, lambda z, x: 1.0, lambda z, x: 0.0, lambda z, x: 0.0, name="x",
           neumann=False)


def test_make_model_densities():
    assert ouenv.make_model("B").w(3.7) == 1.0
    assert D.w(1.0) == pytest.approx(math.exp(-2))
    assert D.w(0.5) == pytest.approx(0.5 * math.exp(-1))
    assert C.w(1.0) == pytest.approx(math.exp(-1))


def test_make_model_validation():
    with pytest.raises(ValueError):
        ouenv.make_model("D", a=1.0, b=0.0)
    with pytest.raises(ValueError):
        ouenv.make_model("E")
    with pytest.raises(ValueError):
        ouenv.make_model("C", b=1.0)


def test_apply_R_examples():
    assert ouenv.apply_R(C, lambda z, x: 3.0, 1.2, 0.3) == 0.0
    assert ouenv.apply_R(C, X2, 1.0, 0.5) == pytest.approx(0.5, abs=1e-14)
    assert ouenv.apply_R(C, lambda z, x: x * x, 1.0, 0.5) == pytest.approx(0.5, abs=1e-6)
    assert ouenv.apply_R(B, ZLIN, 2.0, 0.0) == pytest.approx(0.7)


def test_apply_R_overflow():
    with pytest.raises(OverflowError):
        ouenv.apply_R(C, X2, 0.1, 5.0)


def test_adjoint_base():
    assert abs(ouenv.adjoint_residual_base(C, 1.0, 0.7)) < 1e-6
    assert abs(ouenv.adjoint_residual_base(C, 2.0, 0.7, m=lambda z, x: np.exp(-x * x))) > 1e-3


def test_adjoint_env():
    assert abs(ouenv.adjoint_residual_env(B, 1.3)) < 1e-6
    assert abs(ouenv.adjoint_residual_env(D, 0.7)) < 1e-6
    assert abs(ouenv.adjoint_residual_env(D, 0.7, w=lambda z: z**1.1 * np.exp(-2 * z))) > 1e-3


@pytest.mark.parametrize("name", ["B", "C", "D"])
def test_adjoint_residuals_on_interior_grid(name):
    spec = RECTS[name]
    zs = np.linspace(spec.z_interval.lo + 0.05, spec.z_interval.hi - 0.05, 21)
    xs = np.linspace(-0.95, 0.95, 21)
    base = max(np.abs(ouenv.adjoint_residual_base(spec, z, xs)).max() for z in zs)
    env = np.abs(ouenv.adjoint_residual_env(spec, zs)).max() / spec.w(zs).max()
    assert base < 1e-6 and env < 1e-6


def test_kappa_density_examples():
    assert ouenv.kappa_density(C, 1.0, 0.0) == pytest.approx(math.exp(-1))
    assert ouenv.kappa_density(ouenv.make_model("B"), 2.5, 0.0) == 1.0
    assert ouenv.kappa_density(D, 1.0, 0.0) == pytest.approx(math.exp(-2))
    halved = ouenv.make_model("C", sigma=2.0)
    assert ouenv.kappa_density(halved, 1.3, 0.2) == pytest.approx(0.5 * ouenv.kappa_density(C, 1.3, 0.2))


def test_kappa_independent_of_alpha():
    fast = ouenv.make_model("D", a=1.0, b=1.0, alpha=lambda z: 5 + z)
    assert ouenv.kappa_density(fast, 0.8, 0.1) == ouenv.kappa_density(D, 0.8, 0.1)


@pytest.mark.parametrize("name", ["B", "C", "D"])
def test_wie_quadrature_neumann_family(name):
    recs = ouenv.wie_quadrature(RECTS[name])
    assert len(recs) == 6
    assert max(abs(r.integral) for r in recs) < 1e-6


def test_wie_quadrature_constant():
    one = Phi(lambda z, x: 1.0, *(lambda z, x: 0.0,) * 4, name="one")
    assert ouenv.wie_quadrature(RECTS["C"], family=[one])[0].integral == 0.0


def test_wie_quadrature_single_cosine():
    (phi,) = ouenv.neumann_family(RECTS["C"], modes=[(0, 1)])
    assert phi.f(1.3, 0.4) == pytest.approx(math.cos(math.pi * 1.4 / 2))
    assert abs(ouenv.wie_quadrature(RECTS["C"], family=[phi])[0].integral) < 1e-6


@pytest.mark.parametrize("phi", [X2, ZLIN], ids=["x2", "z"])
@pytest.mark.parametrize("name", ["B", "C", "D"])
def test_wie_quadrature_boundary_flux(name, phi):
    assert abs(ouenv.wie_quadrature(RECTS[name], family=[phi], max_error=1e-3)[0].integral) > 1e-3


def test_wie_quadrature_linear_phi_on_asymmetric_rectangle():
    rect = C.on_rectangle(1, 2, -1, 0.5)
    assert abs(ouenv.wie_quadrature(rect, family=[XLIN])[0].integral) > 1e-3
    assert max(abs(r.integral) for r in ouenv.wie_quadrature(rect)) < 1e-6


def test_conditional_mean_identity_unbounded():
    assert abs(ouenv.wie_quadrature(C, family=[X2])[0].integral) < 1e-8


def test_quadrature_record_json():
    rec = ouenv.wie_quadrature(RECTS["C"], family=[X2], max_error=1e-3)[0]
    assert '"phi_id": "x2"' in rec.to_json()


# -- transition densities ------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(-2, 2), st.floats(0.3, 3.0))
def test_ou_density_normalised(t, x, z):
    mass = integrate.quad(lambda y: ouenv.density_ou(t, x, y, z), -np.inf, np.inf, epsabs=1e-13)[0]
    assert mass == pytest.approx(1.0, abs=1e-10)


def test_ou_density_unnormalised_variant():
    t = 0.3
    mass = integrate.quad(lambda y: ouenv.density_ou(t, 0.4, y, 1.5, normalized=False), -np.inf, np.inf)[0]
    assert mass == pytest.approx(math.sqrt(1 - math.exp(-2 * t)), rel=1e-10)


def test_ou_density_stationary_peak():
    assert ouenv.density_ou(40.0, 0.0, 0.0, 1.0) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-14)


def test_ou_detailed_balance():
    m = lambda x: math.exp(-x * x)
    lhs = m(0.5) * ouenv.density_ou(1.0, 0.5, -0.2, 1.0)
    rhs = m(-0.2) * ouenv.density_ou(1.0, -0.2, 0.5, 1.0)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_ou_chapman_kolmogorov():
    two = integrate.quad(lambda y: ouenv.density_ou(0.5, 0.3, y, 1.0) * ouenv.density_ou(0.5, y, -0.4, 1.0),
                         -np.inf, np.inf, epsabs=1e-13)[0]
    assert two == pytest.approx(ouenv.density_ou(1.0, 0.3, -0.4, 1.0), abs=1e-8)


def test_bessel_series_against_small_argument():
    # I_q(y) ~ (y/2)^q / Gamma(q + 1) as y -> 0
    assert ouenv.log_bessel_i(1.0, 1e-6) == pytest.approx(math.log(0.5e-6), rel=1e-10)
    # I_{1/2}(y) = sqrt(2 / (pi y)) sinh(y)
    y = 3.7
    assert ouenv.log_bessel_i(0.5, y) == pytest.approx(math.log(math.sqrt(2 / (math.pi * y)) * math.sinh(y)), rel=1e-12)
    with pytest.raises(ValueError):
        ouenv.log_bessel_i(-1.5, 1.0)


def test_cir_density_normalised():
    mass = integrate.quad(lambda y: ouenv.density_cir(1.0, 1.0, y, 1.0, 1.0), 0, np.inf, epsabs=1e-12)[0]
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_cir_density_long_time_limit():
    ys = np.linspace(0.05, 4.0, 40)
    gamma = 4 * ys * np.exp(-2 * ys)  # w normalised: Gamma(shape 2, rate 2)
    dens = np.array([ouenv.density_cir(50.0, 1.0, y, 1.0, 1.0) for y in ys])
    assert np.abs(dens - gamma).max() < 1e-6


def test_cir_chapman_kolmogorov():
    two = integrate.quad(lambda y: ouenv.density_cir(0.5, 1.0, y, 1.0, 1.0) * ouenv.density_cir(0.5, y, 0.8, 1.0, 1.0),
                         0, np.inf, epsabs=1e-12)[0]
    assert two == pytest.approx(ouenv.density_cir(1.0, 1.0, 0.8, 1.0, 1.0), abs=1e-6)


def test_rbm_reference_density_normalised():
    mass = integrate.quad(lambda y: float(ouenv.density_rbm_reference(1.0, 0.5, y, -1.0)), 0, np.inf)[0]
    assert mass == pytest.approx(1.0, abs=1e-10)


def test_rbm_spectral_gate_reports_outcome():
    gate = ouenv.rbm_density_gate()
    assert isinstance(gate.passed, bool) and set(gate.masses) == {5.0, 10.0, 20.0}
    assert gate.detail


# -- simulation ---------------------------------------------------------------------


def test_simulation_needs_bounded_rectangle():
    with pytest.raises(ValueError, match="bounded"):
        ouenv.simulate_rect_system(C, 1.0, 1e-3)


def test_simulation_step_size_check():
    with pytest.raises(ValueError, match="smaller dt"):
        ouenv.simulate_rect_system(RECTS["B"], 1.0, 0.05)


def test_local_times():
    p = ouenv.simulate_rect_system(RECTS["C"], 5.0, 1e-3, rng=1, n_paths=20, record_every=10)
    assert np.all((p.z >= 1) & (p.z <= 2) & (p.x >= -1) & (p.x <= 1))
    for lt in (p.LZ, p.UZ, p.LX, p.UX):
        assert lt[0].max() == 0 and np.all(np.diff(lt, axis=0) >= 0) and lt[-1].max() > 0


def test_frozen_environment_gives_truncated_gaussian():
    z0 = 1.5
    p = ouenv.simulate_rect_system(RECTS["C"], 200.0, 1e-3, rng=2, n_paths=50, init=(z0, 0.0), record_every=20,
                                   freeze_env=True).after(2.0)
    assert np.all(p.z == z0)
    hist = Histogram.from_samples(p.x.ravel(), np.linspace(-1, 1, 21))
    # thin the correlated samples to roughly independent ones before a chi-square test
    thinned = Histogram.from_samples(p.x[::25].ravel(), np.linspace(-1, 1, 21))
    res = chi2_test(thinned, lambda x: math.exp(-x * x / z0**2))
    assert res.p_value > 0.01
    assert hist.total == p.x.size


def test_simulation_is_deterministic():
    a = ouenv.simulate_rect_system(RECTS["D"], 0.5, 5e-4, rng=3, n_paths=4)
    b = ouenv.simulate_rect_system(RECTS["D"], 0.5, 5e-4, rng=3, n_paths=4)
    assert np.array_equal(a.z, b.z) and np.array_equal(a.x, b.x)


def test_path_csv(tmp_path):
    p = ouenv.simulate_rect_system(RECTS["C"], 0.01, 1e-3, rng=0)
    p.to_csv(tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "t,z,x,LZ,UZ,LX,UX" and len(lines) == 12


# -- finite-difference cross-check ------------------------------------------------------


def test_fd_generator_model_c():
    chk = ouenv.fd_generator_check(RECTS["C"], 60, 60)
    assert chk.l1_error < 0.05


def test_fd_generator_error_shrinks_with_grid():
    coarse = ouenv.fd_generator_check(RECTS["C"], 15, 15).l1_error
    fine = ouenv.fd_generator_check(RECTS["C"], 30, 30).l1_error
    assert fine < coarse


def test_fd_generator_detects_wrong_target():
    chk = ouenv.fd_generator_check(RECTS["C"], 30, 30)
    z = np.linspace(1, 2, 31)[:-1] + 1 / 60
    wrong = np.exp(-z[:, None] ** 2 * 0 - np.linspace(-1, 1, 31)[:-1][None, :] ** 2)
    wrong = (wrong / wrong.sum()).ravel()
    assert np.abs(chk.pi.ravel() - wrong).sum() > 0.05
