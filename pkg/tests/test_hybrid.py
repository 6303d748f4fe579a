import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from randenv import Divergent, hybrid
from randenv.config import parse_config
from randenv.fixtures import fixture_config
from randenv.hybrid import LambdaDiffusionSpec, MuBMSpec, SwitchSpec, TwoCompSpec, WedgeSpec
from randenv.sde import Interval
from randenv.suites import run_suite

TELESCOPING = LambdaDiffusionSpec(0.5, sigma=lambda l: 1 / (1 - l), beta=lambda n: 0.7**n)


# -- arrival rate on [eps, 1] -----------------------------------------------------


def test_kappa_lambda_examples():
    assert hybrid.kappa_lambda(LambdaDiffusionSpec(0.3), 0.6, 0) == 1.0
    assert hybrid.kappa_lambda(TELESCOPING, 0.5, 2) == pytest.approx(0.125)


@pytest.mark.parametrize("eps", [0.1, 0.5, 0.9])
def test_kappa_lambda_first_mass(eps):
    assert hybrid.xi_lambda_terms(LambdaDiffusionSpec(eps), 2)[1] == pytest.approx((1 - eps**2) / 2)


def test_xi_lambda_unit_sigma_diverges():
    assert isinstance(hybrid.xi_lambda(LambdaDiffusionSpec(0.5)), Divergent)


def test_xi_lambda_telescoping():
    assert hybrid.xi_lambda(TELESCOPING) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("eps", [0.9, 0.99, 0.999])
def test_xi_lambda_vanishes_as_eps_to_one(eps):
    spec = LambdaDiffusionSpec(eps, sigma=lambda l: 1 / (1 - l))
    assert hybrid.xi_lambda(spec) == pytest.approx(1 - eps, rel=1e-8)


def test_xi_lambda_partial_sums_approach_total():
    N = 200
    terms = hybrid.xi_lambda_terms(TELESCOPING, N)
    # the n-th term is (1/(n+1) - 1/(n+2)) - (eps^(n+1)/(n+1) - eps^(n+2)/(n+2))
    assert terms.sum() == pytest.approx(0.5 - (1 - 0.5 ** (N + 1)) / (N + 1), rel=1e-10)
    assert np.all(np.diff(terms) < 0)


def test_wie_lambda():
    rep = hybrid.wie_check_lambda(TELESCOPING)
    assert rep.passed(1e-6) and rep.jump < 1e-13


def test_wie_lambda_wrong_density_fails():
    rep = hybrid.wie_check_lambda(TELESCOPING, kappa=lambda l, n: l**n * (1 - l) ** 1.1)
    assert not rep.passed(1e-6)


def test_noise_condition_warning():
    with pytest.warns(RuntimeWarning, match="diverge"):
        hybrid.simulate_model(LambdaDiffusionSpec(0.5), 0.1, 0.01, rng=0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        hybrid.simulate_model(TELESCOPING, 0.1, 0.01, rng=0)


def test_frozen_queue_keeps_base_fixed():
    p = hybrid.simulate_model(LambdaDiffusionSpec(0.5, alpha=0.0, beta=lambda n: 0.5**n), 5.0, 0.01, rng=0,
                              n_paths=4, init=(0.7, 3))
    assert np.all(p.base == 3) and p.env.std() > 0
    assert np.all((p.env >= 0.5) & (p.env <= 1.0))


def _stationary(name, **over):
    cfg = fixture_config(name)
    cfg.update(action="stationary", **over)
    reports, _ = run_suite(parse_config(cfg))
    return reports


def test_lambda_occupation_matches_kappa():
    (rep,) = _stationary("hybrid-lambda-telescoping")
    d = rep.detail
    assert round(d["t_end"] / d["dt"]) * d["n_paths"] >= 10**6
    assert rep.value < 0.08


# -- service rate on [1, inf) --------------------------------------------------------


def test_mu_recurrence_by_hand():
    spec = MuBMSpec(0.0)
    lhs = hybrid.kappa_mu(spec, 2.0, 1) * (1 + 2.0)
    rhs = hybrid.kappa_mu(spec, 2.0, 0) + 2.0 * hybrid.kappa_mu(spec, 2.0, 2)
    assert lhs == 1.5 and rhs == 1.5


@pytest.mark.parametrize("b", [0.0, -0.7, 0.4])
def test_wie_mu(b):
    rep = hybrid.wie_check_mu(MuBMSpec(b, sigma=lambda m: 1 + m))
    assert rep.passed(1e-6)
    assert rep.jump < 1e-13


def test_wie_mu_perturbed_exponent_fails():
    spec = MuBMSpec(-0.7)
    rep = hybrid.wie_check_mu(spec, kappa=lambda m, n: np.exp(2.1 * (m - 1) * spec.b) / m**n)
    assert rep.diffusion > 1e-3


def test_xi_mu():
    assert isinstance(hybrid.xi_mu(MuBMSpec(-0.7)), Divergent)
    spec = MuBMSpec(-0.7, sigma=lambda m: 1 / (m - 1))
    # int_0^inf exp(-1.4 u) (1 + u) du
    assert hybrid.xi_mu(spec) == pytest.approx(1 / 1.4 + 1 / 1.4**2, rel=1e-10)


# -- wedge ------------------------------------------------------------------------


def test_kappa_wedge_examples():
    assert hybrid.kappa_wedge(WedgeSpec(-1.0), 1.0, 1.0, 0) == pytest.approx(math.exp(-4))
    assert hybrid.kappa_wedge(WedgeSpec(0.0), 0.5, 1.0, 1) == pytest.approx(0.5)
    one, two = WedgeSpec(-0.3), WedgeSpec(-0.3, sigma=2.0)
    assert hybrid.kappa_wedge(two, 0.4, 0.9, 3) == pytest.approx(0.5 * hybrid.kappa_wedge(one, 0.4, 0.9, 3))
    with pytest.raises(ValueError):
        hybrid.kappa_wedge(one, 2.0, 1.0, 0)


def test_wedge_project():
    assert hybrid.wedge_project(2.0, 1.0) == (1.0, 2.0)
    assert hybrid.wedge_project(1.0, 2.0) == (1.0, 2.0)


def test_wie_wedge():
    assert hybrid.wie_check_wedge(WedgeSpec(-1.0, sigma=lambda l, m: 1 / (m - l))).passed(1e-6)


def test_wie_wedge_wrong_drift_fails():
    spec = WedgeSpec(-1.0)
    rep = hybrid.wie_check_wedge(spec, kappa=lambda l, m, n: (l / m) ** n * np.exp(2.2 * spec.theta * (l + m)))
    assert rep.diffusion > 1e-3


def test_xi_wedge():
    assert isinstance(hybrid.xi_wedge(WedgeSpec(-1.0)), Divergent)
    total = hybrid.xi_wedge(WedgeSpec(-1.0, sigma=lambda l, m: 1 / (m - l)))
    oracle = integrate.dblquad(lambda l, m: m * math.exp(-2 * (l + m)), 0, math.inf, 0, lambda m: m)[0]
    assert total == pytest.approx(oracle, rel=1e-8)


@pytest.mark.parametrize("direct", [False, True])
def test_wedge_covering_and_direct_agree(direct):
    # queue frozen at n = 2, so the environment alone must sample kappa(., ., 2)
    spec = WedgeSpec(-1.0, sigma=lambda l, m: 1 / (m - l), alpha=0.0)
    f = lambda l, m: (l / m) ** 2 * (m - l) * math.exp(-2 * (l + m))
    Z = integrate.dblquad(f, 0, math.inf, 0, lambda m: m)[0]
    mean_l = integrate.dblquad(lambda l, m: l * f(l, m), 0, math.inf, 0, lambda m: m)[0] / Z
    mean_m = integrate.dblquad(lambda l, m: m * f(l, m), 0, math.inf, 0, lambda m: m)[0] / Z
    p = hybrid.simulate_model(spec, 15.0, 0.01, rng=40 + direct, n_paths=1000, init=((0.3, 0.8), 2),
                              record_every=50, wedge_direct=direct).after(5.0)
    for k, target in ((0, mean_l), (1, mean_m)):
        per_path = p.env[..., k].mean(axis=0)
        se = per_path.std(ddof=1) / math.sqrt(per_path.size)
        assert abs(per_path.mean() - target) < 3 * se
    assert np.all(p.env[..., 0] <= p.env[..., 1])


# -- drift switching --------------------------------------------------------------


def test_kappa_switch_examples():
    spec = SwitchSpec()
    assert hybrid.kappa_switch(spec, 1.0, 0.0) == 1.0
    assert hybrid.kappa_switch(spec, -1.0, 0.5) == pytest.approx(math.exp(-1))


def test_wie_switch_two_point_balance():
    rep = hybrid.wie_check_switch(SwitchSpec(sigma={1.0: 1.0, -1.0: 2.0}))
    assert rep.jump == 0.0 and rep.passed(1e-6)
    assert SwitchSpec().stationarity_defect(0.3) == 0.0


def test_wie_switch_wrong_density_fails():
    rep = hybrid.wie_check_switch(SwitchSpec(), kappa=lambda z, x: math.exp(2.1 * z * x))
    assert not rep.passed(1e-6)


def test_xi_switch():
    assert isinstance(hybrid.xi_switch(SwitchSpec()), Divergent)
    spec = SwitchSpec(x_interval=Interval(-1.0, 1.0))
    assert hybrid.xi_switch(spec) == pytest.approx(math.e**2 - math.e**-2)


def test_switch_three_states_need_rates():
    with pytest.raises(ValueError):
        SwitchSpec(envs=(1.0, 0.0, -1.0))


def test_switch_occupation_matches_kappa():
    (rep,) = _stationary("hybrid-switch-interval")
    assert rep.value < 0.08


# -- two-component model -----------------------------------------------------------


@pytest.mark.parametrize("b", [-0.5, 0.0, 0.8])
def test_twocomp_always_divergent(b):
    assert isinstance(hybrid.xi_twocomp(TwoCompSpec(b)), Divergent)


def test_wie_twocomp():
    assert hybrid.wie_check_twocomp(TwoCompSpec(-0.5, sigma=lambda z: 1 + z * z)).passed(1e-6)


def test_wie_twocomp_wrong_density_fails():
    spec = TwoCompSpec(-0.5)
    assert not hybrid.wie_check_twocomp(spec, kappa=lambda z: np.exp(-1.1 * np.asarray(z))).passed(1e-6)


def test_twocomp_growth_bounds():
    spec = TwoCompSpec(-0.5, alpha=lambda z: 1 + 0 * z, sigma=lambda z: 1 + z * z)
    assert spec.growth_violations(c=1e-6, C=1.5, grid=[0.1, 1.0, 5.0]).size == 0
    assert spec.growth_violations(c=1e-6, C=0.5, grid=[0.1, 1.0]).size == 2


def test_twocomp_simulation_shapes():
    p = hybrid.simulate_model(TwoCompSpec(-0.5, d=3), 1.0, 0.01, rng=0, n_paths=5)
    assert p.base.shape == (101, 5, 3) and np.all(p.env >= 0)


# -- common properties --------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 100.0))
def test_kappa_independent_of_alpha(a):
    sig = lambda *v: 1.0 + 0.1 * sum(v)
    for n in range(4):
        assert hybrid.kappa_lambda(LambdaDiffusionSpec(0.5, sigma=sig, alpha=a), 0.7, n) == \
            hybrid.kappa_lambda(LambdaDiffusionSpec(0.5, sigma=sig), 0.7, n)
        assert hybrid.kappa_mu(MuBMSpec(-0.4, sigma=sig, alpha=a), 1.7, n) == \
            hybrid.kappa_mu(MuBMSpec(-0.4, sigma=sig), 1.7, n)
        assert hybrid.kappa_wedge(WedgeSpec(-1.0, sigma=sig, alpha=a), 0.4, 0.9, n) == \
            hybrid.kappa_wedge(WedgeSpec(-1.0, sigma=sig), 0.4, 0.9, n)
    assert hybrid.kappa_switch(SwitchSpec(alpha=a), -1.0, 0.3) == hybrid.kappa_switch(SwitchSpec(), -1.0, 0.3)
    assert hybrid.kappa_twocomp(TwoCompSpec(-0.5, alpha=a), 1.3) == hybrid.kappa_twocomp(TwoCompSpec(-0.5), 1.3)


def test_acceptance_tends_to_one():
    rates = [hybrid.simulate_model(MuBMSpec(-0.7), 5.0, dt, rng=1, n_paths=20).acceptance.mean()
             for dt in (0.1, 0.01, 0.001)]
    assert rates[0] < rates[1] < rates[2] and rates[2] > 0.95


def test_simulation_is_deterministic():
    a = hybrid.simulate_model(SwitchSpec(x_interval=Interval(-1, 1)), 2.0, 0.01, rng=9, n_paths=3)
    b = hybrid.simulate_model(SwitchSpec(x_interval=Interval(-1, 1)), 2.0, 0.01, rng=9, n_paths=3)
    assert np.array_equal(a.base, b.base) and np.array_equal(a.env, b.env)


def test_unknown_spec_rejected():
    with pytest.raises(TypeError):
        hybrid.simulate_model(object(), 1.0, 0.1)
