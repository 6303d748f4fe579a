import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from randenv import sde
from randenv.sde import Interval
from randenv.stationarity import batch_means_se, moment_check

HALF = Interval(0.0, math.inf)


def test_skorohod_no_reflection_needed():
    W = np.array([0.0, -0.2, -0.4, 0.1])
    Z, L = sde.skorohod_map(W, 1.0)
    np.testing.assert_allclose(L, 0.0)
    np.testing.assert_allclose(Z, 1.0 + W)


def test_skorohod_final_local_time():
    W = np.array([0.0, -0.5, -1.2, -1.5])
    Z, L = sde.skorohod_map(W, 1.0)
    assert L[-1] == pytest.approx(0.5)
    assert Z[-1] == pytest.approx(0.0)


def test_skorohod_zero_driver():
    Z, L = sde.skorohod_map(np.zeros(5), 0.7)
    assert np.all(Z == 0.7) and np.all(L == 0)


def test_skorohod_rejects_negative_start():
    with pytest.raises(ValueError):
        sde.skorohod_map([0.0], -0.1)


@settings(max_examples=60, deadline=None)
@given(arrays(float, st.integers(1, 60), elements=st.floats(-3, 3)), st.floats(0, 2))
def test_skorohod_identity(steps, z0):
    W = np.cumsum(steps)
    Z, L = sde.skorohod_map(W, z0)
    np.testing.assert_allclose(Z, z0 + W + L, atol=1e-12)
    assert np.all(Z >= -1e-12)
    dL = np.diff(np.concatenate([[0.0], L]))
    assert np.all(dL >= 0)
    # local time only grows at steps that end on the boundary
    assert np.all(np.abs(Z[dL > 0]) < 1e-9)


def test_step_folds_at_lower_end():
    # x = 0.1, drift chosen so the proposal is -0.2
    x, dL, dU = sde.euler_reflect_step(0.1, -0.3, 0.0, 1.0, 0.0, HALF)
    assert (x, dL, dU) == (pytest.approx(0.2), pytest.approx(0.2), 0.0)


def test_step_folds_at_upper_end():
    x, dL, dU = sde.euler_reflect_step(0.9, 0.3, 0.0, 1.0, 0.0, Interval(0.0, 1.0))
    assert (x, dL, dU) == (pytest.approx(0.8), 0.0, pytest.approx(0.2))


def test_step_inside_is_plain_euler():
    x, dL, dU = sde.euler_reflect_step(0.5, 0.1, 2.0, 0.01, 0.3, Interval(0.0, 1.0))
    assert x == pytest.approx(0.5 + 0.001 + 2.0 * 0.1 * 0.3) and dL == dU == 0.0


def test_step_non_finite_proposal():
    with pytest.raises(FloatingPointError, match="non-finite"):
        sde.euler_reflect_step(np.array([0.5, 1.0]), np.array([0.0, np.inf]), 1.0, 0.01, 0.0, HALF)
    with pytest.raises(ValueError):
        sde.euler_reflect_step(0.5, 0.0, 1.0, 0.0, 0.0, HALF)


def test_multiple_folds():
    x, dL, dU = sde.fold(2.3, Interval(0.0, 1.0))
    assert x == pytest.approx(0.3)
    assert dU == pytest.approx(1.3) and dL == pytest.approx(0.3)


@settings(max_examples=60, deadline=None)
@given(st.floats(-20, 20))
def test_fold_lands_inside(p):
    x, dL, dU = sde.fold(p, Interval(-1.0, 2.0))
    assert -1.0 <= x <= 2.0 and dL >= 0 and dU >= 0


def test_interval_validation():
    with pytest.raises(ValueError):
        Interval(1.0, 1.0)
    assert not Interval().reflect_lo and not Interval().reflect_hi


def test_zero_coefficients_constant_path():
    p = sde.simulate_reflected(lambda z: 0 * z, lambda z: 0 * z, HALF, 0.3, 1.0, 0.01, rng=0)
    assert np.all(p.values == 0.3) and np.all(p.L == 0)


def test_path_invariants():
    iv = Interval(0.0, 1.0)
    p = sde.simulate_reflected(lambda z: 0.5 + 0 * z, lambda z: 1.0 + 0 * z, iv, np.full(20, 0.5), 5.0, 0.01, rng=3)
    assert np.all((p.values >= 0) & (p.values <= 1))
    assert p.L[0].max() == 0 and p.U[0].max() == 0
    assert np.all(np.diff(p.L, axis=0) >= 0) and np.all(np.diff(p.U, axis=0) >= 0)
    assert p.L[-1].max() > 0 and p.U[-1].max() > 0


def test_path_is_deterministic_given_seed():
    args = (lambda z: -z, lambda z: 1.0 + 0 * z, Interval(), np.zeros(3), 2.0, 0.01)
    a = sde.simulate_reflected(*args, rng=11)
    b = sde.simulate_reflected(*args, rng=11)
    assert np.array_equal(a.values, b.values)


def test_reflected_bm_matches_abs_normal():
    n = 10**5
    p = sde.simulate_reflected(lambda z: 0 * z, lambda z: 1.0 + 0 * z, HALF, np.zeros(n), 1.0, 0.01, rng=5,
                               record_every=100)
    ks = stats.kstest(p.values[-1], stats.halfnorm.cdf)
    assert ks.statistic < 1.63 / math.sqrt(n)


def _rbm_mean(dt, seed):
    p = sde.simulate_reflected(lambda z: -1.0 + 0 * z, lambda z: 1.0 + 0 * z, HALF, np.full(50, 0.5), 200.0, dt,
                               rng=seed, record_every=10)
    return p.values[p.t >= 5.0]


def test_reflected_bm_stationary_mean():
    rep = moment_check(_rbm_mean(0.01, 1), 1, 0.5, tol_se=3.0)
    assert rep.passed, rep.detail


def test_halving_dt_stays_within_mc_band():
    m1, s1 = batch_means_se(_rbm_mean(0.01, 1))
    m2, s2 = batch_means_se(_rbm_mean(0.005, 2))
    assert abs(m1 - m2) < 3 * math.hypot(s1, s2)


def test_ou_stationary_variance():
    p = sde.simulate_reflected(lambda x: -x, lambda x: 2.0 + 0 * x, Interval(), np.zeros(50), 200.0, 0.01, rng=2,
                               record_every=10)
    rep = moment_check(p.values[p.t >= 5.0], 2, 2.0, tol_se=3.0)
    assert rep.passed, rep.detail


def test_cir_full_truncation():
    drift, diff = sde.cir_coefficients(1.0, 2.0)
    assert drift(0.5) == pytest.approx(1.5)
    assert diff(np.array([-0.1, 4.0])).tolist() == [0.0, 2.0]


def test_thinning_constant_intensity():
    c = 2.5
    t = sde.thinning_jumps(10.0, lambda s, v: c, [0.0, 4.2e4], [0.0, 0.0], rng=1)
    gaps = np.diff(t)
    assert len(gaps) > 10**5
    assert abs(gaps.mean() - 1 / c) < 3 * gaps.std() / math.sqrt(len(gaps))


def test_thinning_zero_intensity():
    assert len(sde.thinning_jumps(5.0, lambda s, v: 0.0, [0.0, 100.0], [0.0, 0.0], rng=0)) == 0


def test_thinning_at_bound_keeps_every_candidate():
    t = sde.thinning_jumps(3.0, lambda s, v: 3.0, [0.0, 50.0], [0.0, 0.0], rng=4)
    assert len(t) == np.random.default_rng(4).poisson(150.0)


def test_thinning_follows_path_state():
    # intensity is the path value: zero on the first half, 1 on the second
    t = sde.thinning_jumps(1.0, lambda s, v: v, [0.0, 500.0, 1000.0], [0.0, 1.0, 1.0], rng=2)
    assert t.min() >= 500.0 and len(t) > 400


def test_thinning_bound_violation():
    with pytest.raises(ValueError, match="bound"):
        sde.thinning_jumps(1.0, lambda s, v: 2.0, [0.0, 10.0], [0.0, 0.0], rng=0)


def test_path_csv(tmp_path):
    p = sde.simulate_reflected(lambda z: 0 * z, lambda z: 1.0 + 0 * z, HALF, 0.0, 0.05, 0.01, rng=0)
    p.to_csv(tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "t,value,L,U" and len(lines) == 7
