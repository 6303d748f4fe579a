import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randenv import ctmc, jackson
from randenv.ctmc import RateKernel, StateSpace

from conftest import mm1_kernel


def two_state():
    return RateKernel.from_dict({"A": {"B": 1.0}, "B": {"A": 2.0}})


def test_state_space_index_inverts_order():
    sp = StateSpace(["x", "y", "z"])
    assert [sp.index[s] for s in sp] == [0, 1, 2]
    assert sp[1] == "y" and "z" in sp and len(sp) == 3
    with pytest.raises(ValueError):
        StateSpace(["x", "x"])


def test_build_two_state_generator():
    G = ctmc.build_generator(["A", "B"], two_state())
    np.testing.assert_array_equal(G.toarray(), [[-1.0, 1.0], [2.0, -2.0]])
    assert G.dropped == 0


def test_truncated_mm1_drops_one_arrival():
    G = ctmc.build_generator(range(3), mm1_kernel())
    assert G.dropped == 1
    assert np.abs(G.row_sums()).max() < 1e-12


def test_negative_rate_names_pair():
    k = RateKernel.from_dict({"A": {"B": -1.0}})
    with pytest.raises(ValueError, match="'A' -> 'B'"):
        ctmc.build_generator(["A", "B"], k)


def test_stationary_two_state():
    sol = ctmc.stationary_solve(ctmc.build_generator(["A", "B"], two_state()))
    np.testing.assert_allclose(sol.pi, [2 / 3, 1 / 3], atol=1e-14)
    assert sol.residual < 1e-12
    assert sol["A"] == pytest.approx(2 / 3)


def test_stationary_symmetric_cycle():
    k = RateKernel.from_dict({0: {1: 1.0}, 1: {2: 1.0}, 2: {0: 1.0}})
    sol = ctmc.stationary_solve(ctmc.build_generator(range(3), k))
    np.testing.assert_allclose(sol.pi, [1 / 3] * 3, atol=1e-14)


@pytest.mark.parametrize("N", [1, 2, 5, 20])
def test_stationary_truncated_mm1_is_geometric(N):
    rho = 0.5
    sol = ctmc.stationary_solve(ctmc.build_generator(range(N + 1), mm1_kernel()))
    n = np.arange(N + 1)
    np.testing.assert_allclose(sol.pi, (1 - rho) * rho**n / (1 - rho ** (N + 1)), rtol=0, atol=1e-13)


def test_reducible_chain_is_rejected():
    k = RateKernel.from_dict({"A": {"B": 1.0}, "B": {}, "C": {"B": 1.0}})
    with pytest.raises(ctmc.ReducibleChainError, match="not reachable"):
        ctmc.stationary_solve(ctmc.build_generator(["A", "B", "C"], k))


def test_balance_flows_mm1():
    nu = lambda n: 0.5**n
    out, inn = ctmc.balance_flows(nu, mm1_kernel(), 1)
    assert out == pytest.approx(0.75) and inn == pytest.approx(0.75)
    assert ctmc.balance_residual(nu, mm1_kernel(), 1) == pytest.approx(0.0, abs=1e-15)


def test_balance_residual_detects_perturbation():
    nu = lambda n: 0.3 if n == 2 else 0.5**n
    out, inn = ctmc.balance_flows(nu, mm1_kernel(), 1)
    assert inn == pytest.approx(0.8)
    assert ctmc.balance_residual(nu, mm1_kernel(), 1) == pytest.approx(-0.05)


def test_balance_residual_of_zero_measure():
    assert ctmc.balance_residual(lambda n: 0.0, mm1_kernel(), 3) == 0.0


def test_combined_kernel_is_superposition_when_m_is_one():
    base = RateKernel.from_dict({0: {1: 2.0}, 1: {0: 3.0}})
    env = RateKernel.from_dict({"u": {"v": 0.5}, "v": {"u": 0.25}})
    k = ctmc.combined_jump_kernel(lambda z: base, lambda x: env, lambda z, x: 1.0, 1.0, 1.0)
    assert k.out(("u", 0)) == {("u", 1): 2.0, ("v", 0): 0.5}
    assert k.out(("v", 1)) == {("v", 0): 3.0, ("u", 1): 0.25}


def test_combined_kernel_env_rate_divided_by_m():
    # single-site queue with load 0.5 in environment 1: m(1, 2) = 0.25
    env = RateKernel.from_dict({1: {2: 1.0}, 2: {1: 1.0}})
    k = ctmc.combined_jump_kernel(lambda z: mm1_kernel(), lambda n: env, lambda z, n: 0.5**n, 1.0, 1.0)
    assert k.rate((1, 2), (2, 2)) == pytest.approx(4.0)


def test_combined_kernel_rejects_nonpositive_m():
    env = RateKernel.from_dict({1: {2: 1.0}})
    k = ctmc.combined_jump_kernel(lambda z: mm1_kernel(), lambda n: env, lambda z, n: 0.0, 1.0, 1.0)
    with pytest.raises(ValueError, match=r"\(1, 0\)"):
        k.out((1, 0))


def test_combined_kernel_matches_jackson_rates(two_site_env):
    env = two_site_env
    kern = jackson.combined_rates(env)
    base = {z: jackson.jn_rates(env.networks[z]) for z in env.envs}

    def env_kernel(n):
        return RateKernel(lambda z: {z2: env.tau_of(n, z, z2) for z2 in env.envs},
                          lambda z: env.envs)

    m = lambda z, n: float(np.prod([r**k for r, k in zip(env.loads(z), n)]))
    comb = ctmc.combined_jump_kernel(base.__getitem__, env_kernel, m, env.alpha_of, env.sigma_of)
    for z, n in jackson.truncated_space(env, 3):
        a, b = kern.out((z, n)), comb.out((z, n))
        assert a.keys() == b.keys()
        for t in a:
            assert a[t] == pytest.approx(b[t], rel=1e-14)


def test_gillespie_absorbing_state():
    k = RateKernel.from_dict({"A": {}})
    tr = ctmc.gillespie_simulate(k, "A", 10.0, seed=1)
    assert tr.states == ["A"] and list(tr.times) == [0.0]


def test_gillespie_holding_time_mean():
    k = RateKernel.from_dict({"A": {"B": 2.0}, "B": {}})
    rng = np.random.default_rng(5)
    h = np.array([ctmc.gillespie_simulate(k, "A", 1e9, seed=rng).times[1] for _ in range(100_000)])
    se = h.std(ddof=1) / math.sqrt(h.size)
    assert abs(h.mean() - 0.5) < 3 * se


def test_gillespie_two_state_occupation():
    tr = ctmc.gillespie_simulate(two_state(), "A", 1e4, seed=11)
    occ = ctmc.occupation_measure(tr)
    assert occ["A"] == pytest.approx(2 / 3, abs=0.01)
    assert occ["B"] == pytest.approx(1 / 3, abs=0.01)


def test_gillespie_trajectory_shape():
    tr = ctmc.gillespie_simulate(mm1_kernel(), 0, 200.0, seed=3)
    assert tr.states[0] == 0 and tr.times[0] == 0.0
    assert np.all(np.diff(tr.times) > 0)
    assert all(a != b for a, b in zip(tr.states, tr.states[1:]))


def test_gillespie_is_deterministic_given_seed():
    a = ctmc.gillespie_simulate(mm1_kernel(), 0, 100.0, seed=42)
    b = ctmc.gillespie_simulate(mm1_kernel(), 0, 100.0, seed=42)
    assert a.states == b.states and np.array_equal(a.times, b.times)


def test_gillespie_event_budget_warns():
    with pytest.warns(ctmc.ExplosionWarning):
        tr = ctmc.gillespie_simulate(mm1_kernel(), 0, 1e6, seed=1, max_events=100)
    assert tr.exploded and tr.events <= 101


def test_occupation_constant_and_split():
    const = ctmc.Trajectory(np.array([0.0]), ["A"], 5.0)
    assert ctmc.occupation_measure(const) == {"A": 1.0}
    half = ctmc.Trajectory(np.array([0.0, 1.0]), ["A", "B"], 2.0)
    assert ctmc.occupation_measure(half) == {"A": 0.5, "B": 0.5}
    quarter = ctmc.Trajectory(np.array([0.0, 1.0]), ["A", "B"], 4.0)
    assert ctmc.occupation_measure(quarter) == {"A": 0.25, "B": 0.75}


def test_occupation_empty_window_raises():
    tr = ctmc.Trajectory(np.array([0.0]), ["A"], 1.0)
    with pytest.raises(ValueError):
        ctmc.occupation_measure(tr, t_burn=1.0)


def test_occupation_converges_over_decades():
    exact = np.array([2 / 3, 1 / 3])
    tv = []
    for t_end in (1e1, 1e2, 1e3, 1e4):
        errs = []
        for seed in range(20):
            occ = ctmc.occupation_measure(ctmc.gillespie_simulate(two_state(), "A", t_end, seed=seed))
            errs.append(0.5 * abs(occ.get("A", 0) - exact[0]) + 0.5 * abs(occ.get("B", 0) - exact[1]))
        tv.append(np.mean(errs))
    assert all(a > b for a, b in zip(tv, tv[1:]))


def test_alpha_zero_slice_is_inverse_sigma():
    env = RateKernel.from_dict({"u": {"v": 1.0, "w": 2.0}, "v": {"w": 1.0, "u": 1.0}, "w": {"u": 2.0, "v": 1.0}})
    sigma = {"u": 1.0, "v": 3.0, "w": 0.5}
    k = ctmc.combined_jump_kernel(lambda z: mm1_kernel(), lambda n: env, lambda z, n: 0.5**n, 0.0, sigma)
    for n in (0, 2):
        sol = ctmc.stationary_solve(ctmc.build_generator([(z, n) for z in "uvw"], k))
        target = np.array([1 / sigma[z] for z in "uvw"])
        assert np.abs(sol.pi - target / target.sum()).sum() < 1e-10


@st.composite
def random_kernels(draw):
    n = draw(st.integers(2, 6))
    table = {}
    for i in range(n):
        row = {}
        for j in range(n):
            if i != j and draw(st.booleans()):
                row[j] = draw(st.floats(0.01, 10.0))
        row[(i + 1) % n] = draw(st.floats(0.01, 10.0))  # a cycle keeps the chain irreducible
        table[i] = row
    return n, RateKernel.from_dict(table)


@settings(max_examples=60, deadline=None)
@given(random_kernels())
def test_generator_invariants_and_solve_residual(nk):
    n, k = nk
    G = ctmc.build_generator(range(n), k)
    A = G.toarray()
    assert np.abs(A.sum(axis=1)).max() < 1e-12
    assert (A - np.diag(np.diag(A)) >= 0).all()
    sol = ctmc.stationary_solve(G)
    assert sol.pi.min() >= 0 and abs(sol.pi.sum() - 1) < 1e-12
    pi = sol.as_dict()
    scale = max(pi[s] * k.exit_rate(s) for s in range(n))
    for s in range(n):
        assert abs(ctmc.balance_residual(pi, k, s)) < 1e-10 * max(scale, 1.0)
