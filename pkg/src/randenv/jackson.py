"""Open Jackson networks whose parameters are driven by a random environment.

The environment ``z`` selects the arrival vector, service vector and routing
matrix.  While the environment sits at ``z`` the queues evolve as an ordinary
Jackson network, slowed or accelerated by ``alpha(z)``.  The environment
leaves ``z`` at rate ``sigma(z) * tau_n(z, z')`` multiplied by
``prod_i (rho_i(z) / mu_i(z)) ** -n_i``, i.e. divided by the (unnormalised)
product-form weight of the current queue vector.  This coupling is what makes

    kappa(z, n) = prod_i (rho_i(z) / mu_i(z)) ** n_i / sigma(z)

balance the combined chain state by state, for any ``alpha`` and any
``tau`` whose in- and out-sums agree at every ``n``.
"""

from __future__ import annotations

import itertools
import warnings
from collections.abc import Callable, Hashable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from ._common import Divergent, as_function
from .ctmc import RateKernel, StateSpace

__all__ = [
    "NetworkSpec",
    "EnvironmentSpec",
    "NonexplosionReport",
    "traffic_solve",
    "jn_rates",
    "combined_rates",
    "kappa",
    "xi",
    "equilibrium",
    "product_form",
    "partial_balance",
    "nonexplosion_report",
    "truncated_space",
    "environment_balance_violations",
]


@dataclass
class NetworkSpec:
    """Arrival rates ``lam``, service rates ``mu`` and routing matrix ``P``."""

    lam: np.ndarray
    mu: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        self.lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        self.mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        k = self.lam.size
        self.P = np.asarray(self.P, dtype=float).reshape(k, k)
        if self.mu.shape != (k,):
            raise ValueError(f"mu has shape {self.mu.shape}, expected ({k},)")
        if np.any(self.lam < 0):
            raise ValueError("arrival rates must be non-negative")
        if np.any(self.mu <= 0):
            raise ValueError("service rates must be positive")
        if np.any(self.P < 0):
            raise ValueError("routing probabilities must be non-negative")
        if np.any(self.P.sum(axis=1) > 1 + 1e-12):
            raise ValueError("routing matrix rows must sum to at most 1")

    @property
    def n_sites(self) -> int:
        return self.lam.size

    @property
    def exit_prob(self) -> np.ndarray:
        return 1.0 - self.P.sum(axis=1)

    def irreducible(self) -> bool:
        """Whether every site can route to every other site (directed reachability)."""
        k = self.n_sites
        reach = (self.P > 0) | np.eye(k, dtype=bool)
        for _ in range(k):
            reach = reach | ((reach.astype(int) @ reach.astype(int)) > 0)
        return bool(reach.all())

    def loads(self) -> np.ndarray:
        return traffic_solve(self) / self.mu


def traffic_solve(spec: NetworkSpec) -> np.ndarray:
    """Throughputs ``rho`` solving ``rho = lam + rho P``."""
    k = spec.n_sites
    M = np.eye(k) - spec.P
    if np.linalg.cond(M) > 1e12:
        raise np.linalg.LinAlgError("I - P is singular; the traffic equations have no unique solution")
    return np.linalg.solve(M.T, spec.lam)


def _unit(k, i):
    e = [0] * k
    e[i] = 1
    return e


def jn_rates(spec: NetworkSpec) -> RateKernel:
    """Jump rates of the Jackson network on queue vectors (tuples of ints)."""
    k = spec.n_sites
    lam, mu, P, pstar = spec.lam, spec.mu, spec.P, spec.exit_prob

    def out(n):
        rates: dict = {}
        for i in range(k):
            if lam[i] > 0:
                up = list(n)
                up[i] += 1
                rates[tuple(up)] = lam[i]
            if n[i] >= 1:
                if pstar[i] > 0:
                    down = list(n)
                    down[i] -= 1
                    rates[tuple(down)] = rates.get(tuple(down), 0.0) + mu[i] * pstar[i]
                for j in range(k):
                    if j != i and P[i, j] > 0:
                        moved = list(n)
                        moved[i] -= 1
                        moved[j] += 1
                        rates[tuple(moved)] = rates.get(tuple(moved), 0.0) + mu[i] * P[i, j]
        return rates

    def predecessors(n):
        preds = []
        for i in range(k):
            if n[i] >= 1:
                preds.append(tuple(a - b for a, b in zip(n, _unit(k, i))))
            preds.append(tuple(a + b for a, b in zip(n, _unit(k, i))))
            for j in range(k):
                if j != i and n[j] >= 1:
                    p = list(n)
                    p[i] += 1
                    p[j] -= 1
                    preds.append(tuple(p))
        return preds

    return RateKernel(out, predecessors)


@dataclass
class EnvironmentSpec:
    """Jackson networks indexed by environment states plus the environment dynamics.

    ``tau`` is either a callable ``tau(n, z, z2)``, a mapping ``{(z, z2): rate}``
    or a square array indexed like ``envs`` (the last two do not depend on the
    queue vector).  Passing ``tau_factor=(h, tau_bar)`` instead sets
    ``tau(n, z, z2) = h(n) * tau_bar[z, z2]``; the factored form is what
    :func:`nonexplosion_report` uses for its sufficient condition.
    """

    envs: Sequence[Hashable]
    networks: Mapping[Hashable, NetworkSpec]
    alpha: object = 1.0
    sigma: object = 1.0
    tau: object = None
    tau_factor: tuple | None = None
    _tau: Callable = field(init=False, repr=False)

    def __post_init__(self):
        self.envs = list(self.envs)
        missing = [z for z in self.envs if z not in self.networks]
        if missing:
            raise ValueError(f"no network given for environments {missing}")
        sizes = {self.networks[z].n_sites for z in self.envs}
        if len(sizes) != 1:
            raise ValueError("all environments must use the same set of sites")
        self._alpha = as_function(self.alpha)
        self._sigma = as_function(self.sigma)
        pos = {z: i for i, z in enumerate(self.envs)}
        if self.tau_factor is not None:
            h, tbar = self.tau_factor
            tbar_fn = self._tbar = self._matrix_fn(tbar, pos)
            self._tau = lambda n, z, z2: h(n) * tbar_fn(z, z2)
        elif callable(self.tau):
            self._tau = self.tau
        elif self.tau is None:
            raise ValueError("environment rates tau are required")
        else:
            fn = self._matrix_fn(self.tau, pos)
            self._tau = lambda n, z, z2: fn(z, z2)
        self._rho = {z: traffic_solve(self.networks[z]) for z in self.envs}
        for z in self.envs:
            if self.sigma_of(z) <= 0:
                raise ValueError(f"sigma must be positive; sigma({z!r}) = {self.sigma_of(z)}")
            if self.alpha_of(z) < 0:
                raise ValueError(f"alpha must be non-negative; alpha({z!r}) = {self.alpha_of(z)}")

    @staticmethod
    def _matrix_fn(table, pos):
        if isinstance(table, Mapping):
            return lambda z, z2: float(table.get((z, z2), 0.0))
        arr = np.asarray(table, dtype=float)
        return lambda z, z2: float(arr[pos[z], pos[z2]])

    @property
    def n_sites(self) -> int:
        return self.networks[self.envs[0]].n_sites

    def alpha_of(self, z) -> float:
        return float(self._alpha(z))

    def sigma_of(self, z) -> float:
        return float(self._sigma(z))

    def tau_of(self, n, z, z2) -> float:
        if z == z2:
            return 0.0
        return float(self._tau(tuple(n), z, z2))

    def rho(self, z) -> np.ndarray:
        return self._rho[z]

    def loads(self, z) -> np.ndarray:
        return self._rho[z] / self.networks[z].mu

    def with_changes(self, **changes) -> "EnvironmentSpec":
        kw = dict(envs=self.envs, networks=self.networks, alpha=self.alpha, sigma=self.sigma,
                  tau=self.tau, tau_factor=self.tau_factor)
        kw.update(changes)
        return EnvironmentSpec(**kw)


def environment_balance_violations(env: EnvironmentSpec, states, tol: float = 1e-12) -> list:
    """Queue vectors ``n`` (from ``states``) at which some environment has unequal tau in/out sums."""
    bad = []
    for n in states:
        for z in env.envs:
            out = sum(env.tau_of(n, z, z2) for z2 in env.envs)
            inn = sum(env.tau_of(n, z2, z) for z2 in env.envs)
            if abs(out - inn) > tol * max(1.0, abs(out)):
                bad.append((tuple(n), z, out, inn))
    return bad


def _weight(env: EnvironmentSpec, z, n) -> float:
    r = env.loads(z)
    w = 1.0
    for ri, ni in zip(r, n):
        if ni:
            w *= ri**ni
    return w


def combined_rates(env: EnvironmentSpec) -> RateKernel:
    """Jump rates of the combined chain on pairs ``(z, n)``.

    Queue moves under ``z`` are the Jackson rates of ``networks[z]`` times
    ``alpha(z)``; the environment moves ``z -> z2`` at
    ``sigma(z) * tau_n(z, z2) * prod_i (rho_i(z)/mu_i(z)) ** -n_i``.
    """
    base = {z: jn_rates(env.networks[z]) for z in env.envs}

    def out(state):
        z, n = state
        rates = {}
        a = env.alpha_of(z)
        if a:
            for n2, r in base[z].out(n).items():
                rates[(z, n2)] = a * r
        r = env.loads(z)
        factor = 1.0
        for i, ni in enumerate(n):
            if ni:
                if r[i] == 0:
                    raise ValueError(
                        f"site {i} has zero throughput in environment {z!r} but n_{i} = {ni}; "
                        "the environment exit rate is undefined"
                    )
                factor *= r[i] ** (-ni)
        s = env.sigma_of(z)
        for z2 in env.envs:
            t = env.tau_of(n, z, z2)
            if t:
                rates[(z2, n)] = s * t * factor
        return rates

    def predecessors(state):
        z, n = state
        preds = [(z, p) for p in base[z].predecessors(n)]
        preds.extend((z2, n) for z2 in env.envs if z2 != z)
        return preds

    return RateKernel(out, predecessors)


def kappa(env: EnvironmentSpec, z, n) -> float:
    """Product-form invariant weight ``prod_i (rho_i/mu_i) ** n_i / sigma(z)``."""
    return _weight(env, z, n) / env.sigma_of(z)


def product_form(spec: NetworkSpec, n) -> float:
    """Unnormalised Jackson product form ``prod_i (rho_i/mu_i) ** n_i`` of a fixed network."""
    r = spec.loads()
    return float(np.prod([ri**ni for ri, ni in zip(r, n)]))


def xi(env: EnvironmentSpec) -> float | Divergent:
    """Total mass ``sum_{z, n} kappa(z, n)``.

    Summing the geometric series site by site gives
    ``sum_z prod_i (1 - rho_i(z)/mu_i(z)) ** -1 / sigma(z)``.  Returns a
    :class:`~randenv.Divergent` naming the first overloaded site otherwise.
    """
    total = 0.0
    for z in env.envs:
        r = env.loads(z)
        for i, ri in enumerate(r):
            if ri >= 1:
                return Divergent(f"site {i} in environment {z!r} has load rho/mu = {ri:.6g} >= 1")
        total += float(np.prod(1.0 / (1.0 - r))) / env.sigma_of(z)
    return total


def equilibrium(env: EnvironmentSpec) -> Callable:
    """Normalised equilibrium probability ``pi(z, n) = kappa(z, n) / xi``."""
    total = xi(env)
    if isinstance(total, Divergent):
        raise ValueError(f"no equilibrium distribution: {total.reason}")
    return lambda z, n: kappa(env, z, n) / total


def partial_balance(env: EnvironmentSpec, z, n, measure=None) -> dict:
    """Queue-move flows (F1) and environment-move flows (F2) of ``measure`` at ``(z, n)``.

    ``measure`` defaults to :func:`kappa`.  Both ``F1_out - F1_in`` and
    ``F2_out - F2_in`` vanish for the product-form measure.
    """
    eta = measure or (lambda zz, nn: kappa(env, zz, nn))
    kern = combined_rates(env)
    n = tuple(n)
    state = (z, n)
    f1_out = f2_out = f1_in = f2_in = 0.0
    here = eta(z, n)
    for (z2, n2), r in kern.out(state).items():
        if z2 == z:
            f1_out += here * r
        else:
            f2_out += here * r
    for p in set(kern.predecessors(state)):
        if p == state:
            continue
        r = kern.rate(p, state)
        if not r:
            continue
        if p[0] == z:
            f1_in += eta(*p) * r
        else:
            f2_in += eta(*p) * r
    return {"F1_out": float(f1_out), "F1_in": float(f1_in), "F2_out": float(f2_out), "F2_in": float(f2_in)}


def truncated_space(env: EnvironmentSpec, n_max: int, envs=None) -> StateSpace:
    """All ``(z, n)`` with ``0 <= n_i <= n_max``."""
    envs = env.envs if envs is None else envs
    ranges = [range(n_max + 1)] * env.n_sites
    return StateSpace((z, n) for z in envs for n in itertools.product(*ranges))


@dataclass
class NonexplosionReport:
    """Diagnostics for the bounded-exit-rate sufficient condition.

    ``rbar_max`` is the largest total exit rate on the sample and ``rbar1_max``
    the largest environment exit rate.  ``factored_sup`` is
    ``max h(n) prod_i (mu_i/rho_i) ** n_i`` (only for factored ``tau``).
    ``bounded`` is a finite-sample heuristic: the environment exit rate does
    not grow between the inner and the outer half of the sample.
    """

    rbar_max: float
    rbar1_max: float
    argmax: tuple
    factored_sup: float | None
    tau_bar_row_sup: float | None
    bounded: bool
    symmetry_violations: list


def nonexplosion_report(env: EnvironmentSpec, states) -> NonexplosionReport:
    states = [tuple(n) for n in states]
    rbar1 = {}
    rbar = {}
    for z in env.envs:
        net = env.networks[z]
        a = env.alpha_of(z)
        for n in states:
            w = _weight(env, z, n)
            env_rate = env.sigma_of(z) * sum(env.tau_of(n, z, z2) for z2 in env.envs)
            r1 = env_rate / w if env_rate else 0.0
            rbar1[(z, n)] = r1
            rbar[(z, n)] = r1 + a * sum(net.lam[i] + net.mu[i] * (n[i] >= 1) for i in range(net.n_sites))
    arg = max(rbar1, key=rbar1.get)

    factored_sup = tbar_sup = None
    if env.tau_factor is not None:
        h, _ = env.tau_factor
        factored_sup = max(h(n) / _weight(env, z, n) for z in env.envs for n in states)
        tbar_sup = max(sum(env._tbar(z, z2) for z2 in env.envs if z2 != z) for z in env.envs)

    size = {n: sum(n) for n in states}
    cut = float(np.median(list(size.values())))
    inner = [v for (z, n), v in rbar1.items() if size[n] <= cut]
    outer = [v for (z, n), v in rbar1.items() if size[n] > cut]
    bounded = not outer or max(outer) <= max(inner) * (1 + 1e-9) + 1e-300
    viol = environment_balance_violations(env, states)
    if viol:
        warnings.warn(f"tau in/out sums differ at {len(viol)} sampled states", RuntimeWarning, stacklevel=2)
    return NonexplosionReport(max(rbar.values()), rbar1[arg], arg, factored_sup, tbar_sup, bool(bounded), viol)
