"""Open symmetric exclusion on a finite lattice with one heavy particle.

Light particles hop between sites with symmetric weights ``beta``, are born
at rate ``lam`` on empty sites and die at rate ``mu``.  The heavy particle at
site ``z`` multiplies by ``exp(phi)`` the birth rate at ``z`` and the rate of
hops *into* ``z``; hops out of ``z`` keep the plain weight.  The heavy particle
itself walks over the allowed sites with symmetric rates ``tau``, leaving
``z`` at ``sigma(z) * tau[z, z'] * exp(-phi * x_z)``.

With these conventions the combined chain has the product-form invariant
measure ``kappa(z, x) = exp(phi * x_z) * gamma(x) / sigma(z)`` where
``gamma`` is the Bernoulli product measure with density ``lam / (lam + mu)``.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Hashable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from ._common import as_function
from .ctmc import GeneratorMatrix, RateKernel, StateSpace, build_generator, stationary_solve

__all__ = [
    "LatticeSpec",
    "HeavyParams",
    "ExactCheck",
    "marginals",
    "density_m",
    "product_measure",
    "configurations",
    "combined_kernel",
    "base_kernel",
    "kappa",
    "global_balance_residual",
    "exact_check",
]


class LatticeSpec:
    """Finite set of sites with hop weights and the heavy particle's walk.

    Parameters
    ----------
    sites : sequence of hashable
        Site labels, typically coordinate tuples.
    beta : mapping
        ``{(i, j): weight}`` over *unordered* pairs; the weight applies to
        hops in both directions.
    heavy_sites : sequence, optional
        Sites the heavy particle may occupy (defaults to all sites).
    tau : mapping
        ``{(z, z2): rate}`` for the heavy particle.  Pairs listed once are
        taken as symmetric.  With ``symmetric=False`` the mapping is read as
        ordered and may be asymmetric (useful as a negative control).
    """

    def __init__(self, sites: Sequence[Hashable], beta: Mapping, heavy_sites=None, tau: Mapping | None = None,
                 symmetric: bool = True):
        self.sites = list(sites)
        self.pos = {s: i for i, s in enumerate(self.sites)}
        if len(self.pos) != len(self.sites):
            raise ValueError("site labels must be unique")
        self.heavy_sites = list(self.sites if heavy_sites is None else heavy_sites)
        for z in self.heavy_sites:
            if z not in self.pos:
                raise ValueError(f"heavy site {z!r} is not a lattice site")
        self.beta = self._unordered(beta, "beta")
        tau = tau or {}
        if symmetric:
            self.tau = self._unordered(tau, "tau")
        else:
            self.tau = {k: float(v) for k, v in tau.items()}
        for (a, b), v in self.tau.items():
            if a == b:
                raise ValueError("tau must vanish on the diagonal")
            if v < 0:
                raise ValueError("tau must be non-negative")
            if a not in self.heavy_sites or b not in self.heavy_sites:
                raise ValueError(f"tau pair {(a, b)!r} leaves the heavy-particle sites")
        self.symmetric = all(abs(v - self.tau.get((b, a), 0.0)) <= 1e-15 * max(1.0, v)
                             for (a, b), v in self.tau.items())

    def _unordered(self, table, name):
        out: dict = {}
        for (a, b), v in table.items():
            v = float(v)
            if a == b:
                raise ValueError(f"{name} must vanish on the diagonal")
            if v < 0:
                raise ValueError(f"{name} must be non-negative")
            for key in ((a, b), (b, a)):
                if key in out and out[key] != v:
                    raise ValueError(f"{name} is not symmetric on {(a, b)!r}")
                out[key] = v
        return out

    @classmethod
    def grid(cls, shape, beta: float = 1.0, tau: float = 1.0, heavy_sites=None) -> "LatticeSpec":
        """Rectangular grid with nearest-neighbour hops for both kinds of particle."""
        sites = list(itertools.product(*(range(k) for k in shape)))
        pairs = [(a, b) for a, b in itertools.combinations(sites, 2)
                 if sum(abs(u - v) for u, v in zip(a, b)) == 1]
        heavy = sites if heavy_sites is None else list(heavy_sites)
        hs = set(heavy)
        return cls(sites, {p: beta for p in pairs}, heavy,
                   {p: tau for p in pairs if p[0] in hs and p[1] in hs})

    @property
    def n_sites(self) -> int:
        return len(self.sites)


@dataclass
class HeavyParams:
    phi: float
    lam: float
    mu: float
    alpha: object = 1.0
    sigma: object = 1.0

    def __post_init__(self):
        if not (self.lam > 0 and self.mu > 0):
            raise ValueError("birth and death rates must be positive")
        self._alpha = as_function(self.alpha)
        self._sigma = as_function(self.sigma)

    def alpha_of(self, z) -> float:
        return float(self._alpha(z))

    def sigma_of(self, z) -> float:
        return float(self._sigma(z))


def marginals(params: HeavyParams) -> tuple[float, float, float, float]:
    """Single-site laws ``(P(0), P(1), Q(0), Q(1))`` away from and under the heavy particle."""
    lam, mu, e = params.lam, params.mu, math.exp(params.phi)
    return mu / (lam + mu), lam / (lam + mu), mu / (lam * e + mu), lam * e / (lam * e + mu)


def _occ(lattice: LatticeSpec, x, site) -> int:
    if isinstance(x, Mapping):
        return int(x[site])
    return int(x[lattice.pos[site]])


def density_m(lattice: LatticeSpec, params: HeavyParams, z, x) -> float:
    """Density of the heavy-particle product measure against ``gamma``."""
    lam, mu, phi = params.lam, params.mu, params.phi
    return (lam + mu) / (lam * math.exp(phi) + mu) * math.exp(phi * _occ(lattice, x, z))


def configurations(lattice: LatticeSpec):
    return list(itertools.product((0, 1), repeat=lattice.n_sites))


def product_measure(lattice: LatticeSpec, params: HeavyParams, z) -> dict:
    """Bernoulli product law with the tilted marginal at ``z``: ``{x: weight}``."""
    P0, P1, Q0, Q1 = marginals(params)
    iz = lattice.pos[z]
    out = {}
    for x in configurations(lattice):
        w = 1.0
        for i, xi in enumerate(x):
            if i == iz:
                w *= Q1 if xi else Q0
            else:
                w *= P1 if xi else P0
        out[x] = w
    return out


def _light_moves(lattice: LatticeSpec, params: HeavyParams, z, x, exclude_out_of_heavy: bool) -> dict:
    iz = lattice.pos[z]
    e = math.exp(params.phi)
    rates: dict = {}
    for (a, b), w in lattice.beta.items():
        i, j = lattice.pos[a], lattice.pos[b]
        if not (x[i] == 1 and x[j] == 0) or w == 0:
            continue
        if j == iz:
            r = w * e
        elif i == iz and exclude_out_of_heavy:
            continue
        else:
            r = w
        y = list(x)
        y[i], y[j] = 0, 1
        rates[tuple(y)] = rates.get(tuple(y), 0.0) + r
    for i in range(lattice.n_sites):
        y = list(x)
        if x[i] == 0:
            y[i] = 1
            rates[tuple(y)] = params.lam * (e if i == iz else 1.0)
        else:
            y[i] = 0
            rates[tuple(y)] = params.mu
    return rates


def base_kernel(lattice: LatticeSpec, params: HeavyParams, z, exclude_out_of_heavy: bool = False) -> RateKernel:
    """Light-particle dynamics with the heavy particle frozen at ``z`` (no ``alpha`` factor)."""
    return RateKernel(lambda x: _light_moves(lattice, params, z, x, exclude_out_of_heavy))


def combined_kernel(lattice: LatticeSpec, params: HeavyParams, exclude_out_of_heavy: bool = False) -> RateKernel:
    """Jump rates of the combined chain on states ``(z, x)``.

    ``exclude_out_of_heavy=True`` switches to the reading in which light
    particles cannot hop out of the heavy site at all; the product form is
    *not* invariant then, which makes it a useful negative control.
    """
    phi = params.phi
    heavy = lattice.heavy_sites

    def out(state):
        z, x = state
        a = params.alpha_of(z)
        rates = {}
        if a:
            for y, r in _light_moves(lattice, params, z, x, exclude_out_of_heavy).items():
                rates[(z, y)] = a * r
        slow = params.sigma_of(z) * math.exp(-phi * x[lattice.pos[z]])
        for z2 in heavy:
            t = lattice.tau.get((z, z2), 0.0)
            if t:
                rates[(z2, x)] = slow * t
        return rates

    return RateKernel(out)


def kappa(lattice: LatticeSpec, params: HeavyParams, z, x) -> float:
    """Invariant weight ``exp(phi x_z) prod_i P(x_i) / sigma(z)``."""
    P0, P1, _, _ = marginals(params)
    g = 1.0
    for s in lattice.sites:
        g *= P1 if _occ(lattice, x, s) else P0
    return math.exp(params.phi * _occ(lattice, x, z)) * g / params.sigma_of(z)


def _full_generator(lattice, params, exclude_out_of_heavy=False) -> GeneratorMatrix:
    space = StateSpace((z, x) for z in lattice.heavy_sites for x in configurations(lattice))
    return build_generator(space, combined_kernel(lattice, params, exclude_out_of_heavy))


def global_balance_residual(lattice: LatticeSpec, params: HeavyParams, exclude_out_of_heavy: bool = False) -> float:
    """``max_s |sum_t kappa(t) Q(t, s)|`` relative to the largest out-flow.

    Equivalent to integrating the combined generator applied to every
    indicator function against ``kappa``.
    """
    G = _full_generator(lattice, params, exclude_out_of_heavy)
    k = np.array([kappa(lattice, params, z, x) for z, x in G.space])
    flows = G.matrix.T @ k
    scale = np.max(np.abs(G.matrix.diagonal()) * k)
    return float(np.abs(flows).max() / scale)


@dataclass
class ExactCheck:
    l1_error: float
    solve_residual: float
    n_states: int

    def passed(self, tol: float = 1e-10) -> bool:
        return self.l1_error < tol


def exact_check(lattice: LatticeSpec, params: HeavyParams, exclude_out_of_heavy: bool = False,
                max_sites: int = 12) -> ExactCheck:
    """Solve the full combined chain and compare with the normalised product form."""
    if lattice.n_sites > max_sites:
        raise ValueError(f"{lattice.n_sites} sites is too many for an exact solve (limit {max_sites})")
    G = _full_generator(lattice, params, exclude_out_of_heavy)
    sol = stationary_solve(G)
    k = np.array([kappa(lattice, params, z, x) for z, x in G.space])
    k /= k.sum()
    return ExactCheck(float(np.abs(sol.pi - k).sum()), sol.residual, len(G.space))
