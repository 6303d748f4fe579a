"""Hybrid jump/diffusion models in a random environment.

Five families are covered:

* ``LambdaDiffusionSpec`` - an M/M/1 queue (service rate 1) whose arrival
  rate diffuses on ``[eps, 1]`` with reflection;
* ``MuBMSpec`` - arrival rate 1, service rate a reflected Brownian motion
  with drift on ``[1, inf)``;
* ``WedgeSpec`` - both rates diffuse jointly in the wedge ``mu > lam > 0``;
* ``SwitchSpec`` - a Brownian motion on the line whose drift ``z`` jumps;
* ``TwoCompSpec`` - a time-scaled Wiener process whose volatility is a
  reflected Brownian motion.

In each family the environment generator is divided by the base density
``m(z, x)`` (and multiplied by ``sigma``) while the base generator is
multiplied by ``alpha``.  The invariant density is ``m(z, x) w(z) / sigma(z)``
and never involves ``alpha``.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import log_ndtr

from ._common import Divergent, as_function, as_rng
from .sde import Interval, fold

__all__ = [
    "LambdaDiffusionSpec",
    "MuBMSpec",
    "WedgeSpec",
    "SwitchSpec",
    "TwoCompSpec",
    "WIEReport",
    "HybridPath",
    "kappa_lambda",
    "xi_lambda",
    "xi_lambda_terms",
    "wie_check_lambda",
    "kappa_mu",
    "xi_mu",
    "wie_check_mu",
    "kappa_wedge",
    "wedge_project",
    "wie_check_wedge",
    "kappa_switch",
    "wie_check_switch",
    "xi_wedge",
    "xi_switch",
    "kappa_twocomp",
    "xi_twocomp",
    "wie_check_twocomp",
    "simulate_model",
]


def _vec(f):
    """Evaluate ``f`` on an array even if it was written for scalars or returns a constant."""
    f = as_function(f)

    def g(*args):
        out = f(*args)
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(*args).shape).copy()

    return g


@dataclass
class LambdaDiffusionSpec:
    """Queue with service rate 1 and arrival rate ``lam`` diffusing on ``[eps, 1]``.

    ``beta(n)`` scales the environment noise when ``n`` tasks are queued.
    """

    eps: float
    sigma: Callable = 1.0
    alpha: Callable = 1.0
    beta: Callable = 1.0

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        self.sigma_fn, self.alpha_fn, self.beta_fn = _vec(self.sigma), _vec(self.alpha), _vec(self.beta)

    def noise_condition(self, n_max: int = 200) -> float:
        """Partial sum of ``beta(n)**2 / eps**n``; a growing value flags a divergent series."""
        n = np.arange(n_max + 1)
        with np.errstate(over="ignore"):
            return float(np.sum(self.beta_fn(n) ** 2 / self.eps ** n.astype(float)))


@dataclass
class MuBMSpec:
    """Arrival rate 1; service rate a Brownian motion with drift ``b`` reflected at 1."""

    b: float
    sigma: Callable = 1.0
    alpha: Callable = 1.0

    def __post_init__(self):
        self.sigma_fn, self.alpha_fn = _vec(self.sigma), _vec(self.alpha)


@dataclass
class WedgeSpec:
    """Arrival and service rates diffusing in ``{0 < lam < mu}`` with drift ``(theta, theta)``."""

    theta: float
    sigma: Callable = 1.0
    alpha: Callable = 1.0

    def __post_init__(self):
        self.sigma_fn, self.alpha_fn = _vec(self.sigma), _vec(self.alpha)


@dataclass
class SwitchSpec:
    """Brownian motion with drift ``z``; ``z`` jumps within a finite set ``envs``.

    ``rates(x)`` returns the jump matrix ``T_x[z, z2]`` (indexed like
    ``envs``) and ``weights`` the invariant weights ``v`` of ``T_x``.  The
    default is the symmetric two-point switch ``z = +-1`` at rate ``q(x)``.
    ``x_interval`` optionally confines the base process with reflection.
    """

    q: Callable = 1.0
    sigma: object = 1.0
    alpha: object = 1.0
    envs: Sequence[float] = (1.0, -1.0)
    weights: Sequence[float] | None = None
    rates: Callable | None = None
    x_interval: Interval = field(default_factory=Interval)

    def __post_init__(self):
        self.envs = tuple(float(z) for z in self.envs)
        k = len(self.envs)
        self.weights = np.ones(k) if self.weights is None else np.asarray(self.weights, dtype=float)
        self.q_fn = _vec(self.q)
        self.sigma_fn, self.alpha_fn = as_function(self.sigma), as_function(self.alpha)
        self._default_rates = self.rates is None
        if self.rates is None:
            if k != 2:
                raise ValueError("a jump matrix is required for more than two environment states")
            self.rates = lambda x: float(self.q_fn(x)) * (np.ones((2, 2)) - np.eye(2))

    def rates_batch(self, x) -> np.ndarray:
        """Jump matrices for an array of base positions, shape ``(len(x), k, k)``."""
        x = np.asarray(x, dtype=float)
        if self._default_rates:
            return self.q_fn(x)[:, None, None] * (np.ones((2, 2)) - np.eye(2))
        return np.array([np.asarray(self.rates(xx), dtype=float) for xx in x])

    def stationarity_defect(self, x: float) -> float:
        """``max |v T_x - v * rowsum(T_x)|``; zero when ``v`` is invariant for ``T_x``."""
        T = np.asarray(self.rates(x), dtype=float)
        v = self.weights
        return float(np.abs(v @ T - v * T.sum(axis=1)).max())


@dataclass
class TwoCompSpec:
    """``d``-dimensional Wiener process with volatility ``z``, itself a reflected BM with drift ``b``."""

    b: float
    alpha: Callable = 1.0
    sigma: Callable = 1.0
    d: int = 1

    def __post_init__(self):
        self.sigma_fn, self.alpha_fn = _vec(self.sigma), _vec(self.alpha)

    def growth_violations(self, c: float, C: float, grid=None) -> np.ndarray:
        """Grid points where ``c < z**2 alpha(z)`` or ``sigma(z) < C (1 + z**2)`` fails."""
        z = np.linspace(0.01, 10.0, 1000) if grid is None else np.asarray(grid, dtype=float)
        bad = ~((c < z**2 * self.alpha_fn(z)) & (self.sigma_fn(z) < C * (1 + z**2)))
        return z[bad]


@dataclass
class WIEReport:
    """Largest residuals of the weak invariance identities on a grid.

    ``diffusion`` is the adjoint residual of the continuous part, scaled by
    the size of the function it acts on; ``jump`` is the relative residual of
    the discrete balance; ``boundary`` the zero-flux residual at reflecting
    edges (``nan`` when there is none).
    """

    diffusion: float
    jump: float
    boundary: float = float("nan")

    def passed(self, tol: float = 1e-6) -> bool:
        vals = [self.diffusion, self.jump] + ([] if math.isnan(self.boundary) else [self.boundary])
        return all(v < tol for v in vals)


def _nanmax(a, b):
    # unlike max(), a nan on either side is kept so that it fails the check
    return math.nan if math.isnan(a) or math.isnan(b) else max(a, b)


def _d1(f, x, h):
    return (f(x + h) - f(x - h)) / (2 * h)


def _d2(f, x, h):
    return (f(x + h) - 2 * f(x) + f(x - h)) / h**2


def _d1_4(f, x, h):
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


def _d2_4(f, x, h):
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h**2)


# -- arrival rate diffusing on [eps, 1] ------------------------------------


def kappa_lambda(spec: LambdaDiffusionSpec, lam, n) -> np.ndarray | float:
    """Invariant density ``lam**n / sigma(lam)`` against ``d lam x counting``."""
    lam = np.asarray(lam, dtype=float)
    out = lam**n / spec.sigma_fn(lam)
    return float(out) if out.ndim == 0 else out


def xi_lambda_terms(spec: LambdaDiffusionSpec, n_terms: int) -> np.ndarray:
    """Masses ``int_eps^1 lam**n / sigma(lam) d lam`` for ``n < n_terms``."""
    return np.array([integrate.quad(lambda t: t**n / spec.sigma_fn(t), spec.eps, 1.0, limit=200)[0]
                     for n in range(n_terms)])


def _improper_at(g, a, b, side, decades=12):
    """Integrate ``g`` on ``(a, b)`` with a possible singularity at endpoint ``side``.

    The interval is cut at distances ``10**-k`` from the singular end.  If
    the contributions of successive decades fail to shrink at least
    geometrically (ratio below 1/2) the integral is declared divergent;
    otherwise the geometric remainder is added.
    """
    width = b - a
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return _improper_decades(g, a, b, side, decades, width)


def _improper_decades(g, a, b, side, decades, width):
    cuts = [width * 10.0 ** (-k) for k in range(1, decades + 1)]
    if side == "right":
        seg = lambda d1, d0: integrate.quad(g, b - d1, b - d0, limit=200)[0]
        base = integrate.quad(g, a, b - cuts[0], limit=200)[0]
    else:
        seg = lambda d1, d0: integrate.quad(g, a + d0, a + d1, limit=200)[0]
        base = integrate.quad(g, a + cuts[0], b, limit=200)[0]
    pieces = [seg(cuts[k], cuts[k + 1]) for k in range(len(cuts) - 1)]
    total = base + sum(pieces)
    last, prev = abs(pieces[-1]), abs(pieces[-2])
    if last == 0.0:
        return total
    ratio = last / prev if prev else 1.0
    if ratio >= 0.5:
        return Divergent(f"decade contributions near the endpoint shrink only by a factor {ratio:.3g}")
    return total + pieces[-1] * ratio / (1 - ratio)


def xi_lambda(spec: LambdaDiffusionSpec) -> float | Divergent:
    """Total mass ``sum_n int_eps^1 lam**n / sigma(lam) d lam``.

    Summing the geometric series under the integral first gives
    ``int_eps^1 d lam / (sigma(lam) (1 - lam))``, whose only possible
    singularity is at ``lam = 1``.
    """
    g = lambda t: 1.0 / (float(spec.sigma_fn(t)) * (1.0 - t))
    return _improper_at(g, spec.eps, 1.0, "right")


def wie_check_lambda(spec: LambdaDiffusionSpec, grid=None, n_max: int = 20, h: float = 1e-3,
                     kappa=None) -> WIEReport:
    """Adjoint, recurrence and zero-flux residuals of ``kappa`` (default :func:`kappa_lambda`)."""
    kap = kappa or (lambda lam, n: kappa_lambda(spec, lam, n))
    eps = spec.eps
    grid = np.linspace(eps + 0.01, 1 - 0.01, 99) if grid is None else np.asarray(grid, dtype=float)
    diff = jump = bnd = 0.0
    for n in range(n_max + 1):
        f = lambda t, n=n: spec.sigma_fn(t) * spec.beta_fn(np.full_like(np.asarray(t, dtype=float), n)) ** 2 \
            / (2 * np.asarray(t, dtype=float) ** n) * kap(t, n)
        scale = np.maximum(np.abs(f(grid)), 1e-300)
        diff = _nanmax(diff, float(np.max(np.abs(_d2_4(f, grid, h)) / scale)))
        for edge, sgn in ((eps, 1), (1.0, -1)):
            pt = edge + sgn * h
            flux = (f(pt + sgn * h) - f(pt)) / (sgn * h)
            bnd = _nanmax(bnd, float(abs(flux) / max(abs(float(f(pt))), 1e-300)))
        lhs = kap(grid, n) * (grid + (n >= 1))
        rhs = grid * kap(grid, n - 1) * (n >= 1) + kap(grid, n + 1)
        jump = _nanmax(jump, float(np.max(np.abs(lhs - rhs) / np.abs(lhs))))
    return WIEReport(diff, jump, bnd)


# -- service rate as reflected BM on [1, inf) -------------------------------


def kappa_mu(spec: MuBMSpec, mu, n) -> np.ndarray | float:
    """Invariant density ``exp(2 (mu - 1) b) / (mu**n sigma(mu))``."""
    mu = np.asarray(mu, dtype=float)
    out = np.exp(2 * (mu - 1) * spec.b) / (mu**n * spec.sigma_fn(mu))
    return float(out) if out.ndim == 0 else out


def xi_mu(spec: MuBMSpec, upper: float = math.inf) -> float | Divergent:
    """Total mass ``int_1^inf exp(2 (mu-1) b) / sigma(mu) * mu / (mu - 1) d mu``."""
    g = lambda m: math.exp(2 * (m - 1) * spec.b) / float(spec.sigma_fn(m)) * m / (m - 1)
    near = _improper_at(g, 1.0, 2.0, "left")
    if isinstance(near, Divergent):
        return near
    far, err = integrate.quad(g, 2.0, upper, limit=400)
    if not math.isfinite(far) or err > 1e-6 * max(1.0, abs(far)):
        return Divergent("the mass over large service rates does not converge")
    return near + far


def wie_check_mu(spec: MuBMSpec, grid=None, n_max: int = 20, h: float = 1e-4, kappa=None) -> WIEReport:
    """Residuals of the weak invariance identities for the reflected-BM service rate.

    The diffusion identity is ``(1/2) f'' - b f' = 0`` for
    ``f(mu) = mu**n sigma(mu) kappa(mu, n)``; the jump identity is the
    birth-death balance with arrival rate 1 and service rate ``mu``.
    """
    kap = kappa or (lambda m, n: kappa_mu(spec, m, n))
    b = spec.b
    grid = np.arange(1.01, 10.0 + 1e-9, 0.01) if grid is None else np.asarray(grid, dtype=float)
    diff = jump = 0.0
    for n in range(n_max + 1):
        f = lambda m, n=n: np.asarray(m, dtype=float) ** n * spec.sigma_fn(m) * kap(m, n)
        scale = np.maximum(np.abs(f(grid)), 1e-300)
        r = 0.5 * _d2(f, grid, h) - b * _d1(f, grid, h)
        diff = _nanmax(diff, float(np.max(np.abs(r) / scale)))
        lhs = kap(grid, n) * (1 + grid * (n >= 1))
        rhs = kap(grid, n - 1) * (n >= 1) + grid * kap(grid, n + 1)
        jump = _nanmax(jump, float(np.max(np.abs(lhs - rhs) / np.abs(lhs))))
    # zero flux at mu = 1: (1/2) f' - b f = 0
    bnd = 0.0
    for n in range(n_max + 1):
        f = lambda m, n=n: np.asarray(m, dtype=float) ** n * spec.sigma_fn(m) * kap(m, n)
        pt = 1.0 + 3 * h
        flux = 0.5 * _d1_4(f, pt, h) - b * f(pt)
        bnd = _nanmax(bnd, float(abs(flux) / max(abs(float(f(pt))), 1e-300)))
    return WIEReport(diff, jump, bnd)


# -- wedge -------------------------------------------------------------------


def wedge_project(lam, mu):
    """Fold the quadrant onto the wedge: ``(min(lam, mu), max(lam, mu))``."""
    return np.minimum(lam, mu), np.maximum(lam, mu)


def kappa_wedge(spec: WedgeSpec, lam, mu, n):
    """Invariant density ``lam**n exp(2 theta (lam + mu)) / (mu**n sigma(lam, mu))`` on the closed wedge."""
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if np.any(lam < 0) or np.any(lam > mu):
        raise ValueError("point outside the wedge 0 <= lam <= mu")
    out = (lam / mu) ** n * np.exp(2 * spec.theta * (lam + mu)) / spec.sigma_fn(lam, mu)
    return float(out) if out.ndim == 0 else out


def wie_check_wedge(spec: WedgeSpec, n_max: int = 20, h: float = 1e-3, points=None, kappa=None) -> WIEReport:
    """Adjoint, zero-flux and birth-death residuals on interior points of the wedge.

    Fourth-order stencils are used: the powers ``(mu / lam)**n`` carry
    rounding of order ``n`` ulps, which a small ``h`` would amplify.
    """
    kap = kappa or (lambda l, m, n: kappa_wedge(spec, l, m, n))
    th = spec.theta
    if points is None:
        L, M = np.meshgrid(np.linspace(0.05, 3.0, 40), np.linspace(0.1, 3.5, 40))
        keep = M > L + 0.02
        points = (L[keep], M[keep])
    lam, mu = (np.asarray(p, dtype=float) for p in points)
    diff = jump = bnd = 0.0
    for n in range(n_max + 1):
        def f(l, m, n=n):
            return (m / l) ** n * spec.sigma_fn(l, m) * kap(l, m, n)

        scale = np.maximum(np.abs(f(lam, mu)), 1e-300)
        lap = _d2_4(lambda t: f(t, mu), lam, h) + _d2_4(lambda t: f(lam, t), mu, h)
        grad = _d1_4(lambda t: f(t, mu), lam, h) + _d1_4(lambda t: f(lam, t), mu, h)
        diff = _nanmax(diff, float(np.max(np.abs(0.5 * lap - th * grad) / scale)))
        # zero flux through lam = 0 and through the diagonal
        m0 = np.linspace(0.5, 3.0, 6)
        l0 = np.full_like(m0, 3 * h)
        fl = 0.5 * _d1_4(lambda t: f(t, m0), l0, h) - th * f(l0, m0)
        bnd = _nanmax(bnd, float(np.max(np.abs(fl) / np.abs(f(l0, m0)))))
        d = np.linspace(0.5, 3.0, 6)
        m1 = d + 3 * h
        dn = 0.5 * (_d1_4(lambda t: f(t, m1), d, h) - _d1_4(lambda t: f(d, t), m1, h))
        bnd = _nanmax(bnd, float(np.max(np.abs(dn) / np.abs(f(d, m1)))))
        lhs = kap(lam, mu, n) * (lam + mu * (n >= 1))
        rhs = lam * kap(lam, mu, n - 1) * (n >= 1) + mu * kap(lam, mu, n + 1)
        jump = _nanmax(jump, float(np.max(np.abs(lhs - rhs) / np.abs(lhs))))
    return WIEReport(diff, jump, bnd)


def xi_wedge(spec: WedgeSpec, mu_probe: float = 1.0) -> float | Divergent:
    """Total mass ``int int mu / (mu - lam) exp(2 theta (lam + mu)) / sigma d lam d mu`` over the wedge.

    The sum over ``n`` is taken first.  The inner integral over ``lam`` is
    singular at the diagonal; it is tested for divergence at ``mu_probe``
    before the outer integral is attempted.
    """
    th = spec.theta

    def inner(m):
        g = lambda l: m / (m - l) * math.exp(2 * th * (l + m)) / float(spec.sigma_fn(l, m))
        return _improper_at(g, 0.0, m, "right")

    probe = inner(mu_probe)
    if isinstance(probe, Divergent):
        return Divergent(f"mass near the diagonal lam = mu diverges ({probe.reason})")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)

        def outer(m):
            r = inner(m)
            if isinstance(r, Divergent):
                raise _DivergentInner(m)
            return r

        try:
            total, err = integrate.quad(outer, 0.0, math.inf, limit=200)
        except _DivergentInner as exc:
            return Divergent(f"mass near the diagonal diverges at mu = {exc.args[0]:.4g}")
    if not math.isfinite(total) or err > 1e-6 * max(1.0, abs(total)):
        return Divergent("the mass over large rates does not converge")
    return total


class _DivergentInner(Exception):
    pass


# -- drift switching -----------------------------------------------------------


def kappa_switch(spec: SwitchSpec, z, x):
    """Invariant density ``exp(2 z x) / sigma(z)`` against ``v(dz) dx``."""
    return math.exp(2 * z * x) / float(spec.sigma_fn(z))


def wie_check_switch(spec: SwitchSpec, xs=None, h: float = 1e-4, kappa=None) -> WIEReport:
    """Base-adjoint residual in ``x`` and discrete environment balance at each sampled ``x``."""
    kap = kappa or (lambda z, x: kappa_switch(spec, z, x))
    xs = np.linspace(-2, 2, 41) if xs is None else np.asarray(xs, dtype=float)
    envs = spec.envs
    v = spec.weights
    diff = jump = 0.0
    for z in envs:
        f = np.vectorize(lambda x, z=z: kap(z, x))
        r = 0.5 * _d2(f, xs, h) - z * _d1(f, xs, h)
        diff = _nanmax(diff, float(np.max(np.abs(r) / np.abs(f(xs)))))
    for x in xs:
        T = np.asarray(spec.rates(x), dtype=float)
        flow = np.array([[v[i] * kap(z, x) * float(spec.sigma_fn(z)) * math.exp(-2 * z * x) * T[i, j]
                          for j in range(len(envs))] for i, z in enumerate(envs)])
        np.fill_diagonal(flow, 0.0)
        out, inn = flow.sum(axis=1), flow.sum(axis=0)
        jump = _nanmax(jump, float(np.max(np.abs(out - inn) / np.maximum(np.abs(out), 1e-300))))
    return WIEReport(diff, jump)


def xi_switch(spec: SwitchSpec) -> float | Divergent:
    """Total mass ``sum_z v_z int exp(2 z x) / sigma(z) dx`` over the base interval."""
    lo, hi = spec.x_interval.lo, spec.x_interval.hi
    total = 0.0
    for v, z in zip(spec.weights, spec.envs):
        s = float(spec.sigma_fn(z))
        if z == 0:
            mass = (hi - lo) / s
        elif (z > 0 and math.isinf(hi)) or (z < 0 and math.isinf(lo)):
            return Divergent(f"exp(2 z x) with z = {z:g} is not integrable on [{lo:g}, {hi:g}]")
        else:
            mass = (math.exp(2 * z * hi) - math.exp(2 * z * lo)) / (2 * z * s)
        if not math.isfinite(mass):
            return Divergent(f"environment {z:g} has infinite mass")
        total += v * mass
    return total


# -- two-component Wiener model ------------------------------------------------


def kappa_twocomp(spec: TwoCompSpec, z, x=None) -> float:
    """Invariant density ``exp(2 b z) / sigma(z)``; constant in the base coordinate."""
    return math.exp(2 * spec.b * z) / float(spec.sigma_fn(z))


def xi_twocomp(spec: TwoCompSpec) -> Divergent:
    """Always divergent: the base invariant measure is Lebesgue measure on the whole space."""
    return Divergent(f"base invariant measure is Lebesgue on R^{spec.d}; the total mass is infinite")


def wie_check_twocomp(spec: TwoCompSpec, grid=None, h: float = 1e-4, kappa=None) -> WIEReport:
    """Adjoint and zero-flux residuals in the volatility coordinate.

    With ``f = sigma kappa`` the identity is ``(1/2) f'' - b f' = 0`` on
    ``z > 0`` and ``(1/2) f' - b f = 0`` at ``z = 0``.  The base coordinate
    carries Lebesgue measure, invariant for any volatility, so there is no
    jump or base residual to check.
    """
    kap = kappa or (lambda z: np.exp(2 * spec.b * np.asarray(z, dtype=float)) / spec.sigma_fn(z))
    b = spec.b
    grid = np.linspace(0.05, 5.0, 100) if grid is None else np.asarray(grid, dtype=float)
    f = lambda z: spec.sigma_fn(z) * kap(z)
    diff = float(np.max(np.abs(0.5 * _d2(f, grid, h) - b * _d1(f, grid, h)) / np.abs(f(grid))))
    pt = 2 * h
    bnd = float(abs(0.5 * _d1_4(f, pt, h) - b * f(pt)) / abs(float(f(pt))))
    return WIEReport(diff, 0.0, bnd)


# -- simulation ------------------------------------------------------------------


@dataclass
class HybridPath:
    """Recorded joint path.

    ``env`` has shape ``(n_rec, n_paths)`` or ``(n_rec, n_paths, 2)``, ``base``
    ``(n_rec, n_paths)`` or ``(n_rec, n_paths, d)``.  ``L``/``U`` are the
    cumulative local times of the reflected component at its lower and upper
    end (per coordinate for the wedge's covering process).
    """

    t: np.ndarray
    env: np.ndarray
    base: np.ndarray
    L: np.ndarray
    U: np.ndarray
    jumps: np.ndarray
    acceptance: np.ndarray | None = None

    def after(self, t_burn: float) -> "HybridPath":
        k = self.t >= t_burn
        return HybridPath(self.t[k], self.env[k], self.base[k], self.L[k], self.U[k], self.jumps, self.acceptance)


class _Recorder:
    def __init__(self, n_steps, record_every):
        self.every = record_every
        self.rows: list = []
        self.n_steps = n_steps

    def __call__(self, k, t, *arrays):
        if k == 0 or (k % self.every == 0) or k == self.n_steps:
            self.rows.append((t,) + tuple(np.array(a, copy=True) for a in arrays))

    def stacked(self):
        cols = list(zip(*self.rows))
        return [np.array(c) for c in cols]


def _propose(y, s, drift, interval, rng):
    """Exact draw of ``dY = drift dt + dW`` (reflected) after intrinsic time ``s``.

    On a half-line the free endpoint and the minimum of the Brownian bridge
    between the endpoints are drawn jointly and the Skorohod map gives the
    reflected value with its local-time increment.  On a bounded interval
    (``drift == 0`` only) one Gaussian step is folded back, which is exact in
    law; the local time is then the overshoot of the last fold only.
    """
    lo, hi = interval.lo, interval.hi
    ss = s[:, None] if y.ndim == 2 else s
    X = drift * ss + np.sqrt(ss) * rng.standard_normal(y.shape)
    if math.isinf(hi):
        u = rng.random(y.shape)
        m = 0.5 * (X - np.sqrt(X * X - 2.0 * ss * np.log1p(-u)))
        dL = np.maximum(0.0, lo - y - m)
        return y + X + dL, dL, np.zeros_like(y)
    if drift != 0:
        raise ValueError("drift on a bounded interval is not supported")
    w = hi - lo
    r = np.mod(y + X - lo, 2 * w)
    return fold(lo + np.where(r > 1.5 * w, r - 2 * w, r), interval)


def _log_norm_pdf(u, s):
    return -0.5 * u * u / s - 0.5 * np.log(2 * np.pi * s)


def _log_transition(x, y, s, drift, interval):
    """Log density of :func:`_propose` from ``x`` to ``y`` (summed over coordinates)."""
    lo, hi = interval.lo, interval.hi
    ss = s[:, None] if x.ndim == 2 else s
    if math.isinf(hi):
        a, c = x - lo, y - lo
        t1 = _log_norm_pdf(c - a - drift * ss, ss)
        t2 = 2 * drift * c + _log_norm_pdf(c + a + drift * ss, ss)
        out = np.logaddexp(t1, t2)
        if drift != 0:
            t3 = np.log(2 * abs(drift)) + 2 * drift * c + log_ndtr(-(c + a + drift * ss) / np.sqrt(ss))
            if drift < 0:
                out = np.logaddexp(out, t3)
            else:
                with np.errstate(divide="ignore", invalid="ignore"):
                    out = out + np.log1p(-np.exp(np.minimum(t3 - out, 0.0)))
    else:
        w = hi - lo
        wide = ss > 16 * w * w
        sc = np.minimum(ss, 16 * w * w)
        K = int(np.ceil(4 * np.sqrt(np.max(sc)) / w)) + 2 if np.size(sc) else 2
        k = np.arange(-K, K + 1) * 2 * w
        xs, ys, scs = x[..., None], y[..., None], sc[..., None]
        terms = np.concatenate([_log_norm_pdf(ys - xs + k, scs), _log_norm_pdf(2 * lo - ys - xs + k, scs)], axis=-1)
        mx = terms.max(axis=-1)
        out = mx + np.log(np.exp(terms - mx[..., None]).sum(axis=-1))
        out = np.where(wide, -math.log(w), out)
    return out.sum(axis=-1) if x.ndim == 2 else out


def _env_step(y, n, clock, dt, drift, interval, rng):
    """Metropolis-corrected environment move with the discrete state frozen.

    The proposal runs the environment diffusion on the clock ``clock(y, n) dt``
    frozen at the current value; the correction makes the move exactly
    invariant for the conditional density ``speed(y) / clock(y, n)``, so a
    large or rapidly varying clock does not bias the stationary law.  As
    ``dt -> 0`` the acceptance probability tends to 1.
    """
    def log_target(v):
        with np.errstate(divide="ignore", over="ignore"):
            lg = np.log(clock(v, n))
        sp = 2 * drift * (v.sum(axis=1) if v.ndim == 2 else v)
        return sp - lg, lg

    lp0, lg0 = log_target(y)
    s0 = np.clip(np.exp(lg0) * dt, 1e-300, 1e12)
    prop, dL, dU = _propose(y, s0, drift, interval, rng)
    lp1, lg1 = log_target(prop)
    s1 = np.clip(np.exp(lg1) * dt, 1e-300, 1e12)
    with np.errstate(invalid="ignore"):
        log_a = lp1 - lp0 + _log_transition(prop, y, s1, drift, interval) - _log_transition(y, prop, s0, drift, interval)
    acc = np.log(rng.random(len(y))) < np.nan_to_num(log_a, nan=-np.inf)
    keep = acc[:, None] if y.ndim == 2 else acc
    return np.where(keep, prop, y), np.where(keep, dL, 0.0), np.where(keep, dU, 0.0), acc


def _thin_queue(rng, n, birth, death, dt):
    """Exact birth-death moves over ``dt`` with frozen rates (thinning against a local bound)."""
    bound = birth + death
    k = rng.poisson(bound * dt)
    count = 0
    for j in range(int(k.max()) if k.size else 0):
        act = k > j
        u = rng.random(n.shape) * bound
        up = act & (u < birth)
        down = act & (u >= birth) & (n >= 1)
        n = n + up - down
        count += int(up.sum() + down.sum())
    return n, count


def _queue_family(spec):
    if isinstance(spec, LambdaDiffusionSpec):
        eps = spec.eps
        return dict(
            interval=Interval(eps, 1.0), drift=0.0, dim=1,
            init=0.5 * (eps + 1.0),
            coords=lambda y: (y,),
            clock=lambda y, n: spec.sigma_fn(y) * spec.beta_fn(n.astype(float)) ** 2 / y ** n,
            birth=lambda y: spec.alpha_fn(y) * y,
            death=lambda y: spec.alpha_fn(y),
        )
    if isinstance(spec, MuBMSpec):
        b = spec.b
        return dict(
            interval=Interval(1.0, math.inf), drift=b, dim=1,
            init=1.5,
            coords=lambda y: (y,),
            clock=lambda y, n: y ** n * spec.sigma_fn(y),
            birth=lambda y: spec.alpha_fn(y),
            death=lambda y: spec.alpha_fn(y) * y,
        )
    if isinstance(spec, WedgeSpec):
        th = spec.theta

        def coords(y):
            return wedge_project(y[:, 0], y[:, 1])

        def clock(y, n):
            lam, mu = coords(y)
            return (mu / lam) ** n * spec.sigma_fn(lam, mu)

        return dict(
            interval=Interval(0.0, math.inf), drift=th, dim=2,
            init=(0.3, 0.8),
            coords=coords,
            clock=clock,
            birth=lambda y: spec.alpha_fn(*coords(y)) * coords(y)[0],
            death=lambda y: spec.alpha_fn(*coords(y)) * coords(y)[1],
        )
    raise TypeError(f"not a queue model: {type(spec).__name__}")


def _simulate_queue(spec, t_end, dt, rng, n_paths, init, record_every, wedge_direct):
    fam = _queue_family(spec)
    y0 = fam["init"] if init is None else init[0]
    n0 = 0 if init is None else init[1]
    if fam["dim"] == 1:
        y = np.full(n_paths, float(y0))
    else:
        y = np.tile(np.asarray(y0, dtype=float), (n_paths, 1))
    n = np.full(n_paths, int(n0), dtype=np.int64)
    L = np.zeros_like(y)
    U = np.zeros_like(y)
    steps = int(round(t_end / dt))
    rec = _Recorder(steps, record_every)
    env_view = (lambda y: np.stack(fam["coords"](y), axis=-1)) if fam["dim"] == 2 else (lambda y: y)
    rec(0, 0.0, env_view(y), n, L, U)
    jumps = np.zeros(n_paths, dtype=np.int64)
    accepted = np.zeros(n_paths)
    for k in range(1, steps + 1):
        y, dL, dU, acc = _env_step(y, n, fam["clock"], dt, fam["drift"], fam["interval"], rng)
        accepted += acc
        if wedge_direct and fam["dim"] == 2:
            y = np.stack(wedge_project(y[:, 0], y[:, 1]), axis=-1)
        L += dL
        U += dU
        n_new, c = _thin_queue(rng, n, fam["birth"](y), fam["death"](y), dt)
        jumps += n_new != n
        n = n_new
        rec(k, k * dt, env_view(y), n, L, U)
    t, env, base, Ls, Us = rec.stacked()
    return HybridPath(t, env, base, Ls, Us, jumps, accepted / max(steps, 1))


def _simulate_switch(spec: SwitchSpec, t_end, dt, rng, n_paths, init, record_every):
    envs = np.array(spec.envs)
    iz = np.zeros(n_paths, dtype=np.int64) if init is None else np.full(n_paths, list(envs).index(init[0]))
    x = np.zeros(n_paths) if init is None else np.full(n_paths, float(init[1]))
    alpha = np.array([float(spec.alpha_fn(z)) for z in envs])
    sigma = np.array([float(spec.sigma_fn(z)) for z in envs])
    L = np.zeros(n_paths)
    U = np.zeros(n_paths)
    steps = int(round(t_end / dt))
    rec = _Recorder(steps, record_every)
    rec(0, 0.0, envs[iz], x, L, U)
    jumps = np.zeros(n_paths, dtype=np.int64)
    accepted = np.zeros(n_paths)
    sq = math.sqrt(dt)
    for k in range(1, steps + 1):
        a = alpha[iz]
        z = envs[iz]
        # folded driftless proposal (symmetric kernel); the drift enters through the
        # acceptance ratio exp(2 z (x' - x)) of the conditional density exp(2 z x)
        prop, dL, dU = fold(x + np.sqrt(a) * sq * rng.standard_normal(n_paths), spec.x_interval)
        acc = np.log(rng.random(n_paths)) < 2.0 * z * (prop - x)
        x = np.where(acc, prop, x)
        accepted += acc
        L += np.where(acc, dL, 0.0)
        U += np.where(acc, dU, 0.0)
        # environment jumps with x frozen over the step
        T = spec.rates_batch(x)
        rates = sigma[None, :, None] * np.exp(-2.0 * envs[None, :, None] * x[:, None, None]) * T
        rates[:, np.arange(len(envs)), np.arange(len(envs))] = 0.0
        exit_all = rates.sum(axis=2)
        bound = exit_all.max(axis=1)
        kcand = rng.poisson(bound * dt)
        for j in range(int(kcand.max()) if kcand.size else 0):
            act = kcand > j
            row = rates[np.arange(n_paths), iz]
            tot = row.sum(axis=1)
            u = rng.random(n_paths) * bound
            acc = act & (u < tot)
            if acc.any():
                cum = np.cumsum(row[acc], axis=1)
                pick = (cum < u[acc][:, None]).sum(axis=1)
                iz[acc] = pick
                jumps[acc] += 1
        rec(k, k * dt, envs[iz], x, L, U)
    t, env, base, Ls, Us = rec.stacked()
    return HybridPath(t, env, base, Ls, Us, jumps, accepted / max(steps, 1))


def _simulate_twocomp(spec: TwoCompSpec, t_end, dt, rng, n_paths, init, record_every):
    z = np.full(n_paths, 1.0 if init is None else float(init[0]))
    x = np.zeros((n_paths, spec.d)) if init is None else np.tile(np.asarray(init[1], dtype=float), (n_paths, 1))
    L = np.zeros(n_paths)
    U = np.zeros(n_paths)
    steps = int(round(t_end / dt))
    rec = _Recorder(steps, record_every)
    rec(0, 0.0, z, x, L, U)
    sq = math.sqrt(dt)
    half = Interval(0.0, math.inf)
    clock = lambda v, _: spec.sigma_fn(v)
    accepted = np.zeros(n_paths)
    for k in range(1, steps + 1):
        x = x + (np.sqrt(spec.alpha_fn(z)) * z)[:, None] * sq * rng.standard_normal(x.shape)
        z, dL, dU, acc = _env_step(z, None, clock, dt, spec.b, half, rng)
        accepted += acc
        L += dL
        rec(k, k * dt, z, x, L, U)
    t, env, base, Ls, Us = rec.stacked()
    return HybridPath(t, env, base, Ls, Us, np.zeros(n_paths, dtype=np.int64), accepted / max(steps, 1))


def simulate_model(spec, t_end: float, dt: float, rng=None, n_paths: int = 1, init=None, record_every: int = 1,
                   wedge_direct: bool = False) -> HybridPath:
    """Simulate one of the five hybrid families by operator splitting.

    Each step first moves the continuous coordinate with the current
    discrete state, then applies the exact jump dynamics of the discrete
    coordinate over ``dt`` with the continuous coordinate frozen.  The
    continuous move is an exact reflected-Brownian proposal on the frozen
    clock (the time-change factor times ``dt``) followed by a Metropolis
    correction towards the conditional invariant density.  Both half-steps
    then leave the joint invariant density unchanged for every ``dt``, and
    the acceptance rate (recorded in ``HybridPath.acceptance``) tends to 1
    as ``dt -> 0``.

    ``init`` is ``(environment, base)``; ``wedge_direct`` replaces the
    covering-process projection by reflection across the diagonal at every
    step (the two agree in law).
    """
    rng = as_rng(rng)
    if isinstance(spec, LambdaDiffusionSpec):
        cond = spec.noise_condition()
        if not math.isfinite(cond) or cond > 1e12:
            warnings.warn("sum_n beta(n)^2 / eps^n appears to diverge; the combined process may not be well posed",
                          RuntimeWarning, stacklevel=2)
    if isinstance(spec, (LambdaDiffusionSpec, MuBMSpec, WedgeSpec)):
        return _simulate_queue(spec, t_end, dt, rng, n_paths, init, record_every, wedge_direct)
    if isinstance(spec, SwitchSpec):
        return _simulate_switch(spec, t_end, dt, rng, n_paths, init, record_every)
    if isinstance(spec, TwoCompSpec):
        return _simulate_twocomp(spec, t_end, dt, rng, n_paths, init, record_every)
    raise TypeError(f"unknown model spec {type(spec).__name__}")
