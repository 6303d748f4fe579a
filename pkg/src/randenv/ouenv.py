"""Two-component diffusions: an Ornstein-Uhlenbeck base whose noise level is a diffusing environment.

The base at environment ``z`` has generator ``a(x) d/dx + (z**2 / 2) d2/dx2``
with invariant density ``m(z, x)``; the environment has generator
``c(z) d/dz + (C(z) / 2) d2/dz2`` with invariant density ``w(z)``.  The
combined generator is

    R phi = alpha(z) [a phi_x + z**2 / 2 phi_xx] + sigma(z) / m(z, x) [c phi_z + C / 2 phi_zz]

and ``m(z, x) w(z) / sigma(z)`` is invariant for it (with Neumann boundary
behaviour on a rectangle).  Three concrete environments are provided:

* ``B`` - Brownian motion with drift ``b``, ``w = exp(2 b z)``;
* ``C`` - Ornstein-Uhlenbeck, ``w = exp(-z**2)``;
* ``D`` - Cox-Ingersoll-Ross, ``C(z) = z``, ``w = z**(2ab-1) exp(-2 a z)``.
"""

from __future__ import annotations

import json
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import log_ndtr

from ._common import as_function, as_rng
from .ctmc import RateKernel, StateSpace, build_generator, stationary_solve
from .sde import Interval, fold

__all__ = [
    "CombinedDiffusionSpec",
    "TestFunction",
    "QuadratureRecord",
    "QuadratureError",
    "RectPath",
    "GateReport",
    "make_model",
    "apply_R",
    "adjoint_residual_base",
    "adjoint_residual_env",
    "kappa_density",
    "neumann_family",
    "wie_quadrature",
    "density_ou",
    "density_cir",
    "log_bessel_i",
    "density_rbm_spectral",
    "density_rbm_reference",
    "rbm_density_gate",
    "simulate_rect_system",
    "fd_generator_check",
]


class QuadratureError(RuntimeError):
    pass


@dataclass
class CombinedDiffusionSpec:
    """Coefficients, invariant densities and geometry of a combined diffusion."""

    a: Callable
    c: Callable
    C: Callable
    m: Callable
    w: Callable
    alpha: object = 1.0
    sigma: object = 1.0
    z_interval: Interval = field(default_factory=lambda: Interval(0.0, math.inf))
    x_interval: Interval = field(default_factory=Interval)
    name: str = "custom"

    def __post_init__(self):
        self.alpha_fn = as_function(self.alpha)
        self.sigma_fn = as_function(self.sigma)

    def on_rectangle(self, z_lo, z_hi, x_lo, x_hi) -> "CombinedDiffusionSpec":
        """Same model confined to ``[z_lo, z_hi] x [x_lo, x_hi]`` with reflection on every side."""
        return CombinedDiffusionSpec(self.a, self.c, self.C, self.m, self.w, self.alpha, self.sigma,
                                     Interval(z_lo, z_hi), Interval(x_lo, x_hi), self.name)

    @property
    def bounded(self) -> bool:
        zi, xi = self.z_interval, self.x_interval
        return all(math.isfinite(v) for v in (zi.lo, zi.hi, xi.lo, xi.hi))


def make_model(which: str, **params) -> CombinedDiffusionSpec:
    """Model ``"B"`` (param ``b``), ``"C"`` or ``"D"`` (params ``a``, ``b``) with OU base ``a(x) = -x``."""
    which = which.upper()
    a = lambda x: -x
    m = lambda z, x: np.exp(-(x * x) / (z * z))
    if which == "B":
        b = float(params.pop("b", 0.0))
        spec = CombinedDiffusionSpec(a, lambda z: b + 0 * z, lambda z: 1.0 + 0 * z, m, lambda z: np.exp(2 * b * z),
                                     z_interval=Interval(0.0, math.inf), name="B")
    elif which == "C":
        spec = CombinedDiffusionSpec(a, lambda z: -z, lambda z: 1.0 + 0 * z, m, lambda z: np.exp(-z * z),
                                     z_interval=Interval(-math.inf, math.inf), name="C")
    elif which == "D":
        ca = float(params.pop("a", 1.0))
        cb = float(params.pop("b", 1.0))
        if not (ca >= 0 and cb > 0):
            raise ValueError("model D needs a >= 0 and b > 0")
        q = 2 * ca * cb - 1
        spec = CombinedDiffusionSpec(a, lambda z: ca * (cb - z), lambda z: z, m,
                                     lambda z: np.power(z, q) * np.exp(-2 * ca * z),
                                     z_interval=Interval(0.0, math.inf), name="D")
        spec.params = {"a": ca, "b": cb}
    else:
        raise ValueError(f"unknown model {which!r}; expected B, C or D")
    if "alpha" in params:
        spec.alpha, spec.alpha_fn = params["alpha"], as_function(params.pop("alpha"))
    if "sigma" in params:
        spec.sigma, spec.sigma_fn = params["sigma"], as_function(params.pop("sigma"))
    if params:
        raise ValueError(f"unexpected parameters for model {which}: {sorted(params)}")
    return spec


@dataclass
class TestFunction:
    """Test function with its partial derivatives (``None`` means use finite differences)."""

    f: Callable
    fz: Callable | None = None
    fx: Callable | None = None
    fzz: Callable | None = None
    fxx: Callable | None = None
    name: str = "phi"
    neumann: bool = True

    def derivs(self, z, x, h=1e-5):
        hz = h * max(1.0, abs(z))
        hx = h * max(1.0, abs(x))
        f = self.f
        fz = self.fz(z, x) if self.fz else (f(z + hz, x) - f(z - hz, x)) / (2 * hz)
        fx = self.fx(z, x) if self.fx else (f(z, x + hx) - f(z, x - hx)) / (2 * hx)
        fzz = self.fzz(z, x) if self.fzz else (f(z + hz, x) - 2 * f(z, x) + f(z - hz, x)) / hz**2
        fxx = self.fxx(z, x) if self.fxx else (f(z, x + hx) - 2 * f(z, x) + f(z, x - hx)) / hx**2
        return fz, fx, fzz, fxx


def apply_R(spec: CombinedDiffusionSpec, phi, z: float, x: float, fd: bool = False) -> float:
    """Combined generator applied to ``phi`` at ``(z, x)``.

    ``phi`` is a :class:`TestFunction` or a plain callable ``f(z, x)``;
    plain callables and ``fd=True`` use central differences.

    Raises
    ------
    OverflowError
        If ``m(z, x) < 1e-300``, where ``1 / m`` is not representable.
    """
    if not isinstance(phi, TestFunction):
        phi = TestFunction(phi)
    elif fd:
        phi = TestFunction(phi.f, name=phi.name)
    mz = float(spec.m(z, x))
    if mz < 1e-300:
        raise OverflowError(f"m(z, x) = {mz:.3g} at (z, x) = ({z}, {x}); the environment factor 1/m overflows")
    fz, fx, fzz, fxx = phi.derivs(z, x)
    base = float(spec.a(x)) * fx + 0.5 * z * z * fxx
    env = float(spec.c(z)) * fz + 0.5 * float(spec.C(z)) * fzz
    return float(spec.alpha_fn(z)) * base + float(spec.sigma_fn(z)) / mz * env


def adjoint_residual_base(spec: CombinedDiffusionSpec, z: float, x, h: float = 1e-4, m=None):
    """``-d/dx (a m) + (z**2 / 2) d2m/dx2`` by central differences (``m`` may be overridden)."""
    m = m or spec.m
    x = np.asarray(x, dtype=float)
    am = lambda u: spec.a(u) * m(z, u)
    return -(am(x + h) - am(x - h)) / (2 * h) + 0.5 * z * z * (m(z, x + h) - 2 * m(z, x) + m(z, x - h)) / h**2


def adjoint_residual_env(spec: CombinedDiffusionSpec, z, h: float = 1e-4, w=None):
    """``-d/dz (c w) + (1/2) d2/dz2 (C w)`` by central differences (``w`` may be overridden)."""
    w = w or spec.w
    z = np.asarray(z, dtype=float)
    cw = lambda u: spec.c(u) * w(u)
    Cw = lambda u: spec.C(u) * w(u)
    return -(cw(z + h) - cw(z - h)) / (2 * h) + 0.5 * (Cw(z + h) - 2 * Cw(z) + Cw(z - h)) / h**2


def kappa_density(spec: CombinedDiffusionSpec, z, x):
    """Invariant density ``m(z, x) w(z) / sigma(z)`` against ``dz dx``."""
    return spec.m(z, x) * spec.w(z) / spec.sigma_fn(z)


def neumann_family(spec: CombinedDiffusionSpec, modes=((0, 1), (1, 0), (1, 1), (0, 2), (2, 0), (2, 1))):
    """Products of cosines ``cos(j pi (z - z1)/Lz) cos(k pi (x - x1)/Lx)`` with zero normal derivative."""
    z1, Lz = spec.z_interval.lo, spec.z_interval.width
    x1, Lx = spec.x_interval.lo, spec.x_interval.width
    out = []
    for j, k in modes:
        wz, wx = j * math.pi / Lz, k * math.pi / Lx

        def f(z, x, wz=wz, wx=wx):
            return math.cos(wz * (z - z1)) * math.cos(wx * (x - x1))

        def fz(z, x, wz=wz, wx=wx):
            return -wz * math.sin(wz * (z - z1)) * math.cos(wx * (x - x1))

        def fx(z, x, wz=wz, wx=wx):
            return -wx * math.cos(wz * (z - z1)) * math.sin(wx * (x - x1))

        def fzz(z, x, wz=wz, wx=wx):
            return -wz * wz * math.cos(wz * (z - z1)) * math.cos(wx * (x - x1))

        def fxx(z, x, wz=wz, wx=wx):
            return -wx * wx * math.cos(wz * (z - z1)) * math.cos(wx * (x - x1))

        out.append(TestFunction(f, fz, fx, fzz, fxx, name=f"cos{j}{k}"))
    return out


def _weighted_R(spec, phi, z, x):
    # (R phi) * kappa with the 1/m of the environment part cancelled against m in kappa
    fz, fx, fzz, fxx = phi.derivs(z, x)
    wz = float(spec.w(z)) / float(spec.sigma_fn(z))
    base = float(spec.a(x)) * fx + 0.5 * z * z * fxx
    env = float(spec.c(z)) * fz + 0.5 * float(spec.C(z)) * fzz
    return float(spec.alpha_fn(z)) * base * float(spec.m(z, x)) * wz + float(spec.sigma_fn(z)) * env * wz


@dataclass
class QuadratureRecord:
    model: str
    phi_id: str
    integral: float
    tolerance: float

    def to_json(self) -> str:
        return json.dumps({"model": self.model, "phi_id": self.phi_id, "integral": self.integral,
                           "tolerance": self.tolerance}, sort_keys=True)


def wie_quadrature(spec: CombinedDiffusionSpec, family=None, epsabs: float = 1e-11, epsrel: float = 1e-11,
                   max_error: float = 1e-7) -> list[QuadratureRecord]:
    """``int R phi d kappa`` over the model's domain for each test function.

    The domain is ``spec.z_interval x spec.x_interval`` (infinite ends
    allowed).  Each record carries the quadrature's error estimate as
    ``tolerance``.

    Raises
    ------
    QuadratureError
        If an error estimate exceeds ``max_error``.
    """
    family = neumann_family(spec) if family is None else family
    zi, xi = spec.z_interval, spec.x_interval
    out = []
    for phi in family:
        if not isinstance(phi, TestFunction):
            phi = TestFunction(phi)
        integrand = lambda x, z, phi=phi: _weighted_R(spec, phi, z, x)
        val, err = integrate.dblquad(integrand, zi.lo, zi.hi, xi.lo, xi.hi, epsabs=epsabs, epsrel=epsrel)
        if not (math.isfinite(val) and err <= max_error):
            raise QuadratureError(f"quadrature for {phi.name} on model {spec.name} reached only error {err:.3g}")
        out.append(QuadratureRecord(spec.name, phi.name, float(val), float(err)))
    return out


# -- transition densities -------------------------------------------------------


def density_ou(t: float, x, x2, z: float, normalized: bool = True):
    """Transition density of ``dX = -X dt + z dW`` from ``x`` to ``x2`` after time ``t``.

    The Gaussian has mean ``x e^{-t}`` and variance ``z**2 (1 - e^{-2t}) / 2``.
    ``normalized=False`` omits the factor ``1 / sqrt(1 - e^{-2t})``; that
    variant integrates to ``sqrt(1 - e^{-2t})`` and is kept only for comparison.
    """
    if not t > 0 or z == 0:
        raise ValueError("need t > 0 and z != 0")
    s = -math.expm1(-2 * t)
    dens = np.exp(-(np.asarray(x2) - np.asarray(x) * math.exp(-t)) ** 2 / (z * z * s)) / (math.sqrt(math.pi) * abs(z))
    return dens / math.sqrt(s) if normalized else dens


def log_bessel_i(q: float, y: float, rtol: float = 1e-12, max_terms: int = 100_000) -> float:
    """``log I_q(y)`` for ``y > 0``, ``q > -1`` by the ascending series summed in log space.

    Summation stops once the terms decrease and the next one is below
    ``rtol`` times the partial sum.
    """
    if y <= 0:
        raise ValueError("argument must be positive")
    if q <= -1:
        raise ValueError("order must exceed -1")
    lh = math.log(0.5 * y)
    h2 = 0.25 * y * y
    lt = q * lh - math.lgamma(q + 1)
    total = 1.0  # partial sum relative to exp(anchor)
    anchor = lt
    cur = 0.0  # log of current term relative to anchor
    for k in range(max_terms):
        ratio = h2 / ((k + 1) * (k + q + 1))
        cur += math.log(ratio)
        if cur > 0:
            total *= math.exp(-cur)
            anchor += cur
            cur = 0.0
            total += 1.0
        else:
            term = math.exp(cur)
            total += term
            if ratio < 1 and term < rtol * total:
                return anchor + math.log(total)
    raise RuntimeError(f"Bessel series did not converge within {max_terms} terms (q={q}, y={y})")


def density_cir(t: float, z: float, z2: float, a: float, b: float) -> float:
    """Transition density of ``dZ = a (b - Z) dt + sqrt(Z) dW`` from ``z`` to ``z2`` after ``t``."""
    if not (t > 0 and z > 0 and z2 > 0 and a > 0 and b > 0):
        raise ValueError("t, z, z2, a, b must be positive")
    e = math.exp(-a * t)
    c = 2 * a / (-math.expm1(-a * t))
    q = 2 * a * b - 1
    u, v = c * z * e, c * z2
    return math.exp(math.log(c) - u - v + 0.5 * q * math.log(v / u) + log_bessel_i(q, 2 * math.sqrt(u * v)))


def density_rbm_spectral(t: float, z: float, z2: float, b: float) -> float:
    """Candidate spectral expansion for reflected Brownian motion with drift ``b``, taken term by term.

    Its leading term does not depend on ``z2``; use :func:`rbm_density_gate`
    before relying on it.
    """
    first = 2 * b * math.exp(2 * b * z) / math.expm1(2 * b * z)
    g = lambda s: math.exp(-s * s * t / 2) / (s * s + b * b) * (s * math.cos(s * z) + b * math.sin(s * z)) \
        * (s * math.cos(s * z2) + b * math.sin(s * z2))
    upper = math.sqrt(2 * 40 / t)
    val = integrate.quad(g, 0.0, upper, limit=400)[0]
    return first + 2 / math.pi * math.exp(b * (z2 - z) - b * b * t / 2) * val


def density_rbm_reference(t: float, z: float, z2, b: float):
    """Transition density of Brownian motion with drift ``b`` reflected at 0 (method of images)."""
    z2 = np.asarray(z2, dtype=float)
    s = math.sqrt(t)
    lp = lambda u: -0.5 * (u / s) ** 2 - math.log(s * math.sqrt(2 * math.pi))
    out = np.exp(lp(z2 - z - b * t)) + np.exp(2 * b * z2 + lp(z2 + z + b * t))
    corr = 2 * b * np.exp(2 * b * z2 + log_ndtr(-(z2 + z + b * t) / s))
    return out - corr


@dataclass
class GateReport:
    """Outcome of validating a density formula before use."""

    passed: bool
    masses: dict
    max_deviation: float
    detail: str


def rbm_density_gate(t: float = 1.0, z: float = 0.5, b: float = -1.0, tol: float = 1e-6) -> GateReport:
    """Validate :func:`density_rbm_spectral`: mass on ``(0, K)`` for growing ``K`` and agreement with the reference."""
    masses = {}
    for K in (5.0, 10.0, 20.0):
        masses[K] = integrate.quad(lambda y: density_rbm_spectral(t, z, y, b), 0.0, K, limit=400)[0]
    pts = np.linspace(0.1, 3.0, 8)
    dev = max(abs(density_rbm_spectral(t, z, y, b) - float(density_rbm_reference(t, z, y, b))) for y in pts)
    ok = all(abs(v - 1.0) < tol for v in masses.values()) and dev < tol
    detail = "normalised and consistent with the reference" if ok else \
        "mass on (0, K) does not settle at 1 or the values disagree with the reference density; gate closed"
    return GateReport(ok, masses, float(dev), detail)


# -- simulation -----------------------------------------------------------------


@dataclass
class RectPath:
    """Joint path of ``(Z, X)`` with the four cumulative local times."""

    t: np.ndarray
    z: np.ndarray
    x: np.ndarray
    LZ: np.ndarray
    UZ: np.ndarray
    LX: np.ndarray
    UX: np.ndarray
    dt: float

    def after(self, t_burn: float) -> "RectPath":
        k = self.t >= t_burn
        return RectPath(self.t[k], self.z[k], self.x[k], self.LZ[k], self.UZ[k], self.LX[k], self.UX[k], self.dt)

    def to_csv(self, path, path_index: int = 0) -> None:
        cols = [self.t] + [a.reshape(len(self.t), -1)[:, path_index]
                           for a in (self.z, self.x, self.LZ, self.UZ, self.LX, self.UX)]
        with open(path, "w", newline="") as fh:
            fh.write("t,z,x,LZ,UZ,LX,UX\n")
            for row in zip(*cols):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _move_scale(spec, dt, n=41):
    zi, xi = spec.z_interval, spec.x_interval
    Z, X = np.meshgrid(np.linspace(zi.lo, zi.hi, n), np.linspace(xi.lo, xi.hi, n))
    inv_m = 1.0 / spec.m(Z, X)
    sig = np.vectorize(lambda z: float(spec.sigma_fn(z)))(Z)
    alp = np.vectorize(lambda z: float(spec.alpha_fn(z)))(Z)
    dz = np.abs(sig * inv_m * spec.c(Z)) * dt + np.sqrt(np.abs(sig * inv_m * spec.C(Z)) * dt)
    dx = np.abs(alp * spec.a(X)) * dt + np.sqrt(alp) * np.abs(Z) * math.sqrt(dt)
    return float(dz.max()) / zi.width, float(dx.max()) / xi.width


def simulate_rect_system(spec: CombinedDiffusionSpec, t_end: float, dt: float, rng=None, n_paths: int = 1,
                         init=None, record_every: int = 1, freeze_env: bool = False,
                         max_move: float = 0.1) -> RectPath:
    """Euler scheme with folding reflection for the combined diffusion on a bounded rectangle.

    Base: ``dX = alpha(Z) a(X) dt + sqrt(alpha(Z)) Z dW1``.  Environment:
    ``dZ = sigma(Z) c(Z) / m dt + sqrt(sigma(Z) C(Z) / m) dW2``.  With
    ``freeze_env`` the environment stays at its initial value.

    Raises
    ------
    ValueError
        If a typical step (drift plus one standard deviation, maximised over
        the rectangle) exceeds ``max_move`` of the rectangle's width.
    """
    if not spec.bounded:
        raise ValueError("simulation needs a bounded rectangle; use spec.on_rectangle(...)")
    rz, rx = _move_scale(spec, dt)
    if max(rz, rx) > max_move:
        raise ValueError(f"dt={dt} moves up to {max(rz, rx):.1%} of the rectangle per step "
                         f"(limit {max_move:.0%}); use a smaller dt")
    rng = as_rng(rng)
    zi, xi = spec.z_interval, spec.x_interval
    if init is None:
        init = (0.5 * (zi.lo + zi.hi), 0.5 * (xi.lo + xi.hi))
    z = np.full(n_paths, float(init[0]))
    x = np.full(n_paths, float(init[1]))
    acc = [np.zeros(n_paths) for _ in range(4)]
    steps = int(round(t_end / dt))
    n_rec = steps // record_every + 1 + (steps % record_every != 0)
    rec = np.empty((6, n_rec, n_paths))
    t_rec = np.empty(n_rec)
    rec[:, 0] = z, x, *acc
    t_rec[0] = 0.0
    r = 1
    sq = math.sqrt(dt)
    const_a = not callable(spec.alpha) and not isinstance(spec.alpha, dict)
    const_s = not callable(spec.sigma) and not isinstance(spec.sigma, dict)
    alpha_v = (lambda v: float(spec.alpha)) if const_a else np.vectorize(lambda v: float(spec.alpha_fn(v)))
    sigma_v = (lambda v: float(spec.sigma)) if const_s else np.vectorize(lambda v: float(spec.sigma_fn(v)))
    chunk = max(1, min(steps, 2**18 // max(n_paths, 1)))
    for k in range(steps):
        if k % chunk == 0:
            noise = rng.standard_normal((min(chunk, steps - k), 2, n_paths))
        xi1, xi2 = noise[k % chunk]
        al = alpha_v(z)
        px = x + al * spec.a(x) * dt + np.sqrt(al) * z * sq * xi1
        if not freeze_env:
            g = sigma_v(z) / spec.m(z, x)
            pz = z + g * spec.c(z) * dt + np.sqrt(g * spec.C(z)) * sq * xi2
            if not np.all(np.isfinite(pz)):
                raise FloatingPointError(f"non-finite environment proposal at step {k}")
            z, dLz, dUz = fold(pz, zi)
            acc[0] += dLz
            acc[1] += dUz
        x, dLx, dUx = fold(px, xi)
        acc[2] += dLx
        acc[3] += dUx
        if (k + 1) % record_every == 0 or k + 1 == steps:
            rec[:, r] = z, x, *acc
            t_rec[r] = (k + 1) * dt
            r += 1
    rec = rec[:, :r]
    return RectPath(t_rec[:r], rec[0], rec[1], rec[2], rec[3], rec[4], rec[5], dt)


# -- finite-difference cross-check ----------------------------------------------


@dataclass
class FDCheck:
    l1_error: float
    n_z: int
    n_x: int
    scheme: str
    pi: np.ndarray
    kappa: np.ndarray


def fd_generator_check(spec: CombinedDiffusionSpec, n_z: int = 60, n_x: int = 60, scheme: str = "upwind") -> FDCheck:
    """Discretise the combined generator on a cell-centred grid and solve it as a jump chain.

    Each coordinate gets nearest-neighbour rates ``D / h**2`` plus the drift
    term (``scheme="upwind"``: ``max(+-drift, 0) / h``; ``"central"``:
    ``+-drift / (2h)``).  Moves leaving the rectangle are dropped, which is the
    discrete no-flux condition.  The stationary vector is compared in L1 with
    ``kappa`` sampled at the cell centres and normalised.
    """
    if scheme not in ("upwind", "central"):
        raise ValueError("scheme must be 'upwind' or 'central'")
    zi, xi = spec.z_interval, spec.x_interval
    hz, hx = zi.width / n_z, xi.width / n_x
    zc = zi.lo + hz * (np.arange(n_z) + 0.5)
    xc = xi.lo + hx * (np.arange(n_x) + 0.5)

    def pair(D, v, h):
        if scheme == "upwind":
            return D / h**2 + max(v, 0.0) / h, D / h**2 + max(-v, 0.0) / h
        up, down = D / h**2 + v / (2 * h), D / h**2 - v / (2 * h)
        if up < 0 or down < 0:
            raise ValueError("central differences give a negative rate; refine the grid")
        return up, down

    rates = {}
    for i, z in enumerate(zc):
        al, sg = float(spec.alpha_fn(z)), float(spec.sigma_fn(z))
        cz, Cz = float(spec.c(z)), float(spec.C(z))
        for j, x in enumerate(xc):
            out = {}
            ux, dx = pair(al * z * z / 2, al * float(spec.a(x)), hx)
            if j + 1 < n_x:
                out[(i, j + 1)] = ux
            if j > 0:
                out[(i, j - 1)] = dx
            g = sg / float(spec.m(z, x))
            uz, dz = pair(g * Cz / 2, g * cz, hz)
            if i + 1 < n_z:
                out[(i + 1, j)] = uz
            if i > 0:
                out[(i - 1, j)] = dz
            rates[(i, j)] = out
    space = StateSpace(rates.keys())
    sol = stationary_solve(build_generator(space, RateKernel(rates.__getitem__)))
    pi = sol.pi.reshape(n_z, n_x)
    Z, X = np.meshgrid(zc, xc, indexing="ij")
    k = kappa_density(spec, Z, X) * np.ones_like(Z)
    k = k / k.sum()
    return FDCheck(float(np.abs(pi - k).sum()), n_z, n_x, scheme, pi, k)
