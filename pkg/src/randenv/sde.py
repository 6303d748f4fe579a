"""Reflected Euler-Maruyama integration and thinning of state-dependent jumps.

Reflection at an interval endpoint is done by folding: a proposal that
overshoots the boundary is mirrored back inside.  For a driftless Brownian
step on the half-line this reproduces ``|W|`` exactly, which is the law of
reflected Brownian motion.  The overshoot of each fold is booked as the
local-time increment of that endpoint.

All integrators accept a scalar or an array of initial values; arrays are
advanced in lock-step as independent paths.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from ._common import as_rng

__all__ = [
    "Interval",
    "ReflectedPath",
    "skorohod_map",
    "fold",
    "euler_reflect_step",
    "simulate_reflected",
    "thinning_jumps",
    "cir_coefficients",
]


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]`` with optional reflection at each finite end."""

    lo: float = -math.inf
    hi: float = math.inf
    reflect_lo: bool = True
    reflect_hi: bool = True

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")
        if self.reflect_lo and math.isinf(self.lo):
            object.__setattr__(self, "reflect_lo", False)
        if self.reflect_hi and math.isinf(self.hi):
            object.__setattr__(self, "reflect_hi", False)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x)
        return (x >= self.lo) & (x <= self.hi)


@dataclass
class ReflectedPath:
    """Recorded path with cumulative local times at the lower and upper ends."""

    t: np.ndarray
    values: np.ndarray
    L: np.ndarray
    U: np.ndarray
    dt: float

    def to_csv(self, path) -> None:
        """Write columns ``t, value(s), L, U`` (one value/L/U column per path)."""
        vals = self.values.reshape(len(self.t), -1)
        L = self.L.reshape(len(self.t), -1)
        U = self.U.reshape(len(self.t), -1)
        k = vals.shape[1]
        if k == 1:
            header = ["t", "value", "L", "U"]
        else:
            header = ["t"] + [f"value{j}" for j in range(k)] + [f"L{j}" for j in range(k)] + [f"U{j}" for j in range(k)]
        data = np.column_stack([self.t, vals, L, U])
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in data:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def skorohod_map(driving, z0: float) -> tuple[np.ndarray, np.ndarray]:
    """Reflect a driving path at 0 from the start ``z0 >= 0``.

    ``L_k = max(0, -z0 - min_{j <= k} W_j)`` and ``Z_k = z0 + W_k + L_k``.
    """
    if z0 < 0:
        raise ValueError("starting point must be non-negative")
    W = np.asarray(driving, dtype=float)
    L = np.maximum(0.0, -z0 - np.minimum.accumulate(W))
    return z0 + W + L, L


def fold(p, interval: Interval, max_folds: int = 10_000):
    """Mirror ``p`` into ``interval``; returns ``(x, dL, dU)``.

    ``dL`` and ``dU`` add up the overshoot below ``lo`` and above ``hi`` over
    every fold that was needed.
    """
    x = np.array(p, dtype=float, copy=True)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    dL = np.zeros_like(x)
    dU = np.zeros_like(x)
    lo, hi = interval.lo, interval.hi
    for _ in range(max_folds):
        below = (x < lo) & interval.reflect_lo
        above = (x > hi) & interval.reflect_hi
        if not (below.any() or above.any()):
            break
        over = lo - x[below]
        dL[below] += over
        x[below] = lo + over
        over = x[above] - hi
        dU[above] += over
        x[above] = hi - over
    else:
        raise RuntimeError("folding did not converge; the step is far larger than the interval")
    if scalar:
        return float(x[0]), float(dL[0]), float(dU[0])
    return x, dL, dU


def euler_reflect_step(x, drift, diffusion, dt: float, xi, interval: Interval):
    """One Euler-Maruyama step ``x + drift dt + diffusion sqrt(dt) xi`` folded into ``interval``."""
    if not dt > 0:
        raise ValueError("time step must be positive")
    p = np.asarray(x, dtype=float) + np.asarray(drift) * dt + np.asarray(diffusion) * math.sqrt(dt) * np.asarray(xi)
    if not np.all(np.isfinite(p)):
        bad = np.flatnonzero(~np.isfinite(np.atleast_1d(p)))[:5]
        raise FloatingPointError(
            f"non-finite Euler proposal at path(s) {bad.tolist()}: "
            f"x={np.atleast_1d(x)[bad]}, dt={dt}; check the coefficients near these values"
        )
    return fold(p, interval)


def simulate_reflected(drift: Callable, diffusion: Callable, interval: Interval, z0, t_end: float, dt: float,
                       rng=None, record_every: int = 1) -> ReflectedPath:
    """Integrate ``dZ = drift(Z) dt + diffusion(Z) dW`` with folding reflection.

    ``drift`` and ``diffusion`` are vectorised functions of the current value.
    Every ``record_every``-th step is stored (the final step always is).
    """
    rng = as_rng(rng)
    z = np.array(z0, dtype=float)
    batch = z.shape
    z = np.atleast_1d(z).copy()
    if not np.all(interval.contains(z)):
        raise ValueError("initial value outside the interval")
    n_steps = int(round(t_end / dt))
    n_rec = n_steps // record_every + 1 + (n_steps % record_every != 0)
    t_rec = np.empty(n_rec)
    v_rec = np.empty((n_rec, z.size))
    L_rec = np.empty_like(v_rec)
    U_rec = np.empty_like(v_rec)
    L = np.zeros_like(z)
    U = np.zeros_like(z)
    t_rec[0], v_rec[0], L_rec[0], U_rec[0] = 0.0, z, L, U
    r = 1
    chunk = max(1, min(n_steps, 2**20 // z.size))
    noise = None
    for k in range(n_steps):
        if k % chunk == 0:
            noise = rng.standard_normal((min(chunk, n_steps - k), z.size))
        xi = noise[k % chunk]
        z, dL, dU = euler_reflect_step(z, drift(z), diffusion(z), dt, xi, interval)
        L += dL
        U += dU
        if (k + 1) % record_every == 0 or k + 1 == n_steps:
            t_rec[r], v_rec[r], L_rec[r], U_rec[r] = (k + 1) * dt, z, L, U
            r += 1
    shape = (n_rec,) + batch
    return ReflectedPath(t_rec[:r], v_rec[:r].reshape(shape), L_rec[:r].reshape(shape),
                         U_rec[:r].reshape(shape), dt)


def thinning_jumps(bound: float, intensity: Callable, times, values, rng=None) -> np.ndarray:
    """Jump times of a point process with intensity ``intensity(t, state)``.

    ``times``/``values`` describe the driving path (the state at ``t`` is the
    value at the last grid time ``<= t``).  Candidates arrive at constant
    rate ``bound`` and are kept with probability ``intensity / bound``.

    Raises
    ------
    ValueError
        If the intensity exceeds ``bound`` at a candidate time.
    """
    rng = as_rng(rng)
    times = np.asarray(times, dtype=float)
    values = np.asarray(values)
    T = times[-1] - times[0]
    if bound <= 0 or T <= 0:
        return np.zeros(0)
    n = rng.poisson(bound * T)
    cand = np.sort(times[0] + rng.random(n) * T)
    u = rng.random(n)
    idx = np.searchsorted(times, cand, side="right") - 1
    lam = np.array([intensity(t, values[i]) for t, i in zip(cand, idx)], dtype=float)
    if np.any(lam > bound * (1 + 1e-12)):
        worst = float(lam.max())
        raise ValueError(f"intensity {worst:.6g} exceeds the thinning bound {bound:.6g}; raise the bound")
    return cand[u * bound < lam]


def cir_coefficients(a: float, b: float):
    """Drift ``a (b - z)`` and full-truncation diffusion ``sqrt(max(z, 0))``."""
    return (lambda z: a * (b - z)), (lambda z: np.sqrt(np.maximum(z, 0.0)))
