"""Finite continuous-time Markov chains.

Rate kernels are described by their outgoing rates per state, plus an
optional predecessor map.  The predecessor map is what allows the global
balance of a measure to be checked at a single state of an *infinite*
chain: every state of the models in this package has finitely many
neighbours, so in-flow and out-flow are finite sums even when the state
space is not.

Generators over a finite (possibly truncated) state space are assembled as
``scipy.sparse`` matrices and solved with a direct sparse LU factorisation.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable, Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from ._common import as_function, as_rng

__all__ = [
    "StateSpace",
    "RateKernel",
    "GeneratorMatrix",
    "StationaryResult",
    "Trajectory",
    "ReducibleChainError",
    "ExplosionWarning",
    "build_generator",
    "stationary_solve",
    "balance_flows",
    "balance_residual",
    "combined_jump_kernel",
    "gillespie_simulate",
    "occupation_measure",
]


class ReducibleChainError(ValueError):
    """Raised when a generator does not have a single communicating class."""


class ExplosionWarning(RuntimeWarning):
    """The simulation event budget ran out before ``t_end``."""


class StateSpace:
    """Ordered collection of hashable state labels."""

    def __init__(self, states: Iterable[Hashable]):
        self.states = tuple(states)
        self.index = {s: i for i, s in enumerate(self.states)}
        if len(self.index) != len(self.states):
            raise ValueError("state labels must be unique")

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __contains__(self, s):
        return s in self.index

    def __getitem__(self, i):
        return self.states[i]

    def __repr__(self):
        return f"StateSpace({len(self)} states)"


class RateKernel:
    """Jump rates ``rate(s, s')`` of a continuous-time Markov chain.

    Parameters
    ----------
    out_rates : callable
        ``out_rates(s)`` returns a mapping ``{s': rate}`` of the (finitely
        many) transitions leaving ``s``.  Zero entries and self loops are
        ignored.
    predecessors : callable, optional
        ``predecessors(s)`` returns a superset of the states ``p`` with
        ``rate(p, s) > 0``.  Needed only for :func:`balance_flows`.
    """

    def __init__(self, out_rates: Callable[[Hashable], Mapping], predecessors=None):
        self._out = out_rates
        self._pred = predecessors

    @classmethod
    def from_dict(cls, table: Mapping[Hashable, Mapping[Hashable, float]]) -> "RateKernel":
        """Kernel backed by an explicit ``{s: {s': rate}}`` table."""
        incoming: dict = {}
        for s, row in table.items():
            for t in row:
                incoming.setdefault(t, set()).add(s)
        return cls(lambda s: table.get(s, {}), lambda s: incoming.get(s, ()))

    def out(self, s) -> dict:
        return {t: float(r) for t, r in self._out(s).items() if t != s and r != 0}

    def rate(self, s, t) -> float:
        if s == t:
            return 0.0
        return float(self._out(s).get(t, 0.0))

    def exit_rate(self, s) -> float:
        return sum(self.out(s).values())

    def predecessors(self, s) -> Iterable:
        if self._pred is None:
            raise TypeError("this kernel has no predecessor map; in-flows cannot be computed")
        return self._pred(s)


@dataclass
class GeneratorMatrix:
    """Sparse generator over a finite state space.

    ``dropped`` counts the transitions whose target lies outside ``space``;
    they are removed from the matrix (reflecting truncation).
    """

    matrix: sp.csr_matrix
    space: StateSpace
    dropped: int = 0

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def build_generator(space: StateSpace | Sequence, kernel: RateKernel) -> GeneratorMatrix:
    """Assemble the generator matrix of ``kernel`` restricted to ``space``.

    The diagonal is minus the sum of the *retained* off-diagonal rates, so
    rows sum to zero exactly up to rounding.

    Raises
    ------
    ValueError
        If any rate is negative; the message names the offending pair.
    """
    if not isinstance(space, StateSpace):
        space = StateSpace(space)
    rows, cols, vals = [], [], []
    diag = np.zeros(len(space))
    dropped = 0
    for i, s in enumerate(space.states):
        for t, r in kernel.out(s).items():
            if r < 0 or not math.isfinite(r):
                raise ValueError(f"invalid rate {r!r} for transition {s!r} -> {t!r}")
            j = space.index.get(t)
            if j is None:
                dropped += 1
                continue
            rows.append(i)
            cols.append(j)
            vals.append(r)
            diag[i] -= r
    n = len(space)
    rows.extend(range(n))
    cols.extend(range(n))
    vals.extend(diag)
    Q = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return GeneratorMatrix(Q, space, dropped)


@dataclass
class StationaryResult:
    pi: np.ndarray
    space: StateSpace
    residual: float

    def as_dict(self) -> dict:
        return dict(zip(self.space.states, self.pi))

    def __getitem__(self, s):
        return self.pi[self.space.index[s]]


def _reducibility_witness(Q: sp.csr_matrix, space: StateSpace, labels: np.ndarray):
    # A closed class (no edges leaving it) cannot reach any other class.
    coo = Q.tocoo()
    off = coo.row != coo.col
    leaving = np.zeros(labels.max() + 1, dtype=bool)
    src, dst = labels[coo.row[off]], labels[coo.col[off]]
    leaving[src[src != dst]] = True
    closed = int(np.flatnonzero(~leaving)[0])
    a = int(np.flatnonzero(labels == closed)[0])
    b = int(np.flatnonzero(labels != closed)[0])
    return space.states[a], space.states[b]


def stationary_solve(G: GeneratorMatrix) -> StationaryResult:
    """Solve ``pi Q = 0``, ``sum(pi) = 1`` for an irreducible finite chain.

    One balance equation of ``Q^T`` is replaced by the normalisation row and
    the resulting square system is solved with sparse LU.

    Raises
    ------
    ReducibleChainError
        If the chain has more than one communicating class.
    """
    Q = G.matrix.tocsr()
    n = Q.shape[0]
    if n == 1:
        return StationaryResult(np.ones(1), G.space, 0.0)
    ncomp, labels = connected_components(Q, directed=True, connection="strong")
    if ncomp > 1:
        a, b = _reducibility_witness(Q, G.space, labels)
        raise ReducibleChainError(
            f"chain is reducible ({ncomp} communicating classes): {b!r} is not reachable from {a!r}"
        )
    A = sp.vstack([Q.T.tocsr()[:-1, :], sp.csr_matrix(np.ones((1, n)))]).tocsc()
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        pi = spla.splu(A).solve(rhs)
    except RuntimeError as exc:
        raise np.linalg.LinAlgError(f"stationary solve failed: {exc}") from exc
    if not np.all(np.isfinite(pi)):
        raise np.linalg.LinAlgError("stationary solve produced non-finite weights")
    if pi.min() < -1e-10 * np.abs(pi).max():
        raise np.linalg.LinAlgError(f"stationary solve produced a negative weight {pi.min():.3e}")
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = float(np.abs(Q.T @ pi).max())
    return StationaryResult(pi, G.space, residual)


def _measure_fn(measure):
    if isinstance(measure, Mapping):
        return measure.__getitem__
    return measure


def balance_flows(measure, kernel: RateKernel, s) -> tuple[float, float]:
    """Probability out-flow and in-flow of ``measure`` at state ``s``.

    ``out = measure(s) * sum_t rate(s, t)`` and
    ``in = sum_p measure(p) * rate(p, s)``.
    """
    eta = _measure_fn(measure)
    outflow = eta(s) * kernel.exit_rate(s)
    inflow = 0.0
    for p in set(kernel.predecessors(s)):
        if p == s:
            continue
        r = kernel.rate(p, s)
        if r:
            inflow += eta(p) * r
    return float(outflow), float(inflow)


def balance_residual(measure, kernel: RateKernel, s) -> float:
    """Out-flow minus in-flow of ``measure`` at ``s``; zero for an invariant measure."""
    outflow, inflow = balance_flows(measure, kernel, s)
    return outflow - inflow


def combined_jump_kernel(base_kernels, env_kernels, m, alpha, sigma) -> RateKernel:
    """Superpose base moves and environment moves on pairs ``(z, x)``.

    Base moves ``(z, x) -> (z, x')`` happen at ``alpha(z) * Q_z(x, x')``;
    environment moves ``(z, x) -> (z', x)`` at
    ``sigma(z) * tau_x(z, z') / m(z, x)``, where ``m(z, .)`` is the density
    of the invariant measure of ``Q_z`` against a common reference measure.

    ``base_kernels`` maps ``z`` to a :class:`RateKernel` on the base states and
    ``env_kernels`` maps ``x`` to a kernel on environments; either may be a
    callable or a mapping.
    """
    base = as_function(base_kernels)
    env = as_function(env_kernels)
    alpha = as_function(alpha)
    sigma = as_function(sigma)

    def out(state):
        z, x = state
        rates = {}
        a = alpha(z)
        if a:
            for x2, r in base(z).out(x).items():
                rates[(z, x2)] = a * r
        env_out = env(x).out(z)
        if env_out:
            mz = m(z, x)
            if not mz > 0:
                raise ValueError(f"density m must be positive where the environment can jump; m{(z, x)!r} = {mz!r}")
            scale = sigma(z) / mz
            for z2, r in env_out.items():
                rates[(z2, x)] = scale * r
        return rates

    def predecessors(state):
        z, x = state
        preds = [(z, p) for p in base(z).predecessors(x)]
        preds.extend((p, x) for p in env(x).predecessors(z))
        return preds

    return RateKernel(out, predecessors)


@dataclass
class Trajectory:
    """Piecewise-constant path: ``states[k]`` is held on ``[times[k], times[k+1])``."""

    times: np.ndarray
    states: list
    t_end: float
    exploded: bool = False
    events: int = field(init=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.events = len(self.states) - 1

    def holding_times(self) -> np.ndarray:
        return np.diff(np.append(self.times, self.t_end))


def gillespie_simulate(kernel: RateKernel, init, t_end: float, seed=None, max_events: int = 10**7) -> Trajectory:
    """Exact stochastic simulation (direct method) of a jump chain.

    Outgoing rates are cached per visited state, so kernels with expensive
    rate formulas are evaluated once per state.  If more than ``max_events``
    jumps would be needed the partial path is returned and an
    :class:`ExplosionWarning` is issued.
    """
    rng = as_rng(seed)
    cache: dict = {}

    def table(s):
        row = cache.get(s)
        if row is None:
            out = kernel.out(s)
            targets = list(out)
            cum = np.cumsum([out[t] for t in targets]) if targets else np.zeros(0)
            row = cache[s] = (targets, cum)
        return row

    t = 0.0
    s = init
    times = [0.0]
    states = [s]
    exploded = False
    block = 4096
    expo = rng.standard_exponential(block)
    unif = rng.random(block)
    k = 0
    while True:
        targets, cum = table(s)
        if not targets:
            break
        total = cum[-1]
        if k == block:
            expo = rng.standard_exponential(block)
            unif = rng.random(block)
            k = 0
        t += expo[k] / total
        if t >= t_end:
            break
        j = int(np.searchsorted(cum, unif[k] * total, side="right"))
        k += 1
        s = targets[min(j, len(targets) - 1)]
        times.append(t)
        states.append(s)
        if len(states) > max_events:
            exploded = True
            warnings.warn(
                f"event budget of {max_events} exhausted at t={t:.6g} < t_end={t_end:.6g}; "
                "the chain may be explosive",
                ExplosionWarning,
                stacklevel=2,
            )
            t_end = t
            break
    return Trajectory(np.array(times), states, float(t_end), exploded)


def occupation_measure(traj: Trajectory, t_burn: float = 0.0) -> dict:
    """Fraction of ``[t_burn, t_end]`` spent in each state."""
    if not t_burn < traj.t_end:
        raise ValueError(f"empty averaging window: t_burn={t_burn} >= t_end={traj.t_end}")
    starts = np.maximum(traj.times, t_burn)
    ends = np.append(traj.times[1:], traj.t_end)
    durations = np.clip(ends - starts, 0.0, None)
    total = traj.t_end - t_burn
    occ: dict = {}
    for s, d in zip(traj.states, durations):
        if d > 0:
            occ[s] = occ.get(s, 0.0) + d / total
    return occ
