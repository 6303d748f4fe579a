"""Histograms, distances, statistical tests and pass/fail reports for stationarity checks."""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, stats

__all__ = [
    "Histogram",
    "ComparisonReport",
    "Chi2Result",
    "tv_distance",
    "chi2_test",
    "moment_check",
    "batch_means_se",
    "write_jsonl",
    "write_summary_csv",
]


@dataclass
class Histogram:
    """Counts on a 1-D or 2-D grid of bins.  ``edges`` holds one increasing array per dimension."""

    edges: tuple
    counts: np.ndarray
    total: float = field(default=None)

    def __post_init__(self):
        self.edges = tuple(np.asarray(e, dtype=float) for e in self.edges)
        self.counts = np.asarray(self.counts, dtype=float)
        for e in self.edges:
            if e.ndim != 1 or len(e) < 2 or np.any(np.diff(e) <= 0):
                raise ValueError("bin edges must be strictly increasing")
        if self.counts.shape != tuple(len(e) - 1 for e in self.edges):
            raise ValueError("counts do not match the bin edges")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")
        if self.total is None:
            self.total = float(self.counts.sum())

    @classmethod
    def from_samples(cls, samples, edges, weights=None) -> "Histogram":
        """Histogram of ``samples`` (shape ``(n,)`` or ``(n, d)``); points outside the edges are dropped."""
        x = np.asarray(samples, dtype=float)
        if not isinstance(edges, (tuple, list)) or np.ndim(edges[0]) == 0:
            edges = (edges,)
        if len(edges) == 1:
            counts, _ = np.histogram(x.ravel(), bins=edges[0], weights=weights)
        else:
            counts, *_ = np.histogramdd(x.reshape(-1, len(edges)), bins=list(edges), weights=weights)
        return cls(tuple(edges), counts)

    @property
    def ndim(self) -> int:
        return len(self.edges)

    def probabilities(self) -> np.ndarray:
        s = self.counts.sum()
        if s <= 0:
            raise ValueError("empty histogram")
        return self.counts / s

    def expected(self, density: Callable) -> np.ndarray:
        """Bin masses of ``density`` by quadrature, normalised over the histogram's range."""
        if self.ndim == 1:
            e = self.edges[0]
            mass = np.array([integrate.quad(density, e[i], e[i + 1], limit=200)[0] for i in range(len(e) - 1)])
        else:
            ez, ex = self.edges
            mass = np.array([[integrate.dblquad(lambda y, x: density(x, y), ez[i], ez[i + 1], ex[j], ex[j + 1])[0]
                              for j in range(len(ex) - 1)] for i in range(len(ez) - 1)])
        return mass / mass.sum()


def _as_prob(p):
    if isinstance(p, Histogram):
        return p.probabilities(), p.edges
    a = np.asarray(p, dtype=float)
    if np.any(a < 0):
        raise ValueError("negative weight")
    s = a.sum()
    if s <= 0:
        raise ValueError("zero total weight")
    return a / s, None


def tv_distance(p, q) -> float:
    """``(1/2) sum |p - q|`` after normalising both; histograms must share their bins."""
    pp, ep = _as_prob(p)
    qq, eq = _as_prob(q)
    if pp.shape != qq.shape:
        raise ValueError(f"bin mismatch: shapes {pp.shape} and {qq.shape}")
    if ep is not None and eq is not None:
        if len(ep) != len(eq) or any(a.shape != b.shape or not np.allclose(a, b, rtol=0, atol=1e-12)
                                     for a, b in zip(ep, eq)):
            raise ValueError("bin mismatch: histogram edges differ")
    return float(0.5 * np.abs(pp - qq).sum())


@dataclass
class Chi2Result:
    statistic: float
    p_value: float
    dof: int
    n_bins: int


def chi2_test(hist: Histogram, density: Callable, dof_correction: int = 0, min_expected: float = 5.0) -> Chi2Result:
    """Pearson goodness-of-fit of a 1-D histogram against a density.

    Expected bin masses come from quadrature of ``density`` over each bin
    (normalised over the histogram range).  Adjacent bins are merged from
    the left until each has expected count at least ``min_expected``.

    Raises
    ------
    ValueError
        If fewer than two bins remain after merging.
    """
    if hist.ndim != 1:
        raise ValueError("chi2_test needs a 1-D histogram")
    n = hist.counts.sum()
    exp_ = hist.expected(density) * n
    obs_m, exp_m = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(hist.counts, exp_):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs_m.append(o_acc)
            exp_m.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if obs_m:
            obs_m[-1] += o_acc
            exp_m[-1] += e_acc
        else:
            obs_m.append(o_acc)
            exp_m.append(e_acc)
    k = len(obs_m)
    dof = k - 1 - dof_correction
    if k < 2 or dof < 1:
        raise ValueError(f"only {k} bin(s) left after merging sparse bins; no degrees of freedom")
    o, e = np.array(obs_m), np.array(exp_m)
    stat = float(((o - e) ** 2 / e).sum())
    return Chi2Result(stat, float(stats.chi2.sf(stat, dof)), dof, k)


@dataclass
class ComparisonReport:
    """One verification outcome; ``passed`` is ``value <= threshold``."""

    model: str
    test: str
    statistic: str
    value: float
    threshold: float
    sample_size: int = 0
    seed: int | None = None
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.threshold)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        d["value"] = _jsonable(self.value)
        d["threshold"] = _jsonable(self.threshold)
        d["detail"] = {k: _jsonable(v) for k, v in self.detail.items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.model}/{self.test}: {self.statistic} = {self.value:.4g} (threshold {self.threshold:.4g})"


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if math.isnan(v) or math.isinf(v):
            return repr(v)
        return v
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(u) for u in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(u) for u in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(u) for k, u in v.items()}
    return v


def write_jsonl(reports: Iterable[ComparisonReport], fh) -> None:
    for r in reports:
        fh.write(r.to_json() + "\n")


def write_summary_csv(reports: Sequence[ComparisonReport], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["model", "test", "statistic", "value", "threshold", "passed", "sample_size", "seed"])
    for r in reports:
        w.writerow([r.model, r.test, r.statistic, repr(float(r.value)), repr(float(r.threshold)), int(r.passed),
                    r.sample_size, "" if r.seed is None else r.seed])


def batch_means_se(values, n_batches: int = 20) -> tuple[float, float]:
    """Mean and batch-means standard error.

    ``values`` of shape ``(n,)`` is cut into ``n_batches`` consecutive
    batches; shape ``(n_time, n_paths)`` is cut along time within each path
    and all batches are pooled.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    nt = v.shape[0]
    nb = min(n_batches, nt)
    if nb < 2 and v.shape[1] < 2:
        raise ValueError("need at least two batches")
    size = nt // nb
    means = v[: size * nb].reshape(nb, size, -1).mean(axis=1).ravel()
    return float(v.mean()), float(means.std(ddof=1) / math.sqrt(len(means)))


def moment_check(samples, k: int, target: float, tol_se: float = 3.0, central: bool = False,
                 n_batches: int = 20, model: str = "", test: str | None = None, seed=None) -> ComparisonReport:
    """Compare the ``k``-th (raw or central) empirical moment with ``target`` in standard-error units.

    The standard error is estimated by batch means, which accounts for the
    serial correlation of time-series samples.  The report's value is
    ``|estimate - target| / SE`` with threshold ``tol_se``.
    """
    if not 1 <= k <= 4:
        raise ValueError("moment order must be between 1 and 4")
    x = np.asarray(samples, dtype=float)
    centre = x.mean() if central else 0.0
    est, se = batch_means_se((x - centre) ** k, n_batches)
    z = abs(est - target) / se if se > 0 else (0.0 if est == target else math.inf)
    name = test or f"{'central' if central else 'raw'}-moment-{k}"
    return ComparisonReport(model, name, "moment-SE", float(z), tol_se, int(x.size), seed,
                            {"estimate": est, "target": target, "se": se})
