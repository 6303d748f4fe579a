"""Verification, simulation, stationarity and normalising-mass suites per model kind.

Every suite takes an :class:`~randenv.config.Experiment` and returns
``(reports, tables)``: a list of :class:`~randenv.stationarity.ComparisonReport`
and a list of :class:`Table` holding plot-ready data.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import ctmc, exclusion, hybrid, jackson, ouenv
from ._common import Divergent
from .stationarity import ComparisonReport, Histogram, tv_distance

__all__ = ["Table", "SuiteError", "run_suite", "TABLE_COLUMNS"]

WIE_TOL = 1e-10
DIFF_TOL = 1e-6
HYBRID_TV = 0.08
OU_TV = 0.05
FD_L1 = 0.05
JUMP_TV = 0.05

# documented in the CLI help
TABLE_COLUMNS = {
    "jackson_states": "z, n1..nk, kappa, residual, F1_out, F1_in, F2_out, F2_in",
    "jackson_occupation": "z, n1..nk, empirical, pi",
    "jackson_path / exclusion_path": "t, state",
    "exclusion_states": "z, x, kappa_normalised, pi_solve",
    "hybrid_wie": "n, check, value",
    "hybrid_path": "t, path, env (env_lam, env_mu for the wedge), base (base0.. for d > 1), L, U",
    "hybrid_cells": "cell, empirical, expected",
    "ou_quadrature": "phi, integral, error",
    "ou_path": "t, path, z, x, LZ, UZ, LX, UX",
    "ou_histogram": "z_lo, z_hi, x_lo, x_hi, empirical, expected",
    "xi": "quantity, value",
}


class SuiteError(RuntimeError):
    """A suite could not run (for example no equilibrium exists for a stationarity test)."""


@dataclass
class Table:
    name: str
    header: list
    rows: list

    def to_csv(self, fh) -> None:
        fh.write(",".join(self.header) + "\n")
        for row in self.rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (tuple, list)):
        return '"' + " ".join(_cell(u) for u in v) + '"'
    return str(v)


def _xi_report(exp, value, detail=None):
    """Report for a total mass.

    Divergence is a correct answer, so both a finite value and a divergence
    pass (threshold ``inf``); only a failed evaluation (``nan``) fails.
    """
    d = dict(detail or {})
    if isinstance(value, Divergent):
        d["reason"] = value.reason
        rep = ComparisonReport(exp.kind, "xi", "DIVERGENT", math.inf, math.inf, seed=exp.seed, detail=d)
        return rep, Table("xi", ["quantity", "value"], [["xi", "DIVERGENT"]])
    value = float(value)
    ok = math.isfinite(value) and value > 0
    rep = ComparisonReport(exp.kind, "xi", "xi", value if ok else math.nan, math.inf, seed=exp.seed, detail=d)
    return rep, Table("xi", ["quantity", "value"], [["xi", value]])


def _require_finite(kind, total):
    if isinstance(total, Divergent):
        raise SuiteError(f"{kind}: no equilibrium distribution ({total.reason})")
    return total


# -- jackson -------------------------------------------------------------------------


def _jackson_verify(exp):
    env = exp.model
    space = jackson.truncated_space(env, exp.truncation)
    kern = jackson.combined_rates(env)
    rows = []
    wie = f1 = f2 = 0.0
    for z, n in space:
        out, inn = ctmc.balance_flows(lambda s: jackson.kappa(env, *s), kern, (z, n))
        scale = max(out, inn, 1e-300)
        pb = jackson.partial_balance(env, z, n)
        wie = max(wie, abs(out - inn) / scale)
        f1 = max(f1, abs(pb["F1_out"] - pb["F1_in"]) / scale)
        f2 = max(f2, abs(pb["F2_out"] - pb["F2_in"]) / scale)
        rows.append([z, *n, jackson.kappa(env, z, n), out - inn, pb["F1_out"], pb["F1_in"], pb["F2_out"], pb["F2_in"]])
    size = len(space)
    reps = [ComparisonReport(exp.kind, "wie-residual", "max-residual", wie, WIE_TOL, size, exp.seed),
            ComparisonReport(exp.kind, "partial-balance-F1", "max-residual", f1, WIE_TOL, size, exp.seed),
            ComparisonReport(exp.kind, "partial-balance-F2", "max-residual", f2, WIE_TOL, size, exp.seed)]
    if len(env.envs) == 1:
        z = env.envs[0]
        err = max(abs(jackson.kappa(env, z, n) * env.sigma_of(z) - jackson.product_form(env.networks[z], n))
                  / jackson.product_form(env.networks[z], n) for _, n in space)
        reps.append(ComparisonReport(exp.kind, "product-form", "max-residual", err, WIE_TOL, size, exp.seed))
    reps.append(_frozen_slice_report(exp))
    viol = jackson.environment_balance_violations(env, sorted({n for _, n in space}))
    reps[0].detail["tau_balance_violations"] = len(viol)
    k = env.n_sites
    header = ["z"] + [f"n{i + 1}" for i in range(k)] + ["kappa", "residual", "F1_out", "F1_in", "F2_out", "F2_in"]
    return reps, [Table("jackson_states", header, rows)]


def _frozen_slice_report(exp):
    """With the base frozen the empty-queue slice is stationary at ``1 / sigma``."""
    env = exp.model
    if len(env.envs) < 2:
        return ComparisonReport(exp.kind, "frozen-slice", "L1", 0.0, WIE_TOL, 1, exp.seed,
                                {"note": "single environment"})
    frozen = env.with_changes(alpha=0.0)
    n0 = (0,) * env.n_sites
    space = ctmc.StateSpace((z, n0) for z in env.envs)
    sol = ctmc.stationary_solve(ctmc.build_generator(space, jackson.combined_rates(frozen)))
    target = np.array([1.0 / env.sigma_of(z) for z in env.envs])
    target /= target.sum()
    return ComparisonReport(exp.kind, "frozen-slice", "L1", float(np.abs(sol.pi - target).sum()), WIE_TOL,
                            len(space), exp.seed)


def _jackson_gillespie(exp):
    env = exp.model
    init = (env.envs[0], (0,) * env.n_sites)
    return ctmc.gillespie_simulate(jackson.combined_rates(env), init, exp.t_end, seed=exp.seed)


def _jackson_stationary(exp):
    env = exp.model
    total = _require_finite(exp.kind, jackson.xi(env))
    traj = _jackson_gillespie(exp)
    occ = ctmc.occupation_measure(traj, exp.burn_in)
    states = sorted(occ, key=lambda s: (env.envs.index(s[0]), s[1]))
    emp = np.array([occ[s] for s in states])
    pi = np.array([jackson.kappa(env, *s) / total for s in states])
    tv = tv_distance(emp, pi)
    rep = ComparisonReport(exp.kind, "occupation", "TV", tv, JUMP_TV, traj.events, exp.seed,
                           {"visited_states": len(states), "pi_mass_visited": float(pi.sum())})
    header = ["z"] + [f"n{i + 1}" for i in range(env.n_sites)] + ["empirical", "pi"]
    rows = [[s[0], *s[1], e, p] for s, e, p in zip(states, emp, pi)]
    return [rep], [Table("jackson_occupation", header, rows)]


def _path_table(name, traj):
    return Table(name, ["t", "state"], [[float(t), s] for t, s in zip(traj.times, traj.states)])


def _jackson_simulate(exp):
    traj = _jackson_gillespie(exp)
    rep = ComparisonReport(exp.kind, "simulate", "exploded", float(traj.exploded), 0.0, traj.events, exp.seed)
    return [rep], [_path_table("jackson_path", traj)]


def _jackson_xi(exp):
    env = exp.model
    total = jackson.xi(env)
    rep, tab = _xi_report(exp, total)
    reps = [rep]
    if not isinstance(total, Divergent):
        # direct summation of the geometric series up to negligible tails
        direct = 0.0
        for z in env.envs:
            prod = 1.0
            for r in env.loads(z):
                n_terms = int(math.ceil(math.log(1e-18) / math.log(r))) + 1 if 0 < r < 1 else 1
                prod *= math.fsum(r**j for j in range(n_terms))
            direct += prod / env.sigma_of(z)
        reps.append(ComparisonReport(exp.kind, "xi-direct-sum", "relative-difference", abs(direct - total) / total,
                                     WIE_TOL, seed=exp.seed, detail={"direct_sum": direct}))
        tab.rows.append(["direct_sum", direct])
    return reps, [tab]


# -- exclusion -----------------------------------------------------------------------


def _exclusion_states(lattice, params):
    return [(z, x) for z in lattice.heavy_sites for x in exclusion.configurations(lattice)]


def _exclusion_verify(exp):
    lattice, params = exp.model
    chk = exclusion.exact_check(lattice, params)
    glob = exclusion.global_balance_residual(lattice, params)
    reps = [ComparisonReport(exp.kind, "exact-solve", "L1", chk.l1_error, WIE_TOL, chk.n_states, exp.seed,
                             {"solve_residual": chk.solve_residual, "tau_symmetric": lattice.symmetric}),
            ComparisonReport(exp.kind, "global-balance", "max-residual", glob, WIE_TOL, chk.n_states, exp.seed)]
    return reps, [_exclusion_table(lattice, params)]


def _exclusion_table(lattice, params):
    kern = exclusion.combined_kernel(lattice, params)
    space = ctmc.StateSpace(_exclusion_states(lattice, params))
    sol = ctmc.stationary_solve(ctmc.build_generator(space, kern))
    k = np.array([exclusion.kappa(lattice, params, z, x) for z, x in space])
    k /= k.sum()
    rows = [[z, x, kk, p] for (z, x), kk, p in zip(space, k, sol.pi)]
    return Table("exclusion_states", ["z", "x", "kappa_normalised", "pi_solve"], rows)


def _exclusion_stationary(exp):
    lattice, params = exp.model
    kern = exclusion.combined_kernel(lattice, params)
    states = _exclusion_states(lattice, params)
    traj = ctmc.gillespie_simulate(kern, states[0], exp.t_end, seed=exp.seed)
    occ = ctmc.occupation_measure(traj, exp.burn_in)
    k = np.array([exclusion.kappa(lattice, params, z, x) for z, x in states])
    emp = np.array([occ.get(s, 0.0) for s in states])
    tv = tv_distance(emp, k)
    rep = ComparisonReport(exp.kind, "occupation", "TV", tv, JUMP_TV, traj.events, exp.seed)
    rows = [[z, x, e, kk] for (z, x), e, kk in zip(states, emp, k / k.sum())]
    return [rep], [Table("exclusion_occupation", ["z", "x", "empirical", "pi"], rows)]


def _exclusion_simulate(exp):
    lattice, params = exp.model
    kern = exclusion.combined_kernel(lattice, params)
    init = _exclusion_states(lattice, params)[0]
    traj = ctmc.gillespie_simulate(kern, init, exp.t_end, seed=exp.seed)
    rep = ComparisonReport(exp.kind, "simulate", "exploded", float(traj.exploded), 0.0, traj.events, exp.seed)
    return [rep], [_path_table("exclusion_path", traj)]


def _exclusion_xi(exp):
    lattice, params = exp.model
    total = math.fsum(exclusion.kappa(lattice, params, z, x) for z, x in _exclusion_states(lattice, params))
    rep, tab = _xi_report(exp, total)
    return [rep], [tab]


# -- hybrid --------------------------------------------------------------------------


def _wie(spec):
    if isinstance(spec, hybrid.LambdaDiffusionSpec):
        return hybrid.wie_check_lambda(spec)
    if isinstance(spec, hybrid.MuBMSpec):
        return hybrid.wie_check_mu(spec)
    if isinstance(spec, hybrid.WedgeSpec):
        return hybrid.wie_check_wedge(spec)
    if isinstance(spec, hybrid.SwitchSpec):
        return hybrid.wie_check_switch(spec)
    return hybrid.wie_check_twocomp(spec)


def _hybrid_xi_value(spec):
    if isinstance(spec, hybrid.LambdaDiffusionSpec):
        return hybrid.xi_lambda(spec)
    if isinstance(spec, hybrid.MuBMSpec):
        return hybrid.xi_mu(spec)
    if isinstance(spec, hybrid.WedgeSpec):
        return hybrid.xi_wedge(spec)
    if isinstance(spec, hybrid.SwitchSpec):
        return hybrid.xi_switch(spec)
    return hybrid.xi_twocomp(spec)


def _hybrid_verify(exp):
    w = _wie(exp.model)
    reps = [ComparisonReport(exp.kind, "wie-diffusion", "max-residual", w.diffusion, DIFF_TOL, seed=exp.seed),
            ComparisonReport(exp.kind, "wie-jump", "max-residual", w.jump, DIFF_TOL, seed=exp.seed)]
    if not math.isnan(w.boundary):
        reps.append(ComparisonReport(exp.kind, "wie-boundary", "max-residual", w.boundary, DIFF_TOL, seed=exp.seed))
    if isinstance(exp.model, hybrid.LambdaDiffusionSpec):
        reps[0].detail["noise_condition"] = exp.model.noise_condition()
    rows = [["all", r.test, r.value] for r in reps]
    return reps, [Table("hybrid_wie", ["n", "check", "value"], rows)]


def _hybrid_sim(exp):
    rng = np.random.default_rng(exp.seed)
    return hybrid.simulate_model(exp.model, exp.t_end, exp.dt, rng, n_paths=exp.n_paths,
                                 record_every=exp.record_every)


def _hybrid_path_table(exp, path):
    env = path.env.reshape(len(path.t), exp.n_paths, -1)
    base = path.base.reshape(len(path.t), exp.n_paths, -1)
    L = path.L.reshape(len(path.t), exp.n_paths, -1)
    U = path.U.reshape(len(path.t), exp.n_paths, -1)
    env_h = ["env"] if env.shape[2] == 1 else ["env_lam", "env_mu"]
    base_h = ["base"] if base.shape[2] == 1 else [f"base{i}" for i in range(base.shape[2])]
    L_h = ["L"] if L.shape[2] == 1 else [f"L{i}" for i in range(L.shape[2])]
    U_h = ["U"] if U.shape[2] == 1 else [f"U{i}" for i in range(U.shape[2])]
    rows = []
    for i, t in enumerate(path.t):
        for p in range(exp.n_paths):
            rows.append([float(t), p, *map(float, env[i, p]), *map(float, base[i, p]), *map(float, L[i, p]),
                         *map(float, U[i, p])])
    return Table("hybrid_path", ["t", "path"] + env_h + base_h + L_h + U_h, rows)


def _hybrid_simulate(exp):
    path = _hybrid_sim(exp)
    finite = float(sum(int(not np.all(np.isfinite(a))) for a in (path.env, path.base, path.L, path.U)))
    detail = {}
    if path.acceptance is not None:
        detail["mean_acceptance"] = float(np.mean(path.acceptance))
    rep = ComparisonReport(exp.kind, "simulate", "non-finite-arrays", finite, 0.0,
                           int(len(path.t) * exp.n_paths), exp.seed, detail)
    return [rep], [_hybrid_path_table(exp, path)]


def _cells_lambda(spec, total, n_cut, n_bins=10):
    edges = np.linspace(spec.eps, 1.0, n_bins + 1)
    exp_ = np.zeros((n_bins, n_cut))
    for j in range(n_bins):
        for n in range(n_cut):
            exp_[j, n] = integrate.quad(lambda t: t**n / float(spec.sigma_fn(t)), edges[j], edges[j + 1])[0]
    return edges, exp_ / total


def _cells_mu(spec, total, n_cut, n_bins=10):
    upper = 1.0 + 3.0 / max(abs(spec.b), 0.1)
    edges = np.append(np.linspace(1.0, upper, n_bins + 1), np.inf)
    exp_ = np.zeros((n_bins + 1, n_cut))
    for j in range(n_bins + 1):
        for n in range(n_cut):
            exp_[j, n] = integrate.quad(lambda m: float(hybrid.kappa_mu(spec, m, n)), edges[j], edges[j + 1],
                                        limit=200)[0]
    return edges, exp_ / total


def _queue_cells(exp, path, edges, expected, n_cut):
    """Joint (rate-bin, n) cells plus one cell collecting ``n >= n_cut``."""
    env = path.env.ravel()
    n = path.base.ravel().astype(int)
    j = np.clip(np.searchsorted(edges, env, side="right") - 1, 0, len(edges) - 2)
    emp = np.zeros(expected.shape)
    low = n < n_cut
    np.add.at(emp, (j[low], n[low]), 1.0)
    emp_rest = float((~low).sum())
    exp_rest = max(0.0, 1.0 - expected.sum())
    e = np.append(emp.ravel(), emp_rest)
    p = np.append(expected.ravel(), exp_rest)
    labels = [f"bin{a}_n{b}" for a in range(expected.shape[0]) for b in range(n_cut)] + [f"n>={n_cut}"]
    return e, p, labels


def _hybrid_stationary(exp):
    spec = exp.model
    total = _require_finite(exp.kind, _hybrid_xi_value(spec))
    path = _hybrid_sim(exp).after(exp.burn_in)
    n_cut = 10
    if isinstance(spec, hybrid.LambdaDiffusionSpec):
        edges, expected = _cells_lambda(spec, total, n_cut)
        e, p, labels = _queue_cells(exp, path, edges, expected, n_cut)
    elif isinstance(spec, hybrid.MuBMSpec):
        edges, expected = _cells_mu(spec, total, n_cut)
        e, p, labels = _queue_cells(exp, path, edges, expected, n_cut)
    elif isinstance(spec, hybrid.WedgeSpec):
        # queue-length marginal, integrating the rates out over the wedge
        expected = np.array([integrate.dblquad(lambda l, m: float(hybrid.kappa_wedge(spec, l, m, n)), 0.0, np.inf,
                                               0.0, lambda m: m)[0] for n in range(n_cut)]) / total
        n = path.base.ravel().astype(int)
        e = np.append(np.bincount(np.minimum(n, n_cut), minlength=n_cut + 1)[:n_cut], (n >= n_cut).sum())
        e = e.astype(float)
        p = np.append(expected, max(0.0, 1.0 - expected.sum()))
        labels = [f"n{b}" for b in range(n_cut)] + [f"n>={n_cut}"]
    else:
        xi_ = spec.x_interval
        edges = np.linspace(xi_.lo, xi_.hi, 21)
        cells_e, cells_p, labels = [], [], []
        for k, (v, z) in enumerate(zip(spec.weights, spec.envs)):
            s = float(spec.sigma_fn(z))
            if z == 0:
                mass = np.diff(edges) / s
            else:
                mass = np.diff(np.exp(2 * z * edges)) / (2 * z * s)
            cells_p.extend(v * mass / total)
            sel = path.env.ravel() == z
            cells_e.extend(np.histogram(path.base.ravel()[sel], bins=edges)[0].astype(float))
            labels.extend(f"z{z:g}_bin{j}" for j in range(len(edges) - 1))
        e, p = np.array(cells_e), np.array(cells_p)
    tv = tv_distance(e, p)
    rep = ComparisonReport(exp.kind, "occupation", "TV", tv, HYBRID_TV, int(e.sum()), exp.seed,
                           {"xi": total, "t_end": exp.t_end, "dt": exp.dt, "n_paths": exp.n_paths})
    if path.acceptance is not None:
        rep.detail["mean_acceptance"] = float(np.mean(path.acceptance))
    rows = [[lab, a, b] for lab, a, b in zip(labels, e / e.sum(), p / p.sum())]
    return [rep], [Table("hybrid_cells", ["cell", "empirical", "expected"], rows)]


def _hybrid_xi(exp):
    rep, tab = _xi_report(exp, _hybrid_xi_value(exp.model))
    return [rep], [tab]


# -- combined diffusions -----------------------------------------------------------


def _interior_grid(spec, n=21, margin=0.05):
    zi, xi = spec.z_interval, spec.x_interval
    z = np.linspace(zi.lo + margin * zi.width, zi.hi - margin * zi.width, n)
    x = np.linspace(xi.lo + margin * xi.width, xi.hi - margin * xi.width, n)
    return z, x


def _ou_verify(exp):
    spec = exp.model
    recs = ouenv.wie_quadrature(spec)
    worst = max(abs(r.integral) for r in recs)
    z, x = _interior_grid(spec)
    # residuals relative to the largest density value on the grid
    base = max(float(np.max(np.abs(ouenv.adjoint_residual_base(spec, zz, x))) / np.max(np.abs(spec.m(zz, x))))
               for zz in z)
    env = float(np.max(np.abs(ouenv.adjoint_residual_env(spec, z))) / np.max(np.abs(spec.w(z))))
    fd = ouenv.fd_generator_check(spec)
    reps = [ComparisonReport(exp.kind, "wie-quadrature", "max-residual", worst, DIFF_TOL, len(recs), exp.seed,
                             {r.phi_id: r.integral for r in recs}),
            ComparisonReport(exp.kind, "adjoint-base", "max-residual", base, DIFF_TOL, z.size * x.size, exp.seed),
            ComparisonReport(exp.kind, "adjoint-environment", "max-residual", env, DIFF_TOL, z.size, exp.seed),
            ComparisonReport(exp.kind, "fd-generator", "L1", fd.l1_error, FD_L1, fd.n_z * fd.n_x, exp.seed,
                             {"scheme": fd.scheme})]
    rows = [[r.phi_id, r.integral, r.tolerance] for r in recs]
    return reps, [Table("ou_quadrature", ["phi", "integral", "error"], rows)]


def _ou_sim(exp):
    rng = np.random.default_rng(exp.seed)
    return ouenv.simulate_rect_system(exp.model, exp.t_end, exp.dt, rng, n_paths=exp.n_paths,
                                      record_every=exp.record_every)


def _ou_path_table(exp, path):
    rows = []
    for i, t in enumerate(path.t):
        for p in range(exp.n_paths):
            rows.append([float(t), p] + [float(a.reshape(len(path.t), -1)[i, p])
                                         for a in (path.z, path.x, path.LZ, path.UZ, path.LX, path.UX)])
    return Table("ou_path", ["t", "path", "z", "x", "LZ", "UZ", "LX", "UX"], rows)


def _ou_simulate(exp):
    path = _ou_sim(exp)
    bad = float(sum(int(not np.all(np.isfinite(a))) for a in (path.z, path.x)))
    rep = ComparisonReport(exp.kind, "simulate", "non-finite-arrays", bad, 0.0, int(path.z.size), exp.seed)
    return [rep], [_ou_path_table(exp, path)]


def _ou_stationary(exp, n_bins=8):
    spec = exp.model
    path = _ou_sim(exp).after(exp.burn_in)
    ez = np.linspace(spec.z_interval.lo, spec.z_interval.hi, n_bins + 1)
    ex = np.linspace(spec.x_interval.lo, spec.x_interval.hi, n_bins + 1)
    hist = Histogram.from_samples(np.column_stack([path.z.ravel(), path.x.ravel()]), (ez, ex))
    expected = hist.expected(lambda z, x: float(ouenv.kappa_density(spec, z, x)))
    tv = tv_distance(hist.probabilities(), expected)
    rep = ComparisonReport(exp.kind, "occupation", "TV", tv, OU_TV, int(hist.counts.sum()), exp.seed,
                           {"t_end": exp.t_end, "dt": exp.dt, "n_paths": exp.n_paths, "bins": [n_bins, n_bins]})
    emp = hist.probabilities()
    rows = [[ez[i], ez[i + 1], ex[j], ex[j + 1], emp[i, j], expected[i, j]]
            for i, j in itertools.product(range(n_bins), range(n_bins))]
    return [rep], [Table("ou_histogram", ["z_lo", "z_hi", "x_lo", "x_hi", "empirical", "expected"], rows)]


def _ou_xi(exp):
    spec = exp.model
    zi, xi = spec.z_interval, spec.x_interval
    total, err = integrate.dblquad(lambda x, z: float(ouenv.kappa_density(spec, z, x)), zi.lo, zi.hi, xi.lo, xi.hi)
    rep, tab = _xi_report(exp, total, {"quadrature_error": err})
    return [rep], [tab]


_SUITES = {
    "jackson": {"verify": _jackson_verify, "simulate": _jackson_simulate, "stationary": _jackson_stationary,
                "xi": _jackson_xi},
    "exclusion": {"verify": _exclusion_verify, "simulate": _exclusion_simulate,
                  "stationary": _exclusion_stationary, "xi": _exclusion_xi},
    "hybrid": {"verify": _hybrid_verify, "simulate": _hybrid_simulate, "stationary": _hybrid_stationary,
               "xi": _hybrid_xi},
    "ouenv": {"verify": _ou_verify, "simulate": _ou_simulate, "stationary": _ou_stationary, "xi": _ou_xi},
}


def run_suite(exp) -> tuple[list[ComparisonReport], list[Table]]:
    """Dispatch on the experiment's model kind and action."""
    family = exp.kind.split(".")[0]
    return _SUITES[family][exp.action](exp)
