"""Experiment configuration: schema validation and model construction.

A configuration is a TOML document (or the equivalent dict)::

    schema = 1
    model = "hybrid.lambda"
    action = "xi"
    seed = 7

    [params]
    eps = 0.5
    sigma = "1 / (1 - lam)"

Unknown keys are rejected at every level.  Coefficient functions are given
as arithmetic expressions in the model's variables; they are compiled by a
small whitelist evaluator (no ``eval`` of arbitrary code).
"""

from __future__ import annotations

import ast
import math
import operator
import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import exclusion, hybrid, jackson, ouenv
from .sde import Interval

__all__ = ["ConfigError", "Experiment", "SCHEMA_VERSION", "MODEL_KINDS", "ACTIONS", "load_config", "parse_config",
           "compile_expr"]

SCHEMA_VERSION = 1
ACTIONS = ("verify", "simulate", "stationary", "xi")
MODEL_KINDS = ("jackson", "exclusion", "hybrid.lambda", "hybrid.mu", "hybrid.wedge", "hybrid.switch",
               "hybrid.twocomp", "ouenv.B", "ouenv.C", "ouenv.D")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


# -- expressions ------------------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
           ast.Pow: operator.pow}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"exp": np.exp, "log": np.log, "sqrt": np.sqrt, "sin": np.sin, "cos": np.cos, "abs": np.abs,
          "tanh": np.tanh, "min": np.minimum, "max": np.maximum}
_CONSTS = {"pi": math.pi, "e": math.e}


def compile_expr(text, variables: tuple[str, ...], where: str = "expression"):
    """Compile an arithmetic expression in ``variables`` into a function of those variables.

    Numbers pass through as constant functions.  Allowed: numbers, the named
    variables, ``pi``, ``e``, ``+ - * / **``, unary minus and the functions
    ``exp log sqrt sin cos abs tanh min max``.
    """
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        value = float(text)
        return lambda *args: value
    if not isinstance(text, str):
        raise ConfigError(f"{where}: expected a number or an expression string, got {type(text).__name__}")
    try:
        tree = ast.parse(text, mode="eval").body
    except SyntaxError as exc:
        raise ConfigError(f"{where}: cannot parse {text!r}: {exc.msg}") from None

    def check(node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return
        if isinstance(node, ast.Name):
            if node.id not in variables and node.id not in _CONSTS:
                raise ConfigError(f"{where}: unknown name {node.id!r} (allowed: {', '.join(variables) or 'none'})")
            return
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            check(node.left)
            check(node.right)
            return
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            check(node.operand)
            return
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS \
                and not node.keywords:
            for a in node.args:
                check(a)
            return
        raise ConfigError(f"{where}: unsupported syntax in {text!r}")

    check(tree)

    def ev(node, env):
        if isinstance(node, ast.Constant):
            return node.value
        if isinstance(node, ast.Name):
            return env[node.id] if node.id in env else _CONSTS[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](ev(node.left, env), ev(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNOPS[type(node.op)](ev(node.operand, env))
        return _FUNCS[node.func.id](*(ev(a, env) for a in node.args))

    def fn(*args):
        if len(args) != len(variables):
            raise TypeError(f"expected {len(variables)} argument(s)")
        args = [a if isinstance(a, np.ndarray) else np.float64(a) for a in args]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return ev(tree, dict(zip(variables, args)))

    fn.source = text
    return fn


# -- schema -------------------------------------------------------------------------

_TOP = {"schema", "model", "fixture", "action", "seed", "t_end", "dt", "n_paths", "truncation", "output",
        "record_every", "burn_in", "params"}

_PARAMS = {
    "jackson": {"envs", "networks", "alpha", "sigma", "tau"},
    "exclusion": {"shape", "phi", "lam", "mu", "beta", "tau", "tau_pairs", "alpha", "sigma", "heavy_sites"},
    "hybrid.lambda": {"eps", "sigma", "alpha", "beta"},
    "hybrid.mu": {"b", "sigma", "alpha"},
    "hybrid.wedge": {"theta", "sigma", "alpha"},
    "hybrid.switch": {"q", "sigma_plus", "sigma_minus", "alpha_plus", "alpha_minus", "x_lo", "x_hi"},
    "hybrid.twocomp": {"b", "d", "alpha", "sigma"},
    "ouenv.B": {"b", "rectangle"},
    "ouenv.C": {"rectangle"},
    "ouenv.D": {"a", "b", "rectangle"},
}

_REQUIRED = {
    "jackson": {"envs", "networks", "tau"},
    "exclusion": {"shape", "phi", "lam", "mu"},
    "hybrid.lambda": {"eps"},
    "hybrid.mu": {"b"},
    "hybrid.wedge": {"theta"},
    "hybrid.switch": set(),
    "hybrid.twocomp": {"b"},
    "ouenv.B": {"b", "rectangle"},
    "ouenv.C": {"rectangle"},
    "ouenv.D": {"a", "b", "rectangle"},
}

_DEFAULTS = {"seed": 0, "t_end": 10.0, "dt": 1e-2, "n_paths": 10, "truncation": 6, "output": "out",
             "record_every": 10, "burn_in": 0.0}


@dataclass
class Experiment:
    """Validated configuration plus the constructed model object."""

    kind: str
    action: str
    params: dict
    model: object
    seed: int = 0
    t_end: float = 10.0
    dt: float = 1e-2
    n_paths: int = 10
    truncation: int = 6
    output: str = "out"
    record_every: int = 10
    burn_in: float = 0.0
    fixture: str | None = None
    extra: dict = field(default_factory=dict)


def load_config(path) -> dict:
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None


def _num(d, key, where, lo=None, positive=False, integer=False):
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    if integer and not isinstance(v, int):
        raise ConfigError(f"{where}.{key}: expected an integer, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{where}.{key}: must be positive, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(f"{where}.{key}: must be at least {lo}, got {v!r}")
    return v


def parse_config(raw: dict, fixtures: dict | None = None) -> Experiment:
    """Validate a raw configuration and build the model it describes.

    ``fixture = "name"`` pulls the model and parameters from ``fixtures``;
    keys given alongside it override the fixture's values.
    """
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a table")
    unknown = set(raw) - _TOP
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")
    if "fixture" in raw:
        if not fixtures or raw["fixture"] not in fixtures:
            raise ConfigError(f"fixture: unknown fixture {raw['fixture']!r}")
        base = dict(fixtures[raw["fixture"]])
        base_params = dict(base.get("params", {}))
        base_params.update(raw.get("params", {}))
        base.update({k: v for k, v in raw.items() if k != "params"})
        base["params"] = base_params
        raw = base
    if raw.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"schema: expected {SCHEMA_VERSION}, got {raw.get('schema')!r}")
    kind = raw.get("model")
    if kind not in MODEL_KINDS:
        raise ConfigError(f"model: expected one of {', '.join(MODEL_KINDS)}, got {kind!r}")
    action = raw.get("action", "verify")
    if action not in ACTIONS:
        raise ConfigError(f"action: expected one of {', '.join(ACTIONS)}, got {action!r}")
    opts = dict(_DEFAULTS)
    opts.update({k: raw[k] for k in _DEFAULTS if k in raw})
    _num(opts, "seed", "config", lo=0, integer=True)
    if opts["seed"] >= 2**64:
        raise ConfigError("config.seed: must fit in 64 bits")
    _num(opts, "t_end", "config", positive=True)
    _num(opts, "dt", "config", positive=True)
    _num(opts, "n_paths", "config", lo=1, integer=True)
    _num(opts, "truncation", "config", lo=0, integer=True)
    _num(opts, "record_every", "config", lo=1, integer=True)
    _num(opts, "burn_in", "config", lo=0)
    if not isinstance(opts["output"], str):
        raise ConfigError("config.output: expected a path string")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params: expected a table")
    bad = set(params) - _PARAMS[kind]
    if bad:
        raise ConfigError(f"params: unknown key(s) for {kind}: {', '.join(sorted(bad))}")
    missing = _REQUIRED[kind] - set(params)
    if missing:
        raise ConfigError(f"params: missing required key(s) for {kind}: {', '.join(sorted(missing))}")
    try:
        model = _BUILDERS[kind](params)
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"params: {exc}") from None
    return Experiment(kind, action, params, model, fixture=raw.get("fixture"), **opts)


# -- builders -----------------------------------------------------------------------


def _env_table(value, envs, where, variables=()):
    """Per-environment scalar: a number, or a table ``{env: number}``."""
    if isinstance(value, dict):
        extra = set(value) - set(envs)
        if extra:
            raise ConfigError(f"{where}: unknown environment(s) {sorted(extra)}")
        miss = set(envs) - set(value)
        if miss:
            raise ConfigError(f"{where}: missing environment(s) {sorted(miss)}")
        out = {}
        for z, v in value.items():
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{where}.{z}: expected a number")
            out[z] = float(v)
        return out
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number or a table keyed by environment")
    return float(value)


def _build_jackson(p):
    envs = p["envs"]
    if not (isinstance(envs, list) and envs and all(isinstance(z, str) for z in envs)):
        raise ConfigError("params.envs: expected a non-empty list of names")
    nets = p["networks"]
    if not isinstance(nets, dict):
        raise ConfigError("params.networks: expected a table keyed by environment")
    networks = {}
    for z in envs:
        if z not in nets:
            raise ConfigError(f"params.networks: missing environment {z!r}")
        t = nets[z]
        for key in ("lam", "mu", "P"):
            if key not in t:
                raise ConfigError(f"params.networks.{z}: missing {key!r}")
        extra = set(t) - {"lam", "mu", "P"}
        if extra:
            raise ConfigError(f"params.networks.{z}: unknown key(s) {sorted(extra)}")
        try:
            networks[z] = jackson.NetworkSpec(t["lam"], t["mu"], t["P"])
            jackson.traffic_solve(networks[z])
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise ConfigError(f"params.networks.{z}: {exc}") from None
    k = networks[envs[0]].n_sites
    tau_cfg = p["tau"]
    if not isinstance(tau_cfg, dict):
        raise ConfigError("params.tau: expected a table of 'from>to' = rate or expression")
    variables = tuple(f"n{i}" for i in range(k))
    tau_fns = {}
    for key, v in tau_cfg.items():
        parts = key.split(">")
        if len(parts) != 2 or parts[0] not in envs or parts[1] not in envs:
            raise ConfigError(f"params.tau: key {key!r} must be 'from>to' with known environments")
        tau_fns[(parts[0], parts[1])] = compile_expr(v, variables, f"params.tau.{key}")

    def tau(n, z, z2):
        f = tau_fns.get((z, z2))
        return float(f(*n)) if f else 0.0

    alpha = _env_table(p.get("alpha", 1.0), envs, "params.alpha")
    sigma = _env_table(p.get("sigma", 1.0), envs, "params.sigma")
    return jackson.EnvironmentSpec(envs, networks, alpha=alpha, sigma=sigma, tau=tau)


def _build_exclusion(p):
    shape = p["shape"]
    if not (isinstance(shape, list) and 1 <= len(shape) <= 2 and all(isinstance(s, int) and s >= 1 for s in shape)):
        raise ConfigError("params.shape: expected [n] or [n, m] with positive integers")
    heavy = p.get("heavy_sites")
    if heavy is not None:
        heavy = [tuple(h) for h in heavy]
    lattice = exclusion.LatticeSpec.grid(tuple(shape), beta=float(p.get("beta", 1.0)), tau=float(p.get("tau", 1.0)),
                                         heavy_sites=heavy)
    if lattice.n_sites > 12:
        raise ConfigError("params.shape: at most 12 sites are supported")
    if "tau_pairs" in p:
        # ordered [from, to, rate] triples; may be asymmetric
        table = {}
        for item in p["tau_pairs"]:
            if not (isinstance(item, list) and len(item) == 3):
                raise ConfigError("params.tau_pairs: expected [[from_site, to_site, rate], ...]")
            table[(tuple(item[0]), tuple(item[1]))] = float(item[2])
        try:
            lattice = exclusion.LatticeSpec(lattice.sites, lattice.beta, lattice.heavy_sites, table, symmetric=False)
        except ValueError as exc:
            raise ConfigError(f"params.tau_pairs: {exc}") from None
    sites = [str(list(s)) for s in lattice.sites]

    def site_table(value, where):
        if isinstance(value, dict):
            bad = set(value) - set(sites)
            if bad:
                raise ConfigError(f"{where}: unknown site key(s) {sorted(bad)}; use keys like '[0, 1]'")
            table = {s: float(value.get(str(list(s)), 1.0)) for s in lattice.sites}
            return table
        return float(value)

    params = exclusion.HeavyParams(float(p["phi"]), float(p["lam"]), float(p["mu"]),
                                   alpha=site_table(p.get("alpha", 1.0), "params.alpha"),
                                   sigma=site_table(p.get("sigma", 1.0), "params.sigma"))
    return lattice, params


def _build_lambda(p):
    return hybrid.LambdaDiffusionSpec(float(p["eps"]),
                                      sigma=compile_expr(p.get("sigma", 1.0), ("lam",), "params.sigma"),
                                      alpha=compile_expr(p.get("alpha", 1.0), ("lam",), "params.alpha"),
                                      beta=compile_expr(p.get("beta", 1.0), ("n",), "params.beta"))


def _build_mu(p):
    return hybrid.MuBMSpec(float(p["b"]), sigma=compile_expr(p.get("sigma", 1.0), ("mu",), "params.sigma"),
                           alpha=compile_expr(p.get("alpha", 1.0), ("mu",), "params.alpha"))


def _build_wedge(p):
    return hybrid.WedgeSpec(float(p["theta"]),
                            sigma=compile_expr(p.get("sigma", 1.0), ("lam", "mu"), "params.sigma"),
                            alpha=compile_expr(p.get("alpha", 1.0), ("lam", "mu"), "params.alpha"))


def _build_switch(p):
    lo, hi = float(p.get("x_lo", -math.inf)), float(p.get("x_hi", math.inf))
    if not lo < hi:
        raise ConfigError("params.x_lo must be below params.x_hi")
    return hybrid.SwitchSpec(q=compile_expr(p.get("q", 1.0), ("x",), "params.q"),
                             sigma={1.0: float(p.get("sigma_plus", 1.0)), -1.0: float(p.get("sigma_minus", 1.0))},
                             alpha={1.0: float(p.get("alpha_plus", 1.0)), -1.0: float(p.get("alpha_minus", 1.0))},
                             x_interval=Interval(lo, hi))


def _build_twocomp(p):
    d = p.get("d", 1)
    if not isinstance(d, int) or d < 1:
        raise ConfigError("params.d: expected a positive integer")
    return hybrid.TwoCompSpec(float(p["b"]), alpha=compile_expr(p.get("alpha", 1.0), ("z",), "params.alpha"),
                              sigma=compile_expr(p.get("sigma", 1.0), ("z",), "params.sigma"), d=d)


def _rectangle(p):
    r = p["rectangle"]
    if not (isinstance(r, list) and len(r) == 4 and all(isinstance(v, (int, float)) for v in r)):
        raise ConfigError("params.rectangle: expected [z_lo, z_hi, x_lo, x_hi]")
    z_lo, z_hi, x_lo, x_hi = map(float, r)
    if not (0 < z_lo < z_hi and x_lo < x_hi):
        raise ConfigError("params.rectangle: need 0 < z_lo < z_hi and x_lo < x_hi")
    return z_lo, z_hi, x_lo, x_hi


def _build_ou(which):
    def build(p):
        kw = {k: float(p[k]) for k in ("a", "b") if k in p}
        return ouenv.make_model(which, **kw).on_rectangle(*_rectangle(p))
    return build


_BUILDERS = {
    "jackson": _build_jackson,
    "exclusion": _build_exclusion,
    "hybrid.lambda": _build_lambda,
    "hybrid.mu": _build_mu,
    "hybrid.wedge": _build_wedge,
    "hybrid.switch": _build_switch,
    "hybrid.twocomp": _build_twocomp,
    "ouenv.B": _build_ou("B"),
    "ouenv.C": _build_ou("C"),
    "ouenv.D": _build_ou("D"),
}
