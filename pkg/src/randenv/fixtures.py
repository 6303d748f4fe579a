"""Built-in experiment fixtures.

Each fixture is a configuration dict in the same schema as a TOML file,
plus an ``anchor`` describing the result it exercises.
"""

from __future__ import annotations

import copy

__all__ = ["FIXTURES", "ANCHORS", "fixture_config"]

_TWO_SITE_NETWORKS = {
    "a": {"lam": [1.0, 0.0], "mu": [2.0, 1.5], "P": [[0.0, 0.5], [0.0, 0.0]]},
    "b": {"lam": [0.5, 0.5], "mu": [3.0, 2.0], "P": [[0.0, 0.3], [0.4, 0.0]]},
}

_CATALOG = [
    ("thm-2.1-two-site",
     "product-form invariant measure of Jackson networks switched by an environment: two sites, two environments",
     {"model": "jackson", "action": "verify", "truncation": 6, "t_end": 2000.0,
      "params": {"envs": ["a", "b"], "networks": _TWO_SITE_NETWORKS,
                 "alpha": {"a": 1.0, "b": 2.5}, "sigma": {"a": 1.0, "b": 0.7},
                 "tau": {"a>b": "1 + n0", "b>a": "1 + n0"}}}),
    ("jackson-single-environment",
     "a single environment reduces the invariant measure to the classical Jackson product form",
     {"model": "jackson", "action": "verify", "truncation": 6,
      "params": {"envs": ["a"], "networks": {"a": _TWO_SITE_NETWORKS["a"]}, "tau": {}}}),
    ("jackson-three-environment-cycle",
     "environment moving around a cycle (balanced but not reversible) with queue-dependent rates",
     {"model": "jackson", "action": "verify", "truncation": 5, "t_end": 5000.0,
      "params": {"envs": ["a", "b", "c"],
                 "networks": {"a": {"lam": [0.6], "mu": [1.0], "P": [[0.0]]},
                              "b": {"lam": [0.2], "mu": [1.5], "P": [[0.0]]},
                              "c": {"lam": [0.9], "mu": [2.0], "P": [[0.0]]}},
                 "alpha": {"a": 1.0, "b": 0.5, "c": 3.0}, "sigma": {"a": 2.0, "b": 1.0, "c": 0.5},
                 "tau": {"a>b": "1 / (1 + n0)", "b>c": "1 / (1 + n0)", "c>a": "1 / (1 + n0)"}}}),
    ("exclusion-two-site",
     "exclusion process with a heavy particle: invariant product measure on two sites",
     {"model": "exclusion", "action": "verify", "t_end": 5000.0,
      "params": {"shape": [2], "phi": 0.7, "lam": 1.0, "mu": 2.0, "beta": 1.3, "tau": 0.8,
                 "sigma": {"[0]": 1.0, "[1]": 2.0}, "alpha": {"[0]": 1.0, "[1]": 0.4}}}),
    ("exclusion-lattice-2x2",
     "exclusion process with a heavy particle: invariant product measure on a 2 x 2 lattice",
     {"model": "exclusion", "action": "verify", "t_end": 5000.0,
      "params": {"shape": [2, 2], "phi": -0.4, "lam": 1.5, "mu": 1.0, "beta": 1.0, "tau": 2.0,
                 "sigma": {"[0, 0]": 1.0, "[0, 1]": 1.5, "[1, 0]": 0.5, "[1, 1]": 2.0}}}),
    ("hybrid-lambda-telescoping",
     "queue with a diffusing arrival rate on [eps, 1]; finite total mass 0.5 at eps = 0.5 by telescoping",
     {"model": "hybrid.lambda", "action": "verify", "t_end": 500.0, "dt": 0.01, "n_paths": 20, "burn_in": 20.0,
      "record_every": 10, "params": {"eps": 0.5, "sigma": "1 / (1 - lam)", "alpha": 20.0, "beta": "0.7 ** n"}}),
    ("hybrid-lambda-unit-sigma",
     "queue with a diffusing arrival rate and unit time change: the total mass is infinite",
     {"model": "hybrid.lambda", "action": "xi", "params": {"eps": 0.5}}),
    ("hybrid-mu-reflected-bm",
     "queue whose service rate is a reflected Brownian motion with drift on [1, inf)",
     {"model": "hybrid.mu", "action": "verify", "t_end": 500.0, "dt": 0.01, "n_paths": 20, "burn_in": 20.0,
      "params": {"b": -0.7, "sigma": "1 / (mu - 1)"}}),
    ("hybrid-wedge-covering",
     "arrival and service rates diffusing jointly in the wedge 0 < lam < mu",
     {"model": "hybrid.wedge", "action": "verify", "t_end": 500.0, "dt": 0.01, "n_paths": 20, "burn_in": 20.0,
      "params": {"theta": -1.0, "sigma": "1 / (mu - lam)"}}),
    ("hybrid-switch-interval",
     "Brownian motion with drift switching between +1 and -1 on a reflecting interval",
     {"model": "hybrid.switch", "action": "verify", "t_end": 200.0, "dt": 0.005, "n_paths": 20, "burn_in": 5.0,
      "params": {"x_lo": -1.0, "x_hi": 1.0, "sigma_plus": 1.0, "sigma_minus": 2.0}}),
    ("hybrid-twocomp-volatility",
     "Wiener process whose volatility is a reflected Brownian motion; Lebesgue base measure",
     {"model": "hybrid.twocomp", "action": "verify", "params": {"b": -0.5, "sigma": "1 + z * z"}}),
    ("ouenv-model-B-rectangle",
     "OU base process with a reflected Brownian environment with drift, on a rectangle",
     {"model": "ouenv.B", "action": "verify", "t_end": 50.0, "dt": 1e-3, "n_paths": 50, "burn_in": 2.0,
      "record_every": 20, "params": {"b": 0.7, "rectangle": [1.0, 2.0, -1.0, 1.0]}}),
    ("thm-6.1-model-C-rectangle",
     "OU base process with an OU environment on the rectangle [1, 2] x [-1, 1]",
     {"model": "ouenv.C", "action": "verify", "t_end": 50.0, "dt": 1e-3, "n_paths": 200, "burn_in": 2.0,
      "record_every": 20, "params": {"rectangle": [1.0, 2.0, -1.0, 1.0]}}),
    ("ouenv-model-D-rectangle",
     "OU base process with a CIR environment on a rectangle",
     {"model": "ouenv.D", "action": "verify", "t_end": 25.0, "dt": 5e-4, "n_paths": 50, "burn_in": 2.0,
      "record_every": 20, "params": {"a": 1.0, "b": 1.0, "rectangle": [0.5, 2.0, -1.0, 1.0]}}),
]

FIXTURES = {name: dict(cfg, schema=1) for name, _, cfg in _CATALOG}
ANCHORS = {name: anchor for name, anchor, _ in _CATALOG}


def fixture_config(name: str) -> dict:
    """A fresh copy of a fixture's configuration dict."""
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}")
    return copy.deepcopy(FIXTURES[name])
