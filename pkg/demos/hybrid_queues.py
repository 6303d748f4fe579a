"""Single-server queues whose rates diffuse, and total invariant masses.

For the arrival-rate model the time change sigma decides whether the
invariant measure can be normalised; the simulation is compared with
the normalised measure on a grid of (rate, queue length) cells.
"""

import numpy as np
from scipy import integrate

from randenv import hybrid
from randenv.stationarity import tv_distance

for label, sigma in [("sigma = 1", 1.0), ("sigma = 1/(1 - lam)", lambda l: 1 / (1 - l))]:
    print(f"arrival rate on [0.5, 1], {label}: xi = {hybrid.xi_lambda(hybrid.LambdaDiffusionSpec(0.5, sigma=sigma))}")

spec = hybrid.LambdaDiffusionSpec(0.5, sigma=lambda l: 1 / (1 - l), alpha=20.0, beta=lambda n: 0.7**n)
print("adjoint and balance residuals:", hybrid.wie_check_lambda(spec))

path = hybrid.simulate_model(spec, t_end=300.0, dt=0.01, rng=3, n_paths=20, record_every=10).after(20.0)
edges = np.linspace(0.5, 1.0, 11)
n_max = 6
obs = np.zeros((10, n_max + 1))
exp_ = np.zeros_like(obs)
lam, n = path.env.ravel(), np.minimum(path.base.ravel(), n_max)
np.add.at(obs, (np.clip(np.searchsorted(edges, lam) - 1, 0, 9), n), 1)
for i in range(10):
    for k in range(n_max):
        exp_[i, k] = integrate.quad(lambda l: hybrid.kappa_lambda(spec, l, k), edges[i], edges[i + 1])[0]
    # lumped tail n >= n_max: sum_k lam^k (1 - lam) = lam^n_max
    exp_[i, n_max] = integrate.quad(lambda l: l**n_max, edges[i], edges[i + 1])[0]
print(f"TV between simulated and invariant cells: {tv_distance(obs.ravel(), exp_.ravel()):.4f}")
print(f"Metropolis acceptance {path.acceptance.mean():.3f}")

print("wedge, sigma = 1/(mu - lam):", hybrid.xi_wedge(hybrid.WedgeSpec(-1.0, sigma=lambda l, m: 1 / (m - l))),
      "(exact 3/32 = 0.09375)")
print("two-component model:", hybrid.xi_twocomp(hybrid.TwoCompSpec(-0.5)))
