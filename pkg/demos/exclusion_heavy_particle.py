"""Exclusion process on a 2 x 2 lattice carrying one heavy particle.

The heavy particle tilts the light particles at its site by exp(phi).
The generator is small enough to solve exactly, so the product measure
can be compared with the true stationary vector; making the heavy
particle's jump rates asymmetric breaks the product form.
"""

from randenv import exclusion

lattice = exclusion.LatticeSpec.grid((2, 2), beta=1.0, tau=2.0)
params = exclusion.HeavyParams(phi=-0.4, lam=1.5, mu=1.0, sigma={(0, 0): 1.0, (0, 1): 1.5, (1, 0): 0.5, (1, 1): 2.0})

P0, P1, Q0, Q1 = exclusion.marginals(params)
print(f"occupation away from the heavy particle {P1:.4f}, at it {Q1:.4f}")

chk = exclusion.exact_check(lattice, params)
print(f"{chk.n_states} states: L1 distance to normalised kappa = {chk.l1_error:.2e}")

skew = dict(lattice.tau)
skew[((0, 0), (0, 1))] *= 3.0
bad = exclusion.LatticeSpec(lattice.sites, lattice.beta, tau=skew, symmetric=False)
print(f"with one heavy-particle rate tripled: L1 = {exclusion.exact_check(bad, params).l1_error:.4f}")
