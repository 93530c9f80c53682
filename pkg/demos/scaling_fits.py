"""Power-law scaling of the three operator-level bounds.

Each bound in the package is supposed to sharpen at a definite inverse
power of the front width s.  This script measures all three decays on
small instances and fits the exponents:

  1. k-fold commutators of the hopping matrix with the scaled front
     weight fall off like s^-k;
  2. the Taylor remainder of [H, f(A)] after subtracting one expansion
     term falls off like s^-2;
  3. the top eigenvalue of the growth operator falls off at least as
     fast as s^-1.5 (here close to s^-2).

Run from the repository root:

    python3 demos/scaling_fits.py
"""

import numpy as np

from bhcone.cutoffs import make_plateau_step, make_smooth_step
from bhcone.dynamics import ModelSpec, assemble_hamiltonian
from bhcone.experiments import expansion_remainder, fit_power_law
from bhcone.fock import enumerate_sector
from bhcone.front import FrontFamily
from bhcone.hopping import (
    hopping_moment,
    iterated_commutator_matrix,
    lightcone_params,
    max_speed,
    nearest_neighbor,
    one_particle_norm,
)
from bhcone.lattice import EmbeddedLattice, chain

chi = make_plateau_step(0.5, 1.0)

# 1. iterated commutators with the front weight on a 256-site chain
print("iterated commutators ||ad^k|| against the front width")
lattice = chain(256)
J = nearest_neighbor(lattice)
radii = np.arange(256, dtype=float)
s_grid = np.array([8.0, 16.0, 32.0, 64.0])
for k in (1, 2, 3):
    norms = []
    for s in s_grid:
        weights = chi(radii / s)
        comm = iterated_commutator_matrix(J, lambda x: weights[x], k)
        norms.append(one_particle_norm(comm))
    fit = fit_power_law(s_grid, norms)
    print(f"  k = {k}: slope {fit.slope:+.3f} (expected about {-k}), "
          f"R^2 {fit.r_squared:.4f}, kappa_{k} = {hopping_moment(J, k):g}")

# 2. Taylor remainder of the commutator expansion on a far-away cluster
print("\nexpansion remainder after subtracting the first-order term")
cluster = EmbeddedLattice(np.arange(94, 99, dtype=float)[:, None])
sector = enumerate_sector(5, 2)
model = ModelSpec.standard(nearest_neighbor(cluster), 4.0)
H = assemble_hamiltonian(sector, model)
f = make_smooth_step(0.15, 0.75)
v_max = max_speed(model.hopping)
rmid = 0.5 * (94.0 + 98.0)
s_grid = np.array([16.0, 32.0, 64.0, 128.0])
norms = []
for s in s_grid:
    params = lightcone_params(1.1 * v_max, v_max, s, 0.0)
    family = FrontFamily.centered(sector, cluster, chi, params)
    best = 0.0
    for offset in np.linspace(-0.5, 0.5, 5):
        t = max(0.0, rmid - 0.75 * s + offset) / params.v_prime
        avalues = family.observable(t).values
        rem = expansion_remainder(H, avalues, f, order=2)
        best = max(best, float(np.linalg.norm(rem, 2)))
    norms.append(best)
    print(f"  s = {s:6g}: worst ||Rem_2|| = {best:.6e}")
fit = fit_power_law(s_grid, norms)
print(f"  slope {fit.slope:+.4f} (expected about -2), R^2 {fit.r_squared:.4f}")

# 3. top eigenvalue of the growth operator on a small cluster
print("\ngrowth-operator top eigenvalue against the front width")
cluster = EmbeddedLattice(np.arange(20, 26, dtype=float)[:, None])
sector = enumerate_sector(6, 2)
model = ModelSpec.standard(nearest_neighbor(cluster), 4.0)
H = assemble_hamiltonian(sector, model)
f_wide = make_plateau_step(0.02, 0.98)
v_max = max_speed(model.hopping)
rmid = 0.5 * (20.0 + 25.0)
s_grid = np.array([4.0, 8.0, 16.0, 32.0])
rates = []
for s in s_grid:
    params = lightcone_params(1.1 * v_max, v_max, s, 0.0)
    family = FrontFamily.centered(sector, cluster, chi, params)
    best = -np.inf
    for offset in np.linspace(-0.5, 0.5, 5):
        t = max(0.0, rmid - 0.60 * s + offset) / params.v_prime
        G = family.growth_operator(f_wide, H, t).to_dense()
        best = max(best, float(np.linalg.eigvalsh(G).max()))
    rates.append(best)
    print(f"  s = {s:6g}: max growth rate = {best:.6e}")
fit = fit_power_law(s_grid, rates)
print(f"  slope {fit.slope:+.4f} (gate: <= -1.5), R^2 {fit.r_squared:.4f}")
