"""A light-cone run on the ten-site chain, through library calls.

Five particles start packed on the left half of a ten-site chain with
on-site repulsion U = 4J.  The probability that the rightmost site ever
holds at least the threshold fraction of all particles is measured
against the transport cone: inside the cone it stays at numerical zero,
and after the front has had time to arrive it jumps by many orders of
magnitude.

Run from the repository root:

    python3 demos/light_cone_run.py
"""

import numpy as np

from bhcone.dynamics import ModelSpec, assemble_hamiltonian, evolve, expectation
from bhcone.fock import (
    enumerate_sector,
    local_number,
    mott_state,
    spectral_projector,
)
from bhcone.hopping import max_speed, nearest_neighbor
from bhcone.lattice import Region, chain, region_distance, smallest_enclosing_ball

lattice = chain(10)
hopping = nearest_neighbor(lattice, 1.0)
model = ModelSpec.standard(hopping, interaction=4.0)
sector = enumerate_sector(10, 5)
H = assemble_hamiltonian(sector, model)
print(f"sector: {sector}")

X = Region(lattice, range(5))
Y = Region(lattice, [9])
_, r_min = smallest_enclosing_ball(X.coords())
d_xy = region_distance(X, Y)
v_max = max_speed(hopping)
v = 1.1 * v_max
horizon = (d_xy - 2.0 * r_min) / v
print(f"d(X, Y) = {d_xy:g}, r_min = {r_min:g}, v_max = {v_max:g}")
print(f"cone horizon for the target: t = {horizon:.4f}")

psi0 = mott_state(sector, [1, 1, 1, 1, 1, 0, 0, 0, 0, 0])

# P[target holds at least 30 percent of the particles]; the threshold is
# compared with exact integer counts, so "exactly zero" means zero
target = spectral_projector(
    local_number(sector, Y.sites, normalized=True), ">=", 0.3
)

times = np.array([0.0, 0.1, 0.2, 0.3, 0.4, horizon, 1.0, 2.0, 3.0, 4.5])
states = evolve(H, psi0, times)

print(f"\n{'t':>8} {'in cone':>8} {'P[target >= 0.3]':>18}")
for t, state in zip(times, states):
    mark = "yes" if t <= horizon else "no"
    print(f"{t:8.3f} {mark:>8} {expectation(target, state):18.6e}")

inside = [expectation(target, s) for t, s in zip(times, states) if t <= horizon]
outside = [expectation(target, s) for t, s in zip(times, states) if t > horizon]
print(f"\nworst value inside the cone:  {max(inside):.3e}")
print(f"largest value after the cone: {max(outside):.3e}")
print(f"contrast: {max(outside) / max(max(inside), 1e-300):.3e}")
