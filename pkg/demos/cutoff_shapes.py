"""Shapes and exact identities of the cutoff families.

Walks through the two step constructions (canonical bump and flat-topped
plateau), the widened comparison step, and the identities the rest of
the package leans on: exact 0/1 branches, a slope that is constant on
the middle of the plateau window, and a widened step whose slope is a
perfect square with a smooth root.

Run from the repository root:

    python3 demos/cutoff_shapes.py
"""

import os

import numpy as np

from bhcone.cutoffs import (
    make_plateau_step,
    make_smooth_step,
    plateau_majorant,
    widened_step,
)

smooth = make_smooth_step(0.5, 1.0)
plateau = make_plateau_step(0.5, 1.0)

print("step values on and around the window (eta = 0.5, xi = 1.0)")
print(f"{'r':>6} {'smooth':>12} {'plateau':>12} {'plateau slope':>14}")
for r in (0.4, 0.5, 0.6, 0.7, 0.75, 0.8, 0.9, 1.0, 1.1):
    print(f"{r:6.2f} {smooth(r):12.6f} {plateau(r):12.6f} "
          f"{plateau.derivative(1, r):14.6f}")

# the branches are exact, not merely close
assert smooth(0.5) == 0.0 and smooth(1.0) == 1.0
assert plateau(0.45) == 0.0 and plateau(1.05) == 1.0
print("\nbranches below eta and above xi are exactly 0 and 1")

# the plateau slope is constant on the middle half of the window, which
# is what lets a lattice difference of the step reach sup(f')/s exactly
mid = np.linspace(0.63, 0.87, 101)
slopes = plateau.derivative(1, mid)
print(f"plateau slope on the middle half: {slopes[0]:.10f} "
      f"(spread {np.ptp(slopes):.1e})")

# the widened step dominates every derivative of the original: its slope
# times the normalization is the square of a smooth plateau that equals
# one across the whole original window
tilde = widened_step(plateau)
u = plateau_majorant(plateau)
c = tilde.bump.integral()
grid = np.linspace(tilde.eta, tilde.xi, 501)
gap = np.max(np.abs(c * tilde.derivative(1, grid) - u(grid) ** 2))
print(f"widened step on ({tilde.eta:g}, {tilde.xi:g}):")
print(f"  c * slope - majorant^2, worst deviation {gap:.2e}")
inside = np.linspace(0.5, 1.0, 101)
print(f"  majorant equals one across the original window: "
      f"{bool(np.all(u(inside) == 1.0))}")

# smooth square root of the slope (the admissibility requirement)
root = plateau.sqrt_derivative(grid[1:-1])
print(f"sqrt of the slope stays finite: max {root.max():.6f}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs("out", exist_ok=True)
    fine = np.linspace(0.3, 1.2, 600)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(fine, smooth(fine), label="smooth step")
    ax1.plot(fine, plateau(fine), label="plateau step")
    ax1.plot(fine, tilde(fine), "--", label="widened step")
    ax1.set_xlabel("r")
    ax1.legend()
    ax2.plot(fine, smooth.derivative(1, fine), label="smooth slope")
    ax2.plot(fine, plateau.derivative(1, fine), label="plateau slope")
    ax2.set_xlabel("r")
    ax2.legend()
    fig.tight_layout()
    fig.savefig("out/cutoff_shapes.svg")
    print("\nwrote out/cutoff_shapes.svg")
except ImportError:
    print("\nmatplotlib not installed; skipping the figure")
