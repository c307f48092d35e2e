"""The glued barrier on D x P¹ whose fiberwise minimizers are not plurisubharmonic.

For each z in a disc, solve the min problem for the fiber barrier v0(z, .).
The minimal energy chi(z) = |z|²/2 is subharmonic in z, but the family of
minimizers u(z, x) fails to be psh on the product at the point (z, (0:1)).
A small disc keeps this fast; the CLI command ``counterexample`` runs the
full disc of radius 0.9.  Run with ``python demos/glued_counterexample.py``.
"""

import numpy as np

from kahler_john.fiber import (DiscGrid, MinimizerFamily, psh_check_product, section10_eval,
                               section10_family, sweep)
from kahler_john.solver import SolverOptions

opts = SolverOptions(resolution=32)
disc = DiscGrid(radius=0.3, step=0.1)
rep = sweep(section10_family(), disc, opts)

r2 = np.abs(disc.z) ** 2
print(f"{len(disc)} disc points, uncertified: {len(rep.uncertified)}")
print(f"max |chi - |z|^2/2| = {np.abs(rep.chi - r2 / 2).max():.1e}")
print(f"max |log r(z) - 3|z|^2/2| = {np.abs(np.log(rep.contact_radius) - 1.5 * r2).max():.1e}")
lap, _, (lmin, _) = rep.laplacian()
print(f"discrete Laplacian of chi: min {lmin:.6f} (exact value 2)")

# Product positivity: the minimizer family has a negative direction at (0.5, (0:1)).
family = MinimizerFamily(section10_family(), opts)
res = psh_check_product(family, [(0.5, np.array([0, 1.0]))])
print(f"minimizer family at (0.5, (0:1)): min eigenvalue {res['min_eig']:.4f}, "
      f"direction {np.round(res['direction'], 3)}")

# while u0 itself is psh where the barrier and u0 agree (inside the cap)
samples = [(z, np.array([1.0, np.sqrt(f * 2 * np.exp(3 * abs(z) ** 2))]))
           for z in (0.0, 0.4) for f in (0.0, 0.5, 0.9)]
res = psh_check_product(lambda z, X: section10_eval("u0", z, X), samples)
print(f"u0 inside the cap: min eigenvalue {res['min_eig']:.4f}")
