"""Least and largest admissible potentials around a barrier on P¹.

An admissible potential is ``u(x) = log(x†Ax) + c``.  For a barrier ``v0``
the min problem looks for the admissible ``u >= v0`` of least energy
``(1/m) log det A + c``; the max problem for the admissible ``u <= v0`` of
largest energy.  Run with ``python demos/extremal_potentials.py``.
"""

import numpy as np

from kahler_john import barriers
from kahler_john.potentials import log_quadratic
from kahler_john.solver import SolverOptions, aligned_relative_error, solve

opts = SolverOptions(resolution=64)
X = opts.grid().points

# A strictly psh barrier without torus symmetry
v0 = barriers.twisted_veronese(2, degree=2, seed=1)

lo = solve("max", v0, opts)
hi = solve("min", v0, opts)
print(f"max problem: energy {lo.energy:+.8f}, certificate {lo.certificate.verdict}, "
      f"{len(lo.contact)} contact points, {lo.iterations} iterations")
print(f"min problem: energy {hi.energy:+.8f}, certificate {hi.certificate.verdict}, "
      f"{len(hi.contact)} contact points, {hi.iterations} iterations")

# the two extremals sandwich the barrier on the grid
print("u_max <= v0 <= u_min on the grid:",
      bool(np.all(lo.potential()(X) <= v0(X) + 1e-12) and np.all(v0(X) <= hi.potential()(X) + 1e-12)))

# The certificate: weights on contact points whose moment images balance.
cert = hi.certificate
print(f"certificate residual {cert.residual:.2e} with {np.count_nonzero(cert.weights > 1e-12)} "
      "points carrying weight")

# An admissible barrier is its own extremal, in both problems.
B = np.array([[2.0, 0.5 - 0.3j], [0.5 + 0.3j, 1.0]])
rep = solve("min", barriers.admissible(B), opts)
print(f"admissible barrier recovered: matrix error {aligned_relative_error(rep.matrix, B):.1e}")

# Restarts. The grid max problem is geodesically convex, so every restart lands
# on the same maximizer; the grid min problem may stop one grid cell away.
for problem in ("max", "min"):
    r = solve(problem, v0, SolverOptions(restarts=6, seed=3))
    mats = [np.asarray(d["matrix"]["re"]) + 1j * np.asarray(d["matrix"]["im"]) for d in r.restarts]
    spread = max(aligned_relative_error(M, r.A.matrix) for M in mats)
    print(f"{problem} problem, 7 starts: max matrix disagreement {spread:.1e}")

# Energies of the extremals versus the barrier's own shape
gap_lo = v0(X) - log_quadratic(lo.matrix, X)
print(f"largest gap between v0 and the max-problem extremal: {gap_lo.max():.4f}")
