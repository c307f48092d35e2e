"""Optimality certificates and the nondegeneracy test behind uniqueness.

A potential touching the barrier on a set C is extremal exactly when zero
lies in the convex hull of the moment images of C (after moving A to the
identity).  Run with ``python demos/certificates_and_uniqueness.py``.
"""

import numpy as np

from kahler_john.moment import certificate, moments, uniqueness_check

# Two antipodal points balance; one point alone never does.
poles = np.array([[1, 0], [0, 1]], dtype=complex)
print("both poles:", certificate(poles).verdict)
single = certificate(poles[:1])
print(f"one pole: {single.verdict}, residual {single.residual:.6f} (1/sqrt 2 = {1 / np.sqrt(2):.6f})")

# Three points on the equator at phases 0, 2pi/3, 4pi/3 balance with equal weights.
eq = np.stack([np.ones(3), np.exp(2j * np.pi * np.arange(3) / 3)], axis=1) / np.sqrt(2)
c = certificate(eq)
print(f"equator triangle: {c.verdict}, weights {np.round(c.weights, 4)}")

# The moment image of a point is x x† - I/m: traceless and Hermitian.
P = moments(eq[:1])[0]
print("moment image of (1:1):\n", np.round(P, 4))

# Uniqueness rests on a nondegeneracy test for X = i diag(a): the set N_X of
# points where the Hamiltonian of X vanishes identically on the orbit must be
# empty, or else a witness Y must pair positively with all of N_X.
for a in ([1, -1], [2, -1, -1], [1, -1, 0], [3, 0, -3, 0]):
    rep = uniqueness_check(np.array(a, dtype=float))
    print(f"spectrum {a}: N_X empty {rep.nx_empty}, verdict {rep.verdict}", end="")
    print("" if rep.witness is None else f", witness diag {np.round(np.diag(rep.witness).imag, 3)}")
